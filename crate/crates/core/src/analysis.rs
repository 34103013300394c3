//! Readout: correlation metrics, singlet content, coherence orders, simulated
//! small-flip-angle spectra and diagonal tomography.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{pulse, zeeman_hamiltonian};
use crate::spincore::{
    check_pair, deviation_of, doubled_mz, spin_bit, Axis, DensityMatrix, PairState, SpinSystem,
};
use crate::{CMatrix, Error, Result, C64};

fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn normalized_overlap(a: &CMatrix, b: &CMatrix, what: &'static str) -> Result<f64> {
    let na = real_inner(a, a);
    let nb = real_inner(b, b);
    if na <= 0.0 {
        return Err(Error::ZeroDeviation(what));
    }
    if nb <= 0.0 {
        return Err(Error::ZeroDeviation("target"));
    }
    Ok((real_inner(a, b) / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: b.dim(),
            found: a.dim(),
        });
    }
    Ok(())
}

/// `tr(ρΔ σΔ) / √(tr(ρΔ²) tr(σΔ²))` on the traceless parts of both states.
pub fn correlation(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    same_dim(rho, target)?;
    normalized_overlap(&rho.deviation(), &target.deviation(), "state")
}

/// Same metric on the full matrices, identity background included.
pub fn correlation_full(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    same_dim(rho, target)?;
    normalized_overlap(rho.matrix(), target.matrix(), "state")
}

/// [`correlation`] restricted to the diagonals.
pub fn diagonal_correlation(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    same_dim(rho, target)?;
    let diag = |m: &CMatrix| CMatrix::from_diagonal(&m.diagonal());
    normalized_overlap(
        &diag(&rho.deviation()),
        &diag(&target.deviation()),
        "diagonal",
    )
}

/// `⟨S0|ρ_pair|S0⟩` of the reduced state on `pair`.
pub fn singlet_content(rho: &DensityMatrix, pair: (usize, usize)) -> Result<f64> {
    check_pair(rho.n_spins(), pair)?;
    let r = rho.reduced(&[pair.0, pair.1])?;
    let s = PairState::Singlet.ket();
    Ok((s.adjoint() * r.matrix() * &s)[(0, 0)].re)
}

/// Splits `ρ` by coherence order `M_bra − M_ket`; the parts sum to `ρ`.
pub fn coherence_orders(rho: &DensityMatrix) -> BTreeMap<i32, CMatrix> {
    let n = rho.n_spins();
    let dim = rho.dim();
    let mut parts: BTreeMap<i32, CMatrix> = BTreeMap::new();
    for i in 0..dim {
        for j in 0..dim {
            let order = (doubled_mz(i, n) - doubled_mz(j, n)) / 2;
            parts
                .entry(order)
                .or_insert_with(|| CMatrix::zeros(dim, dim))[(i, j)] = rho.matrix()[(i, j)];
        }
    }
    parts
}

/// Computational-basis populations.
pub fn diagonal_tomography(rho: &DensityMatrix) -> Vec<f64> {
    rho.populations()
}

/// Excess population of basis state `ket` over the mean of the others.
pub fn epsilon_prime(rho: &DensityMatrix, ket: usize) -> Result<f64> {
    let p = rho.populations();
    if ket >= p.len() {
        return Err(Error::BasisIndex {
            index: ket,
            dim: p.len(),
        });
    }
    let others: f64 = p.iter().enumerate().filter(|&(i, _)| i != ket).map(|(_, v)| v).sum();
    Ok(p[ket] - others / (p.len() - 1) as f64)
}

/// Acquisition and processing parameters of a simulated spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    /// Radians. Readout is linear in the deviation up to about π/18.
    pub flip_angle: f64,
    /// Lorentzian full width at half height, Hz.
    pub line_width: f64,
    pub n_points: usize,
    /// Hz; `None` picks four times the largest line offset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_width: Option<f64>,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            flip_angle: PI / 36.0,
            line_width: 1.0,
            n_points: 8192,
            sweep_width: None,
        }
    }
}

impl SpectrumParams {
    pub fn validate(&self) -> Result<()> {
        if !self.flip_angle.is_finite() {
            return Err(Error::SpectrumParams("flip_angle must be finite".into()));
        }
        if !(self.line_width > 0.0 && self.line_width.is_finite()) {
            return Err(Error::SpectrumParams(format!(
                "line_width must be > 0, got {}",
                self.line_width
            )));
        }
        if self.n_points < 2 || !self.n_points.is_power_of_two() {
            return Err(Error::SpectrumParams(format!(
                "n_points must be a power of two ≥ 2, got {}",
                self.n_points
            )));
        }
        if let Some(sw) = self.sweep_width {
            if !(sw > 0.0 && sw.is_finite()) {
                return Err(Error::SpectrumParams(format!("sweep_width must be > 0, got {sw}")));
            }
        }
        Ok(())
    }

    fn resolved_sweep_width(&self, system: &SpinSystem) -> f64 {
        self.sweep_width
            .unwrap_or_else(|| 4.0 * max_line_offset(system).max(1.0))
    }
}

fn max_line_offset(system: &SpinSystem) -> f64 {
    (0..system.n())
        .map(|j| {
            let spread: f64 = system.couplings()[j].iter().map(|v| v.abs()).sum();
            system.shifts()[j].abs() + spread / 2.0
        })
        .fold(0.0, f64::max)
}

/// One transition of the free-induction signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub frequency: f64,
    pub amplitude: C64,
}

/// Transitions observed after a collective `y` pulse of `flip_angle`,
/// evolving under the secular Zeeman + J Hamiltonian and detected with
/// `Σ_j I_+^j`.
pub fn spectral_lines(rho: &DensityMatrix, system: &SpinSystem, flip_angle: f64) -> Result<Vec<Line>> {
    let n = system.n();
    if rho.n_spins() != n {
        return Err(Error::Dimension {
            expected: system.dim(),
            found: rho.dim(),
        });
    }
    let spins: Vec<usize> = (1..=n).collect();
    let u = pulse(n, &spins, Axis::Y, flip_angle)?;
    let excited = u.matrix() * rho.deviation() * u.matrix().adjoint();
    let energies: Vec<f64> = zeeman_hamiltonian(system, true)
        .matrix()
        .diagonal()
        .iter()
        .map(|z| z.re)
        .collect();
    let dim = system.dim();
    let mut lines = Vec::new();
    // I_+ maps |…1…⟩ to |…0…⟩ on one spin: element (lo, hi) with lo = hi ^ mask
    for hi in 0..dim {
        for j in 1..=n {
            if spin_bit(hi, j, n) == 0 {
                continue;
            }
            let lo = hi ^ (1 << (n - j));
            let amplitude = excited[(hi, lo)];
            if amplitude.norm() == 0.0 {
                continue;
            }
            lines.push(Line {
                frequency: energies[lo] - energies[hi],
                amplitude,
            });
        }
    }
    Ok(lines)
}

/// A processed spectrum on an `fftshift`ed frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<C64>,
    /// The apodized time-domain signal the spectrum was computed from.
    pub fid: Vec<C64>,
    pub line_width: f64,
    pub flip_angle: f64,
    pub sweep_width: f64,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.sweep_width / self.frequencies.len() as f64
    }

    pub fn max_magnitude(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Local maxima of `|amplitude|` above `fraction` of the largest one, as
    /// `(frequency, magnitude)` pairs in grid order.
    pub fn peaks(&self, fraction: f64) -> Vec<(f64, f64)> {
        let mag: Vec<f64> = self.amplitudes.iter().map(|z| z.norm()).collect();
        self.local_maxima(&mag, fraction)
    }

    /// Like [`Spectrum::peaks`] on `|Re amplitude|`, the absorption-mode
    /// spectrum when every line has a real amplitude. Neighbouring lines pull
    /// absorption maxima far less than magnitude maxima.
    pub fn absorption_peaks(&self, fraction: f64) -> Vec<(f64, f64)> {
        let abs: Vec<f64> = self.amplitudes.iter().map(|z| z.re.abs()).collect();
        self.local_maxima(&abs, fraction)
    }

    fn local_maxima(&self, mag: &[f64], fraction: f64) -> Vec<(f64, f64)> {
        let max = mag.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Vec::new();
        }
        let len = mag.len();
        (0..len)
            .filter(|&i| {
                let left = if i == 0 { 0.0 } else { mag[i - 1] };
                let right = if i + 1 == len { 0.0 } else { mag[i + 1] };
                mag[i] > fraction * max && mag[i] >= left && mag[i] > right
            })
            .map(|i| (self.frequencies[i], mag[i]))
            .collect()
    }
}

/// Simulated small-flip-angle spectrum of `rho`.
pub fn simulate_spectrum(
    rho: &DensityMatrix,
    system: &SpinSystem,
    params: &SpectrumParams,
) -> Result<Spectrum> {
    params.validate()?;
    let lines = spectral_lines(rho, system, params.flip_angle)?;
    let sw = params.resolved_sweep_width(system);
    let npts = params.n_points;
    let dt = 1.0 / sw;
    let mut fid: Vec<C64> = (0..npts)
        .map(|k| {
            let t = k as f64 * dt;
            let decay = (-PI * params.line_width * t).exp();
            lines
                .iter()
                .map(|l| l.amplitude * C64::from_polar(decay, 2.0 * PI * l.frequency * t))
                .sum()
        })
        .collect();
    let signal = fid.clone();
    FftPlanner::new().plan_fft_forward(npts).process(&mut fid);
    let half = npts / 2;
    let amplitudes: Vec<C64> = fid[half..].iter().chain(&fid[..half]).copied().collect();
    let frequencies = (0..npts)
        .map(|m| -sw / 2.0 + m as f64 * sw / npts as f64)
        .collect();
    Ok(Spectrum {
        frequencies,
        amplitudes,
        fid: signal,
        line_width: params.line_width,
        flip_angle: params.flip_angle,
        sweep_width: sw,
    })
}

/// Deviation part of an arbitrary square matrix.
pub fn deviation(m: &CMatrix) -> CMatrix {
    deviation_of(m)
}

/// Hilbert–Schmidt overlap `Re tr(A† B)`.
pub fn hilbert_schmidt(a: &CMatrix, b: &CMatrix) -> f64 {
    real_inner(a, b)
}

/// Reconstructs `ρ` from its coherence-order parts.
pub fn sum_orders(parts: &BTreeMap<i32, CMatrix>, dim: usize) -> CMatrix {
    parts
        .values()
        .fold(CMatrix::zeros(dim, dim), |acc, m| acc + m)
}
