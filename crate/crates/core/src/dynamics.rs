//! Hamiltonians, propagators and the composite gates used by the
//! initialization circuits.
//!
//! Products of factors are written in the usual propagator order: the
//! rightmost factor acts first.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c};
use crate::spincore::{
    check_pair, check_register, check_spin, collective_operator, spin_operator, Axis, DensityMatrix, SpinSystem,
};
use crate::{CMatrix, CVector, Error, Result, C64};

const UNITARY_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;

/// A Hermitian generator in Hz (`H/h`).
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    data: CMatrix,
    label: String,
}

impl Hamiltonian {
    pub fn new(data: CMatrix, label: impl Into<String>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension {
                expected: data.nrows(),
                found: data.ncols(),
            });
        }
        let dev = linalg::hermitian_deviation(&data);
        if dev > HERMITIAN_TOL * data.norm().max(1.0) {
            return Err(Error::InvalidState(format!(
                "Hamiltonian not Hermitian (deviation {dev:.3e})"
            )));
        }
        Ok(Self {
            data,
            label: label.into(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Ascending energies in Hz.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.data)
    }
}

/// A unitary with a record of how it was built.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagator {
    data: CMatrix,
    label: String,
}

impl Propagator {
    pub fn new(data: CMatrix, label: impl Into<String>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension {
                expected: data.nrows(),
                found: data.ncols(),
            });
        }
        let dev = linalg::unitary_deviation(&data);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self {
            data,
            label: label.into(),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_register(n)?;
        Ok(Self {
            data: linalg::identity(1 << n),
            label: "identity".into(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Ordered product `F_0 · F_1 ⋯ F_k` (last factor acts first).
    pub fn product(factors: &[Propagator], label: impl Into<String>) -> Result<Self> {
        let first = factors.first().ok_or(Error::EmptySpinSet)?;
        let mut data = first.data.clone();
        for f in &factors[1..] {
            if f.dim() != data.nrows() {
                return Err(Error::Dimension {
                    expected: data.nrows(),
                    found: f.dim(),
                });
            }
            data = &data * &f.data;
        }
        Self::new(data, label)
    }

    /// `next · self`: apply `self`, then `next`.
    pub fn then(&self, next: &Propagator) -> Result<Self> {
        Self::product(
            &[next.clone(), self.clone()],
            format!("{} ; {}", self.label, next.label),
        )
    }

    pub fn inverse(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            label: format!("({})^-1", self.label),
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.conjugate(&self.data)
    }

    pub fn apply_ket(&self, ket: &CVector) -> Result<CVector> {
        if ket.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: ket.len(),
            });
        }
        Ok(&self.data * ket)
    }

    /// `|tr(U† V)| / d`; 1 when the two agree up to a global phase.
    pub fn phase_free_overlap(&self, other: &Propagator) -> f64 {
        linalg::phase_free_overlap(&self.data, &other.data)
    }
}

/// Rotating-frame Zeeman Hamiltonian `Σ ν_j I_z^j`, plus the secular
/// coupling `Σ J_jk I_z^j I_z^k` when `weak_coupling` is set.
pub fn zeeman_hamiltonian(system: &SpinSystem, weak_coupling: bool) -> Hamiltonian {
    let n = system.n();
    let dim = system.dim();
    let mut diag = vec![0.0; dim];
    for (i, e) in diag.iter_mut().enumerate() {
        let m: Vec<f64> = (1..=n)
            .map(|j| if crate::spincore::spin_bit(i, j, n) == 0 { 0.5 } else { -0.5 })
            .collect();
        *e = (0..n).map(|j| system.shifts()[j] * m[j]).sum();
        if weak_coupling {
            for j in 0..n {
                for k in j + 1..n {
                    *e += system.couplings()[j][k] * m[j] * m[k];
                }
            }
        }
    }
    let data = CMatrix::from_diagonal(&CVector::from_iterator(dim, diag.into_iter().map(c)));
    let label = if weak_coupling { "zeeman+weak-J" } else { "zeeman" };
    Hamiltonian {
        data,
        label: label.into(),
    }
}

/// Scalar product `I^a · I^b` on the full register.
pub fn scalar_coupling_operator(n: usize, pair: (usize, usize)) -> Result<CMatrix> {
    check_register(n)?;
    check_pair(n, pair)?;
    let mut out = CMatrix::zeros(1 << n, 1 << n);
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        out += spin_operator(n, pair.0, axis)?.matrix() * spin_operator(n, pair.1, axis)?.matrix();
    }
    Ok(out)
}

/// Pair Hamiltonian in the frame of an RF field at the mean of the pair's
/// shifts: `(Δν/2)(I_z^a − I_z^b) + J I^a·I^b + ν_rf I_x^{a,b}`.
pub fn effective_hamiltonian(
    system: &SpinSystem,
    pair: (usize, usize),
    rf_amplitude: f64,
) -> Result<Hamiltonian> {
    let n = system.n();
    check_pair(n, pair)?;
    let (a, b) = pair;
    let delta = system.shift(a)? - system.shift(b)?;
    let j = system.coupling(a, b)?;
    let diff = spin_operator(n, a, Axis::Z)?.into_matrix() - spin_operator(n, b, Axis::Z)?.into_matrix();
    let data = diff * c(delta / 2.0)
        + scalar_coupling_operator(n, pair)? * c(j)
        + collective_operator(n, &[a, b], Axis::X)?.into_matrix() * c(rf_amplitude);
    Ok(Hamiltonian {
        data,
        label: format!("effective({a},{b}; rf={rf_amplitude} Hz)"),
    })
}

/// `J I^a·I^b`, the Hamiltonian of a magnetically equivalent pair.
pub fn equivalence_hamiltonian(system: &SpinSystem, pair: (usize, usize)) -> Result<Hamiltonian> {
    let j = system.coupling(pair.0, pair.1)?;
    Ok(Hamiltonian {
        data: scalar_coupling_operator(system.n(), pair)? * c(j),
        label: format!("equivalence({},{})", pair.0, pair.1),
    })
}

/// `exp(−i 2π H t)`.
pub fn propagate(h: &Hamiltonian, t: f64) -> Result<Propagator> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeDuration(t));
    }
    let gen = &h.data * C64::new(0.0, -2.0 * PI * t);
    Propagator::new(linalg::expm(&gen), format!("exp[{}; t={t} s]", h.label))
}

fn rotation(generator: &CMatrix, angle: f64, label: String) -> Result<Propagator> {
    Propagator::new(linalg::expm(&(generator * C64::new(0.0, -angle))), label)
}

/// `exp(−i·angle·I_axis^{spins})`.
pub fn pulse(n: usize, spins: &[usize], axis: Axis, angle: f64) -> Result<Propagator> {
    let gen = collective_operator(n, spins, axis)?;
    rotation(
        gen.matrix(),
        angle,
        format!("pulse({angle:.6})_{axis}{spins:?}"),
    )
}

/// `exp(−i·angle·(I_z^a − I_z^b))`.
fn antiphase_z_rotation(n: usize, pair: (usize, usize), angle: f64) -> Result<Propagator> {
    let gen = spin_operator(n, pair.0, Axis::Z)?.into_matrix()
        - spin_operator(n, pair.1, Axis::Z)?.into_matrix();
    rotation(&gen, angle, format!("zdiff({angle:.6})({},{})", pair.0, pair.1))
}

/// `exp(−iπ I_z^a I_z^b)`, obtained by evolving under `J I_z^a I_z^b` for
/// `1/(2J)` (unit coupling if the pair is uncoupled).
pub fn zz_evolution(system: &SpinSystem, pair: (usize, usize)) -> Result<Propagator> {
    let n = system.n();
    check_pair(n, pair)?;
    let j = system.coupling(pair.0, pair.1)?;
    let j = if j == 0.0 { 1.0 } else { j };
    let zz = spin_operator(n, pair.0, Axis::Z)?.into_matrix()
        * spin_operator(n, pair.1, Axis::Z)?.into_matrix();
    let h = Hamiltonian::new(zz * c(j), format!("J·IzIz({},{})", pair.0, pair.1))?;
    let mut u = propagate(&h, 1.0 / (2.0 * j.abs()))?;
    if j < 0.0 {
        u = u.inverse();
    }
    u.label = format!("zz({},{})", pair.0, pair.1);
    Ok(u)
}

/// Singlet preparation from longitudinal magnetization.
pub fn u1_singlet_preparation(system: &SpinSystem, pair: (usize, usize)) -> Result<Propagator> {
    u1_with_rf_scale(system, pair, 1.0)
}

/// [`u1_singlet_preparation`] with every RF pulse angle scaled by
/// `rf_scale`, modelling a miscalibrated RF amplitude.
pub fn u1_with_rf_scale(
    system: &SpinSystem,
    pair: (usize, usize),
    rf_scale: f64,
) -> Result<Propagator> {
    let n = system.n();
    check_pair(n, pair)?;
    let spins = [pair.0, pair.1];
    let factors = [
        antiphase_z_rotation(n, pair, FRAC_PI_4)?,
        pulse(n, &spins, Axis::Y, FRAC_PI_2 * rf_scale)?,
        antiphase_z_rotation(n, pair, FRAC_PI_2)?,
        zz_evolution(system, pair)?,
        pulse(n, &spins, Axis::X, FRAC_PI_2 * rf_scale)?,
    ];
    Propagator::product(&factors, format!("U1({},{})", pair.0, pair.1))
}

/// Converts singlet order into observable single-quantum coherence.
pub fn ud_detection(system: &SpinSystem, pair: (usize, usize)) -> Result<Propagator> {
    let n = system.n();
    check_pair(n, pair)?;
    let factors = [
        pulse(n, &[pair.0, pair.1], Axis::X, FRAC_PI_2)?,
        antiphase_z_rotation(n, pair, FRAC_PI_4)?,
    ];
    Propagator::product(&factors, format!("UD({},{})", pair.0, pair.1))
}

/// The symmetric sandwich `e^{+iπ/2 I_x} e^{−iπ I_z I_z} e^{−iπ/2 I_x}` on a
/// pair. It commutes with the total spin of the pair, so on its own it leaves
/// `|S0⟩` in place; see [`u2_singlet_to_pseudopure`].
pub fn xzz_sandwich(system: &SpinSystem, pair: (usize, usize)) -> Result<Propagator> {
    let n = system.n();
    check_pair(n, pair)?;
    let spins = [pair.0, pair.1];
    let factors = [
        pulse(n, &spins, Axis::X, -FRAC_PI_2)?,
        zz_evolution(system, pair)?,
        pulse(n, &spins, Axis::X, FRAC_PI_2)?,
    ];
    Propagator::product(&factors, format!("XZZX({},{})", pair.0, pair.1))
}

/// Singlet to `|01⟩` conversion: an antiphase z rotation by `−π/4` that turns
/// `|S0⟩` into a `y`-type superposition, followed by [`xzz_sandwich`].
pub fn u2_singlet_to_pseudopure(system: &SpinSystem, pair: (usize, usize)) -> Result<Propagator> {
    let n = system.n();
    check_pair(n, pair)?;
    let factors = [
        xzz_sandwich(system, pair)?,
        antiphase_z_rotation(n, pair, -FRAC_PI_4)?,
    ];
    Propagator::product(&factors, format!("U2({},{})", pair.0, pair.1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 3] = [BellState::PsiPlus, BellState::PhiPlus, BellState::PhiMinus];

    /// Two-spin ket in the `|00⟩, |01⟩, |10⟩, |11⟩` basis.
    pub fn ket(self) -> CVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = match self {
            BellState::PsiPlus => [0.0, h, h, 0.0],
            BellState::PhiPlus => [h, 0.0, 0.0, h],
            BellState::PhiMinus => [h, 0.0, 0.0, -h],
        };
        CVector::from_iterator(4, v.iter().map(|&x| c(x)))
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellState::PsiPlus => "psi+",
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
        })
    }
}

impl std::str::FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi+" => Ok(BellState::PsiPlus),
            "phi+" => Ok(BellState::PhiPlus),
            "phi-" => Ok(BellState::PhiMinus),
            other => Err(Error::Config(format!("unknown Bell state `{other}`"))),
        }
    }
}

/// Rotation of the first spin of `pair` taking `|S0⟩` to the given Bell state.
pub fn bell_rotation(n: usize, pair: (usize, usize), variant: BellState) -> Result<Propagator> {
    check_register(n)?;
    check_pair(n, pair)?;
    let s = [pair.0];
    let z = || pulse(n, &s, Axis::Z, -PI);
    let x = || pulse(n, &s, Axis::X, -PI);
    let factors = match variant {
        BellState::PsiPlus => vec![z()?],
        BellState::PhiPlus => vec![x()?, z()?],
        BellState::PhiMinus => vec![x()?],
    };
    Propagator::product(&factors, format!("bell[{variant}]({},{})", pair.0, pair.1))
}

/// Which control value fires a controlled-NOT.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    #[default]
    OnOne,
    OnZero,
}

pub fn cnot(n: usize, control: usize, target: usize, polarity: Polarity) -> Result<Propagator> {
    check_register(n)?;
    check_spin(n, control)?;
    check_spin(n, target)?;
    if control == target {
        return Err(Error::DegeneratePair(control, target));
    }
    let dim = 1 << n;
    let fire = match polarity {
        Polarity::OnOne => 1,
        Polarity::OnZero => 0,
    };
    let tmask = 1 << (n - target);
    let mut data = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let j = if crate::spincore::spin_bit(i, control, n) == fire {
            i ^ tmask
        } else {
            i
        };
        data[(j, i)] = c(1.0);
    }
    let tag = match polarity {
        Polarity::OnOne => "",
        Polarity::OnZero => "~",
    };
    Ok(Propagator {
        data,
        label: format!("cnot({tag}{control}->{target})"),
    })
}

/// `|0⟩ → (|0⟩ − |1⟩)/√2`, `|1⟩ → (|0⟩ + |1⟩)/√2`, i.e. `e^{+i(π/2) I_y}`.
pub fn pseudo_hadamard(n: usize, spin: usize) -> Result<Propagator> {
    let mut u = pulse(n, &[spin], Axis::Y, -FRAC_PI_2)?;
    u.label = format!("h({spin})");
    Ok(u)
}

/// π pulse about x on each listed spin.
pub fn not_gate(n: usize, spins: &[usize]) -> Result<Propagator> {
    let mut u = pulse(n, spins, Axis::X, PI)?;
    u.label = format!("not{spins:?}");
    Ok(u)
}

/// π z rotation of `spin` realized as free precession at its offset from
/// `reference` for `1/(2|Δν|)`, couplings refocused. Agrees with
/// `exp(∓iπ I_z)` up to a global phase.
pub fn z_rotation_by_shift_evolution(
    system: &SpinSystem,
    spin: usize,
    reference: usize,
) -> Result<Propagator> {
    let n = system.n();
    check_pair(n, (spin, reference))?;
    let delta = system.shift(spin)? - system.shift(reference)?;
    if delta == 0.0 {
        return Err(Error::InvalidSystem(format!(
            "spins {spin} and {reference} have equal shifts"
        )));
    }
    let h = Hamiltonian::new(
        spin_operator(n, spin, Axis::Z)?.into_matrix() * c(delta),
        format!("offset({spin} vs {reference})"),
    )?;
    propagate(&h, 1.0 / (2.0 * delta.abs()))
}
