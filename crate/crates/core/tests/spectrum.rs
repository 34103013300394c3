mod common;

use common::*;
use singlet_init::analysis::{simulate_spectrum, spectral_lines, SpectrumParams};
use singlet_init::protocols::{detect_singlet, preset};
use singlet_init::spincore::{
    basis_index, equilibrium_state, pseudopure_state, DensityMatrix, PairState, SpinSystem,
};
use singlet_init::C64;

fn system() -> SpinSystem {
    preset("2q-bromothiophene").unwrap().system
}

#[test]
fn pseudopure_01_shows_one_line_per_spin() {
    let s = system();
    let rho = pseudopure_state(basis_index("01").unwrap(), 2, 0.3).unwrap();
    let spec = simulate_spectrum(&rho, &s, &SpectrumParams::default()).unwrap();
    let peaks = spec.absorption_peaks(0.05);
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    // spin 2 flips with spin 1 in |0⟩, spin 1 flips with spin 2 in |1⟩
    let j = s.coupling(1, 2).unwrap();
    let expected = [s.shift(2).unwrap() + j / 2.0, s.shift(1).unwrap() - j / 2.0];
    for (f, e) in peaks.iter().map(|p| p.0).zip(expected) {
        assert!((f - e).abs() <= spec.bin_width(), "{f} vs {e}");
    }
}

#[test]
fn equilibrium_shows_both_doublets() {
    let s = system();
    let spec = simulate_spectrum(&equilibrium_state(&s), &s, &SpectrumParams::default()).unwrap();
    assert_eq!(spec.absorption_peaks(0.05).len(), 4);
    assert_eq!(spec.peaks(0.05).len(), 4);
}

#[test]
fn maximally_mixed_state_is_silent() {
    let s = system();
    let rho = DensityMatrix::maximally_mixed(2).unwrap();
    assert!(spectral_lines(&rho, &s, 0.1).unwrap().is_empty());
    let spec = simulate_spectrum(&rho, &s, &SpectrumParams::default()).unwrap();
    assert_eq!(spec.max_magnitude(), 0.0);
}

#[test]
fn spectrum_is_linear_in_the_state() {
    let s = system();
    let params = SpectrumParams::default();
    let a = equilibrium_state(&s);
    let b = pseudopure_state(basis_index("10").unwrap(), 2, 0.4).unwrap();
    let w = 0.3;
    let mix = DensityMatrix::from_matrix(a.matrix() * re(w) + b.matrix() * re(1.0 - w)).unwrap();
    let sa = simulate_spectrum(&a, &s, &params).unwrap();
    let sb = simulate_spectrum(&b, &s, &params).unwrap();
    let sm = simulate_spectrum(&mix, &s, &params).unwrap();
    let scale = sm.max_magnitude();
    for k in 0..sm.amplitudes.len() {
        let lin = sa.amplitudes[k] * w + sb.amplitudes[k] * (1.0 - w);
        assert!((sm.amplitudes[k] - lin).norm() <= 1e-10 * scale);
    }
}

#[test]
fn transform_preserves_energy() {
    let s = system();
    let spec = simulate_spectrum(&equilibrium_state(&s), &s, &SpectrumParams::default()).unwrap();
    let time: f64 = spec.fid.iter().map(|z| z.norm_sqr()).sum();
    let freq: f64 = spec.amplitudes.iter().map(|z| z.norm_sqr()).sum();
    let n = spec.amplitudes.len() as f64;
    assert!((freq / n - time).abs() <= 1e-9 * time);
}

#[test]
fn frequency_grid_is_centred() {
    let s = system();
    let params = SpectrumParams {
        sweep_width: Some(1000.0),
        n_points: 1024,
        ..SpectrumParams::default()
    };
    let spec = simulate_spectrum(&equilibrium_state(&s), &s, &params).unwrap();
    assert_eq!(spec.frequencies[0], -500.0);
    assert_eq!(spec.frequencies[512], 0.0);
    assert_eq!(spec.bin_width(), 1000.0 / 1024.0);
}

#[test]
fn invalid_parameters_rejected() {
    let s = system();
    let rho = equilibrium_state(&s);
    for bad in [
        SpectrumParams { n_points: 1000, ..Default::default() },
        SpectrumParams { line_width: 0.0, ..Default::default() },
        SpectrumParams { sweep_width: Some(-1.0), ..Default::default() },
    ] {
        assert!(simulate_spectrum(&rho, &s, &bad).is_err());
    }
}

#[test]
fn detected_singlet_gives_antiphase_lines() {
    let s = system();
    let singlet = DensityMatrix::from_ket(&PairState::Singlet.ket()).unwrap();
    let observed = detect_singlet(&singlet, &s, (1, 2)).unwrap();
    let lines = spectral_lines(&observed, &s, std::f64::consts::FRAC_PI_2).unwrap();
    let total: C64 = lines.iter().map(|l| l.amplitude).sum();
    let size: f64 = lines.iter().map(|l| l.amplitude.norm()).sum();
    assert!(size > 0.1);
    assert!(total.norm() < 1e-10 * size, "net {total} of {size}");
}
