//! Independent oracles shared by the integration tests: closed-form
//! single-spin matrices, Kronecker products and random valid states.

#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use singlet_init::spincore::DensityMatrix;
use singlet_init::{CMatrix, CVector, C64};

pub fn re(v: f64) -> C64 {
    C64::new(v, 0.0)
}

pub fn mat2(a: [[C64; 2]; 2]) -> CMatrix {
    DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
}

pub fn eye(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Left factor is spin 1.
pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

pub fn sigma_x() -> CMatrix {
    mat2([[re(0.0), re(1.0)], [re(1.0), re(0.0)]])
}

pub fn sigma_y() -> CMatrix {
    mat2([[re(0.0), C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), re(0.0)]])
}

pub fn sigma_z() -> CMatrix {
    mat2([[re(1.0), re(0.0)], [re(0.0), re(-1.0)]])
}

pub fn proj0() -> CMatrix {
    mat2([[re(1.0), re(0.0)], [re(0.0), re(0.0)]])
}

pub fn proj1() -> CMatrix {
    mat2([[re(0.0), re(0.0)], [re(0.0), re(1.0)]])
}

/// `exp(−iθσ_x/2)` written out.
pub fn rx(theta: f64) -> CMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    mat2([[re(c), C64::new(0.0, -s)], [C64::new(0.0, -s), re(c)]])
}

/// `exp(−iθσ_y/2)` written out.
pub fn ry(theta: f64) -> CMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    mat2([[re(c), re(-s)], [re(s), re(c)]])
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

pub fn phase(angle: f64) -> C64 {
    C64::from_polar(1.0, angle)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn ket(amplitudes: &[f64]) -> CVector {
    let v = CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|&a| re(a)));
    v.normalize()
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// `G G† / tr(G G†)` from raw Gaussian-ish entries: full rank almost
/// surely, rank deficient when `rank < dim`.
pub fn state_from_entries(n: usize, rank: usize, entries: &[f64]) -> DensityMatrix {
    let dim = 1 << n;
    let g = CMatrix::from_fn(dim, rank, |i, j| {
        let k = 2 * (i * rank + j);
        C64::new(entries[k], entries[k + 1])
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::from_matrix(m / tr).expect("valid state")
}

/// Random states on 2 to 4 spins, including low-rank ones.
pub fn arb_state() -> impl Strategy<Value = DensityMatrix> {
    (2usize..=4, 1usize..=4, prop::collection::vec(-1.0f64..1.0, 2 * 16 * 4)).prop_filter_map(
        "degenerate draw",
        |(n, rank, entries)| {
            let norm: f64 = entries.iter().take(2 * (1 << n) * rank).map(|v| v * v).sum();
            (norm > 1e-3).then(|| state_from_entries(n, rank, &entries))
        },
    )
}
