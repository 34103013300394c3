//! Small dense helpers shared by the physics modules.

use nalgebra::DMatrix;

use crate::{CMatrix, C64};

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub(crate) fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub(crate) fn identity(dim: usize) -> CMatrix {
    DMatrix::identity(dim, dim)
}

pub(crate) fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Largest entrywise deviation of `m` from its conjugate transpose.
pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise deviation of `U U†` from the identity.
pub(crate) fn unitary_deviation(u: &CMatrix) -> f64 {
    let prod = u * u.adjoint();
    let mut worst = 0.0_f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - c(target)).norm());
        }
    }
    worst
}

/// Hermitian part `(M + M†)/2`, used to wash out rounding after products.
pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(hermitize(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled so its 1-norm is at most 1/2; 20 Taylor terms then
/// leave a truncation error far below double precision.
pub(crate) fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * c(0.5_f64.powi(squarings));

    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=20 {
        term = &term * &scaled * c(1.0 / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Overlap magnitude `|tr(A† B)| / d`, equal to 1 for unitaries that agree up
/// to a global phase.
pub(crate) fn phase_free_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    trace(&(a.adjoint() * b)).norm() / a.nrows() as f64
}
