//! Spin operators, basis states and the equilibrium / pseudopure density
//! matrices of an `n`-spin register.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c};
use crate::{CMatrix, CVector, Error, Result, C64, MAX_SPINS};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_FLOOR: f64 = -1e-10;

/// Static description of a register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpinSystem", into = "RawSpinSystem")]
pub struct SpinSystem {
    shifts: Vec<f64>,
    couplings: Vec<Vec<f64>>,
    epsilon: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpinSystem {
    shifts: Vec<f64>,
    couplings: Vec<Vec<f64>>,
    epsilon: Vec<f64>,
}

impl TryFrom<RawSpinSystem> for SpinSystem {
    type Error = Error;

    fn try_from(raw: RawSpinSystem) -> Result<Self> {
        SpinSystem::new(raw.shifts, raw.couplings, raw.epsilon)
    }
}

impl From<SpinSystem> for RawSpinSystem {
    fn from(s: SpinSystem) -> Self {
        RawSpinSystem {
            shifts: s.shifts,
            couplings: s.couplings,
            epsilon: s.epsilon,
        }
    }
}

impl SpinSystem {
    /// `shifts` are rotating-frame offsets in Hz, `couplings` the symmetric
    /// scalar-coupling matrix in Hz and `epsilon` the signed per-spin
    /// polarization factors.
    pub fn new(shifts: Vec<f64>, couplings: Vec<Vec<f64>>, epsilon: Vec<f64>) -> Result<Self> {
        let n = shifts.len();
        if n == 0 {
            return Err(Error::InvalidSystem("register needs at least one spin".into()));
        }
        if n > MAX_SPINS {
            return Err(Error::TooManySpins(n));
        }
        if epsilon.len() != n {
            return Err(Error::InvalidSystem(format!(
                "epsilon has {} entries, expected {n}",
                epsilon.len()
            )));
        }
        if couplings.len() != n || couplings.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSystem(format!("couplings must be a {n}x{n} matrix")));
        }
        for (j, row) in couplings.iter().enumerate() {
            if row[j] != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "couplings[{0}][{0}] must be zero",
                    j + 1
                )));
            }
            for (k, &v) in row.iter().enumerate() {
                if v != couplings[k][j] {
                    return Err(Error::InvalidSystem(format!(
                        "couplings not symmetric at ({}, {})",
                        j + 1,
                        k + 1
                    )));
                }
            }
        }
        let all_finite = shifts
            .iter()
            .chain(epsilon.iter())
            .chain(couplings.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidSystem("non-finite parameter".into()));
        }
        Ok(Self {
            shifts,
            couplings,
            epsilon,
        })
    }

    /// Register of `n` spins with zero shifts, couplings and polarization.
    pub fn bare(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n], vec![vec![0.0; n]; n], vec![0.0; n])
    }

    /// Two spins with shifts `±Δν/2`, coupling `j` and equal polarization.
    pub fn pair(delta_nu: f64, j: f64, epsilon: f64) -> Self {
        Self::new(
            vec![delta_nu / 2.0, -delta_nu / 2.0],
            vec![vec![0.0, j], vec![j, 0.0]],
            vec![epsilon, epsilon],
        )
        .expect("two-spin system is always valid")
    }

    pub fn n(&self) -> usize {
        self.shifts.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn couplings(&self) -> &[Vec<f64>] {
        &self.couplings
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn shift(&self, spin: usize) -> Result<f64> {
        check_spin(self.n(), spin)?;
        Ok(self.shifts[spin - 1])
    }

    pub fn coupling(&self, a: usize, b: usize) -> Result<f64> {
        check_pair(self.n(), (a, b))?;
        Ok(self.couplings[a - 1][b - 1])
    }

    pub fn with_epsilon(mut self, epsilon: Vec<f64>) -> Result<Self> {
        if epsilon.len() != self.n() {
            return Err(Error::InvalidSystem("epsilon length mismatch".into()));
        }
        self.epsilon = epsilon;
        Ok(self)
    }
}

pub(crate) fn check_spin(n: usize, spin: usize) -> Result<()> {
    if spin == 0 || spin > n {
        Err(Error::SpinIndex { index: spin, n })
    } else {
        Ok(())
    }
}

pub(crate) fn check_pair(n: usize, (a, b): (usize, usize)) -> Result<()> {
    check_spin(n, a)?;
    check_spin(n, b)?;
    if a == b {
        return Err(Error::DegeneratePair(a, b));
    }
    Ok(())
}

pub(crate) fn check_register(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidSystem("register needs at least one spin".into()))
    } else if n > MAX_SPINS {
        Err(Error::TooManySpins(n))
    } else {
        Ok(())
    }
}

/// Bit of `spin` (1-based, spin 1 most significant) in basis index `index`.
pub fn spin_bit(index: usize, spin: usize, n: usize) -> usize {
    (index >> (n - spin)) & 1
}

/// Basis index of a bit string such as `"010"`.
pub fn basis_index(bits: &str) -> Result<usize> {
    if bits.is_empty() || bits.len() > MAX_SPINS {
        return Err(Error::InvalidState(format!("bad ket label `{bits}`")));
    }
    bits.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::InvalidState(format!("bad ket label `{bits}`"))),
    })
}

/// Total `I_z` quantum number (times two) of a basis index.
pub(crate) fn doubled_mz(index: usize, n: usize) -> i32 {
    let ones = (index & ((1 << n) - 1)).count_ones() as i32;
    n as i32 - 2 * ones
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// Single-spin operator `σ/2` for this axis.
    pub fn half_pauli(self) -> CMatrix {
        let (a, b, cc, d) = match self {
            Axis::X => (c(0.0), c(0.5), c(0.5), c(0.0)),
            Axis::Y => (c(0.0), C64::new(0.0, -0.5), C64::new(0.0, 0.5), c(0.0)),
            Axis::Z => (c(0.5), c(0.0), c(0.0), c(-0.5)),
        };
        CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

/// A `2^n × 2^n` operator with an optional Hermiticity guarantee.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    data: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(data: CMatrix, hermitian: bool) -> Result<Self> {
        check_square_power_of_two(&data)?;
        if hermitian {
            let dev = linalg::hermitian_deviation(&data);
            if dev > HERMITIAN_TOL * data.norm().max(1.0) {
                return Err(Error::InvalidState(format!(
                    "operator flagged Hermitian deviates by {dev:.3e}"
                )));
            }
        }
        Ok(Self { data, hermitian })
    }

    pub(crate) fn hermitian_unchecked(data: CMatrix) -> Self {
        Self {
            data,
            hermitian: true,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_spins(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }
}

fn check_square_power_of_two(m: &CMatrix) -> Result<()> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            found: m.ncols(),
        });
    }
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::InvalidState(format!("dimension {d} is not 2^n with n ≥ 1")));
    }
    Ok(())
}

/// Kronecker embedding of the single-spin operator `I_axis` on `spin`.
pub fn spin_operator(n: usize, spin: usize, axis: Axis) -> Result<Operator> {
    check_register(n)?;
    check_spin(n, spin)?;
    Ok(Operator::hermitian_unchecked(embed_single(
        &axis.half_pauli(),
        spin,
        n,
    )))
}

/// Sum of `spin_operator` over a set of spins, e.g. `I_x^{1,2}`.
pub fn collective_operator(n: usize, spins: &[usize], axis: Axis) -> Result<Operator> {
    check_register(n)?;
    if spins.is_empty() {
        return Err(Error::EmptySpinSet);
    }
    let dim = 1 << n;
    let mut sum = CMatrix::zeros(dim, dim);
    for &s in spins {
        sum += spin_operator(n, s, axis)?.data;
    }
    Ok(Operator::hermitian_unchecked(sum))
}

pub(crate) fn embed_single(op: &CMatrix, spin: usize, n: usize) -> CMatrix {
    let mut out = linalg::identity(1);
    for k in 1..=n {
        let factor = if k == spin {
            op.clone()
        } else {
            linalg::identity(2)
        };
        out = linalg::kron(&out, &factor);
    }
    out
}

/// Embeds a two-spin operator acting on `(a, b)` (with `a` as the leading
/// factor) into the full register, identity on all other spins.
pub fn embed_pair_operator(op: &CMatrix, pair: (usize, usize), n: usize) -> Result<CMatrix> {
    check_register(n)?;
    check_pair(n, pair)?;
    if op.nrows() != 4 || op.ncols() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: op.nrows(),
        });
    }
    let (a, b) = pair;
    let dim = 1 << n;
    let pair_mask = (1 << (n - a)) | (1 << (n - b));
    let local = |i: usize| 2 * spin_bit(i, a, n) + spin_bit(i, b, n);
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            if i & !pair_mask == j & !pair_mask {
                out[(i, j)] = op[(local(i), local(j))];
            }
        }
    }
    Ok(out)
}

/// A unit-trace, Hermitian, positive semidefinite `2^n × 2^n` state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates all state invariants.
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        let rho = Self { data };
        rho.check_invariants()?;
        Ok(rho)
    }

    /// Skips validation; callers are channels that preserve the invariants.
    pub(crate) fn from_matrix_unchecked(data: CMatrix) -> Self {
        Self { data }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_register(n)?;
        let dim = 1 << n;
        Ok(Self {
            data: linalg::identity(dim) * c(1.0 / dim as f64),
        })
    }

    /// Pure state `|ψ⟩⟨ψ|`; the ket is normalized first.
    pub fn from_ket(ket: &CVector) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero ket".into()));
        }
        let k = ket / c(norm);
        let data = &k * k.adjoint();
        check_square_power_of_two(&data)?;
        Ok(Self { data })
    }

    pub fn check_invariants(&self) -> Result<()> {
        check_square_power_of_two(&self.data)?;
        let herm = linalg::hermitian_deviation(&self.data);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = linalg::trace(&self.data);
        if (tr - c(1.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = self.min_eigenvalue();
        if min < PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.data)[0]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_spins(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.data)
    }

    /// Traceless part `ρ − tr(ρ)/d · 𝟙`.
    pub fn deviation(&self) -> CMatrix {
        deviation_of(&self.data)
    }

    /// Computational-basis populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(linalg::trace(&(&self.data * &op.data)))
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        Ok(Self {
            data: linalg::hermitize(&(u * &self.data * u.adjoint())),
        })
    }

    /// Reduced state on the listed spins (in the listed order).
    pub fn reduced(&self, spins: &[usize]) -> Result<DensityMatrix> {
        let n = self.n_spins();
        if spins.is_empty() {
            return Err(Error::EmptySpinSet);
        }
        for (i, &s) in spins.iter().enumerate() {
            check_spin(n, s)?;
            if spins[..i].contains(&s) {
                return Err(Error::DegeneratePair(s, s));
            }
        }
        let k = spins.len();
        let kept_mask: usize = spins.iter().map(|&s| 1usize << (n - s)).sum();
        let local = |i: usize| {
            spins
                .iter()
                .fold(0usize, |acc, &s| (acc << 1) | spin_bit(i, s, n))
        };
        let mut out = CMatrix::zeros(1 << k, 1 << k);
        let dim = self.dim();
        for i in 0..dim {
            for j in 0..dim {
                if i & !kept_mask == j & !kept_mask {
                    out[(local(i), local(j))] += self.data[(i, j)];
                }
            }
        }
        Ok(DensityMatrix { data: out })
    }
}

pub(crate) fn deviation_of(m: &CMatrix) -> CMatrix {
    let d = m.nrows();
    let shift = linalg::trace(m) / c(d as f64);
    let mut out = m.clone();
    for i in 0..d {
        out[(i, i)] -= shift;
    }
    out
}

/// Linearized thermal state `2^{-n}(𝟙 + Σ_j ε_j I_z^j)`.
pub fn equilibrium_state(system: &SpinSystem) -> DensityMatrix {
    let n = system.n();
    let dim = system.dim();
    let mut data = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let dev: f64 = (1..=n)
            .map(|j| {
                let mz = if spin_bit(i, j, n) == 0 { 0.5 } else { -0.5 };
                system.epsilon[j - 1] * mz
            })
            .sum();
        data[(i, i)] = c((1.0 + dev) / dim as f64);
    }
    DensityMatrix { data }
}

/// Pseudopure state `2^{-n}[(1−ε′)𝟙 + 2^n ε′ |ket⟩⟨ket|]`.
pub fn pseudopure_state(ket: usize, n: usize, eps_prime: f64) -> Result<DensityMatrix> {
    check_register(n)?;
    let dim = 1 << n;
    if ket >= dim {
        return Err(Error::BasisIndex { index: ket, dim });
    }
    if !(0.0..=1.0).contains(&eps_prime) {
        return Err(Error::InvalidState(format!("ε′ = {eps_prime} outside [0, 1]")));
    }
    let mut data = linalg::identity(dim) * c((1.0 - eps_prime) / dim as f64);
    data[(ket, ket)] += c(eps_prime);
    Ok(DensityMatrix { data })
}

/// The singlet/triplet states of a spin pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairState {
    #[serde(rename = "S0")]
    Singlet,
    #[serde(rename = "T+1")]
    TripletPlus,
    #[serde(rename = "T0")]
    TripletZero,
    #[serde(rename = "T-1")]
    TripletMinus,
}

impl PairState {
    pub const ALL: [PairState; 4] = [
        PairState::Singlet,
        PairState::TripletPlus,
        PairState::TripletZero,
        PairState::TripletMinus,
    ];

    /// Two-spin ket in the `|00⟩, |01⟩, |10⟩, |11⟩` basis.
    pub fn ket(self) -> CVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = match self {
            PairState::Singlet => [0.0, h, -h, 0.0],
            PairState::TripletPlus => [1.0, 0.0, 0.0, 0.0],
            PairState::TripletZero => [0.0, h, h, 0.0],
            PairState::TripletMinus => [0.0, 0.0, 0.0, 1.0],
        };
        CVector::from_iterator(4, v.iter().map(|&x| c(x)))
    }
}

/// Singlet/triplet basis of a pair inside an `n`-spin register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairBasis {
    pair: (usize, usize),
    n: usize,
}

/// Validated singlet/triplet basis for `pair`.
pub fn singlet_triplet_states(pair: (usize, usize), n: usize) -> Result<PairBasis> {
    check_register(n)?;
    check_pair(n, pair)?;
    Ok(PairBasis { pair, n })
}

impl PairBasis {
    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The four two-spin kets, ordered `S0, T+1, T0, T−1`.
    pub fn kets(&self) -> [CVector; 4] {
        PairState::ALL.map(PairState::ket)
    }

    /// `|s⟩⟨s| ⊗ 𝟙_spectators`.
    pub fn projector(&self, state: PairState) -> CMatrix {
        let k = state.ket();
        embed_pair_operator(&(&k * k.adjoint()), self.pair, self.n)
            .expect("pair validated at construction")
    }

    /// Real orthogonal matrix whose columns are `|s⟩ ⊗ |r⟩` for pair state
    /// `s` (outer, ordered as [`PairState::ALL`]) and spectator basis state
    /// `r` (inner, computational order of the remaining spins).
    pub fn basis_change(&self) -> CMatrix {
        pair_product_basis(&[self.pair], self.n).expect("pair validated at construction")
    }
}

/// Orthogonal basis change for several disjoint pairs at once.
///
/// Column `((s_1·4 + s_2)·4 + …)·2^m + r` is `|s_1⟩ ⊗ |s_2⟩ ⊗ … ⊗ |r⟩`, with
/// `s_i` indexing [`PairState::ALL`] on the `i`-th pair and `r` the
/// computational state of the `m` remaining spins.
pub fn pair_product_basis(pairs: &[(usize, usize)], n: usize) -> Result<CMatrix> {
    check_register(n)?;
    if pairs.is_empty() {
        return Err(Error::EmptySpinSet);
    }
    let mut used = Vec::new();
    for &p in pairs {
        check_pair(n, p)?;
        for s in [p.0, p.1] {
            if used.contains(&s) {
                return Err(Error::InvalidState(format!("spin {s} appears in two pairs")));
            }
            used.push(s);
        }
    }
    let k = pairs.len();
    let spectators: Vec<usize> = (1..=n).filter(|s| !used.contains(s)).collect();
    let m = spectators.len();
    let kets = PairState::ALL.map(PairState::ket);
    let dim = 1 << n;
    let mut out = CMatrix::zeros(dim, dim);
    for outer in 0..(1usize << (2 * k)) {
        let states: Vec<usize> = (0..k).map(|i| (outer >> (2 * (k - 1 - i))) & 3).collect();
        for r in 0..(1usize << m) {
            let col = (outer << m) | r;
            for local in 0..(1usize << (2 * k)) {
                let mut amp = c(1.0);
                for (i, &s) in states.iter().enumerate() {
                    amp *= kets[s][(local >> (2 * (k - 1 - i))) & 3];
                }
                if amp == c(0.0) {
                    continue;
                }
                let mut index = 0usize;
                for (i, &(a, b)) in pairs.iter().enumerate() {
                    let l = (local >> (2 * (k - 1 - i))) & 3;
                    index |= (l >> 1) << (n - a);
                    index |= (l & 1) << (n - b);
                }
                for (q, &sp) in spectators.iter().enumerate() {
                    index |= ((r >> (m - 1 - q)) & 1) << (n - sp);
                }
                out[(index, col)] += amp;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a * b - b * a
    }

    #[test]
    fn single_spin_iz() {
        let iz = spin_operator(1, 1, Axis::Z).unwrap();
        let want = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5), c(-0.5)]));
        assert!(close(iz.matrix(), &want, 0.0));
        assert!(iz.is_hermitian());
    }

    #[test]
    fn ix_on_first_of_two_spins() {
        let ix = spin_operator(2, 1, Axis::X).unwrap();
        let want = linalg::kron(&Axis::X.half_pauli(), &linalg::identity(2));
        assert!(close(ix.matrix(), &want, 0.0));
        assert_eq!(ix.matrix()[(0, 2)], c(0.5));
        assert_eq!(ix.matrix()[(1, 3)], c(0.5));
        assert_eq!(ix.matrix()[(0, 1)], c(0.0));
    }

    #[test]
    fn su2_commutator_three_spins() {
        let x = spin_operator(3, 1, Axis::X).unwrap();
        let y = spin_operator(3, 1, Axis::Y).unwrap();
        let z = spin_operator(3, 1, Axis::Z).unwrap();
        // direct products, no helper from the module under test
        let lhs = commutator(x.matrix(), y.matrix());
        let rhs = z.matrix() * C64::new(0.0, 1.0);
        assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn operators_on_different_spins_commute() {
        for (a, b) in [(1, 2), (1, 3), (2, 3)] {
            for ax in [Axis::X, Axis::Y, Axis::Z] {
                for bx in [Axis::X, Axis::Y, Axis::Z] {
                    let p = spin_operator(3, a, ax).unwrap();
                    let q = spin_operator(3, b, bx).unwrap();
                    assert_eq!(commutator(p.matrix(), q.matrix()).norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn spin_operator_index_errors() {
        assert!(matches!(
            spin_operator(2, 0, Axis::X),
            Err(Error::SpinIndex { index: 0, n: 2 })
        ));
        assert!(matches!(
            spin_operator(2, 3, Axis::X),
            Err(Error::SpinIndex { index: 3, n: 2 })
        ));
    }

    #[test]
    fn collective_z_two_spins() {
        let op = collective_operator(2, &[1, 2], Axis::Z).unwrap();
        let want = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(-1.0)]));
        assert!(close(op.matrix(), &want, 0.0));
    }

    #[test]
    fn collective_singleton_matches_spin_operator() {
        let a = collective_operator(2, &[1], Axis::X).unwrap();
        let b = spin_operator(2, 1, Axis::X).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collective_four_spins_brute_force() {
        let y = Axis::Y.half_pauli();
        let i2 = linalg::identity(2);
        let k = |f: [&CMatrix; 4]| {
            linalg::kron(&linalg::kron(&linalg::kron(f[0], f[1]), f[2]), f[3])
        };
        let want = k([&i2, &i2, &y, &i2]) + k([&i2, &i2, &i2, &y]);
        let got = collective_operator(4, &[3, 4], Axis::Y).unwrap();
        assert!(close(got.matrix(), &want, 0.0));
    }

    #[test]
    fn collective_errors() {
        assert!(matches!(
            collective_operator(2, &[], Axis::Z),
            Err(Error::EmptySpinSet)
        ));
        assert!(collective_operator(2, &[1, 5], Axis::Z).is_err());
    }

    #[test]
    fn equilibrium_single_spin() {
        let sys = SpinSystem::new(vec![0.0], vec![vec![0.0]], vec![1e-4]).unwrap();
        let rho = equilibrium_state(&sys);
        let p = rho.populations();
        assert!((p[0] - (1.0 + 5e-5) / 2.0).abs() < 1e-16);
        assert!((p[1] - (1.0 - 5e-5) / 2.0).abs() < 1e-16);
        rho.check_invariants().unwrap();
    }

    #[test]
    fn equilibrium_zero_polarization_is_mixed() {
        let rho = equilibrium_state(&SpinSystem::bare(2).unwrap());
        assert_eq!(rho, DensityMatrix::maximally_mixed(2).unwrap());
    }

    #[test]
    fn equilibrium_matches_boltzmann_to_first_order() {
        // exact Boltzmann weights exp(Σ ε_j m_j)/Z, with ε playing -hν/kT
        let eps = [1e-4, 1e-4];
        let sys = SpinSystem::new(vec![0.0; 2], vec![vec![0.0; 2]; 2], eps.to_vec()).unwrap();
        let rho = equilibrium_state(&sys);
        let weights: Vec<f64> = (0..4)
            .map(|i| {
                let m1 = if i & 2 == 0 { 0.5 } else { -0.5 };
                let m2 = if i & 1 == 0 { 0.5 } else { -0.5 };
                (eps[0] * m1 + eps[1] * m2).exp()
            })
            .collect();
        let z: f64 = weights.iter().sum();
        for (i, w) in weights.iter().enumerate() {
            assert!((rho.populations()[i] - w / z).abs() < 1e-9);
        }
    }

    #[test]
    fn pseudopure_limits() {
        let pure = pseudopure_state(0b01, 2, 1.0).unwrap();
        assert_eq!(pure.populations(), vec![0.0, 1.0, 0.0, 0.0]);
        let mixed = pseudopure_state(0b01, 2, 0.0).unwrap();
        assert_eq!(mixed, DensityMatrix::maximally_mixed(2).unwrap());
    }

    #[test]
    fn pseudopure_three_spins_symbolic() {
        let e = 1e-4;
        let rho = pseudopure_state(basis_index("010").unwrap(), 3, e).unwrap();
        for (i, p) in rho.populations().iter().enumerate() {
            let want = (1.0 - e) / 8.0 + if i == 2 { e } else { 0.0 };
            assert!((p - want).abs() < 1e-18);
        }
        rho.check_invariants().unwrap();
    }

    #[test]
    fn pseudopure_rejects_bad_ket() {
        assert!(matches!(
            pseudopure_state(4, 2, 0.5),
            Err(Error::BasisIndex { index: 4, dim: 4 })
        ));
    }

    #[test]
    fn singlet_triplet_orthonormal() {
        let basis = singlet_triplet_states((1, 2), 2).unwrap();
        let kets = basis.kets();
        for (i, a) in kets.iter().enumerate() {
            for (j, b) in kets.iter().enumerate() {
                let ip = a.dotc(b);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(want)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn singlet_projector_trace_with_spectator() {
        let basis = singlet_triplet_states((1, 2), 3).unwrap();
        let p = basis.projector(PairState::Singlet);
        assert!((p.trace() - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn pair_projectors_resolve_identity() {
        for (pair, n) in [((1, 2), 2), ((2, 3), 3), ((3, 1), 4)] {
            let basis = singlet_triplet_states(pair, n).unwrap();
            let sum = PairState::ALL
                .iter()
                .fold(CMatrix::zeros(1 << n, 1 << n), |acc, &s| acc + basis.projector(s));
            assert!(close(&sum, &linalg::identity(1 << n), 1e-14));
        }
    }

    #[test]
    fn basis_change_is_orthogonal_and_ordered() {
        let basis = singlet_triplet_states((2, 3), 3).unwrap();
        let b = basis.basis_change();
        assert!(linalg::unitary_deviation(&b) < 1e-14);
        // first column: S0 on (2,3) with spin 1 in |0⟩
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b[(basis_index("001").unwrap(), 0)] - c(h)).norm() < 1e-15);
        assert!((b[(basis_index("010").unwrap(), 0)] - c(-h)).norm() < 1e-15);
    }

    #[test]
    fn pair_errors() {
        assert!(matches!(
            singlet_triplet_states((1, 1), 2),
            Err(Error::DegeneratePair(1, 1))
        ));
        assert!(singlet_triplet_states((1, 3), 2).is_err());
    }

    #[test]
    fn reduced_state_of_product() {
        let a = pseudopure_state(0, 1, 0.3).unwrap();
        let b = pseudopure_state(1, 1, 0.6).unwrap();
        let prod = DensityMatrix::from_matrix(linalg::kron(a.matrix(), b.matrix())).unwrap();
        assert!(close(prod.reduced(&[1]).unwrap().matrix(), a.matrix(), 1e-15));
        assert!(close(prod.reduced(&[2]).unwrap().matrix(), b.matrix(), 1e-15));
        let swapped = prod.reduced(&[2, 1]).unwrap();
        let want = linalg::kron(b.matrix(), a.matrix());
        assert!(close(swapped.matrix(), &want, 1e-15));
    }

    #[test]
    fn system_validation() {
        let asym = SpinSystem::new(vec![0.0; 2], vec![vec![0.0, 1.0], vec![2.0, 0.0]], vec![0.0; 2]);
        assert!(asym.is_err());
        let diag = SpinSystem::new(vec![0.0; 2], vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0; 2]);
        assert!(diag.is_err());
        assert!(SpinSystem::new(vec![], vec![], vec![]).is_err());
        assert!(matches!(SpinSystem::bare(9), Err(Error::TooManySpins(9))));
    }

    #[test]
    fn basis_index_parsing() {
        assert_eq!(basis_index("1001").unwrap(), 9);
        assert!(basis_index("01a").is_err());
    }
}
