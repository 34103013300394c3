//! Non-unitary evolution: the spin-lock channel that protects singlet order,
//! free relaxation, gradient dephasing and depolarizing gate noise.
//!
//! Every channel here is unital (its fixed point is the maximally mixed
//! state) and trace preserving.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::Propagator;
use crate::linalg::{self, c};
use crate::spincore::{
    check_pair, check_register, doubled_mz, pair_product_basis, spin_bit, DensityMatrix,
};
use crate::{CMatrix, Error, Result};

/// Singlet-order decay parameters of one spin pair under spin-lock.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingletDecay {
    pub pair: (usize, usize),
    /// Singlet-order decay constant (s); `inf` for a perfectly protected pair.
    pub ts: f64,
    /// Coherence decay constant during the lock (s). Defaults to the
    /// smaller `t2` of the pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_lock_coh: Option<f64>,
}

/// Phenomenological relaxation constants of a register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct RelaxationModel {
    t1: Vec<f64>,
    t2: Vec<f64>,
    singlet: Vec<SingletDecay>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    t1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t2: Option<Vec<f64>>,
    #[serde(default)]
    singlet: Vec<SingletDecay>,
}

impl TryFrom<RawModel> for RelaxationModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        RelaxationModel::new(raw.t1, raw.t2, raw.singlet)
    }
}

impl From<RelaxationModel> for RawModel {
    fn from(m: RelaxationModel) -> Self {
        RawModel {
            t1: m.t1,
            t2: Some(m.t2),
            singlet: m.singlet,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be > 0, got {v}")))
    }
}

impl RelaxationModel {
    /// `t2` defaults to `t1` spin by spin.
    pub fn new(t1: Vec<f64>, t2: Option<Vec<f64>>, singlet: Vec<SingletDecay>) -> Result<Self> {
        let n = t1.len();
        check_register(n).map_err(|_| Error::InvalidModel(format!("t1 has {n} entries")))?;
        let t2 = t2.unwrap_or_else(|| t1.clone());
        if t2.len() != n {
            return Err(Error::InvalidModel(format!(
                "t2 has {} entries, expected {n}",
                t2.len()
            )));
        }
        for (j, (&a, &b)) in t1.iter().zip(&t2).enumerate() {
            positive(&format!("t1[{}]", j + 1), a)?;
            positive(&format!("t2[{}]", j + 1), b)?;
            if b > 2.0 * a {
                let limit = 2.0 * a;
                let idx = j + 1;
                return Err(Error::InvalidModel(format!(
                    "t2[{idx}] = {b} exceeds 2·t1[{idx}] = {limit}"
                )));
            }
        }
        let model = Self { t1, t2, singlet };
        for (i, e) in model.singlet.iter().enumerate() {
            check_pair(n, e.pair)
                .map_err(|err| Error::InvalidModel(format!("singlet entry {}: {err}", i + 1)))?;
            if model.singlet[..i].iter().any(|o| same_pair(o.pair, e.pair)) {
                return Err(Error::InvalidModel(format!(
                    "pair ({}, {}) listed twice",
                    e.pair.0, e.pair.1
                )));
            }
            positive("ts", e.ts)?;
            if let Some(tc) = e.t_lock_coh {
                positive("t_lock_coh", tc)?;
            }
            model.check_lock_positivity(e)?;
        }
        Ok(model)
    }

    /// Perfect singlet protection, instantaneous triplet equilibration and
    /// coherence loss on the listed pairs.
    pub fn ideal(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let tiny = f64::MIN_POSITIVE;
        Self::new(
            vec![tiny; n],
            None,
            pairs
                .iter()
                .map(|&pair| SingletDecay {
                    pair,
                    ts: f64::INFINITY,
                    t_lock_coh: Some(tiny),
                })
                .collect(),
        )
    }

    /// The locked map stays completely positive when the coherence rate
    /// dominates the population-transfer rates.
    fn check_lock_positivity(&self, e: &SingletDecay) -> Result<()> {
        let t1 = self.pair_t1(e.pair);
        let tc = self.resolve_lock_coherence(e);
        let rate_c = 1.0 / tc;
        let rate_1 = 1.0 / t1;
        let rate_s = 1.0 / e.ts;
        let need = (2.0 / 3.0 * rate_1 + rate_s / 12.0).max(0.75 * rate_s);
        if rate_c < need * (1.0 - 1e-12) {
            return Err(Error::InvalidModel(format!(
                "pair ({}, {}): t_lock_coh = {tc} s too long for t1 = {t1} s, ts = {} s \
                 (must be ≤ {:.6} s to keep the lock channel positive)",
                e.pair.0,
                e.pair.1,
                e.ts,
                1.0 / need
            )));
        }
        if e.ts < t1 / 4.0 {
            return Err(Error::InvalidModel(format!(
                "pair ({}, {}): ts = {} s below t1/4",
                e.pair.0, e.pair.1, e.ts
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.t1.len()
    }

    pub fn t1(&self) -> &[f64] {
        &self.t1
    }

    pub fn t2(&self) -> &[f64] {
        &self.t2
    }

    pub fn singlet(&self) -> &[SingletDecay] {
        &self.singlet
    }

    pub fn entry(&self, pair: (usize, usize)) -> Result<&SingletDecay> {
        self.singlet
            .iter()
            .find(|e| same_pair(e.pair, pair))
            .ok_or(Error::UnknownPair(pair.0, pair.1))
    }

    /// Triplet relaxation time of a pair: the members' rates averaged.
    pub fn pair_t1(&self, (a, b): (usize, usize)) -> f64 {
        2.0 / (1.0 / self.t1[a - 1] + 1.0 / self.t1[b - 1])
    }

    fn resolve_lock_coherence(&self, e: &SingletDecay) -> f64 {
        e.t_lock_coh
            .unwrap_or_else(|| self.t2[e.pair.0 - 1].min(self.t2[e.pair.1 - 1]))
    }

    pub fn lock_coherence(&self, pair: (usize, usize)) -> Result<f64> {
        Ok(self.resolve_lock_coherence(self.entry(pair)?))
    }

    /// Same model with every pair's singlet decay constant replaced.
    pub fn with_ts(&self, ts: f64) -> Result<Self> {
        let mut singlet = self.singlet.clone();
        singlet.iter_mut().for_each(|e| e.ts = ts);
        Self::new(self.t1.clone(), Some(self.t2.clone()), singlet)
    }

    /// Same model with every spin's `t1` replaced; `t2` follows if it was
    /// equal to `t1` before.
    pub fn with_t1(&self, t1: f64) -> Result<Self> {
        let t2 = self
            .t1
            .iter()
            .zip(&self.t2)
            .map(|(&a, &b)| if a == b { t1 } else { b })
            .collect();
        Self::new(vec![t1; self.n()], Some(t2), self.singlet.clone())
    }

    pub fn with_lock_coherence(&self, tc: f64) -> Result<Self> {
        let mut singlet = self.singlet.clone();
        singlet.iter_mut().for_each(|e| e.t_lock_coh = Some(tc));
        Self::new(self.t1.clone(), Some(self.t2.clone()), singlet)
    }
}

fn same_pair(a: (usize, usize), b: (usize, usize)) -> bool {
    a == b || a == (b.1, b.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LockSequence {
    #[default]
    #[serde(rename = "CW")]
    Cw,
    #[serde(rename = "WALTZ-16")]
    Waltz16,
}

impl fmt::Display for LockSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LockSequence::Cw => "CW",
            LockSequence::Waltz16 => "WALTZ-16",
        })
    }
}

/// One spin-lock period, possibly on several disjoint pairs at once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinLockSpec {
    pub pairs: Vec<(usize, usize)>,
    /// Seconds.
    pub duration: f64,
    /// RF amplitude in Hz; recorded, not simulated.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub sequence: LockSequence,
}

impl SpinLockSpec {
    pub fn new(pair: (usize, usize), duration: f64, amplitude: f64, sequence: LockSequence) -> Self {
        Self {
            pairs: vec![pair],
            duration,
            amplitude,
            sequence,
        }
    }

    pub fn with_duration(&self, duration: f64) -> Self {
        Self {
            duration,
            ..self.clone()
        }
    }
}

/// Population map of one locked pair over `(S0, T+1, T0, T−1)`.
fn pair_transfer(duration: f64, ts: f64, t1: f64) -> [[f64; 4]; 4] {
    let es = (-duration / ts).exp();
    let e1 = (-duration / t1).exp();
    let mut t = [[0.0; 4]; 4];
    for col in 0..4 {
        let mut p = [0.0; 4];
        p[col] = 1.0;
        let total = 1.0;
        let ds = p[0] - total / 4.0;
        t[0][col] = total / 4.0 + ds * es;
        for a in 1..4 {
            t[a][col] = total / 4.0 - ds * es / 3.0 + (p[a] - total / 4.0 + ds / 3.0) * e1;
        }
    }
    t
}

/// Spin-locked evolution.
///
/// In the singlet/triplet basis of each locked pair (tensored with the
/// computational basis of the other spins): coherences decay with the lock
/// coherence time, the singlet-order part of the populations decays with
/// `ts`, and the population imbalance among the triplets decays with the
/// pair's `t1`. Several pairs are locked jointly: their population maps act
/// on separate indices and the coherence damping factors multiply.
pub fn spin_lock(
    rho: &DensityMatrix,
    spec: &SpinLockSpec,
    model: &RelaxationModel,
) -> Result<DensityMatrix> {
    let n = rho.n_spins();
    if model.n() != n {
        return Err(Error::Dimension {
            expected: 1 << n,
            found: 1 << model.n(),
        });
    }
    if spec.duration < 0.0 || !spec.duration.is_finite() {
        return Err(Error::NegativeDuration(spec.duration));
    }
    let d = spec.duration;
    let mut coherence = 1.0;
    let mut maps = Vec::with_capacity(spec.pairs.len());
    for &pair in &spec.pairs {
        check_pair(n, pair)?;
        let entry = model.entry(pair)?;
        coherence *= (-d / model.resolve_lock_coherence(entry)).exp();
        maps.push(pair_transfer(d, entry.ts, model.pair_t1(pair)));
    }
    let basis = pair_product_basis(&spec.pairs, n)?;
    let mut r = basis.adjoint() * rho.matrix() * &basis;
    let dim = rho.dim();
    let pops: Vec<f64> = (0..dim).map(|i| r[(i, i)].re).collect();
    r *= c(coherence);

    let k = spec.pairs.len();
    let inner = dim >> (2 * k);
    let mut pops = pops;
    for (i, map) in maps.iter().enumerate() {
        let stride = inner << (2 * (k - 1 - i));
        pops = (0..dim)
            .map(|idx| {
                let s = (idx / stride) % 4;
                let base = idx - s * stride;
                (0..4).map(|q| map[s][q] * pops[base + q * stride]).sum()
            })
            .collect();
    }
    for (i, p) in pops.into_iter().enumerate() {
        r[(i, i)] = c(p);
    }
    let out = &basis * r * basis.adjoint();
    Ok(DensityMatrix::from_matrix_unchecked(linalg::hermitize(&out)))
}

/// Independent longitudinal (`t1`) and transverse (`t2`) relaxation of every
/// spin towards the maximally mixed state.
pub fn free_relaxation(
    rho: &DensityMatrix,
    duration: f64,
    model: &RelaxationModel,
) -> Result<DensityMatrix> {
    let n = rho.n_spins();
    if model.n() != n {
        return Err(Error::Dimension {
            expected: 1 << n,
            found: 1 << model.n(),
        });
    }
    if duration < 0.0 || !duration.is_finite() {
        return Err(Error::NegativeDuration(duration));
    }
    let dim = rho.dim();
    let mut m = rho.matrix().clone();
    for j in 1..=n {
        let e1 = (-duration / model.t1[j - 1]).exp();
        let e2 = (-duration / model.t2[j - 1]).exp();
        let mask = 1 << (n - j);
        let src = m.clone();
        for i in 0..dim {
            for k in 0..dim {
                m[(i, k)] = if spin_bit(i, j, n) != spin_bit(k, j, n) {
                    src[(i, k)] * c(e2)
                } else {
                    src[(i, k)] * c((1.0 + e1) / 2.0) + src[(i ^ mask, k ^ mask)] * c((1.0 - e1) / 2.0)
                };
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(linalg::hermitize(&m)))
}

/// Pulsed-field-gradient dephasing: removes every element of nonzero
/// coherence order. With `strict`, zero-quantum coherences go too.
pub fn gradient_crush(rho: &DensityMatrix, strict: bool) -> DensityMatrix {
    let n = rho.n_spins();
    let dim = rho.dim();
    let mut m: CMatrix = rho.matrix().clone();
    for i in 0..dim {
        for k in 0..dim {
            let kill = if strict {
                i != k
            } else {
                doubled_mz(i, n) != doubled_mz(k, n)
            };
            if kill {
                m[(i, k)] = c(0.0);
            }
        }
    }
    DensityMatrix::from_matrix_unchecked(m)
}

/// Depolarizing strength giving process fidelity `fidelity` on dimension `dim`.
pub fn depolarizing_strength(fidelity: f64, dim: usize) -> Result<f64> {
    if !(fidelity > 0.0 && fidelity <= 1.0) {
        return Err(Error::Fidelity(fidelity));
    }
    let d2 = (dim * dim) as f64;
    Ok(((1.0 - fidelity) * d2 / (d2 - 1.0)).clamp(0.0, 1.0))
}

/// `U ρ U†` followed by global depolarizing noise of matching strength.
pub fn noisy_gate(rho: &DensityMatrix, u: &Propagator, fidelity: f64) -> Result<DensityMatrix> {
    let lambda = depolarizing_strength(fidelity, rho.dim())?;
    let ideal = u.apply(rho)?;
    if lambda == 0.0 {
        return Ok(ideal);
    }
    let dim = rho.dim();
    let mut m = ideal.into_matrix() * c(1.0 - lambda);
    for i in 0..dim {
        m[(i, i)] += c(lambda / dim as f64);
    }
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spincore::{pseudopure_state, singlet_triplet_states, PairState};
    use crate::CVector;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    fn singlet(n: usize) -> DensityMatrix {
        let basis = singlet_triplet_states((1, 2), n).unwrap();
        let p = basis.projector(PairState::Singlet) * c(1.0 / (1 << (n - 2)) as f64);
        DensityMatrix::from_matrix(p).unwrap()
    }

    fn model2(ts: f64, t1: f64, tc: f64) -> RelaxationModel {
        RelaxationModel::new(
            vec![t1; 2],
            None,
            vec![SingletDecay {
                pair: (1, 2),
                ts,
                t_lock_coh: Some(tc),
            }],
        )
        .unwrap()
    }

    fn lock(d: f64) -> SpinLockSpec {
        SpinLockSpec::new((1, 2), d, 2000.0, LockSequence::Cw)
    }

    fn populations_in_st(rho: &DensityMatrix) -> Vec<f64> {
        let b = singlet_triplet_states((1, 2), 2).unwrap().basis_change();
        let r = b.adjoint() * rho.matrix() * b;
        (0..4).map(|i| r[(i, i)].re).collect()
    }

    #[test]
    fn singlet_decays_with_ts() {
        let ts = 16.2;
        let m = model2(ts, 5.4, 1.0);
        let out = spin_lock(&singlet(2), &lock(ts), &m).unwrap();
        let p = populations_in_st(&out);
        let want_s = 0.25 + 0.75 * (-1.0f64).exp();
        assert!((p[0] - want_s).abs() < 1e-12);
        for &q in &p[1..] {
            assert!((q - (1.0 - want_s) / 3.0).abs() < 1e-12);
            assert!(q > 0.0 && q < 0.25);
        }
    }

    #[test]
    fn zero_duration_lock_is_identity() {
        let rho = pseudopure_state(1, 2, 0.7).unwrap();
        let rho = crate::dynamics::pulse(2, &[1], crate::spincore::Axis::Y, 0.3)
            .unwrap()
            .apply(&rho)
            .unwrap();
        let out = spin_lock(&rho, &lock(0.0), &model2(10.0, 3.0, 1.0)).unwrap();
        assert!(close(out.matrix(), rho.matrix(), 1e-14));
    }

    #[test]
    fn long_protected_lock_leaves_only_singlet_order() {
        let m = model2(f64::INFINITY, 2.0, 0.5);
        let rho = pseudopure_state(1, 2, 1.0).unwrap();
        let out = spin_lock(&rho, &lock(200.0), &m).unwrap();
        let p = populations_in_st(&out);
        let ds = p[0] - 0.25;
        assert!(ds.abs() > 0.1);
        for &q in &p[1..] {
            assert!((q - (0.25 - ds / 3.0)).abs() < 1e-12);
        }
        let b = singlet_triplet_states((1, 2), 2).unwrap().basis_change();
        let r = b.adjoint() * out.matrix() * b;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(r[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn semigroup() {
        let m = model2(16.2, 5.4, 2.0);
        let rho = crate::dynamics::pulse(2, &[1], crate::spincore::Axis::X, 0.7)
            .unwrap()
            .apply(&pseudopure_state(2, 2, 0.9).unwrap())
            .unwrap();
        let a = spin_lock(&spin_lock(&rho, &lock(1.3), &m).unwrap(), &lock(2.1), &m).unwrap();
        let b = spin_lock(&rho, &lock(3.4), &m).unwrap();
        assert!(close(a.matrix(), b.matrix(), 1e-12));
    }

    #[test]
    fn spectator_marginal_is_kept() {
        let m = RelaxationModel::new(
            vec![3.0; 3],
            None,
            vec![SingletDecay {
                pair: (1, 2),
                ts: 9.0,
                t_lock_coh: Some(1.0),
            }],
        )
        .unwrap();
        let rho = pseudopure_state(0b011, 3, 0.8).unwrap();
        let out = spin_lock(&rho, &SpinLockSpec::new((1, 2), 1e4, 0.0, LockSequence::Cw), &m).unwrap();
        let r3 = out.reduced(&[3]).unwrap();
        assert!(close(r3.matrix(), rho.reduced(&[3]).unwrap().matrix(), 1e-12));
        let r12 = out.reduced(&[1, 2]).unwrap();
        assert!(close(r12.matrix(), &(linalg::identity(4) * c(0.25)), 1e-12));
    }

    #[test]
    fn joint_lock_preserves_both_singlets() {
        let m = RelaxationModel::ideal(4, &[(1, 2), (3, 4)]).unwrap();
        let s = PairState::Singlet.ket();
        let ket: CVector = s.kronecker(&s);
        let rho = DensityMatrix::from_ket(&ket).unwrap();
        let spec = SpinLockSpec {
            pairs: vec![(1, 2), (3, 4)],
            duration: 1.0,
            amplitude: 2000.0,
            sequence: LockSequence::Waltz16,
        };
        let out = spin_lock(&rho, &spec, &m).unwrap();
        assert!(close(out.matrix(), rho.matrix(), 1e-12));
    }

    #[test]
    fn lock_errors() {
        let m = model2(10.0, 3.0, 1.0);
        let rho = pseudopure_state(0, 2, 0.5).unwrap();
        let bad = SpinLockSpec::new((1, 2), -1.0, 0.0, LockSequence::Cw);
        assert!(matches!(spin_lock(&rho, &bad, &m), Err(Error::NegativeDuration(_))));
        let rho3 = pseudopure_state(0, 3, 0.5).unwrap();
        assert!(spin_lock(&rho3, &lock(1.0), &m).is_err());
        let m3 = RelaxationModel::new(vec![3.0; 3], None, vec![]).unwrap();
        assert!(matches!(
            spin_lock(&rho3, &lock(1.0), &m3),
            Err(Error::UnknownPair(1, 2))
        ));
    }

    #[test]
    fn model_validation() {
        assert!(RelaxationModel::new(vec![1.0, -1.0], None, vec![]).is_err());
        assert!(RelaxationModel::new(vec![1.0], Some(vec![3.0]), vec![]).is_err());
        let slow_coh = RelaxationModel::new(
            vec![1.0; 2],
            None,
            vec![SingletDecay {
                pair: (1, 2),
                ts: 3.0,
                t_lock_coh: Some(10.0),
            }],
        );
        assert!(matches!(slow_coh, Err(Error::InvalidModel(_))));
        let m = model2(16.2, 5.4, 1.0);
        assert!((m.lock_coherence((2, 1)).unwrap() - 1.0).abs() < 1e-15);
        let default_tc = RelaxationModel::new(
            vec![5.4, 4.0],
            None,
            vec![SingletDecay {
                pair: (1, 2),
                ts: 16.2,
                t_lock_coh: None,
            }],
        )
        .unwrap();
        assert_eq!(default_tc.lock_coherence((1, 2)).unwrap(), 4.0);
    }

    #[test]
    fn free_relaxation_scalar_decay() {
        let t2 = 0.8;
        let m = RelaxationModel::new(vec![1.0], Some(vec![t2]), vec![]).unwrap();
        let plus = DensityMatrix::from_ket(&CVector::from_vec(vec![c(1.0), c(1.0)])).unwrap();
        let t = 0.37;
        let out = free_relaxation(&plus, t, &m).unwrap();
        assert!((out.matrix()[(0, 1)].norm() - 0.5 * (-t / t2).exp()).abs() < 1e-14);
        let zero = free_relaxation(&plus, 0.0, &m).unwrap();
        assert!(close(zero.matrix(), plus.matrix(), 1e-15));
    }

    #[test]
    fn free_relaxation_fixed_point() {
        let m = RelaxationModel::new(vec![1.0, 2.0], Some(vec![0.5, 1.0]), vec![]).unwrap();
        let rho = singlet(2);
        let out = free_relaxation(&rho, 500.0, &m).unwrap();
        assert!(close(out.matrix(), &(linalg::identity(4) * c(0.25)), 1e-12));
        let p = free_relaxation(&pseudopure_state(0, 2, 1.0).unwrap(), 0.7, &m).unwrap();
        // product of independent single-spin T1 relaxations
        let a = (1.0 + (-0.7f64).exp()) / 2.0;
        let b = (1.0 + (-0.35f64).exp()) / 2.0;
        assert!((p.populations()[0] - a * b).abs() < 1e-14);
    }

    #[test]
    fn gradient_examples() {
        let plus = DensityMatrix::from_ket(&CVector::from_vec(vec![c(1.0), c(1.0)])).unwrap();
        let out = gradient_crush(&plus, false);
        assert!(close(out.matrix(), &(linalg::identity(2) * c(0.5)), 1e-15));
        let s = singlet(2);
        assert_eq!(gradient_crush(&s, false), s);
        let strict = gradient_crush(&s, true);
        assert_eq!(strict.matrix()[(1, 2)], c(0.0));
        assert_eq!(gradient_crush(&strict, true), strict);
    }

    #[test]
    fn noisy_gate_algebra() {
        let u = crate::dynamics::cnot(3, 3, 2, crate::dynamics::Polarity::OnOne).unwrap();
        let rho = pseudopure_state(5, 3, 1.0).unwrap();
        let exact = noisy_gate(&rho, &u, 1.0).unwrap();
        assert_eq!(exact, u.apply(&rho).unwrap());
        let f = 0.96;
        let d = 8.0;
        let lambda = (1.0 - f) * d * d / (d * d - 1.0);
        let out = noisy_gate(&rho, &u, f).unwrap();
        let ideal = u.apply(&rho).unwrap();
        let fid = linalg::trace(&(out.matrix() * ideal.matrix())).re;
        assert!((fid - ((1.0 - lambda) + lambda / d)).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(close(noisy_gate(&mixed, &u, f).unwrap().matrix(), mixed.matrix(), 1e-15));
        assert!(matches!(noisy_gate(&rho, &u, 0.0), Err(Error::Fidelity(_))));
        assert!(matches!(noisy_gate(&rho, &u, 1.1), Err(Error::Fidelity(_))));
    }

    #[test]
    fn noisy_gate_process_fidelity() {
        // (1/d²) Σ_ij ⟨i|U† Φ(|i⟩⟨j|) U|j⟩ from the channel's linear action
        let u = crate::dynamics::pseudo_hadamard(2, 1).unwrap();
        let f = 0.9;
        let lambda = depolarizing_strength(f, 4).unwrap();
        let um = u.matrix();
        let mut acc = c(0.0);
        for i in 0..4 {
            for j in 0..4 {
                let mut e = CMatrix::zeros(4, 4);
                e[(i, j)] = c(1.0);
                let mut phi = um * &e * um.adjoint() * c(1.0 - lambda);
                if i == j {
                    for k in 0..4 {
                        phi[(k, k)] += c(lambda / 4.0);
                    }
                }
                acc += (um.adjoint() * phi * um)[(i, j)];
            }
        }
        assert!((acc.re / 16.0 - f).abs() < 1e-12);
    }
}
