//! Initialization circuits: singlet preparation, spin-lock purification and
//! conversion to pseudopure states, plus Bell-state preparation and singlet
//! detection. Each run records a snapshot after every step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{correlation, diagonal_correlation, epsilon_prime, singlet_content};
use crate::dynamics::{
    bell_rotation, cnot, not_gate, pseudo_hadamard, u1_with_rf_scale, u2_singlet_to_pseudopure,
    ud_detection, BellState, Polarity, Propagator,
};
use crate::relaxation::{
    free_relaxation, gradient_crush, noisy_gate, spin_lock, LockSequence, RelaxationModel,
    SingletDecay, SpinLockSpec,
};
use crate::spincore::{
    basis_index, check_pair, check_spin, equilibrium_state, pseudopure_state, DensityMatrix,
    PairState, SpinSystem,
};
use crate::{CVector, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum StepKind {
    Unitary(Propagator),
    NoisyGate { gate: Propagator, fidelity: f64 },
    SpinLock(SpinLockSpec),
    Gradient { strict: bool },
    FreeEvolution { duration: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolStep {
    pub kind: StepKind,
    pub label: String,
}

impl ProtocolStep {
    fn gate(gate: Propagator, fidelity: f64) -> Self {
        let label = gate.label().to_string();
        let kind = if fidelity < 1.0 {
            StepKind::NoisyGate { gate, fidelity }
        } else {
            StepKind::Unitary(gate)
        };
        Self { kind, label }
    }

    fn lock(spec: SpinLockSpec) -> Self {
        let pairs: Vec<String> = spec.pairs.iter().map(|(a, b)| format!("{a}{b}")).collect();
        Self {
            label: format!("lock[{}]({} s)", pairs.join(","), spec.duration),
            kind: StepKind::SpinLock(spec),
        }
    }

    fn gradient(strict: bool) -> Self {
        Self {
            kind: StepKind::Gradient { strict },
            label: "gradient".into(),
        }
    }

    pub fn apply(&self, rho: &DensityMatrix, model: &RelaxationModel) -> Result<DensityMatrix> {
        match &self.kind {
            StepKind::Unitary(u) => u.apply(rho),
            StepKind::NoisyGate { gate, fidelity } => noisy_gate(rho, gate, *fidelity),
            StepKind::SpinLock(spec) => spin_lock(rho, spec, model),
            StepKind::Gradient { strict } => Ok(gradient_crush(rho, *strict)),
            StepKind::FreeEvolution { duration } => free_relaxation(rho, *duration, model),
        }
    }
}

/// Final state, labelled intermediate states and scalar metrics of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolResult {
    pub final_state: DensityMatrix,
    pub snapshots: Vec<(String, DensityMatrix)>,
    pub metrics: BTreeMap<String, f64>,
    /// Bit string of the pseudopure target, if the protocol has one.
    pub target: Option<String>,
}

impl ProtocolResult {
    pub fn snapshot(&self, label: &str) -> Option<&DensityMatrix> {
        self.snapshots
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, s)| s)
    }
}

/// Runs `steps` from `initial`, snapshotting the input and every output.
pub fn run_steps(
    initial: DensityMatrix,
    steps: &[ProtocolStep],
    model: &RelaxationModel,
) -> Result<(DensityMatrix, Vec<(String, DensityMatrix)>)> {
    let mut snapshots = vec![("initial".to_string(), initial.clone())];
    let mut rho = initial;
    for step in steps {
        rho = step.apply(&rho, model)?;
        snapshots.push((step.label.clone(), rho.clone()));
    }
    Ok((rho, snapshots))
}

/// Knobs shared by the protocols.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOptions {
    /// Fidelity of the singlet preparation and conversion gates.
    pub gate_fidelity: f64,
    /// Gradient also removes zero-quantum coherences.
    pub strict_gradient: bool,
    /// Scale on the RF pulse angles of the preparation gate.
    pub rf_scale: f64,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            gate_fidelity: 1.0,
            strict_gradient: false,
            rf_scale: 1.0,
        }
    }
}

fn require_spins(system: &SpinSystem, model: &RelaxationModel, n: usize) -> Result<()> {
    if system.n() != n {
        return Err(Error::InvalidSystem(format!(
            "protocol needs {n} spins, register has {}",
            system.n()
        )));
    }
    if model.n() != n {
        return Err(Error::InvalidModel(format!(
            "model describes {} spins, register has {n}",
            model.n()
        )));
    }
    Ok(())
}

fn pure_target(bits: &str) -> Result<DensityMatrix> {
    pseudopure_state(basis_index(bits)?, bits.len(), 1.0)
}

fn pair_state_target(pair_ket: CVector, pair: (usize, usize), n: usize) -> Result<DensityMatrix> {
    let p = crate::spincore::embed_pair_operator(&(&pair_ket * pair_ket.adjoint()), pair, n)?;
    DensityMatrix::from_matrix(p * crate::linalg::c(1.0 / (1usize << (n - 2)) as f64))
}

fn insert_target_metrics(
    metrics: &mut BTreeMap<String, f64>,
    rho: &DensityMatrix,
    bits: &str,
) -> Result<()> {
    let target = pure_target(bits)?;
    metrics.insert("correlation".into(), correlation(rho, &target)?);
    metrics.insert("diagonal_correlation".into(), diagonal_correlation(rho, &target)?);
    metrics.insert("epsilon_prime".into(), epsilon_prime(rho, basis_index(bits)?)?);
    Ok(())
}

/// Two-qubit initialization into `|01⟩`: singlet preparation, spin-lock,
/// conversion and gradient.
pub fn initialize_2q(
    system: &SpinSystem,
    model: &RelaxationModel,
    lock: &SpinLockSpec,
    options: &ProtocolOptions,
) -> Result<ProtocolResult> {
    require_spins(system, model, 2)?;
    let pair = (1, 2);
    let steps = vec![
        ProtocolStep::gate(u1_with_rf_scale(system, pair, options.rf_scale)?, options.gate_fidelity),
        ProtocolStep::lock(lock.clone()),
        ProtocolStep::gate(u2_singlet_to_pseudopure(system, pair)?, options.gate_fidelity),
        ProtocolStep::gradient(options.strict_gradient),
    ];
    let post_lock_label = steps[1].label.clone();
    let (final_state, snapshots) = run_steps(equilibrium_state(system), &steps, model)?;
    let mut result = ProtocolResult {
        final_state,
        snapshots,
        metrics: BTreeMap::new(),
        target: Some("01".into()),
    };
    insert_target_metrics(&mut result.metrics, &result.final_state, "01")?;
    let locked = result.snapshot(&post_lock_label).expect("lock snapshot recorded");
    let singlet = pair_state_target(PairState::Singlet.ket(), pair, 2)?;
    let post_lock_corr = correlation(locked, &singlet)?;
    let post_lock_content = singlet_content(locked, pair)?;
    result
        .metrics
        .insert("singlet_correlation_post_lock".into(), post_lock_corr);
    result
        .metrics
        .insert("singlet_content_post_lock".into(), post_lock_content);
    Ok(result)
}

/// Singlet preparation and spin-lock followed by the rotation to a Bell state.
pub fn prepare_bell(
    system: &SpinSystem,
    model: &RelaxationModel,
    lock: &SpinLockSpec,
    variant: BellState,
) -> Result<ProtocolResult> {
    require_spins(system, model, 2)?;
    let pair = (1, 2);
    let steps = vec![
        ProtocolStep::gate(u1_with_rf_scale(system, pair, 1.0)?, 1.0),
        ProtocolStep::lock(lock.clone()),
        ProtocolStep::gate(bell_rotation(2, pair, variant)?, 1.0),
    ];
    let (final_state, snapshots) = run_steps(equilibrium_state(system), &steps, model)?;
    let target = pair_state_target(variant.ket(), pair, 2)?;
    let mut metrics = BTreeMap::new();
    metrics.insert("correlation".into(), correlation(&final_state, &target)?);
    Ok(ProtocolResult {
        final_state,
        snapshots,
        metrics,
        target: None,
    })
}

/// `tr[(P ⊗ |1⟩⟨1|) ρ]` for a two-spin projector `P` on spins (1, 2) and
/// spin 3 in `|1⟩`, the weight of the second term of the cNOT branch
/// decomposition.
pub fn branch_weight(rho: &DensityMatrix, pair_ket: &CVector) -> Result<f64> {
    if rho.n_spins() != 3 {
        return Err(Error::InvalidState("branch weight needs a 3-spin state".into()));
    }
    let r = rho.matrix();
    let mut w = crate::C64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            w += pair_ket[a].conj() * r[(2 * a + 1, 2 * b + 1)] * pair_ket[b];
        }
    }
    Ok(w.re)
}

/// `|S0⟩⟨S0| ⊗ (p0 |0⟩⟨0| + p1 |1⟩⟨1|)` on spins (1, 2) and 3.
pub fn separable_singlet_state(p0: f64) -> Result<DensityMatrix> {
    branch_mixture(p0, PairState::Singlet.ket(), PairState::Singlet.ket())
}

/// `p0 |S0⟩⟨S0| ⊗ |0⟩⟨0| + p1 |φ−⟩⟨φ−| ⊗ |1⟩⟨1|`.
pub fn singlet_branch_state(p0: f64) -> Result<DensityMatrix> {
    branch_mixture(p0, PairState::Singlet.ket(), BellState::PhiMinus.ket())
}

fn branch_mixture(p0: f64, on0: CVector, on1: CVector) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidState(format!("p0 = {p0} outside [0, 1]")));
    }
    let zero = CVector::from_vec(vec![crate::linalg::c(1.0), crate::linalg::c(0.0)]);
    let one = CVector::from_vec(vec![crate::linalg::c(0.0), crate::linalg::c(1.0)]);
    let k0 = on0.kronecker(&zero);
    let k1 = on1.kronecker(&one);
    let m = &k0 * k0.adjoint() * crate::linalg::c(p0) + &k1 * k1.adjoint() * crate::linalg::c(1.0 - p0);
    DensityMatrix::from_matrix(m)
}

/// Three-qubit initialization into `|010⟩`: singlet on (1, 2), lock, cNOT
/// from spin 3 onto spin 2, second lock, conversion and gradient.
pub fn initialize_3q(
    system: &SpinSystem,
    model: &RelaxationModel,
    locks: &[SpinLockSpec; 2],
    cnot_fidelity: f64,
    options: &ProtocolOptions,
) -> Result<ProtocolResult> {
    require_spins(system, model, 3)?;
    let pair = (1, 2);
    let steps = vec![
        ProtocolStep::gate(u1_with_rf_scale(system, pair, options.rf_scale)?, options.gate_fidelity),
        ProtocolStep::lock(locks[0].clone()),
        ProtocolStep::gate(cnot(3, 3, 2, Polarity::OnOne)?, cnot_fidelity),
        ProtocolStep::lock(locks[1].clone()),
        ProtocolStep::gate(u2_singlet_to_pseudopure(system, pair)?, options.gate_fidelity),
        ProtocolStep::gradient(options.strict_gradient),
    ];
    let (final_state, snapshots) = run_steps(equilibrium_state(system), &steps, model)?;
    let pre = snapshots[2].1.clone();
    let post = snapshots[3].1.clone();
    let mut metrics = BTreeMap::new();
    insert_target_metrics(&mut metrics, &final_state, "010")?;
    let spectator = pre.reduced(&[3])?.populations();
    metrics.insert("p0".into(), spectator[0]);
    metrics.insert("p1".into(), spectator[1]);
    metrics.insert("singlet_content_lock1".into(), singlet_content(&pre, pair)?);
    metrics.insert(
        "singlet_branch_pre_cnot".into(),
        branch_weight(&pre, &PairState::Singlet.ket())?,
    );
    metrics.insert(
        "phi_minus_branch_post_cnot".into(),
        branch_weight(&post, &BellState::PhiMinus.ket())?,
    );
    Ok(ProtocolResult {
        final_state,
        snapshots,
        metrics,
        target: Some("010".into()),
    })
}

/// One stage of a declarative initialization schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Stage {
    /// Singlet preparation on a pair.
    Prepare { pair: (usize, usize) },
    Lock {
        pairs: Vec<(usize, usize)>,
        duration: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default)]
        sequence: LockSequence,
    },
    Cnot {
        control: usize,
        target: usize,
        #[serde(default)]
        polarity: Polarity,
        #[serde(default = "unit_fidelity")]
        fidelity: f64,
        /// Seconds; recorded, not simulated.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<f64>,
    },
    Hadamard {
        spin: usize,
        #[serde(default = "unit_fidelity")]
        fidelity: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<f64>,
    },
    Not { spins: Vec<usize> },
    /// Singlet to `|01⟩` conversion on a pair.
    Convert { pair: (usize, usize) },
    Gradient,
    Free { duration: f64 },
}

fn unit_fidelity() -> f64 {
    1.0
}

/// Ordered stages plus the expected pseudopure target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub stages: Vec<Stage>,
    /// Target ket as a bit string, spin 1 first.
    pub target: String,
}

impl Schedule {
    pub fn validate(&self, n: usize) -> Result<()> {
        let err = |i: usize, msg: String| Error::Schedule(format!("stage {}: {msg}", i + 1));
        if self.target.len() != n || basis_index(&self.target).is_err() {
            return Err(Error::Schedule(format!(
                "target `{}` is not a {n}-bit string",
                self.target
            )));
        }
        if self.stages.is_empty() {
            return Err(Error::Schedule("no stages".into()));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            let res = match stage {
                Stage::Prepare { pair } | Stage::Convert { pair } => check_pair(n, *pair),
                Stage::Lock { pairs, duration, .. } => {
                    if *duration < 0.0 {
                        Err(Error::NegativeDuration(*duration))
                    } else {
                        crate::spincore::pair_product_basis(pairs, n).map(|_| ())
                    }
                }
                Stage::Cnot {
                    control,
                    target,
                    fidelity,
                    ..
                } => check_spin(n, *control)
                    .and(check_spin(n, *target))
                    .and(if control == target {
                        Err(Error::DegeneratePair(*control, *target))
                    } else {
                        Ok(())
                    })
                    .and(check_fidelity(*fidelity)),
                Stage::Hadamard { spin, fidelity, .. } => {
                    check_spin(n, *spin).and(check_fidelity(*fidelity))
                }
                Stage::Not { spins } => {
                    if spins.is_empty() {
                        Err(Error::EmptySpinSet)
                    } else {
                        spins.iter().try_for_each(|&s| check_spin(n, s))
                    }
                }
                Stage::Gradient => Ok(()),
                Stage::Free { duration } => {
                    if *duration < 0.0 {
                        Err(Error::NegativeDuration(*duration))
                    } else {
                        Ok(())
                    }
                }
            };
            res.map_err(|e| err(i, e.to_string()))?;
        }
        Ok(())
    }

    fn steps(&self, system: &SpinSystem, options: &ProtocolOptions) -> Result<Vec<ProtocolStep>> {
        let n = system.n();
        self.validate(n)?;
        self.stages
            .iter()
            .map(|stage| {
                Ok(match stage {
                    Stage::Prepare { pair } => ProtocolStep::gate(
                        u1_with_rf_scale(system, *pair, options.rf_scale)?,
                        options.gate_fidelity,
                    ),
                    Stage::Lock {
                        pairs,
                        duration,
                        amplitude,
                        sequence,
                    } => ProtocolStep::lock(SpinLockSpec {
                        pairs: pairs.clone(),
                        duration: *duration,
                        amplitude: *amplitude,
                        sequence: *sequence,
                    }),
                    Stage::Cnot {
                        control,
                        target,
                        polarity,
                        fidelity,
                        ..
                    } => ProtocolStep::gate(cnot(n, *control, *target, *polarity)?, *fidelity),
                    Stage::Hadamard { spin, fidelity, .. } => {
                        ProtocolStep::gate(pseudo_hadamard(n, *spin)?, *fidelity)
                    }
                    Stage::Not { spins } => ProtocolStep::gate(not_gate(n, spins)?, 1.0),
                    Stage::Convert { pair } => ProtocolStep::gate(
                        u2_singlet_to_pseudopure(system, *pair)?,
                        options.gate_fidelity,
                    ),
                    Stage::Gradient => ProtocolStep::gradient(options.strict_gradient),
                    Stage::Free { duration } => ProtocolStep {
                        kind: StepKind::FreeEvolution {
                            duration: *duration,
                        },
                        label: format!("free({duration} s)"),
                    },
                })
            })
            .collect()
    }

    /// Every pair that is locked somewhere in the schedule.
    pub fn locked_pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for stage in &self.stages {
            if let Stage::Lock { pairs, .. } = stage {
                for p in pairs {
                    if !out.contains(p) {
                        out.push(*p);
                    }
                }
            }
        }
        out
    }
}

fn check_fidelity(f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::Fidelity(f))
    }
}

/// Pairwise initialization scheme for `n` spins grouped as (1,2), (3,4), ….
///
/// Pair (1,2) is prepared and locked first. Every further pair `(a, a+1)`
/// is then entangled through `cNOT(a−1 → a)`, `h(a)` and an open-circle
/// `cNOT(a+1 → a)`, after which all pairs are locked together, converted and
/// dephased. For `n = 2` this is the two-qubit circuit.
pub fn pairwise_schedule(
    n: usize,
    first_lock: &SpinLockSpec,
    joint_lock: &SpinLockSpec,
    cnot_fidelity: f64,
    h_fidelity: f64,
) -> Result<Schedule> {
    if n < 2 || !n.is_multiple_of(2) || n > crate::MAX_SPINS {
        return Err(Error::Schedule(format!(
            "pairwise scheme needs an even register of 2..={} spins, got {n}",
            crate::MAX_SPINS
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..n / 2).map(|k| (2 * k + 1, 2 * k + 2)).collect();
    let lock = |spec: &SpinLockSpec, pairs: Vec<(usize, usize)>| Stage::Lock {
        pairs,
        duration: spec.duration,
        amplitude: spec.amplitude,
        sequence: spec.sequence,
    };
    let mut stages = vec![Stage::Prepare { pair: (1, 2) }, lock(first_lock, vec![(1, 2)])];
    for &(a, b) in &pairs[1..] {
        stages.push(Stage::Cnot {
            control: a - 1,
            target: a,
            polarity: Polarity::OnOne,
            fidelity: cnot_fidelity,
            duration: None,
        });
        stages.push(Stage::Hadamard {
            spin: a,
            fidelity: h_fidelity,
            duration: None,
        });
        stages.push(Stage::Cnot {
            control: b,
            target: a,
            polarity: Polarity::OnZero,
            fidelity: cnot_fidelity,
            duration: None,
        });
    }
    if pairs.len() > 1 {
        stages.push(lock(joint_lock, pairs.clone()));
    }
    for &pair in &pairs {
        stages.push(Stage::Convert { pair });
    }
    stages.push(Stage::Gradient);
    Ok(Schedule {
        stages,
        target: "01".repeat(n / 2),
    })
}

/// Runs a schedule from thermal equilibrium.
pub fn initialize_nq(
    system: &SpinSystem,
    model: &RelaxationModel,
    schedule: &Schedule,
    options: &ProtocolOptions,
) -> Result<ProtocolResult> {
    let n = system.n();
    require_spins(system, model, n)?;
    let steps = schedule.steps(system, options)?;
    let (final_state, snapshots) = run_steps(equilibrium_state(system), &steps, model)?;
    let mut metrics = BTreeMap::new();
    insert_target_metrics(&mut metrics, &final_state, &schedule.target)?;
    let mut lock_index = 0;
    for (step, (_, state)) in steps.iter().zip(&snapshots[1..]) {
        if let StepKind::SpinLock(spec) = &step.kind {
            lock_index += 1;
            for &(a, b) in &spec.pairs {
                metrics.insert(
                    format!("singlet_content_lock{lock_index}_{a}{b}"),
                    singlet_content(state, (a, b))?,
                );
            }
        }
    }
    Ok(ProtocolResult {
        final_state,
        snapshots,
        metrics,
        target: Some(schedule.target.clone()),
    })
}

/// Moves singlet order on `pair` into observable antiphase single-quantum
/// coherence; feed the result to the spectrum simulator.
pub fn detect_singlet(
    rho: &DensityMatrix,
    system: &SpinSystem,
    pair: (usize, usize),
) -> Result<DensityMatrix> {
    if rho.n_spins() != system.n() {
        return Err(Error::Dimension {
            expected: system.dim(),
            found: rho.dim(),
        });
    }
    ud_detection(system, pair)?.apply(rho)
}

/// What a run executes: one of the fixed circuits or a free schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProtocolSpec {
    TwoQubit {
        lock: SpinLockSpec,
        #[serde(default = "unit_fidelity")]
        rf_scale: f64,
    },
    Bell {
        lock: SpinLockSpec,
        variant: BellState,
    },
    ThreeQubit {
        locks: [SpinLockSpec; 2],
        cnot_fidelity: f64,
        /// Seconds; recorded, not simulated.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cnot_duration: Option<f64>,
    },
    Schedule {
        stages: Vec<Stage>,
        target: String,
    },
}

impl ProtocolSpec {
    pub fn run(
        &self,
        system: &SpinSystem,
        model: &RelaxationModel,
        options: &ProtocolOptions,
    ) -> Result<ProtocolResult> {
        match self {
            ProtocolSpec::TwoQubit { lock, rf_scale } => {
                let opts = ProtocolOptions {
                    rf_scale: *rf_scale * options.rf_scale,
                    ..options.clone()
                };
                initialize_2q(system, model, lock, &opts)
            }
            ProtocolSpec::Bell { lock, variant } => prepare_bell(system, model, lock, *variant),
            ProtocolSpec::ThreeQubit {
                locks,
                cnot_fidelity,
                ..
            } => initialize_3q(system, model, locks, *cnot_fidelity, options),
            ProtocolSpec::Schedule { stages, target } => initialize_nq(
                system,
                model,
                &Schedule {
                    stages: stages.clone(),
                    target: target.clone(),
                },
                options,
            ),
        }
    }

    /// Pairs that must have singlet-decay entries in the model.
    pub fn locked_pairs(&self) -> Vec<(usize, usize)> {
        match self {
            ProtocolSpec::TwoQubit { lock, .. } | ProtocolSpec::Bell { lock, .. } => {
                lock.pairs.clone()
            }
            ProtocolSpec::ThreeQubit { locks, .. } => {
                let mut out = locks[0].pairs.clone();
                for p in &locks[1].pairs {
                    if !out.contains(p) {
                        out.push(*p);
                    }
                }
                out
            }
            ProtocolSpec::Schedule { stages, target } => Schedule {
                stages: stages.clone(),
                target: target.clone(),
            }
            .locked_pairs(),
        }
    }

    /// Register size the protocol is written for, if fixed.
    pub fn required_spins(&self) -> Option<usize> {
        match self {
            ProtocolSpec::TwoQubit { .. } | ProtocolSpec::Bell { .. } => Some(2),
            ProtocolSpec::ThreeQubit { .. } => Some(3),
            ProtocolSpec::Schedule { target, .. } => Some(target.len()),
        }
    }

    /// Same protocol with every gate fidelity set to 1 and no RF miscalibration.
    pub fn with_ideal_gates(&self) -> Self {
        let mut out = self.clone();
        match &mut out {
            ProtocolSpec::TwoQubit { rf_scale, .. } => *rf_scale = 1.0,
            ProtocolSpec::Bell { .. } => {}
            ProtocolSpec::ThreeQubit { cnot_fidelity, .. } => *cnot_fidelity = 1.0,
            ProtocolSpec::Schedule { stages, .. } => {
                for s in stages {
                    match s {
                        Stage::Cnot { fidelity, .. } | Stage::Hadamard { fidelity, .. } => {
                            *fidelity = 1.0
                        }
                        _ => {}
                    }
                }
            }
        }
        out
    }

    /// Same protocol with every lock lasting `duration` seconds.
    pub fn with_lock_duration(&self, duration: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            ProtocolSpec::TwoQubit { lock, .. } | ProtocolSpec::Bell { lock, .. } => {
                lock.duration = duration
            }
            ProtocolSpec::ThreeQubit { locks, .. } => {
                locks.iter_mut().for_each(|l| l.duration = duration)
            }
            ProtocolSpec::Schedule { stages, .. } => {
                for s in stages {
                    if let Stage::Lock { duration: d, .. } = s {
                        *d = duration;
                    }
                }
            }
        }
        out
    }
}

/// A named, fully specified run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub system: SpinSystem,
    pub relaxation: RelaxationModel,
    pub protocol: ProtocolSpec,
}

pub const PRESET_NAMES: [&str; 3] = ["2q-bromothiophene", "3q-acrylonitrile", "aspirin-4q"];

const PLACEHOLDER_NOTE: &str =
    "Shifts and couplings are NON-PAPER placeholders; replace them with measured values.";

fn singlet_entry(pair: (usize, usize), ts: f64) -> SingletDecay {
    SingletDecay {
        pair,
        ts,
        t_lock_coh: None,
    }
}

fn symmetric(n: usize, entries: &[((usize, usize), f64)]) -> Vec<Vec<f64>> {
    let mut j = vec![vec![0.0; n]; n];
    for &((a, b), v) in entries {
        j[a - 1][b - 1] = v;
        j[b - 1][a - 1] = v;
    }
    j
}

/// Built-in run definitions for the three reference molecules.
pub fn preset(name: &str) -> Result<Preset> {
    let eps = 1e-4;
    match name {
        "2q-bromothiophene" => {
            let ts = 16.2;
            Ok(Preset {
                name: name.into(),
                description: format!(
                    "Two-proton register: singlet lock 12.4 s at 2 kHz, singlet decay 16.2 s, \
                     T1 = ts/3. {PLACEHOLDER_NOTE}"
                ),
                system: SpinSystem::new(
                    vec![150.0, -150.0],
                    symmetric(2, &[((1, 2), 4.0)]),
                    vec![eps; 2],
                )?,
                relaxation: RelaxationModel::new(vec![ts / 3.0; 2], None, vec![singlet_entry((1, 2), ts)])?,
                protocol: ProtocolSpec::TwoQubit {
                    lock: SpinLockSpec::new((1, 2), 12.4, 2000.0, LockSequence::Cw),
                    rf_scale: 1.0,
                },
            })
        }
        "3q-acrylonitrile" => {
            let ts = 18.0;
            let lock = SpinLockSpec::new((1, 2), 6.3, 500.0, LockSequence::Waltz16);
            Ok(Preset {
                name: name.into(),
                description: format!(
                    "Three-proton register: two 6.3 s WALTZ-16 locks at 500 Hz, singlet decay \
                     18 s, T1 = ts/3, cNOT fidelity 0.96 (60 ms). {PLACEHOLDER_NOTE}"
                ),
                system: SpinSystem::new(
                    vec![320.0, 80.0, -260.0],
                    symmetric(3, &[((1, 2), 11.8), ((1, 3), 17.9), ((2, 3), 0.9)]),
                    vec![eps; 3],
                )?,
                relaxation: RelaxationModel::new(vec![ts / 3.0; 3], None, vec![singlet_entry((1, 2), ts)])?,
                protocol: ProtocolSpec::ThreeQubit {
                    locks: [lock.clone(), lock],
                    cnot_fidelity: 0.96,
                    cnot_duration: Some(0.060),
                },
            })
        }
        "aspirin-4q" => {
            let ts = 6.0;
            Ok(Preset {
                name: name.into(),
                description: format!(
                    "Four-proton register: singlet pairs (1,2) and (3,4), 2 kHz WALTZ-16 locks \
                     of 2 s and 4.5 s, singlet decay 6 s, T1 = ts/2, cNOT fidelity 0.94 \
                     (61 ms), h fidelity 0.98 (listed as 8.2 s; not simulated), refocusing \
                     NOT on spins 1 and 2. {PLACEHOLDER_NOTE}"
                ),
                system: SpinSystem::new(
                    vec![480.0, 160.0, -120.0, -430.0],
                    symmetric(
                        4,
                        &[
                            ((1, 2), 8.0),
                            ((1, 3), 1.5),
                            ((1, 4), 0.5),
                            ((2, 3), 7.5),
                            ((2, 4), 1.2),
                            ((3, 4), 8.0),
                        ],
                    ),
                    vec![eps; 4],
                )?,
                relaxation: RelaxationModel::new(
                    vec![ts / 2.0; 4],
                    None,
                    vec![singlet_entry((1, 2), ts), singlet_entry((3, 4), ts)],
                )?,
                protocol: ProtocolSpec::Schedule {
                    stages: aspirin_stages(),
                    target: "1001".into(),
                },
            })
        }
        other => Err(Error::UnknownPreset(other.into())),
    }
}

fn aspirin_stages() -> Vec<Stage> {
    vec![
        Stage::Prepare { pair: (1, 2) },
        Stage::Lock {
            pairs: vec![(1, 2)],
            duration: 2.0,
            amplitude: 2000.0,
            sequence: LockSequence::Waltz16,
        },
        Stage::Cnot {
            control: 2,
            target: 3,
            polarity: Polarity::OnOne,
            fidelity: 0.94,
            duration: Some(0.061),
        },
        Stage::Hadamard {
            spin: 3,
            fidelity: 0.98,
            duration: Some(8.2),
        },
        Stage::Cnot {
            control: 4,
            target: 3,
            polarity: Polarity::OnZero,
            fidelity: 0.94,
            duration: Some(0.061),
        },
        Stage::Lock {
            pairs: vec![(1, 2), (3, 4)],
            duration: 4.5,
            amplitude: 2000.0,
            sequence: LockSequence::Waltz16,
        },
        Stage::Convert { pair: (1, 2) },
        Stage::Convert { pair: (3, 4) },
        Stage::Not { spins: vec![1, 2] },
        Stage::Gradient,
    ]
}
