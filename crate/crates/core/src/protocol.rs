//! End-to-end injection protocol on top of the statevector engine.
//!
//! A run goes: prepare |+>_L while recording the stabilizer trajectory,
//! apply the per-chain Z-rotations (with optional noise), then measure every
//! stabilizer twice more, post-selecting both cycles against the preparation
//! trajectory and aborting at the first mismatch. Accepted runs end with the
//! logical angle extracted against trajectory-gauged logical basis states.
//!
//! ## Trajectory gauge
//!
//! The logical basis conditioned on trajectory `t` is rebuilt operationally:
//! `|+>_t` is the preparation state re-projected onto `t`, and `|->_t` is the
//! same preparation with the row-1 Z product applied first, scaled by
//! `i^(cols-1) * chain_sign(row 1, t)` so that a row-1 injection carries the
//! sign given by the XOR of its adjacent Z-stabilizer outcomes. In this gauge
//! the sign of row r follows from the stabilizer algebra: multiplying row
//! products by the Z stabilizers confined to rows 1..r shows
//!
//! ```text
//! sign(row r, t) = parity(t over Z stabs within rows 1..2)
//!               xor parity(t over Z stabs within rows 1..r)
//! ```
//!
//! which reproduces the adjacency-XOR rule on both boundary rows of a
//! distance-3 code and pins interior rows (for example the middle row of a
//! 3x3 code always contributes a positive angle). [`chain_sign`] implements
//! the plain adjacency XOR; [`gauge_sign`] implements the formula above and
//! is what plan building uses.
//!
//! ## Costs
//!
//! `stabilizer_measurements_consumed` counts post-selection cycle
//! measurements only (preparation excluded); a run that dies at the first
//! cycle-1 stabilizer consumed exactly one. Qubit-time is that count times
//! the data-qubit count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analytics::{solve_physical_angle, AnalyticsError, AngleSchedule, Sign};
use crate::engine::{
    Basis, EngineError, MeasureMode, NoiseInjector, Pauli, StateVector,
};
use crate::lattice::{ChainSet, Lattice, LatticeError, LogicalChain, StabKind};

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("preparation mode requires a 3x3 lattice")]
    PrepModeMismatch,
    #[error("trajectory is unreachable from this preparation")]
    UnreachableTrajectory,
    #[error("per-chain target angle {0} is unreachable (|theta_L|/n >= pi)")]
    UnreachableTarget(f64),
    #[error("state leaves the logical span (residual {0:.3e})")]
    OutOfLogicalSubspace(f64),
    #[error("logical gauge requires odd chain length (cols = {0})")]
    EvenChainLength(usize),
    #[error("noise probabilities must lie in [0, 1]")]
    InvalidNoise,
    #[error("insertion qubit {0} out of range")]
    InsertionOutOfRange(usize),
    #[error("trajectory length {got} does not match stabilizer count {want}")]
    TrajectoryLength { got: usize, want: usize },
}

/// Ordered stabilizer outcomes with a per-position deterministic mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// One bit per stabilizer, in the lattice listing order.
    pub values: Vec<u8>,
    /// True where the outcome was forced by the preparation (conditional
    /// probability 1), false at measurement-random positions.
    pub deterministic: Vec<bool>,
}

impl Trajectory {
    /// Outcome bits as a string, e.g. `00000110`.
    pub fn bits(&self) -> String {
        self.values.iter().map(|b| char::from(b'0' + b)).collect()
    }

    /// Pattern string with `M` at measurement-random positions, e.g. `0MM00MM0`.
    pub fn pattern(&self) -> String {
        self.values
            .iter()
            .zip(&self.deterministic)
            .map(|(b, det)| if *det { char::from(b'0' + b) } else { 'M' })
            .collect()
    }
}

/// How the logical |+> state is initialized before the preparation cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrepMode {
    /// 3x3 only: qubits {1,4,6,9} in |0>, the rest in |+>. The four weight-2
    /// stabilizers come out deterministically 0 and the four weight-4 ones
    /// random, the `0MM00MM0` pattern.
    MixedBasis3x3,
    /// Any lattice: every data qubit in |+>; X stabilizers deterministic 0,
    /// Z stabilizers random.
    AllPlus,
}

/// Chains to inject, their schedules, and which were sign-corrected.
/// Corrected schedules store the negated angles.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionPlan {
    pub chain_set: ChainSet,
    pub schedules: Vec<AngleSchedule>,
    pub sign_corrections: Vec<bool>,
}

/// Where a deterministic Pauli insertion fires relative to the injection
/// rotations. Qubits are 1-based data-qubit indices; insertions on
/// un-injected qubits fire at the start (Before) or end (After) of the
/// injection block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertionPoint {
    BeforeInjection { qubit: usize },
    AfterInjection { qubit: usize },
}

/// Circuit noise model for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Uniform {X, Y, Z} after each single-qubit gate.
    pub depolarizing_1q: f64,
    /// Uniform over the 15 nontrivial two-qubit Paulis after each CNOT.
    pub depolarizing_2q: f64,
    /// Classical flip of each ancilla readout.
    pub measure_flip: f64,
    /// Ancilla reset leaves |1> instead of |0>.
    pub reset_flip: f64,
    /// Exact Pauli insertions at named injection locations.
    pub deterministic_insertions: Vec<(InsertionPoint, Pauli)>,
    /// Every injection rotation over-rotates to (1 + epsilon) theta.
    pub over_rotation_epsilon: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            depolarizing_1q: 0.0,
            depolarizing_2q: 0.0,
            measure_flip: 0.0,
            reset_flip: 0.0,
            deterministic_insertions: Vec::new(),
            over_rotation_epsilon: 0.0,
        }
    }

    /// Uniform depolarizing on all gate classes plus readout/reset flips.
    pub fn depolarizing(p: f64) -> Self {
        Self {
            depolarizing_1q: p,
            depolarizing_2q: p,
            measure_flip: p,
            reset_flip: p,
            ..Self::none()
        }
    }

    /// One exact Pauli Z before the rotation on `qubit` (1-based).
    pub fn single_z_before(qubit: usize) -> Self {
        Self {
            deterministic_insertions: vec![(InsertionPoint::BeforeInjection { qubit }, Pauli::Z)],
            ..Self::none()
        }
    }

    /// True when no stochastic channel is active (deterministic insertions
    /// and over-rotation do not count).
    pub fn is_stochastic_free(&self) -> bool {
        self.depolarizing_1q == 0.0
            && self.depolarizing_2q == 0.0
            && self.measure_flip == 0.0
            && self.reset_flip == 0.0
    }

    fn validate(&self, num_data: usize) -> Result<(), ProtocolError> {
        let probs = [
            self.depolarizing_1q,
            self.depolarizing_2q,
            self.measure_flip,
            self.reset_flip,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(ProtocolError::InvalidNoise);
        }
        for (point, _) in &self.deterministic_insertions {
            let q = match point {
                InsertionPoint::BeforeInjection { qubit } | InsertionPoint::AfterInjection { qubit } => {
                    *qubit
                }
            };
            if q < 1 || q > num_data {
                return Err(ProtocolError::InsertionOutOfRange(q));
            }
        }
        Ok(())
    }
}

/// Outcome resolution for the post-selection cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineMode {
    /// Force the reference trajectory and report its exact probability.
    ExactForced,
    /// Draw outcomes; mismatches reject the run.
    Sampled,
}

/// Which plan a run executes.
#[derive(Debug, Clone, Copy)]
pub enum PlanSpec<'a> {
    /// Use this plan as-is.
    Fixed(&'a InjectionPlan),
    /// Rebuild the plan from the drawn preparation trajectory.
    Target { rows: &'a [usize], theta_l: f64 },
}

/// Full description of one protocol run.
#[derive(Debug, Clone, Copy)]
pub struct RunSetup<'a> {
    pub lattice: &'a Lattice,
    pub prep: PrepMode,
    pub plan: PlanSpec<'a>,
    pub noise: &'a NoiseSpec,
    pub mode: EngineMode,
    /// Force the preparation cycle onto these bits instead of sampling.
    pub forced_prep: Option<&'a [u8]>,
}

/// Result of one protocol run.
///
/// Line format (see [`RunRecord::to_line`]), space separated:
/// `seed accepted acceptance_probability logical_angle consumed qubit_time
/// prep_bits prep_pattern verify_bits`, with `nan` for a missing angle and
/// `-` for a missing verify trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub accepted: bool,
    /// Product of the conditional probabilities over both post-selection
    /// cycles; exact acceptance probability in forced mode, probability of
    /// the realized path in sampled mode.
    pub acceptance_probability: f64,
    pub logical_angle: Option<f64>,
    pub prep_trajectory: Trajectory,
    /// Cycle outcomes; equals the preparation trajectory when accepted.
    pub verify_trajectory: Option<Trajectory>,
    /// Post-selection cycle measurements performed (preparation excluded).
    pub stabilizer_measurements_consumed: usize,
    /// Consumed measurements times the data-qubit count.
    pub qubit_time_cost: usize,
}

impl RunRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {} {}",
            self.seed,
            u8::from(self.accepted),
            self.acceptance_probability,
            self.logical_angle
                .map_or_else(|| "nan".to_string(), |a| a.to_string()),
            self.stabilizer_measurements_consumed,
            self.qubit_time_cost,
            self.prep_trajectory.bits(),
            self.prep_trajectory.pattern(),
            self.verify_trajectory
                .as_ref()
                .map_or_else(|| "-".to_string(), |t| t.bits()),
        )
    }
}

/// Per-run seed derivation: splitmix64 applied to the master seed xored with
/// the golden-ratio multiple of the run index. Reproducible regardless of
/// scheduling.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stabilizers as engine checks: kind plus 0-based wire support, in the
/// lattice listing order.
pub fn stabilizer_checks(lattice: &Lattice) -> Vec<(StabKind, Vec<usize>)> {
    lattice
        .stabilizers()
        .iter()
        .map(|s| (s.kind, s.support.iter().map(|q| q - 1).collect()))
        .collect()
}

/// Initial basis assignment for a preparation mode.
pub fn init_assignment(lattice: &Lattice, mode: PrepMode) -> Result<Vec<Basis>, ProtocolError> {
    let n = lattice.num_data_qubits();
    match mode {
        PrepMode::MixedBasis3x3 => {
            if lattice.spec().rows != 3 || lattice.spec().cols != 3 {
                return Err(ProtocolError::PrepModeMismatch);
            }
            let mut assignment = vec![Basis::Plus; n];
            for q in [1usize, 4, 6, 9] {
                assignment[q - 1] = Basis::Zero;
            }
            Ok(assignment)
        }
        PrepMode::AllPlus => Ok(vec![Basis::Plus; n]),
    }
}

const DETERMINISTIC_PROB_TOL: f64 = 1e-9;

fn run_prep_cycle(
    state: &mut StateVector,
    checks: &[(StabKind, Vec<usize>)],
    forced: Option<&[u8]>,
    rng: &mut ChaCha8Rng,
    mut noise: Option<&mut NoiseInjector>,
) -> Result<Trajectory, ProtocolError> {
    let mut values = Vec::with_capacity(checks.len());
    let mut deterministic = Vec::with_capacity(checks.len());
    for (i, (kind, support)) in checks.iter().enumerate() {
        let mode = match forced {
            Some(bits) => MeasureMode::Force(bits[i]),
            None => MeasureMode::Sample(rng),
        };
        let record = state
            .measure_stabilizer(*kind, support, mode, noise.as_deref_mut())
            .map_err(|e| match e {
                EngineError::ImpossibleOutcome { .. } if forced.is_some() => {
                    ProtocolError::UnreachableTrajectory
                }
                other => ProtocolError::Engine(other),
            })?;
        values.push(record.outcome);
        deterministic.push((record.probability - 1.0).abs() < DETERMINISTIC_PROB_TOL);
    }
    Ok(Trajectory {
        values,
        deterministic,
    })
}

/// Initialize and run one preparation cycle with sampled outcomes.
pub fn prepare_plus_l(
    lattice: &Lattice,
    mode: PrepMode,
    rng: &mut ChaCha8Rng,
) -> Result<(StateVector, Trajectory), ProtocolError> {
    let assignment = init_assignment(lattice, mode)?;
    let mut state = StateVector::init_register(lattice.num_data_qubits(), &assignment)?;
    let checks = stabilizer_checks(lattice);
    let trajectory = run_prep_cycle(&mut state, &checks, None, rng, None)?;
    Ok((state, trajectory))
}

/// Initialize and force the preparation cycle onto `bits`. Fails with
/// [`ProtocolError::UnreachableTrajectory`] when the bits cannot occur.
pub fn prepare_with_trajectory(
    lattice: &Lattice,
    mode: PrepMode,
    bits: &[u8],
) -> Result<(StateVector, Trajectory), ProtocolError> {
    if bits.len() != lattice.num_stabilizers() {
        return Err(ProtocolError::TrajectoryLength {
            got: bits.len(),
            want: lattice.num_stabilizers(),
        });
    }
    let assignment = init_assignment(lattice, mode)?;
    let mut state = StateVector::init_register(lattice.num_data_qubits(), &assignment)?;
    let checks = stabilizer_checks(lattice);
    let mut rng = ChaCha8Rng::seed_from_u64(0); // unused in forced mode
    let trajectory = run_prep_cycle(&mut state, &checks, Some(bits), &mut rng, None)?;
    Ok((state, trajectory))
}

/// Chain sign rule: XOR of the trajectory values over the chain's adjacent
/// Z stabilizers; 0 maps to positive, 1 to negative.
pub fn chain_sign(trajectory: &Trajectory, chain: &LogicalChain) -> Sign {
    let parity = chain
        .adjacent_z_stabilizers
        .iter()
        .fold(0u8, |acc, &id| acc ^ trajectory.values[id - 1]);
    if parity == 0 {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// Sign of row `row`'s angle contribution in the extraction gauge (see the
/// module docs). Equals [`chain_sign`] on both boundary rows of a 3x3
/// lattice; interior rows follow the stabilizer algebra instead.
pub fn gauge_sign(lattice: &Lattice, trajectory: &Trajectory, row: usize) -> Sign {
    let parity_within = |max_row: usize| -> u8 {
        lattice
            .stabilizers()
            .iter()
            .filter(|s| s.kind == StabKind::Z && lattice.stabilizer_max_row(s.id) <= max_row)
            .fold(0u8, |acc, s| acc ^ trajectory.values[s.id - 1])
    };
    let parity = parity_within(2) ^ parity_within(row);
    if parity == 0 {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// Build the injection plan for `target_logical_angle` on `rows`: per-chain
/// target `theta_L / n`, uniform physical angle from the inverted chain-angle
/// formula, and a negated schedule on every chain whose gauge sign disagrees
/// with the target's sign, so the composed angle hits the target for any
/// trajectory.
pub fn build_plan(
    lattice: &Lattice,
    trajectory: &Trajectory,
    rows: &[usize],
    target_logical_angle: f64,
) -> Result<InjectionPlan, ProtocolError> {
    let chain_set = lattice.validate_chain_set(rows)?;
    let n = chain_set.len();
    let per_chain = target_logical_angle / n as f64;
    if per_chain.abs() >= std::f64::consts::PI {
        return Err(ProtocolError::UnreachableTarget(per_chain));
    }
    let theta_p = solve_physical_angle(per_chain.abs(), lattice.spec().cols)?;
    let target_sign = Sign::of(target_logical_angle);
    let mut schedules = Vec::with_capacity(n);
    let mut sign_corrections = Vec::with_capacity(n);
    for &row in chain_set.rows() {
        let natural = gauge_sign(lattice, trajectory, row);
        let correct = theta_p != 0.0 && natural != target_sign;
        let base = AngleSchedule::uniform(theta_p, lattice.spec().cols)?;
        schedules.push(if correct { base.negated() } else { base });
        sign_corrections.push(correct);
    }
    Ok(InjectionPlan {
        chain_set,
        schedules,
        sign_corrections,
    })
}

/// Plan with the same uncorrected uniform angle on every selected chain.
pub fn uniform_plan(
    lattice: &Lattice,
    rows: &[usize],
    theta_p: f64,
) -> Result<InjectionPlan, ProtocolError> {
    let chain_set = lattice.validate_chain_set(rows)?;
    let n = chain_set.len();
    let schedules = (0..n)
        .map(|_| AngleSchedule::uniform(theta_p, lattice.spec().cols))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InjectionPlan {
        chain_set,
        schedules,
        sign_corrections: vec![false; n],
    })
}

fn apply_injection(
    state: &mut StateVector,
    lattice: &Lattice,
    plan: &InjectionPlan,
    noise: &NoiseSpec,
    injector: Option<&mut NoiseInjector>,
) -> Result<(), ProtocolError> {
    let mut injector = injector;
    let injected: Vec<usize> = plan
        .chain_set
        .rows()
        .iter()
        .flat_map(|&r| lattice.z_chain(r).qubits)
        .collect();
    let scale = 1.0 + noise.over_rotation_epsilon;

    let fire = |state: &mut StateVector, point: InsertionPoint| -> Result<(), ProtocolError> {
        for (p, pauli) in &noise.deterministic_insertions {
            if *p == point {
                let q = match p {
                    InsertionPoint::BeforeInjection { qubit }
                    | InsertionPoint::AfterInjection { qubit } => *qubit,
                };
                state.apply_pauli(*pauli, q - 1)?;
            }
        }
        Ok(())
    };

    // insertions on un-injected qubits fire around the whole block
    for (point, pauli) in &noise.deterministic_insertions {
        if let InsertionPoint::BeforeInjection { qubit } = point {
            if !injected.contains(qubit) {
                state.apply_pauli(*pauli, qubit - 1)?;
            }
        }
    }

    for (row_idx, &row) in plan.chain_set.rows().iter().enumerate() {
        let chain = lattice.z_chain(row);
        let schedule = &plan.schedules[row_idx];
        for (q_idx, &qubit) in chain.qubits.iter().enumerate() {
            fire(state, InsertionPoint::BeforeInjection { qubit })?;
            state.apply_rz(qubit - 1, schedule.angles()[q_idx] * scale)?;
            if let Some(inj) = injector.as_deref_mut() {
                inj.after_1q(state, qubit - 1)?;
            }
            fire(state, InsertionPoint::AfterInjection { qubit })?;
        }
    }

    for (point, pauli) in &noise.deterministic_insertions {
        if let InsertionPoint::AfterInjection { qubit } = point {
            if !injected.contains(qubit) {
                state.apply_pauli(*pauli, qubit - 1)?;
            }
        }
    }
    Ok(())
}

/// Execute one full run.
pub fn run_protocol(setup: RunSetup<'_>, seed: u64) -> Result<RunRecord, ProtocolError> {
    let lattice = setup.lattice;
    setup.noise.validate(lattice.num_data_qubits())?;
    let checks = stabilizer_checks(lattice);
    let num_data = lattice.num_data_qubits();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // separate stream: noise draws never perturb outcome sampling
    let mut injector = NoiseInjector::new(
        setup.noise.depolarizing_1q,
        setup.noise.depolarizing_2q,
        setup.noise.measure_flip,
        setup.noise.reset_flip,
        ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x6e6f_6973)),
    );
    let stochastic = !setup.noise.is_stochastic_free();

    // preparation
    let assignment = init_assignment(lattice, setup.prep)?;
    let mut state = StateVector::init_register(num_data, &assignment)?;
    let prep_trajectory = {
        let inj = if stochastic { Some(&mut injector) } else { None };
        run_prep_cycle(&mut state, &checks, setup.forced_prep, &mut rng, inj)?
    };

    // plan
    let owned_plan;
    let plan: &InjectionPlan = match setup.plan {
        PlanSpec::Fixed(p) => p,
        PlanSpec::Target { rows, theta_l } => {
            owned_plan = build_plan(lattice, &prep_trajectory, rows, theta_l)?;
            &owned_plan
        }
    };

    // injection
    {
        let inj = if stochastic { Some(&mut injector) } else { None };
        apply_injection(&mut state, lattice, plan, setup.noise, inj)?;
    }

    // two post-selection cycles, abort on first mismatch
    let mut acceptance_probability = 1.0;
    let mut consumed = 0usize;
    let mut accepted = true;
    let mut cycle_values = Vec::with_capacity(checks.len());
    'cycles: for _cycle in 0..2 {
        cycle_values.clear();
        for (i, (kind, support)) in checks.iter().enumerate() {
            let reference = prep_trajectory.values[i];
            let result = match setup.mode {
                EngineMode::ExactForced => {
                    let inj = if stochastic { Some(&mut injector) } else { None };
                    state.measure_stabilizer(*kind, support, MeasureMode::Force(reference), inj)
                }
                EngineMode::Sampled => {
                    let inj = if stochastic { Some(&mut injector) } else { None };
                    state.measure_stabilizer(*kind, support, MeasureMode::Sample(&mut rng), inj)
                }
            };
            consumed += 1;
            match result {
                Ok(record) => {
                    acceptance_probability *= record.probability;
                    cycle_values.push(record.outcome);
                    if record.outcome != reference {
                        accepted = false;
                        break 'cycles;
                    }
                }
                Err(EngineError::ImpossibleOutcome { .. }) => {
                    acceptance_probability = 0.0;
                    accepted = false;
                    break 'cycles;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    let verify_trajectory = accepted.then(|| Trajectory {
        values: cycle_values.clone(),
        deterministic: vec![false; checks.len()],
    });

    let logical_angle = if accepted {
        match extract_logical_state(&state, lattice, setup.prep, &prep_trajectory) {
            Ok(theta) => Some(theta),
            // stochastic noise can leave an accepted run outside the span
            Err(ProtocolError::OutOfLogicalSubspace(_)) if stochastic => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(RunRecord {
        seed,
        accepted,
        acceptance_probability,
        logical_angle,
        prep_trajectory,
        verify_trajectory,
        stabilizer_measurements_consumed: consumed,
        qubit_time_cost: consumed * num_data,
    })
}

const LOGICAL_RESIDUAL_TOL: f64 = 1e-10;

/// Extract the logical rotation angle of an accepted state against the
/// trajectory-gauged basis. Returns theta with the state matching
/// `cos(theta/2) |+>_t + i sin(theta/2) |->_t` up to a global phase.
pub fn extract_logical_state(
    state: &StateVector,
    lattice: &Lattice,
    prep: PrepMode,
    trajectory: &Trajectory,
) -> Result<f64, ProtocolError> {
    let cols = lattice.spec().cols;
    if cols % 2 == 0 {
        return Err(ProtocolError::EvenChainLength(cols));
    }
    let (plus_ref, minus_ref) = gauge_basis(lattice, prep, trajectory)?;
    let a = plus_ref.overlap(state);
    let b = minus_ref.overlap(state);
    let residual = state.norm_squared() - a.norm_sqr() - b.norm_sqr();
    if residual > LOGICAL_RESIDUAL_TOL {
        return Err(ProtocolError::OutOfLogicalSubspace(residual));
    }
    let magnitude = 2.0 * b.norm().atan2(a.norm());
    let orientation = (a.conj() * b).im;
    Ok(if orientation < 0.0 { -magnitude } else { magnitude })
}

/// Rebuild the gauged logical basis for `trajectory`: re-project the
/// preparation for `|+>_t`, apply the row-1 Z product before projecting and
/// scale by the gauge phase for `|->_t`.
pub fn gauge_basis(
    lattice: &Lattice,
    prep: PrepMode,
    trajectory: &Trajectory,
) -> Result<(StateVector, StateVector), ProtocolError> {
    let cols = lattice.spec().cols;
    if cols % 2 == 0 {
        return Err(ProtocolError::EvenChainLength(cols));
    }
    let (plus_ref, _) = prepare_with_trajectory(lattice, prep, &trajectory.values)?;

    let assignment = init_assignment(lattice, prep)?;
    let mut minus_ref = StateVector::init_register(lattice.num_data_qubits(), &assignment)?;
    for col in 1..=cols {
        minus_ref.apply_pauli(Pauli::Z, lattice.qubit_index(1, col) - 1)?;
    }
    let checks = stabilizer_checks(lattice);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    run_prep_cycle(&mut minus_ref, &checks, Some(&trajectory.values), &mut rng, None)?;

    // i^(cols-1) is real for odd cols; anchor row 1 to its adjacency XOR sign
    let i_parity = if ((cols - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let sigma = i_parity * chain_sign(trajectory, &lattice.z_chain(1)).factor();
    if sigma < 0.0 {
        minus_ref.scale(num_complex::Complex64::new(-1.0, 0.0));
    }
    Ok((plus_ref, minus_ref))
}

/// Monte-Carlo estimate of the repetition count and qubit-time cost to reach
/// one accepted run.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadEstimate {
    pub shots: usize,
    pub mean_repetitions: f64,
    pub se_repetitions: f64,
    pub mean_cycle_measurements: f64,
    pub mean_qubit_time: f64,
    pub se_qubit_time: f64,
}

/// Repeat prepare/inject/post-select attempts until acceptance, `shots`
/// independent times, restarting on any mismatched stabilizer. Cost counts
/// cycle measurements only, times the data-qubit count.
///
/// Noiseless runs sample attempts from exact cached conditional
/// probabilities (one statevector simulation per distinct preparation
/// trajectory), which draws from the same distribution as direct simulation.
/// Stochastic noise falls back to full per-attempt simulation.
pub fn estimate_overhead_mc(
    lattice: &Lattice,
    prep: PrepMode,
    plan: &InjectionPlan,
    noise: &NoiseSpec,
    shots: usize,
    seed: u64,
) -> Result<OverheadEstimate, ProtocolError> {
    assert!(shots >= 1);
    noise.validate(lattice.num_data_qubits())?;
    let num_data = lattice.num_data_qubits();
    let mut reps = Vec::with_capacity(shots);
    let mut costs = Vec::with_capacity(shots);

    if noise.is_stochastic_free() {
        let mut sampler = CachedAttemptSampler::new(lattice, prep, plan, noise)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..shots {
            let mut attempts = 0usize;
            let mut measurements = 0usize;
            loop {
                attempts += 1;
                let (accepted, consumed) = sampler.sample_attempt(&mut rng)?;
                measurements += consumed;
                if accepted {
                    break;
                }
            }
            reps.push(attempts as f64);
            costs.push((measurements * num_data) as f64);
        }
    } else {
        for shot in 0..shots {
            let mut attempts = 0usize;
            let mut measurements = 0usize;
            loop {
                attempts += 1;
                let run_seed = derive_seed(seed, (shot * 1_000_003 + attempts) as u64);
                let record = run_protocol(
                    RunSetup {
                        lattice,
                        prep,
                        plan: PlanSpec::Fixed(plan),
                        noise,
                        mode: EngineMode::Sampled,
                        forced_prep: None,
                    },
                    run_seed,
                )?;
                measurements += record.stabilizer_measurements_consumed;
                if record.accepted {
                    break;
                }
            }
            reps.push(attempts as f64);
            costs.push((measurements * num_data) as f64);
        }
    }

    let (mean_repetitions, se_repetitions) = mean_se(&reps);
    let (mean_qubit_time, se_qubit_time) = mean_se(&costs);
    Ok(OverheadEstimate {
        shots,
        mean_repetitions,
        se_repetitions,
        mean_cycle_measurements: mean_qubit_time / num_data as f64,
        mean_qubit_time,
        se_qubit_time,
    })
}

fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Exact conditional probabilities for noiseless attempt sampling, cached
/// per preparation prefix and per full preparation trajectory.
struct CachedAttemptSampler<'a> {
    lattice: &'a Lattice,
    prep: PrepMode,
    plan: &'a InjectionPlan,
    noise: &'a NoiseSpec,
    checks: Vec<(StabKind, Vec<usize>)>,
    prep_prefix_p1: std::collections::HashMap<Vec<u8>, f64>,
    cycle_conditionals: std::collections::HashMap<Vec<u8>, Vec<f64>>,
}

impl<'a> CachedAttemptSampler<'a> {
    fn new(
        lattice: &'a Lattice,
        prep: PrepMode,
        plan: &'a InjectionPlan,
        noise: &'a NoiseSpec,
    ) -> Result<Self, ProtocolError> {
        Ok(Self {
            lattice,
            prep,
            plan,
            noise,
            checks: stabilizer_checks(lattice),
            prep_prefix_p1: std::collections::HashMap::new(),
            cycle_conditionals: std::collections::HashMap::new(),
        })
    }

    /// Probability that the next preparation outcome is 1 given `prefix`.
    fn prep_p1(&mut self, prefix: &[u8]) -> Result<f64, ProtocolError> {
        if let Some(&p) = self.prep_prefix_p1.get(prefix) {
            return Ok(p);
        }
        let assignment = init_assignment(self.lattice, self.prep)?;
        let mut state = StateVector::init_register(self.lattice.num_data_qubits(), &assignment)?;
        for (i, &bit) in prefix.iter().enumerate() {
            let (kind, support) = &self.checks[i];
            state.measure_stabilizer(*kind, support, MeasureMode::Force(bit), None)?;
        }
        // run the next measurement circuit and read the ancilla distribution
        let (kind, support) = &self.checks[prefix.len()];
        let p1 = match kind {
            StabKind::Z => {
                let anc = state.ancilla();
                for &q in support {
                    state.apply_cnot(q, anc)?;
                }
                state.probability_of_one(anc)
            }
            StabKind::X => {
                let anc = state.ancilla();
                state.apply_h(anc)?;
                for &q in support {
                    state.apply_cnot(anc, q)?;
                }
                state.apply_h(anc)?;
                state.probability_of_one(anc)
            }
        };
        self.prep_prefix_p1.insert(prefix.to_vec(), p1);
        Ok(p1)
    }

    /// Per-stabilizer cycle-1 pass conditionals for a preparation trajectory.
    fn conditionals(&mut self, bits: &[u8]) -> Result<Vec<f64>, ProtocolError> {
        if let Some(c) = self.cycle_conditionals.get(bits) {
            return Ok(c.clone());
        }
        let (mut state, _) = prepare_with_trajectory(self.lattice, self.prep, bits)?;
        apply_injection(&mut state, self.lattice, self.plan, self.noise, None)?;
        let mut conditionals = Vec::with_capacity(self.checks.len());
        for (i, (kind, support)) in self.checks.iter().enumerate() {
            match state.measure_stabilizer(*kind, support, MeasureMode::Force(bits[i]), None) {
                Ok(rec) => conditionals.push(rec.probability),
                Err(EngineError::ImpossibleOutcome { .. }) => {
                    conditionals.push(0.0);
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        self.cycle_conditionals.insert(bits.to_vec(), conditionals.clone());
        Ok(conditionals)
    }

    /// One attempt: sample a preparation trajectory, then walk the cycle-1
    /// conditionals; cycle 2 is deterministic in the noiseless case.
    /// Returns (accepted, cycle measurements consumed).
    fn sample_attempt(&mut self, rng: &mut ChaCha8Rng) -> Result<(bool, usize), ProtocolError> {
        let m = self.checks.len();
        let mut bits: Vec<u8> = Vec::with_capacity(m);
        for _ in 0..m {
            let p1 = self.prep_p1(&bits)?;
            bits.push(u8::from(rng.gen::<f64>() < p1));
        }
        let conditionals = self.conditionals(&bits)?;
        for (i, &p) in conditionals.iter().enumerate() {
            if rng.gen::<f64>() >= p {
                return Ok((false, i + 1));
            }
        }
        Ok((true, 2 * m))
    }
}
