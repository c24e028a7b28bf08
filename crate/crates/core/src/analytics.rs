//! Closed-form injection analytics.
//!
//! A chain of physical Rz(theta) rotations, Rz(theta) = cos(theta/2) I
//! + i sin(theta/2) Z, applied along a logical Z chain and post-selected on
//! the reference stabilizer trajectory leaves only the identity and
//! full-chain components. That gives the pass probability
//!
//! ```text
//! P_c = prod_j sin^2(theta_j / 2) + prod_j cos^2(theta_j / 2)
//! ```
//!
//! and the chain's contribution to the logical rotation angle
//!
//! ```text
//! theta_c = +/- 2 arcsin( prod_j sin(theta_j / 2) / sqrt(P_c) )
//! ```
//!
//! with the sign fixed by the trajectory (see `protocol::chain_sign`). A Z
//! error on one chain qubit is an over-rotation by pi of that qubit; shifting
//! the affected angle in both product branches and renormalizing by the
//! shifted pass probability gives the erroneous angle. Everything here is a
//! pure function; sweeps may evaluate points in parallel freely.

use thiserror::Error;

/// Trajectory-determined sign of a chain's angle contribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    /// Sign of a real value; zero maps to positive.
    pub fn of(value: f64) -> Self {
        if value < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("schedule angles must be finite")]
    NonFiniteAngle,
    #[error("error position {pos} outside chain of length {len}")]
    ErrorPositionOutOfRange { pos: usize, len: usize },
    #[error("over-rotation factor must satisfy epsilon > -1 (got {0})")]
    InvalidEpsilon(f64),
    #[error("erroneous branch has zero acceptance probability")]
    ZeroAcceptance,
    #[error("target angle {0} outside [0, pi)")]
    TargetOutOfRange(f64),
    #[error("bisection failed to converge within {0} iterations")]
    NonConvergence(usize),
    #[error("per-stabilizer pass probability must lie in (0, 1] (got {0})")]
    PassProbabilityOutOfRange(f64),
    #[error("even-d coefficients require even d (got {0})")]
    OddDistance(usize),
    #[error("per-chain target angle {0} is unreachable (|theta_L|/n >= pi)")]
    UnreachableTarget(f64),
}

/// Per-qubit physical Z-rotation angles for one chain, in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    angles: Vec<f64>,
}

impl AngleSchedule {
    pub fn new(angles: Vec<f64>) -> Result<Self, AnalyticsError> {
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(AnalyticsError::NonFiniteAngle);
        }
        Ok(Self { angles })
    }

    /// Same angle on every chain qubit.
    pub fn uniform(theta: f64, len: usize) -> Result<Self, AnalyticsError> {
        Self::new(vec![theta; len])
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Negated copy (the physical sign correction).
    pub fn negated(&self) -> Self {
        Self {
            angles: self.angles.iter().map(|a| -a).collect(),
        }
    }
}

/// Undetectable error applied to a chain's rotations.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorSpec {
    None,
    /// Pauli Z on the listed chain positions (0-based within the chain);
    /// each shifts that qubit's rotation angle by pi.
    PauliZ { positions: Vec<usize> },
    /// Every rotation over-rotates to (1 + epsilon) theta.
    OverRotation { epsilon: f64 },
}

impl ErrorSpec {
    pub fn single_z(position: usize) -> Self {
        ErrorSpec::PauliZ {
            positions: vec![position],
        }
    }
}

/// Outcome of one chain injection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainResult {
    /// Post-selection pass probability P_c for this chain.
    pub success_probability: f64,
    /// Signed chain angle theta_c.
    pub chain_angle: f64,
    pub sign: Sign,
}

/// Composition of several chain results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposedRotation {
    /// Sum of the signed chain angles.
    pub logical_angle: f64,
    /// Product of the per-chain pass probabilities.
    pub pass_probability: f64,
}

/// Pass probability of post-selection for one chain schedule:
/// `prod sin^2(theta/2) + prod cos^2(theta/2)`, in (0, 1].
pub fn success_probability(schedule: &AngleSchedule) -> f64 {
    let (s, c) = branch_products(schedule.angles());
    s * s + c * c
}

/// Signed chain angle, `sign * 2 arcsin(prod sin(theta/2) / sqrt(P_c))`.
pub fn chain_angle(schedule: &AngleSchedule, sign: Sign) -> f64 {
    let (s, c) = branch_products(schedule.angles());
    sign.factor() * angle_from_branches(s, c)
}

/// Chain angle and pass probability with an undetectable error folded in.
///
/// For `PauliZ` the listed angles are shifted by pi in both product branches
/// and the result is renormalized by the shifted pass probability; for
/// `OverRotation` every angle is scaled by (1 + epsilon). Returns
/// `(theta_c_err, p_c_err)`.
pub fn chain_angle_with_error(
    schedule: &AngleSchedule,
    error: &ErrorSpec,
    sign: Sign,
) -> Result<(f64, f64), AnalyticsError> {
    let shifted = apply_error(schedule, error)?;
    let (s, c) = branch_products(&shifted);
    let p = s * s + c * c;
    // exact zeros land near (k eps)^2; genuine small passes stay far above
    if p < 1e-30 {
        return Err(AnalyticsError::ZeroAcceptance);
    }
    Ok((sign.factor() * angle_from_branches(s, c), p))
}

/// Sum the signed chain angles and multiply the pass probabilities.
pub fn compose_logical_angle(results: &[ChainResult]) -> ComposedRotation {
    assert!(!results.is_empty(), "composition needs at least one chain");
    ComposedRotation {
        logical_angle: results.iter().map(|r| r.chain_angle).sum(),
        pass_probability: results.iter().map(|r| r.success_probability).product(),
    }
}

const BISECTION_TOLERANCE: f64 = 1e-12;
const BISECTION_MAX_ITERATIONS: usize = 200;

/// Invert the chain angle: find the uniform physical angle in [0, pi) whose
/// chain angle equals `target`, by bisection to 1e-12. The chain angle is
/// strictly increasing in the uniform physical angle for odd chain lengths,
/// which makes the bisection well posed.
pub fn solve_physical_angle(target: f64, chain_len: usize) -> Result<f64, AnalyticsError> {
    if !(0.0..std::f64::consts::PI).contains(&target) {
        return Err(AnalyticsError::TargetOutOfRange(target));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let f = |theta_p: f64| {
        let schedule = AngleSchedule::uniform(theta_p, chain_len).expect("finite");
        chain_angle(&schedule, Sign::Positive)
    };
    let mut lo = 0.0f64;
    let mut hi = std::f64::consts::PI;
    for _ in 0..BISECTION_MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < BISECTION_TOLERANCE {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(AnalyticsError::NonConvergence(BISECTION_MAX_ITERATIONS))
}

/// Infidelity between the intended and erroneous logical states,
/// `sin^2(delta/2)` with `delta = theta_c - theta_c_err`.
pub fn infidelity_single(theta_c: f64, theta_c_err: f64) -> f64 {
    let half = 0.5 * (theta_c - theta_c_err);
    half.sin().powi(2)
}

/// Infidelity with `n_e` of `n` chains carrying a Z error: the erroneous
/// total angle is `(n - n_e) theta_c + n_e theta_c_err`, so the infidelity is
/// `sin^2(n_e (theta_c - theta_c_err) / 2)`.
pub fn infidelity_multiple(n: usize, n_e: usize, theta_c: f64, theta_c_err: f64) -> f64 {
    assert!(n_e <= n, "errored chains ({n_e}) exceed chain count ({n})");
    let half = 0.5 * n_e as f64 * (theta_c - theta_c_err);
    half.sin().powi(2)
}

/// Logical overlap probability `cos^2((theta_a - theta_b)/2)`, the
/// single-qubit reduction of `|<psi_e|psi>|^2`. Complementary to
/// [`infidelity_single`].
pub fn logical_fidelity(theta_a: f64, theta_b: f64) -> f64 {
    let half = 0.5 * (theta_a - theta_b);
    half.cos().powi(2)
}

/// Per-stabilizer qubit weighting for the overhead sum.
#[derive(Debug, Clone, PartialEq)]
pub enum NsWeights {
    /// Same weight for every stabilizer.
    Scalar(f64),
    /// One weight per stabilizer, in measurement order.
    PerStabilizer(Vec<f64>),
}

/// Parameters of the space-time overhead sum.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadParams {
    /// Number of post-selected stabilizers.
    pub m: usize,
    /// Code distance.
    pub d: usize,
    /// Physical qubits per stabilizer.
    pub ns: NsWeights,
    /// Per-stabilizer pass probability, in (0, 1].
    pub p_n: f64,
    /// Expected number of repetitions, N = 1 / P_t.
    pub repetitions: f64,
}

impl OverheadParams {
    /// Default parameterization for a distance-d code with total pass
    /// probability `p_t`: m = d^2 - 1 post-selected stabilizers, uniform
    /// per-stabilizer pass probability P_n = P_t^(1/m), N = 1/P_t, N_s = 4.
    pub fn defaults(d: usize, p_t: f64) -> Self {
        let m = d * d - 1;
        Self {
            m,
            d,
            ns: NsWeights::Scalar(4.0),
            p_n: p_t.powf(1.0 / m as f64),
            repetitions: 1.0 / p_t,
        }
    }
}

/// Space-time resource overhead:
/// `sum_{i=1}^m i (d-1) N_s N P_n^i (1 - P_n)^(m-i)`, with the `i * N_s`
/// factor generalized to `sum_{j<=i} N_s[j]` in per-stabilizer mode.
pub fn overhead(params: &OverheadParams) -> Result<f64, AnalyticsError> {
    if !(params.p_n > 0.0 && params.p_n <= 1.0) {
        return Err(AnalyticsError::PassProbabilityOutOfRange(params.p_n));
    }
    let m = params.m;
    let weights: Vec<f64> = match &params.ns {
        NsWeights::Scalar(w) => vec![*w; m],
        NsWeights::PerStabilizer(ws) => {
            assert_eq!(ws.len(), m, "need one N_s weight per stabilizer");
            ws.clone()
        }
    };
    let d_factor = (params.d - 1) as f64;
    let q = 1.0 - params.p_n;
    let mut total = 0.0;
    let mut weight_prefix = 0.0;
    for i in 1..=m {
        weight_prefix += weights[i - 1];
        let term = weight_prefix
            * d_factor
            * params.repetitions
            * params.p_n.powi(i as i32)
            * q.powi((m - i) as i32);
        total += term;
    }
    Ok(total)
}

/// Real coefficients on {|+>_L, |->_L} after an even-length chain injection:
/// `(cos(theta_c/2), (-1)^(d/2) sin(theta_c/2))`, since i^d = (-1)^(d/2).
pub fn even_d_coefficients(theta_c: f64, d: usize) -> Result<(f64, f64), AnalyticsError> {
    if d % 2 != 0 {
        return Err(AnalyticsError::OddDistance(d));
    }
    let parity = if (d / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(((0.5 * theta_c).cos(), parity * (0.5 * theta_c).sin()))
}

// ---------------------------------------------------------------------------
// Scheme-level sweep helpers
// ---------------------------------------------------------------------------

/// Injection scheme used by figure sweeps and the break-even analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Single,
    Multiple,
}

impl Scheme {
    /// Number of injected chains at distance `d` (maximum allowed for
    /// `Multiple`, one for `Single`).
    pub fn chains(self, d: usize) -> usize {
        match self {
            Scheme::Single => 1,
            Scheme::Multiple => (d + 1) / 2,
        }
    }
}

/// One analytic sweep point: distance `d`, target logical angle, scheme, and
/// an error model evaluated on the per-chain schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemePoint {
    pub d: usize,
    pub n_chains: usize,
    pub theta_l: f64,
    pub theta_p: f64,
    pub infidelity: f64,
    pub pass_probability: f64,
}

/// Evaluate a scheme at distance `d` and target angle `theta_l` under
/// `n_e` single-Z errors on distinct chains (`n_e = 0` for the clean point).
pub fn scheme_point(
    scheme: Scheme,
    d: usize,
    theta_l: f64,
    n_e: usize,
) -> Result<SchemePoint, AnalyticsError> {
    scheme_point_with_error(scheme, d, theta_l, n_e, &ErrorSpec::single_z(0))
}

/// Same as [`scheme_point`] but with an explicit error model. For `PauliZ`
/// the error hits `n_e` distinct chains; for `OverRotation` every chain
/// over-rotates and `n_e` is ignored.
pub fn scheme_point_with_error(
    scheme: Scheme,
    d: usize,
    theta_l: f64,
    n_e: usize,
    error: &ErrorSpec,
) -> Result<SchemePoint, AnalyticsError> {
    let n = scheme.chains(d);
    assert!(n_e <= n, "n_e = {n_e} exceeds chain count {n}");
    let per_chain = theta_l / n as f64;
    if per_chain.abs() >= std::f64::consts::PI {
        return Err(AnalyticsError::UnreachableTarget(per_chain));
    }
    let theta_p = solve_physical_angle(per_chain.abs(), d)?;
    let schedule = AngleSchedule::uniform(theta_p, d)?;
    let p_c = success_probability(&schedule);
    let theta_c = chain_angle(&schedule, Sign::Positive);
    let infidelity = match error {
        ErrorSpec::None => 0.0,
        ErrorSpec::PauliZ { .. } => {
            let (theta_err, _) = chain_angle_with_error(&schedule, error, Sign::Positive)?;
            infidelity_multiple(n, n_e, theta_c, theta_err)
        }
        ErrorSpec::OverRotation { .. } => {
            // systematic control error: every chain over-rotates
            let (theta_err, _) = chain_angle_with_error(&schedule, error, Sign::Positive)?;
            infidelity_multiple(n, n, theta_c, theta_err)
        }
    };
    Ok(SchemePoint {
        d,
        n_chains: n,
        theta_l,
        theta_p,
        infidelity,
        pass_probability: p_c.powi(n as i32),
    })
}

/// Overhead of one scheme point under the default Eq-style parameterization.
pub fn scheme_overhead(point: &SchemePoint) -> Result<f64, AnalyticsError> {
    overhead(&OverheadParams::defaults(point.d, point.pass_probability))
}

/// Smallest odd distance in `3..=d_max` whose one-Z-error infidelity is at
/// most `target_infidelity`, together with its overhead. `None` when no
/// distance in range reaches the target.
pub fn overhead_at_matched_infidelity(
    scheme: Scheme,
    theta_l: f64,
    target_infidelity: f64,
    d_max: usize,
) -> Result<Option<(usize, f64)>, AnalyticsError> {
    let mut d = 3;
    while d <= d_max {
        let point = scheme_point(scheme, d, theta_l, 1)?;
        if point.infidelity <= target_infidelity {
            return Ok(Some((d, scheme_overhead(&point)?)));
        }
        d += 2;
    }
    Ok(None)
}

/// Matched-infidelity break-even scan: sweep `theta_l` over `grid`, compare
/// the overhead each scheme needs to reach `target_infidelity` (at its own
/// minimal odd distance), and return the first angle where the cheaper
/// scheme flips.
pub fn break_even_angle(
    grid: &[f64],
    target_infidelity: f64,
    d_max: usize,
) -> Result<Option<f64>, AnalyticsError> {
    let mut previous: Option<(f64, f64)> = None;
    for &theta_l in grid {
        let single = overhead_at_matched_infidelity(Scheme::Single, theta_l, target_infidelity, d_max)?;
        let multiple =
            overhead_at_matched_infidelity(Scheme::Multiple, theta_l, target_infidelity, d_max)?;
        if let (Some((_, r_s)), Some((_, r_m))) = (single, multiple) {
            let diff = r_m - r_s;
            if let Some((prev_theta, prev_diff)) = previous {
                if prev_diff.signum() != diff.signum() {
                    // linear interpolation between grid points
                    let t = prev_diff / (prev_diff - diff);
                    return Ok(Some(prev_theta + t * (theta_l - prev_theta)));
                }
            }
            previous = Some((theta_l, diff));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------

/// Products of the two post-selection branches: `(prod sin(theta/2), prod cos(theta/2))`.
fn branch_products(angles: &[f64]) -> (f64, f64) {
    let mut s = 1.0;
    let mut c = 1.0;
    for &a in angles {
        s *= (0.5 * a).sin();
        c *= (0.5 * a).cos();
    }
    (s, c)
}

fn angle_from_branches(sin_branch: f64, cos_branch: f64) -> f64 {
    let p = sin_branch * sin_branch + cos_branch * cos_branch;
    let ratio = (sin_branch / p.sqrt()).clamp(-1.0, 1.0);
    2.0 * ratio.asin()
}

fn apply_error(schedule: &AngleSchedule, error: &ErrorSpec) -> Result<Vec<f64>, AnalyticsError> {
    let mut angles = schedule.angles().to_vec();
    match error {
        ErrorSpec::None => {}
        ErrorSpec::PauliZ { positions } => {
            for &pos in positions {
                if pos >= angles.len() {
                    return Err(AnalyticsError::ErrorPositionOutOfRange {
                        pos,
                        len: angles.len(),
                    });
                }
                angles[pos] += std::f64::consts::PI;
            }
        }
        ErrorSpec::OverRotation { epsilon } => {
            if *epsilon <= -1.0 {
                return Err(AnalyticsError::InvalidEpsilon(*epsilon));
            }
            for a in &mut angles {
                *a *= 1.0 + epsilon;
            }
        }
    }
    Ok(angles)
}
