//! Encoding subset-sum instances as AC-feasibility instances on star
//! networks, and decoding feasibility witnesses back into subsets.
//!
//! Given positive integers `M` and a target `w`, the encoding builds a star
//! with one generator per value `x` (bus id `g{x}`), a single load `l`, a
//! line per generator with parameters `(b*x, g*x, delta_max)`, and load
//! demands `(w * np_max, w * nq_max)` where `(np_max, nq_max)` is the flow
//! received over a unit line at full angle separation. Two facts make the
//! construction work:
//!
//! - the ratio of real to reactive received power determines the angle
//!   difference, so `p_recv * nq_max - q_recv * np_max <= 0` with equality
//!   exactly at angle differences 0 and `delta_max` ([`lemma1_gap`]);
//! - when `np_max < 0` (the load actually consumes), nonnegative sent real
//!   power forces a nonnegative angle difference ([`lemma2_check`]).
//!
//! Together they pin every generator in a feasible solution to angle
//! difference exactly 0 or exactly `delta_max`, so feasible witnesses are in
//! bijection with subsets summing to `w`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::power_model::{
    check_feasibility, line_flow, validate_network, Bus, BusId, BusKind, Line, LineParams,
    ModelError, NetworkInstance, PhaseSolution, DEFAULT_TOLERANCE,
};

/// Default separation threshold used by [`decode_witness`]: far above the
/// rounding noise of analytically constructed witnesses, far below any
/// angle bound of practical interest (`delta_max >= 0.01`).
pub const DEFAULT_ANGLE_TOLERANCE: f64 = 1e-7;

/// Relative tolerance for recognizing reduction-form networks: per-line
/// parameter ratios and demand/extreme consistency. Instances produced by
/// [`encode_subset_sum`] at double precision sit far inside this.
const RECOGNITION_REL_TOL: f64 = 1e-6;

/// Default base susceptance; satisfies the encoding condition with a wide
/// margin together with the other defaults.
pub const DEFAULT_BASE_SUSCEPTANCE: f64 = -2.0;
/// Default base conductance; nonzero so the lossy case is exercised.
pub const DEFAULT_BASE_CONDUCTANCE: f64 = 0.5;
/// Default per-line angle bound, radians.
pub const DEFAULT_DELTA_MAX: f64 = std::f64::consts::FRAC_PI_3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("the value set must not be empty")]
    EmptyValues,
    #[error("values must be positive integers")]
    ZeroValue,
    #[error("value {0} appears more than once")]
    DuplicateValue(u64),
    #[error("the target must be a positive integer")]
    ZeroTarget,
    #[error("invalid reduction parameters: {reason}")]
    InvalidParams { reason: String },
    #[error(
        "parameters do not satisfy the encoding condition -b > g*tan(delta_max/2): \
         -({susceptance}) = {} must exceed {conductance}*tan({delta_max}/2) = {}",
        -susceptance,
        conductance * (delta_max / 2.0).tan()
    )]
    ConditionViolated {
        susceptance: f64,
        conductance: f64,
        delta_max: f64,
    },
    #[error("delta {delta} outside [0, {delta_max}]")]
    DeltaOutOfRange { delta: f64, delta_max: f64 },
    #[error("subset value {0} is not part of the instance")]
    ValueNotInInstance(u64),
    #[error("subset value {0} used more than once")]
    DuplicateSubsetValue(u64),
    #[error("subset sums to {sum}, expected target {target}")]
    SubsetSumMismatch { sum: u128, target: u64 },
    #[error("not a reduction-form network: {reason}")]
    NotReductionForm { reason: String },
    #[error("witness fails the feasibility check (max residual {max_residual:e})")]
    InfeasibleWitness { max_residual: f64 },
    #[error(
        "generator `{bus}` separated by {separation} which is neither ~0 nor ~{delta_max}; \
         the witness is numerically inconsistent with a reduction instance"
    )]
    RigidityViolated {
        bus: BusId,
        separation: f64,
        delta_max: f64,
    },
    #[error("decoded subset sums to {sum}, expected target {target}")]
    DecodedSumMismatch { sum: u128, target: u64 },
    #[error("angle tolerance must be > 0, got {0}")]
    InvalidAngleTolerance(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A subset-sum instance: distinct positive integers and a positive target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    values: Vec<u64>,
    target: u64,
}

impl SubsetSumInstance {
    /// Validates and stores the instance. Values keep their input order;
    /// they must be distinct, nonempty, and >= 1, and the target >= 1.
    pub fn new(values: Vec<u64>, target: u64) -> Result<Self, ReductionError> {
        if values.is_empty() {
            return Err(ReductionError::EmptyValues);
        }
        if values.contains(&0) {
            return Err(ReductionError::ZeroValue);
        }
        let mut seen = std::collections::BTreeSet::new();
        for &v in &values {
            if !seen.insert(v) {
                return Err(ReductionError::DuplicateValue(v));
            }
        }
        if target == 0 {
            return Err(ReductionError::ZeroTarget);
        }
        Ok(SubsetSumInstance { values, target })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn target(&self) -> u64 {
        self.target
    }

    /// Sum of all values, widened to avoid overflow.
    pub fn value_sum(&self) -> u128 {
        self.values.iter().map(|&v| v as u128).sum()
    }
}

/// Base line parameters for the encoding. On top of the plain line-parameter
/// invariants these must satisfy `np_max < 0`, equivalently
/// `-b > g * tan(delta_max / 2)`, so the encoded load consumes real power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionParams {
    base_susceptance: f64,
    base_conductance: f64,
    delta_max: f64,
}

impl ReductionParams {
    pub fn new(
        base_susceptance: f64,
        base_conductance: f64,
        delta_max: f64,
    ) -> Result<Self, ReductionError> {
        LineParams::new(base_susceptance, base_conductance, delta_max).map_err(|e| {
            ReductionError::InvalidParams {
                reason: e.to_string(),
            }
        })?;
        if !lemma2_condition_holds(base_susceptance, base_conductance, delta_max) {
            return Err(ReductionError::ConditionViolated {
                susceptance: base_susceptance,
                conductance: base_conductance,
                delta_max,
            });
        }
        Ok(ReductionParams {
            base_susceptance,
            base_conductance,
            delta_max,
        })
    }

    pub fn base_susceptance(&self) -> f64 {
        self.base_susceptance
    }

    pub fn base_conductance(&self) -> f64 {
        self.base_conductance
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    /// Line parameters at unit scale.
    pub fn line_params(&self) -> LineParams {
        LineParams {
            susceptance: self.base_susceptance,
            conductance: self.base_conductance,
            delta_max: self.delta_max,
        }
    }

    /// Line parameters for the generator carrying `value`: admittance scales
    /// linearly, the angle bound does not.
    pub fn scaled_line_params(&self, value: u64) -> LineParams {
        LineParams {
            susceptance: self.base_susceptance * value as f64,
            conductance: self.base_conductance * value as f64,
            delta_max: self.delta_max,
        }
    }
}

impl Default for ReductionParams {
    fn default() -> Self {
        ReductionParams::new(
            DEFAULT_BASE_SUSCEPTANCE,
            DEFAULT_BASE_CONDUCTANCE,
            DEFAULT_DELTA_MAX,
        )
        .expect("default parameters satisfy the encoding condition")
    }
}

/// The flows received over a line at full angle separation `-delta_max`.
/// Under valid [`ReductionParams`], `np_max < 0` and `nq_max > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeFlows {
    pub np_max: f64,
    pub nq_max: f64,
}

/// Flows received at the downhill end of a line at angle difference
/// `-delta_max`, for arbitrary sign-valid `(b, g)`. Used directly by the
/// property sweeps, which sample parameters that need not satisfy the
/// encoding condition.
pub fn receiving_end_flows(susceptance: f64, conductance: f64, delta_max: f64) -> ExtremeFlows {
    let params = LineParams {
        susceptance,
        conductance,
        delta_max,
    };
    let flow = line_flow(&params, -delta_max);
    ExtremeFlows {
        np_max: flow.p,
        nq_max: flow.q,
    }
}

/// Extreme received flows for validated reduction parameters.
pub fn receiving_end_extremes(params: &ReductionParams) -> ExtremeFlows {
    receiving_end_flows(
        params.base_susceptance,
        params.base_conductance,
        params.delta_max,
    )
}

/// True when `np_max < 0`, i.e. a load at full angle separation actually
/// consumes real power. Closed form: `-b > g * tan(delta_max / 2)`.
pub fn lemma2_condition_holds(susceptance: f64, conductance: f64, delta_max: f64) -> bool {
    receiving_end_flows(susceptance, conductance, delta_max).np_max < 0.0
}

/// Cross-ratio gap of the received flows at angle difference `-delta`
/// against the extremes: `p_recv * nq_max - q_recv * np_max`. Raw variant of
/// [`lemma1_gap`] for sweeps over arbitrary sign-valid parameters; the
/// caller is responsible for `0 <= delta <= delta_max`.
pub fn lemma1_gap_at(susceptance: f64, conductance: f64, delta_max: f64, delta: f64) -> f64 {
    let ext = receiving_end_flows(susceptance, conductance, delta_max);
    let params = LineParams {
        susceptance,
        conductance,
        delta_max,
    };
    let received = line_flow(&params, -delta);
    received.p * ext.nq_max - received.q * ext.np_max
}

/// The quantity `p_recv * nq_max - q_recv * np_max` for the flow received
/// over angle difference `-delta`. Nonpositive for all
/// `delta in [0, delta_max]`, and zero exactly at the two endpoints — this
/// is what pins feasible witnesses to the endpoints.
pub fn lemma1_gap(params: &ReductionParams, delta: f64) -> Result<f64, ReductionError> {
    if !(0.0 <= delta && delta <= params.delta_max) {
        return Err(ReductionError::DeltaOutOfRange {
            delta,
            delta_max: params.delta_max,
        });
    }
    Ok(lemma1_gap_at(
        params.base_susceptance,
        params.base_conductance,
        params.delta_max,
        delta,
    ))
}

/// Evaluates the sign implication "nonnegative sent real power forces a
/// nonnegative angle difference" at one `delta` with `|delta| <= delta_max`.
/// Under valid [`ReductionParams`] this returns true for every such delta;
/// the property sweep asserts exactly that.
pub fn lemma2_check(params: &ReductionParams, delta: f64) -> bool {
    let sent = line_flow(&params.line_params(), delta);
    !(sent.p >= 0.0) || delta >= 0.0
}

/// Canonical bus id of the single load in a reduction-form network.
pub fn load_bus_id() -> BusId {
    BusId::new("l")
}

/// Canonical bus id of the generator carrying `value`. The value is part of
/// the id because line parameters alone determine the instance only up to an
/// integer rescaling.
pub fn generator_bus_id(value: u64) -> BusId {
    BusId::new(format!("g{value}"))
}

fn parse_generator_value(id: &BusId) -> Option<u64> {
    let digits = id.as_str().strip_prefix('g')?;
    if digits.is_empty() || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Encodes a subset-sum instance as a star network: one generator per value,
/// one load, per-value scaled lines, and demands `(w*np_max, w*nq_max)`.
/// The output always passes [`validate_network`] cleanly; the network is
/// feasible exactly when the instance is solvable.
pub fn encode_subset_sum(inst: &SubsetSumInstance, params: &ReductionParams) -> NetworkInstance {
    let ext = receiving_end_extremes(params);
    let w = inst.target() as f64;
    let mut buses = Vec::with_capacity(inst.values().len() + 1);
    let mut lines = Vec::with_capacity(inst.values().len());
    buses.push(Bus::load(load_bus_id(), w * ext.np_max, w * ext.nq_max));
    for &value in inst.values() {
        let id = generator_bus_id(value);
        buses.push(Bus::generator(id.clone()));
        lines.push(Line {
            from: id,
            to: load_bus_id(),
            params: params.scaled_line_params(value),
        });
    }
    NetworkInstance { buses, lines }
}

/// Builds the canonical feasibility witness for a solving subset: the load
/// at angle 0, selected generators at `delta_max`, all others at 0. The
/// result passes [`check_feasibility`] on the encoded network at the default
/// tolerance.
pub fn witness_from_subset(
    inst: &SubsetSumInstance,
    params: &ReductionParams,
    subset: &[u64],
) -> Result<PhaseSolution, ReductionError> {
    let mut selected = std::collections::BTreeSet::new();
    for &v in subset {
        if !inst.values().contains(&v) {
            return Err(ReductionError::ValueNotInInstance(v));
        }
        if !selected.insert(v) {
            return Err(ReductionError::DuplicateSubsetValue(v));
        }
    }
    let sum: u128 = subset.iter().map(|&v| v as u128).sum();
    if sum != inst.target() as u128 {
        return Err(ReductionError::SubsetSumMismatch {
            sum,
            target: inst.target(),
        });
    }

    let mut solution = PhaseSolution::new();
    solution.set(load_bus_id(), 0.0);
    for &value in inst.values() {
        let angle = if selected.contains(&value) {
            params.delta_max()
        } else {
            0.0
        };
        solution.set(generator_bus_id(value), angle);
    }
    Ok(solution)
}

/// A recognized reduction-form network: the recovered subset-sum instance
/// and base parameters, plus the bus layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionForm {
    pub instance: SubsetSumInstance,
    pub params: ReductionParams,
    pub load: BusId,
    /// Generator buses and their values, in line order.
    pub generators: Vec<(BusId, u64)>,
}

fn rel_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= RECOGNITION_REL_TOL * a.abs().max(b.abs())
}

fn not_reduction_form<T>(reason: impl Into<String>) -> Result<T, ReductionError> {
    Err(ReductionError::NotReductionForm {
        reason: reason.into(),
    })
}

/// Recognizes a reduction-form star and recovers `(M, w, b, g, delta_max)`.
///
/// Reduction form means: a valid star with exactly one load, generator ids
/// of the shape `g{value}`, per-line parameters proportional to the value
/// with a common base, a shared angle bound, and demands equal to a positive
/// integer multiple of the extreme received flows. All numeric consistency
/// checks run at a relative tolerance of 1e-6.
pub fn recognize_reduction_form(net: &NetworkInstance) -> Result<ReductionForm, ReductionError> {
    let violations = validate_network(net);
    if !violations.is_empty() {
        return Err(ModelError::InvalidNetwork(violations).into());
    }

    let loads: Vec<&Bus> = net.buses.iter().filter(|b| b.is_load()).collect();
    if loads.len() != 1 {
        return not_reduction_form(format!("expected exactly one load, found {}", loads.len()));
    }
    let load = loads[0];
    let generator_count = net.buses.len() - 1;
    if generator_count == 0 {
        return not_reduction_form("no generator buses");
    }

    // In a valid tree every line must then pair the load with a distinct
    // generator; anything else is not a star around the load.
    let mut line_of: BTreeMap<&BusId, &Line> = BTreeMap::new();
    for line in &net.lines {
        let other = if line.from == load.id {
            &line.to
        } else if line.to == load.id {
            &line.from
        } else {
            return not_reduction_form(format!(
                "line `{}`-`{}` does not touch the load",
                line.from, line.to
            ));
        };
        line_of.insert(other, line);
    }

    let mut generators = Vec::with_capacity(generator_count);
    let mut values = Vec::with_capacity(generator_count);
    let mut base: Option<(f64, f64, f64)> = None;
    for line in &net.lines {
        let gen_id = if line.from == load.id {
            &line.to
        } else {
            &line.from
        };
        let Some(value) = parse_generator_value(gen_id) else {
            return not_reduction_form(format!(
                "generator id `{gen_id}` does not encode a value (expected `g<positive integer>`)"
            ));
        };
        let scale = value as f64;
        let (b, g, dmax) = (
            line.params.susceptance / scale,
            line.params.conductance / scale,
            line.params.delta_max,
        );
        match base {
            None => base = Some((b, g, dmax)),
            Some((b0, g0, d0)) => {
                if !rel_close(b, b0) || !rel_close(g, g0) || !rel_close(dmax, d0) {
                    return not_reduction_form(format!(
                        "line for generator `{gen_id}` is not proportional to the common base"
                    ));
                }
            }
        }
        generators.push((gen_id.clone(), value));
        values.push(value);
    }
    let (b, g, dmax) = base.expect("at least one generator line");

    let params = match ReductionParams::new(b, g, dmax) {
        Ok(p) => p,
        Err(e) => return not_reduction_form(format!("recovered base parameters invalid: {e}")),
    };
    let ext = receiving_end_extremes(&params);

    let BusKind::Load { p_demand, q_demand } = load.kind else {
        unreachable!("load bus filtered above")
    };
    let w_estimate = p_demand / ext.np_max;
    if !w_estimate.is_finite() || w_estimate.round() < 1.0 || w_estimate.round() > u64::MAX as f64 {
        return not_reduction_form(format!(
            "real demand {p_demand} is not a positive integer multiple of np_max = {}",
            ext.np_max
        ));
    }
    let target = w_estimate.round() as u64;
    let w = target as f64;
    if !rel_close(p_demand, w * ext.np_max) || !rel_close(q_demand, w * ext.nq_max) {
        return not_reduction_form(format!(
            "demands ({p_demand}, {q_demand}) deviate from w*(np_max, nq_max) for w = {target}"
        ));
    }

    let instance = SubsetSumInstance::new(values, target)
        .map_err(|e| ReductionError::NotReductionForm {
            reason: format!("recovered values do not form an instance: {e}"),
        })?;

    Ok(ReductionForm {
        instance,
        params,
        load: load.id.clone(),
        generators,
    })
}

/// Decodes a feasibility witness of a reduction-form network into the subset
/// of values whose generators are separated from the load, after verifying
/// the witness is feasible and every selected separation sits at the angle
/// bound (the rigidity the encoding guarantees). Returned values are sorted
/// ascending and sum to the recovered target.
pub fn decode_witness(
    net: &NetworkInstance,
    sol: &PhaseSolution,
    angle_tolerance: f64,
) -> Result<Vec<u64>, ReductionError> {
    if !(angle_tolerance > 0.0) || !angle_tolerance.is_finite() {
        return Err(ReductionError::InvalidAngleTolerance(angle_tolerance));
    }
    let form = recognize_reduction_form(net)?;
    let report = check_feasibility(net, sol, DEFAULT_TOLERANCE)?;
    if !report.feasible {
        return Err(ReductionError::InfeasibleWitness {
            max_residual: report.max_abs_residual(),
        });
    }

    let load_angle = sol
        .angle(&form.load)
        .expect("feasibility check covered the load");
    let mut selected = Vec::new();
    for (bus, value) in &form.generators {
        let separation = sol.angle(bus).expect("feasibility check covered the bus") - load_angle;
        if separation > angle_tolerance {
            if (separation - form.params.delta_max()).abs() > angle_tolerance {
                return Err(ReductionError::RigidityViolated {
                    bus: bus.clone(),
                    separation,
                    delta_max: form.params.delta_max(),
                });
            }
            selected.push(*value);
        }
    }

    let sum: u128 = selected.iter().map(|&v| v as u128).sum();
    if sum != form.instance.target() as u128 {
        return Err(ReductionError::DecodedSumMismatch {
            sum,
            target: form.instance.target(),
        });
    }
    selected.sort_unstable();
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

    fn default_params() -> ReductionParams {
        ReductionParams::default()
    }

    fn instance(values: &[u64], target: u64) -> SubsetSumInstance {
        SubsetSumInstance::new(values.to_vec(), target).expect("valid test instance")
    }

    #[test]
    fn extreme_flows_fixture() {
        // 50-digit evaluation: np_max = 1/4 - sqrt(3), nq_max = 1 + sqrt(3)/4.
        let ext = receiving_end_extremes(&default_params());
        assert!((ext.np_max - (-1.482_050_807_568_877_3)).abs() < 1e-12);
        assert!((ext.nq_max - 1.433_012_701_892_219_3).abs() < 1e-12);

        let ext = receiving_end_flows(-1.0, 0.0, FRAC_PI_2);
        assert!((ext.np_max - (-1.0)).abs() < 1e-15);
        assert!((ext.nq_max - 1.0).abs() < 1e-15);

        // Pure conductance inverts the sign of np_max and violates the
        // encoding condition.
        let ext = receiving_end_flows(0.0, 1.0, FRAC_PI_2);
        assert!((ext.np_max - 1.0).abs() < 1e-15);
        assert!((ext.nq_max - 1.0).abs() < 1e-15);
        assert!(ext.np_max > 0.0);
    }

    #[test]
    fn condition_examples() {
        assert!(lemma2_condition_holds(-2.0, 0.5, FRAC_PI_3));
        assert!(!lemma2_condition_holds(0.0, 1.0, FRAC_PI_2));
        for delta_max in [0.01, 0.5, 1.0, FRAC_PI_2] {
            assert!(lemma2_condition_holds(-1.0, 0.0, delta_max));
        }
    }

    #[test]
    fn params_rejects_condition_violation() {
        let err = ReductionParams::new(0.0, 1.0, FRAC_PI_2).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("-b > g*tan(delta_max/2)"), "{message}");
        assert!(ReductionParams::new(-1.0, 5.0, FRAC_PI_2).is_err());
        assert!(ReductionParams::new(-2.0, 0.5, FRAC_PI_3).is_ok());
    }

    #[test]
    fn gap_vanishes_exactly_at_endpoints() {
        let params = default_params();
        assert_eq!(lemma1_gap(&params, 0.0).unwrap(), 0.0);
        assert_eq!(lemma1_gap(&params, params.delta_max()).unwrap(), 0.0);
    }

    #[test]
    fn gap_fixture_at_interior_angle() {
        // 50-digit evaluation of the cross product at delta = pi/6 for the
        // default parameters: (17/8) * (sqrt(3) - 2).
        let gap = lemma1_gap(&default_params(), FRAC_PI_6).unwrap();
        assert!((gap - (-0.569_392_033_916_135_8)).abs() < 1e-12);
        assert!(gap < 0.0);
    }

    #[test]
    fn gap_rejects_out_of_range_delta() {
        let params = default_params();
        assert!(matches!(
            lemma1_gap(&params, -0.1),
            Err(ReductionError::DeltaOutOfRange { .. })
        ));
        assert!(matches!(
            lemma1_gap(&params, params.delta_max() + 0.1),
            Err(ReductionError::DeltaOutOfRange { .. })
        ));
    }

    #[test]
    fn sign_implication_examples() {
        let params = default_params();
        assert!(lemma2_check(&params, 0.0));
        assert!(lemma2_check(&params, params.delta_max() / 2.0));
        // At negative delta the sent real power is negative (independently
        // evaluated: -0.933...), so the implication holds vacuously.
        let sent = line_flow(&params.line_params(), -FRAC_PI_6);
        assert!((sent.p - (-0.933_012_701_892_219_3)).abs() < 1e-12);
        assert!(lemma2_check(&params, -FRAC_PI_6));
    }

    #[test]
    fn instance_validation() {
        assert!(matches!(
            SubsetSumInstance::new(vec![], 1),
            Err(ReductionError::EmptyValues)
        ));
        assert!(matches!(
            SubsetSumInstance::new(vec![1, 0], 1),
            Err(ReductionError::ZeroValue)
        ));
        assert!(matches!(
            SubsetSumInstance::new(vec![2, 2], 3),
            Err(ReductionError::DuplicateValue(2))
        ));
        assert!(matches!(
            SubsetSumInstance::new(vec![1, 2], 0),
            Err(ReductionError::ZeroTarget)
        ));
        assert_eq!(instance(&[3, 1, 2], 4).values(), &[3, 1, 2]);
    }

    #[test]
    fn encode_star_structure_and_demands() {
        let net = encode_subset_sum(&instance(&[1, 2], 3), &default_params());
        assert_eq!(net.buses.len(), 3);
        assert_eq!(net.lines.len(), 2);
        assert!(validate_network(&net).is_empty());

        let load = net.bus(&load_bus_id()).expect("load exists");
        let BusKind::Load { p_demand, q_demand } = load.kind else {
            panic!("center bus must be the load");
        };
        // 3 * (np_max, nq_max), evaluated independently at 50 digits.
        assert!((p_demand - (-4.446_152_422_706_632)).abs() < 1e-12);
        assert!((q_demand - 4.299_038_105_676_658).abs() < 1e-12);

        // Line of value 2 carries doubled admittance and the same bound.
        let line = net
            .lines
            .iter()
            .find(|l| l.from == generator_bus_id(2))
            .expect("line for value 2");
        assert!((line.params.susceptance - (-4.0)).abs() < 1e-15);
        assert!((line.params.conductance - 1.0).abs() < 1e-15);
        assert_eq!(line.params.delta_max, FRAC_PI_3);
    }

    #[test]
    fn extremes_scale_linearly_with_value() {
        let params = default_params();
        let unit = receiving_end_extremes(&params);
        for value in 1..=50u64 {
            let scaled = params.scaled_line_params(value);
            let ext = receiving_end_flows(
                scaled.susceptance,
                scaled.conductance,
                scaled.delta_max,
            );
            let x = value as f64;
            assert!((ext.np_max - x * unit.np_max).abs() <= 1e-12 * (x * unit.np_max).abs());
            assert!((ext.nq_max - x * unit.nq_max).abs() <= 1e-12 * (x * unit.nq_max).abs());
        }
    }

    #[test]
    fn witness_passes_feasibility() {
        let params = default_params();

        let inst = instance(&[1, 2], 3);
        let net = encode_subset_sum(&inst, &params);
        let witness = witness_from_subset(&inst, &params, &[1, 2]).unwrap();
        assert_eq!(witness.angle(&generator_bus_id(1)), Some(FRAC_PI_3));
        assert_eq!(witness.angle(&generator_bus_id(2)), Some(FRAC_PI_3));
        let report = check_feasibility(&net, &witness, DEFAULT_TOLERANCE).unwrap();
        assert!(report.feasible, "residuals: {:?}", report.load_residuals);

        let inst = instance(&[1, 2, 3], 3);
        let net = encode_subset_sum(&inst, &params);
        let witness = witness_from_subset(&inst, &params, &[3]).unwrap();
        assert_eq!(witness.angle(&generator_bus_id(1)), Some(0.0));
        assert_eq!(witness.angle(&generator_bus_id(2)), Some(0.0));
        assert_eq!(witness.angle(&generator_bus_id(3)), Some(FRAC_PI_3));
        let report = check_feasibility(&net, &witness, DEFAULT_TOLERANCE).unwrap();
        assert!(report.feasible);
    }

    #[test]
    fn witness_rejects_bad_subsets() {
        let params = default_params();
        let inst = instance(&[1, 2], 3);
        assert!(matches!(
            witness_from_subset(&inst, &params, &[1]),
            Err(ReductionError::SubsetSumMismatch { sum: 1, target: 3 })
        ));
        assert!(matches!(
            witness_from_subset(&inst, &params, &[5]),
            Err(ReductionError::ValueNotInInstance(5))
        ));
        assert!(matches!(
            witness_from_subset(&inst, &params, &[1, 1]),
            Err(ReductionError::DuplicateSubsetValue(1))
        ));
    }

    #[test]
    fn recognize_recovers_the_instance() {
        let params = default_params();
        let inst = instance(&[4, 1, 7], 8);
        let form = recognize_reduction_form(&encode_subset_sum(&inst, &params)).unwrap();
        assert_eq!(form.instance, inst);
        assert!((form.params.base_susceptance() - (-2.0)).abs() < 1e-12);
        assert!((form.params.base_conductance() - 0.5).abs() < 1e-12);
        assert!((form.params.delta_max() - FRAC_PI_3).abs() < 1e-12);
        assert_eq!(form.load, load_bus_id());
    }

    #[test]
    fn recognize_rejects_non_reduction_networks() {
        let params = default_params();
        let mut chain = encode_subset_sum(&instance(&[1, 2], 3), &params);
        // Rewire into a path g1 - g2 - l: no longer a star around the load.
        chain.lines[0].to = generator_bus_id(2);
        let err = recognize_reduction_form(&chain).unwrap_err();
        assert!(matches!(err, ReductionError::NotReductionForm { .. }));

        let mut renamed = encode_subset_sum(&instance(&[1, 2], 3), &params);
        renamed.buses[1].id = BusId::new("alpha");
        renamed.lines[0].from = BusId::new("alpha");
        assert!(matches!(
            recognize_reduction_form(&renamed),
            Err(ReductionError::NotReductionForm { .. })
        ));

        let mut skewed = encode_subset_sum(&instance(&[1, 2], 3), &params);
        skewed.lines[1].params.conductance *= 1.001;
        assert!(matches!(
            recognize_reduction_form(&skewed),
            Err(ReductionError::NotReductionForm { .. })
        ));

        let mut wrong_demand = encode_subset_sum(&instance(&[1, 2], 3), &params);
        wrong_demand.buses[0].kind = BusKind::Load {
            p_demand: 0.25,
            q_demand: 0.25,
        };
        assert!(matches!(
            recognize_reduction_form(&wrong_demand),
            Err(ReductionError::NotReductionForm { .. })
        ));
    }

    #[test]
    fn decode_roundtrip() {
        let params = default_params();
        let inst = instance(&[1, 2, 3], 3);
        let net = encode_subset_sum(&inst, &params);
        let witness = witness_from_subset(&inst, &params, &[3]).unwrap();
        let decoded = decode_witness(&net, &witness, DEFAULT_ANGLE_TOLERANCE).unwrap();
        assert_eq!(decoded, vec![3]);
    }

    #[test]
    fn decode_rejects_infeasible_all_zero_witness() {
        let params = default_params();
        let inst = instance(&[1, 2], 3);
        let net = encode_subset_sum(&inst, &params);
        let mut zeros = PhaseSolution::new();
        zeros.set(load_bus_id(), 0.0);
        zeros.set(generator_bus_id(1), 0.0);
        zeros.set(generator_bus_id(2), 0.0);
        assert!(matches!(
            decode_witness(&net, &zeros, DEFAULT_ANGLE_TOLERANCE),
            Err(ReductionError::InfeasibleWitness { .. })
        ));
    }

    #[test]
    fn decode_verifies_rigidity_and_sum() {
        let params = default_params();
        let inst = instance(&[1], 1);
        let net = encode_subset_sum(&inst, &params);

        // A separation one picounit off the bound still passes the balance
        // check, but a picky angle tolerance must flag it.
        let mut nudged = PhaseSolution::new();
        nudged.set(load_bus_id(), 0.0);
        nudged.set(generator_bus_id(1), params.delta_max() - 1e-12);
        assert!(matches!(
            decode_witness(&net, &nudged, 1e-15),
            Err(ReductionError::RigidityViolated { .. })
        ));
        // The default tolerance accepts the same witness.
        assert_eq!(
            decode_witness(&net, &nudged, DEFAULT_ANGLE_TOLERANCE).unwrap(),
            vec![1]
        );

        // An absurdly wide angle tolerance deselects every generator, and the
        // sum check catches it.
        let exact = witness_from_subset(&inst, &params, &[1]).unwrap();
        assert!(matches!(
            decode_witness(&net, &exact, 10.0),
            Err(ReductionError::DecodedSumMismatch { sum: 0, target: 1 })
        ));

        assert!(matches!(
            decode_witness(&net, &exact, 0.0),
            Err(ReductionError::InvalidAngleTolerance(_))
        ));
    }

    proptest! {
        #[test]
        fn encoded_networks_always_validate(
            mask in 1u32..(1 << 10),
            target in 1u64..=64,
        ) {
            let values: Vec<u64> =
                (0..10).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
            let inst = SubsetSumInstance::new(values, target).unwrap();
            let net = encode_subset_sum(&inst, &ReductionParams::default());
            prop_assert!(validate_network(&net).is_empty());
            let form = recognize_reduction_form(&net).unwrap();
            prop_assert_eq!(form.instance, inst);
        }
    }
}
