//! Steady-state AC power flow on networks with unit voltage magnitudes.
//!
//! With all voltage magnitudes fixed at 1, a line is described by its
//! susceptance `b <= 0`, conductance `g >= 0`, and a bound `delta_max` on the
//! phase-angle difference across it. The directed real/reactive flows out of
//! the sending bus are pure functions of the angle difference:
//!
//! ```text
//! p(d) = g * (1 - cos d) - b * sin d
//! q(d) = -b * (1 - cos d) - g * sin d
//! ```
//!
//! Flows are always derived from angles, never stored, so a candidate
//! solution can violate only balance, generator-sign, and angle-bound
//! constraints — the flow laws hold by construction. Angles are radians,
//! double precision, everywhere.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Default absolute tolerance for feasibility checks. Residual checks scale
/// it by `1 + |demand|` per constraint; witnesses built analytically only
/// carry rounding noise, so this is deliberately tight.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Identifier of a bus. Plain string key, ordered for deterministic output.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BusId(String);

impl BusId {
    pub fn new(id: impl Into<String>) -> Self {
        BusId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BusId {
    fn from(s: &str) -> Self {
        BusId(s.to_owned())
    }
}

impl From<String> for BusId {
    fn from(s: String) -> Self {
        BusId(s)
    }
}

/// What a bus is. Every bus is either a generator or a load; loads carry
/// fixed real/reactive demands (possibly zero), generators carry nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BusKind {
    Generator,
    Load { p_demand: f64, q_demand: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
}

impl Bus {
    pub fn generator(id: impl Into<BusId>) -> Self {
        Bus {
            id: id.into(),
            kind: BusKind::Generator,
        }
    }

    pub fn load(id: impl Into<BusId>, p_demand: f64, q_demand: f64) -> Self {
        Bus {
            id: id.into(),
            kind: BusKind::Load { p_demand, q_demand },
        }
    }

    pub fn is_load(&self) -> bool {
        matches!(self.kind, BusKind::Load { .. })
    }
}

/// Electrical parameters of one line, per unit. Valid parameters satisfy
/// `susceptance <= 0`, `conductance >= 0`, not both zero, and
/// `0 < delta_max <= pi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParams {
    pub susceptance: f64,
    pub conductance: f64,
    /// Maximum allowed |angle difference| across the line, radians.
    pub delta_max: f64,
}

impl LineParams {
    /// Builds validated parameters; see the type docs for the invariants.
    pub fn new(susceptance: f64, conductance: f64, delta_max: f64) -> Result<Self, ModelError> {
        let params = LineParams {
            susceptance,
            conductance,
            delta_max,
        };
        match params.invariant_error() {
            None => Ok(params),
            Some(reason) => Err(ModelError::InvalidLineParams {
                reason: reason.to_owned(),
            }),
        }
    }

    fn invariant_error(&self) -> Option<&'static str> {
        if !(self.susceptance <= 0.0) {
            return Some("susceptance must be <= 0 and finite");
        }
        if !(self.conductance >= 0.0) {
            return Some("conductance must be >= 0 and finite");
        }
        if !self.susceptance.is_finite() || !self.conductance.is_finite() {
            return Some("susceptance and conductance must be finite");
        }
        if self.susceptance == 0.0 && self.conductance == 0.0 {
            return Some("susceptance and conductance must not both be zero");
        }
        if !(self.delta_max > 0.0 && self.delta_max <= std::f64::consts::FRAC_PI_2) {
            return Some("delta_max must lie in (0, pi/2]");
        }
        None
    }
}

/// An undirected line between two buses. Directed flows are derived,
/// one per direction, from the endpoint angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    pub params: LineParams,
}

/// A power network: buses plus lines. The intended shape is a tree
/// (connected, acyclic); [`validate_network`] reports everything that
/// deviates from the invariants instead of failing fast.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkInstance {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

impl NetworkInstance {
    pub fn bus(&self, id: &BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| &b.id == id)
    }

    /// True when [`validate_network`] reports nothing.
    pub fn is_valid(&self) -> bool {
        validate_network(self).is_empty()
    }
}

/// A candidate assignment of phase angles (radians) to buses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseSolution {
    pub angles: BTreeMap<BusId, f64>,
}

impl PhaseSolution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: impl Into<BusId>, angle: f64) {
        self.angles.insert(id.into(), angle);
    }

    pub fn angle(&self, id: &BusId) -> Option<f64> {
        self.angles.get(id).copied()
    }
}

impl FromIterator<(BusId, f64)> for PhaseSolution {
    fn from_iter<I: IntoIterator<Item = (BusId, f64)>>(iter: I) -> Self {
        PhaseSolution {
            angles: iter.into_iter().collect(),
        }
    }
}

/// Directed real/reactive power leaving the sending bus of a line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFlow {
    pub p: f64,
    pub q: f64,
}

/// Real and reactive balance residual at a load: outgoing flow sum minus
/// demand, per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub p: f64,
    pub q: f64,
}

/// One line whose angle difference exceeds its bound by more than the
/// tolerance; `excess = |delta| - delta_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleViolation {
    pub from: BusId,
    pub to: BusId,
    pub excess: f64,
}

/// Outcome of [`check_feasibility`]: per-constraint residuals plus the
/// overall verdict. `feasible` is true exactly when every load residual
/// magnitude is within `tolerance * (1 + |demand|)`, every generator real
/// injection is `>= -tolerance`, and no angle bound is exceeded beyond the
/// tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub load_residuals: BTreeMap<BusId, Residual>,
    pub generator_injections: BTreeMap<BusId, f64>,
    pub angle_violations: Vec<AngleViolation>,
    pub tolerance_used: f64,
}

impl FeasibilityReport {
    /// Largest residual magnitude over all load balance constraints.
    pub fn max_abs_residual(&self) -> f64 {
        self.load_residuals
            .values()
            .flat_map(|r| [r.p.abs(), r.q.abs()])
            .fold(0.0, f64::max)
    }
}

/// A single invariant violation found by [`validate_network`], naming the
/// offending element. Line indices refer to `NetworkInstance::lines`.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyNetwork,
    DuplicateBusId {
        id: BusId,
    },
    NonFiniteDemand {
        bus: BusId,
    },
    UnknownEndpoint {
        line: usize,
        id: BusId,
    },
    SelfLoop {
        line: usize,
        id: BusId,
    },
    DuplicateLine {
        line: usize,
        a: BusId,
        b: BusId,
    },
    /// Susceptance positive or non-finite.
    BadSusceptance {
        line: usize,
        value: f64,
    },
    /// Conductance negative or non-finite.
    BadConductance {
        line: usize,
        value: f64,
    },
    /// Both susceptance and conductance are zero.
    ZeroAdmittance {
        line: usize,
    },
    /// delta_max outside (0, pi/2].
    BadDeltaMax {
        line: usize,
        value: f64,
    },
    /// Adding this line closes a cycle.
    Cycle {
        line: usize,
    },
    /// The line graph does not connect all buses.
    Disconnected {
        components: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyNetwork => write!(f, "network has no buses"),
            Violation::DuplicateBusId { id } => write!(f, "bus id `{id}` declared twice"),
            Violation::NonFiniteDemand { bus } => {
                write!(f, "load `{bus}` has a non-finite demand")
            }
            Violation::UnknownEndpoint { line, id } => {
                write!(f, "line #{line} references undeclared bus `{id}`")
            }
            Violation::SelfLoop { line, id } => {
                write!(f, "line #{line} connects bus `{id}` to itself")
            }
            Violation::DuplicateLine { line, a, b } => {
                write!(f, "line #{line} duplicates the pair `{a}`-`{b}`")
            }
            Violation::BadSusceptance { line, value } => {
                write!(f, "line #{line}: susceptance {value} must be <= 0")
            }
            Violation::BadConductance { line, value } => {
                write!(f, "line #{line}: conductance {value} must be >= 0")
            }
            Violation::ZeroAdmittance { line } => {
                write!(f, "line #{line}: susceptance and conductance are both zero")
            }
            Violation::BadDeltaMax { line, value } => {
                write!(f, "line #{line}: delta_max {value} must lie in (0, pi/2]")
            }
            Violation::Cycle { line } => write!(f, "line #{line} closes a cycle"),
            Violation::Disconnected { components } => {
                write!(f, "network splits into {components} components")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid line parameters: {reason}")]
    InvalidLineParams { reason: String },
    #[error("capacity must be >= 0, got {0}")]
    NegativeCapacity(f64),
    #[error("susceptance and conductance are both zero")]
    ZeroAdmittance,
    #[error("network is invalid: {}", format_violations(.0))]
    InvalidNetwork(Vec<Violation>),
    #[error("no angle assigned to bus `{0}`")]
    MissingAngle(BusId),
    #[error("angle for bus `{0}` is not finite")]
    NonFiniteAngle(BusId),
    #[error("tolerance must be > 0, got {0}")]
    NonPositiveTolerance(f64),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Directed flow out of the sending bus over angle difference `delta`
/// (sending-minus-receiving angle, radians).
pub fn line_flow(params: &LineParams, delta: f64) -> LineFlow {
    let (sin_d, cos_d) = delta.sin_cos();
    let one_minus_cos = 1.0 - cos_d;
    LineFlow {
        p: params.conductance * one_minus_cos - params.susceptance * sin_d,
        q: -params.susceptance * one_minus_cos - params.conductance * sin_d,
    }
}

/// Squared apparent power `p^2 + q^2` of the directed flow at `delta`.
/// Algebraically this collapses to `2 (g^2 + b^2) (1 - cos delta)`, which
/// the property tests verify against this flow-based evaluation.
pub fn apparent_power_squared(params: &LineParams, delta: f64) -> f64 {
    let flow = line_flow(params, delta);
    flow.p * flow.p + flow.q * flow.q
}

/// Thermal-limit capacity equivalent to the line's angle bound:
/// `s = 2 (g^2 + b^2) (1 - cos delta_max)`.
pub fn capacity_from_delta_max(params: &LineParams) -> f64 {
    let g = params.conductance;
    let b = params.susceptance;
    2.0 * (g * g + b * b) * (1.0 - params.delta_max.cos())
}

/// Maximum phase-angle difference equivalent to a thermal capacity:
/// `pi/2` when the capacity exceeds `2 (b^2 + g^2)`, otherwise
/// `arccos(1 - s / (2 (b^2 + g^2)))`. Inverse of
/// [`capacity_from_delta_max`] on `(0, pi/2]`.
pub fn delta_max_from_capacity(
    susceptance: f64,
    conductance: f64,
    capacity: f64,
) -> Result<f64, ModelError> {
    if susceptance == 0.0 && conductance == 0.0 {
        return Err(ModelError::ZeroAdmittance);
    }
    if !(capacity >= 0.0) {
        return Err(ModelError::NegativeCapacity(capacity));
    }
    let denom = 2.0 * (susceptance * susceptance + conductance * conductance);
    if capacity > denom {
        Ok(std::f64::consts::FRAC_PI_2)
    } else {
        // The ratio is within [0, 1] up to rounding; clamp before acos.
        let arg = (1.0 - capacity / denom).clamp(-1.0, 1.0);
        Ok(arg.acos())
    }
}

/// Checks every structural and parameter invariant of a network and returns
/// all violations found (empty means valid). A single bus with no lines is a
/// valid one-node tree.
pub fn validate_network(net: &NetworkInstance) -> Vec<Violation> {
    let mut violations = Vec::new();

    if net.buses.is_empty() {
        violations.push(Violation::EmptyNetwork);
        return violations;
    }

    let mut index_of: BTreeMap<&BusId, usize> = BTreeMap::new();
    for (i, bus) in net.buses.iter().enumerate() {
        if index_of.insert(&bus.id, i).is_some() {
            violations.push(Violation::DuplicateBusId { id: bus.id.clone() });
        }
        if let BusKind::Load { p_demand, q_demand } = bus.kind {
            if !p_demand.is_finite() || !q_demand.is_finite() {
                violations.push(Violation::NonFiniteDemand {
                    bus: bus.id.clone(),
                });
            }
        }
    }

    // Union-find over buses; only structurally sound lines take part in the
    // tree checks.
    let mut parent: Vec<usize> = (0..net.buses.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    let mut seen_pairs: BTreeMap<(&BusId, &BusId), usize> = BTreeMap::new();
    for (i, line) in net.lines.iter().enumerate() {
        let p = &line.params;
        if !(p.susceptance <= 0.0) || !p.susceptance.is_finite() {
            violations.push(Violation::BadSusceptance {
                line: i,
                value: p.susceptance,
            });
        }
        if !(p.conductance >= 0.0) || !p.conductance.is_finite() {
            violations.push(Violation::BadConductance {
                line: i,
                value: p.conductance,
            });
        }
        if p.susceptance == 0.0 && p.conductance == 0.0 {
            violations.push(Violation::ZeroAdmittance { line: i });
        }
        if !(p.delta_max > 0.0 && p.delta_max <= std::f64::consts::FRAC_PI_2) {
            violations.push(Violation::BadDeltaMax {
                line: i,
                value: p.delta_max,
            });
        }

        let a = index_of.get(&line.from).copied();
        let b = index_of.get(&line.to).copied();
        if a.is_none() {
            violations.push(Violation::UnknownEndpoint {
                line: i,
                id: line.from.clone(),
            });
        }
        if b.is_none() {
            violations.push(Violation::UnknownEndpoint {
                line: i,
                id: line.to.clone(),
            });
        }
        let (Some(a), Some(b)) = (a, b) else { continue };

        if a == b {
            violations.push(Violation::SelfLoop {
                line: i,
                id: line.from.clone(),
            });
            continue;
        }
        let key = if line.from <= line.to {
            (&line.from, &line.to)
        } else {
            (&line.to, &line.from)
        };
        if seen_pairs.insert(key, i).is_some() {
            violations.push(Violation::DuplicateLine {
                line: i,
                a: line.from.clone(),
                b: line.to.clone(),
            });
            continue;
        }

        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra == rb {
            violations.push(Violation::Cycle { line: i });
        } else {
            parent[ra] = rb;
        }
    }

    let mut roots: Vec<usize> = (0..net.buses.len())
        .map(|i| root(&mut parent, i))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    if roots.len() > 1 {
        violations.push(Violation::Disconnected {
            components: roots.len(),
        });
    }

    violations
}

/// Evaluates a candidate phase assignment against a network: derives all
/// directed flows from the angles, forms balance residuals at loads and real
/// injections at generators, and checks every angle bound.
///
/// Reactive power at generators is unconstrained. The verdict admits
/// rounding slack: residuals are compared against `tolerance * (1 + |demand|)`
/// and generator injections against `-tolerance`.
pub fn check_feasibility(
    net: &NetworkInstance,
    sol: &PhaseSolution,
    tolerance: f64,
) -> Result<FeasibilityReport, ModelError> {
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(ModelError::NonPositiveTolerance(tolerance));
    }
    let violations = validate_network(net);
    if !violations.is_empty() {
        return Err(ModelError::InvalidNetwork(violations));
    }

    let mut angle_of: BTreeMap<&BusId, f64> = BTreeMap::new();
    for bus in &net.buses {
        let angle = sol
            .angle(&bus.id)
            .ok_or_else(|| ModelError::MissingAngle(bus.id.clone()))?;
        if !angle.is_finite() {
            return Err(ModelError::NonFiniteAngle(bus.id.clone()));
        }
        angle_of.insert(&bus.id, angle);
    }

    // Accumulated outgoing (p, q) per bus.
    let mut outgoing: BTreeMap<&BusId, (f64, f64)> =
        net.buses.iter().map(|b| (&b.id, (0.0, 0.0))).collect();
    let mut angle_violations = Vec::new();

    for line in &net.lines {
        let delta = angle_of[&line.from] - angle_of[&line.to];
        let excess = delta.abs() - line.params.delta_max;
        if excess > tolerance {
            angle_violations.push(AngleViolation {
                from: line.from.clone(),
                to: line.to.clone(),
                excess,
            });
        }
        let forward = line_flow(&line.params, delta);
        let backward = line_flow(&line.params, -delta);
        let out_from = outgoing.get_mut(&line.from).expect("validated endpoint");
        out_from.0 += forward.p;
        out_from.1 += forward.q;
        let out_to = outgoing.get_mut(&line.to).expect("validated endpoint");
        out_to.0 += backward.p;
        out_to.1 += backward.q;
    }

    let mut load_residuals = BTreeMap::new();
    let mut generator_injections = BTreeMap::new();
    let mut balanced = true;
    for bus in &net.buses {
        let (p_out, q_out) = outgoing[&bus.id];
        match bus.kind {
            BusKind::Load { p_demand, q_demand } => {
                let residual = Residual {
                    p: p_out - p_demand,
                    q: q_out - q_demand,
                };
                if residual.p.abs() > tolerance * (1.0 + p_demand.abs())
                    || residual.q.abs() > tolerance * (1.0 + q_demand.abs())
                {
                    balanced = false;
                }
                load_residuals.insert(bus.id.clone(), residual);
            }
            BusKind::Generator => {
                if p_out < -tolerance {
                    balanced = false;
                }
                generator_injections.insert(bus.id.clone(), p_out);
            }
        }
    }

    Ok(FeasibilityReport {
        feasible: balanced && angle_violations.is_empty(),
        load_residuals,
        generator_injections,
        angle_violations,
        tolerance_used: tolerance,
    })
}
