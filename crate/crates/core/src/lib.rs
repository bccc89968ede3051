//! AC power-flow feasibility on star and tree networks with unit voltage
//! magnitudes, plus a subset-sum encoder that produces feasibility instances
//! whose witnesses are exactly the solving subsets.
//!
//! The crate is organized around four building blocks:
//!
//! - [`power_model`] — the steady-state flow equations, capacity/angle-bound
//!   conversions, network validation, and the feasibility checker.
//! - [`reduction`] — the subset-sum → AC-feasibility encoding, witness
//!   construction and decoding, and executable forms of the two flow lemmas
//!   the encoding relies on.
//! - [`solvers`] — exact solving of reduction-form instances (pseudo-polynomial
//!   subset-sum DP plus a brute-force oracle) and a one-sided discretized
//!   search for general star instances.
//! - [`sweeps`] — seeded, reproducible property sweeps over the numerical
//!   identities ([`rng`] documents the generator).
//!
//! All operations are pure functions over immutable values; nothing in this
//! crate holds hidden state, so every type is safe to share across threads.

pub mod power_model;
pub mod reduction;
pub mod rng;
pub mod solvers;
pub mod sweeps;

pub use power_model::{
    apparent_power_squared, capacity_from_delta_max, check_feasibility, delta_max_from_capacity,
    line_flow, validate_network, Bus, BusId, BusKind, FeasibilityReport, Line, LineFlow,
    LineParams, ModelError, NetworkInstance, PhaseSolution, Violation, DEFAULT_TOLERANCE,
};
pub use reduction::{
    decode_witness, encode_subset_sum, lemma1_gap, lemma2_check, lemma2_condition_holds,
    receiving_end_extremes, receiving_end_flows, recognize_reduction_form, witness_from_subset,
    ExtremeFlows, ReductionError, ReductionForm, ReductionParams, SubsetSumInstance,
    DEFAULT_ANGLE_TOLERANCE,
};
pub use solvers::{
    grid_feasibility_search, grid_feasibility_search_with_limit, solve_reduction_instance,
    solve_reduction_instance_brute, subset_sum_brute, subset_sum_dp, Method, SolveOutcome,
    SolveStats, SolverError, Verdict, DEFAULT_GRID_STATE_LIMIT,
};
