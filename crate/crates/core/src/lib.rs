//! Near-optimal online power control for an energy-harvesting sensor that
//! sends Gaussian source samples over a Gaussian channel.
//!
//! The crate provides
//!
//! - the system model: battery dynamics and per-slot distortion ([`system`]),
//! - fixed fraction, greedy and dynamic-programming policies ([`policies`]),
//! - analytic lower bounds and exact renewal evaluation under Bernoulli
//!   arrivals ([`bounds`]),
//! - a deterministic, parallel Monte Carlo engine ([`sim`]).

pub mod bounds;
pub mod error;
pub mod format;
pub mod policies;
pub mod sim;
pub mod system;

pub use bounds::{
    bernoulli_renewal_ffp, bernoulli_renewal_ffp_with_cost, gap_terms, lower_bound_no_cost,
    lower_bound_with_cost, BoundReport, DEFAULT_TAIL_TOL,
};
pub use error::{Error, Result};
pub use policies::{
    dp_optimal_policy, dp_optimal_policy_with, ffp_power, ffp_with_cost, greedy_policy,
    single_slot_optimal, DpOptions, FixedFraction, Greedy, Policy, PolicyTable,
};
pub use sim::{monte_carlo, run_trial, sweep_battery, trial_rng, SimConfig, SimResult, SweepRow, TraceRecord};
pub use system::{
    slot_distortion, slot_distortion_with_cost, step_battery, ArrivalKind, ArrivalModel, BatteryState,
    ContinuousArrival, SlotDecision, SystemParams,
};
