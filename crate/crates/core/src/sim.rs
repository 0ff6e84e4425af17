//! Monte Carlo evaluation of battery-feedback policies.
//!
//! Slot 1 starts with a full battery (`b₁ = B`, the first harvest is
//! absorbed). In every later slot the harvest `E_t` lands first, then the
//! policy sees `b_t` and decides. Each trial draws from its own ChaCha stream
//! `(seed, trial index)`, so results do not depend on how trials are
//! scheduled across threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::bounds::{BoundReport, DEFAULT_TAIL_TOL};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::policies::Policy;
use crate::system::{slot_distortion_with_cost, step_battery, ArrivalModel, BatteryState, SlotDecision, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Slots per trial.
    pub horizon: u64,
    pub trials: u32,
    pub seed: u64,
    /// Keep the per-slot trace of the first trial.
    pub record_trace: bool,
    /// Leading slots left out of the average.
    pub burn_in: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 100_000,
            trials: 50,
            seed: 0,
            record_trace: false,
            burn_in: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::domain("horizon", "must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials", "must be >= 1"));
        }
        if self.horizon <= self.burn_in {
            return Err(Error::domain(
                "burn_in",
                format!("must be below the horizon {}, got {}", self.horizon, self.burn_in),
            ));
        }
        Ok(())
    }
}

/// One simulated slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub slot: u64,
    /// Harvest at the start of the slot (0 in slot 1, where it is absorbed into `b₁ = B`).
    pub arrival: f64,
    pub battery_before: f64,
    pub decision: SlotDecision,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub mean_distortion: f64,
    pub trace: Option<Vec<TraceRecord>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub mean_distortion: f64,
    /// Standard error of the mean across trials (0 for a single trial).
    pub std_error: f64,
    pub ci95_halfwidth: f64,
    pub per_trial_means: Vec<f64>,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Random stream for trial `index` under master `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates one trajectory of `horizon` slots and returns its time-average
/// distortion (over slots after `burn_in`).
pub fn run_trial<P, R>(
    policy: &P,
    model: &ArrivalModel,
    params: &SystemParams,
    horizon: u64,
    burn_in: u64,
    record_trace: bool,
    rng: &mut R,
) -> Result<TrialOutcome>
where
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    if horizon <= burn_in {
        return Err(Error::domain("horizon", format!("must exceed burn_in {burn_in}, got {horizon}")));
    }
    let sampler = model.sampler();
    let mut battery = BatteryState::full(params);
    let mut consumed_prev = 0.0;
    let mut total = 0.0;
    let mut trace = record_trace.then(|| Vec::with_capacity(horizon.min(1 << 24) as usize));

    for slot in 1..=horizon {
        let arrival = if slot == 1 {
            0.0
        } else {
            let e = sampler.sample(rng);
            battery = step_battery(battery, consumed_prev, e, params).map_err(|e| at_slot(e, slot - 1))?;
            e
        };
        let level = battery.level();
        let decision = policy.decide(level);
        let distortion = slot_distortion_with_cost(decision, params)?;
        consumed_prev = decision.consumed(params);
        if slot > burn_in {
            total += distortion;
        }
        if let Some(trace) = trace.as_mut() {
            trace.push(TraceRecord {
                slot,
                arrival,
                battery_before: level,
                decision,
                distortion,
            });
        }
    }
    // the last decision must be feasible too
    step_battery(battery, consumed_prev, 0.0, params).map_err(|e| at_slot(e, horizon))?;

    Ok(TrialOutcome {
        mean_distortion: total / (horizon - burn_in) as f64,
        trace,
    })
}

fn at_slot(err: Error, slot: u64) -> Error {
    match err {
        Error::EnergyCausality {
            consumed, available, ..
        } => Error::EnergyCausality {
            slot: Some(slot),
            consumed,
            available,
        },
        other => other,
    }
}

/// Runs `cfg.trials` independent trials (in parallel on the current rayon
/// pool) and aggregates them in trial order.
pub fn monte_carlo<P: Policy + ?Sized>(
    policy: &P,
    model: &ArrivalModel,
    params: &SystemParams,
    cfg: &SimConfig,
) -> Result<SimResult> {
    cfg.validate()?;
    params.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, u64::from(i));
            run_trial(
                policy,
                model,
                params,
                cfg.horizon,
                cfg.burn_in,
                cfg.record_trace && i == 0,
                &mut rng,
            )
        })
        .collect::<Result<_>>()?;

    let mut trace = None;
    let mut per_trial_means = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        if outcome.trace.is_some() {
            trace = outcome.trace;
        }
        per_trial_means.push(outcome.mean_distortion);
    }
    let (mean_distortion, std_error) = mean_and_std_error(&per_trial_means);
    Ok(SimResult {
        mean_distortion,
        std_error,
        ci95_halfwidth: 1.96 * std_error,
        per_trial_means,
        trace,
    })
}

fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One battery size of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub battery_capacity: f64,
    pub result: SimResult,
    pub bounds: BoundReport,
}

/// Simulates a policy over several battery sizes. Both the arrival law and the
/// policy are rebuilt for each `B`, so `q = μ/B` is re-derived per row. All
/// rows share `cfg.seed`.
pub fn sweep_battery<PF, MF, P>(
    policy_factory: PF,
    model_factory: MF,
    params_base: &SystemParams,
    battery_sizes: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<SweepRow>>
where
    PF: Fn(&ArrivalModel, &SystemParams) -> Result<P>,
    MF: Fn(f64) -> Result<ArrivalModel>,
    P: Policy,
{
    if battery_sizes.is_empty() {
        return Err(Error::domain("battery sizes", "empty sweep"));
    }
    if battery_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("battery sizes", "must be strictly ascending"));
    }
    battery_sizes
        .iter()
        .map(|&cap| {
            let params = params_base.with_capacity(cap)?;
            let model = model_factory(cap)?;
            let policy = policy_factory(&model, &params)?;
            let result = monte_carlo(&policy, &model, &params, cfg)?;
            let bounds = BoundReport::compute(&model, &params, DEFAULT_TAIL_TOL)?;
            Ok(SweepRow {
                battery_capacity: cap,
                result,
                bounds,
            })
        })
        .collect()
}

/// Writes `slot,arrival,battery_before,theta,power,distortion` rows.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "arrival", "battery_before", "theta", "power", "distortion"])?;
    for r in trace {
        w.write_record([
            r.slot.to_string(),
            sig9(r.arrival),
            sig9(r.battery_before),
            sig9(r.decision.theta),
            sig9(r.decision.power),
            sig9(r.distortion),
        ])?;
    }
    w.flush()?;
    Ok(())
}
