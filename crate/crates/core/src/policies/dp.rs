//! Average-cost dynamic programming on a discretised battery.
//!
//! State is the battery level on a uniform grid `0, Δ, …, KΔ = B`; the action
//! is how much energy to spend, restricted to grid multiples. Stage cost is
//! the single-slot optimum `f_ε(c)`, so the on-time/power split never enters
//! the MDP. After spending `c` from `b` the next level is
//! `min(b − c + E, B)` projected onto the nearest grid point.
//!
//! Solved by relative value iteration with the full-battery state as
//! reference.

use std::io::Write;

use super::{min_distortion, optimal_split, Policy};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::system::{ArrivalModel, SlotDecision, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpOptions {
    /// Number of grid intervals `K`; the grid has `K + 1` levels.
    pub grid_size: usize,
    /// Stop once the span of `T h − h` drops below this.
    pub span_tol: f64,
    pub max_iterations: usize,
    /// Aperiodicity weight `τ ∈ (0, 1]`: iterate `h ← h + τ (T h − h)`.
    /// Only needed for models whose optimal chain is periodic.
    pub damping: f64,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            grid_size: 2000,
            span_tol: 1e-7,
            max_iterations: 100_000,
            damping: 1.0,
        }
    }
}

/// Stationary policy produced by [`dp_optimal_policy`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    step: f64,
    levels: Vec<f64>,
    consumed: Vec<f64>,
    decisions: Vec<SlotDecision>,
    gain: f64,
    gain_bounds: (f64, f64),
    iterations: usize,
    params: SystemParams,
}

impl PolicyTable {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn decisions(&self) -> &[SlotDecision] {
        &self.decisions
    }

    pub fn consumed(&self) -> &[f64] {
        &self.consumed
    }

    pub fn grid_step(&self) -> f64 {
        self.step
    }

    /// Long-run average distortion estimate (midpoint of the final bounds).
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Lower/upper bounds on the optimal gain of the discretised MDP from
    /// the last iterate.
    pub fn gain_bounds(&self) -> (f64, f64) {
        self.gain_bounds
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Writes `battery_level,theta,power,consumed` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["battery_level", "theta", "power", "consumed"])?;
        for ((level, d), c) in self.levels.iter().zip(&self.decisions).zip(&self.consumed) {
            w.write_record([sig9(*level), sig9(d.theta), sig9(d.power), sig9(*c)])?;
        }
        w.flush()?;
        Ok(())
    }

    fn index_below(&self, battery: f64) -> usize {
        let k = self.levels.len() - 1;
        let idx = ((battery + 1e-9 * self.step) / self.step).floor();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(k)
        }
    }
}

impl Policy for PolicyTable {
    /// Looks up the highest grid level not above `battery`, never spending
    /// more than is actually stored.
    fn decide(&self, battery: f64) -> SlotDecision {
        let c = self.consumed[self.index_below(battery)].min(battery.max(0.0));
        optimal_split(c, &self.params)
    }
}

/// Relative value iteration with default options apart from grid size and
/// stopping tolerance.
pub fn dp_optimal_policy(
    model: &ArrivalModel,
    params: &SystemParams,
    grid_size: usize,
    span_tol: f64,
) -> Result<PolicyTable> {
    dp_optimal_policy_with(
        model,
        params,
        &DpOptions {
            grid_size,
            span_tol,
            ..DpOptions::default()
        },
    )
}

pub fn dp_optimal_policy_with(
    model: &ArrivalModel,
    params: &SystemParams,
    opts: &DpOptions,
) -> Result<PolicyTable> {
    params.validate()?;
    let atoms = model.finite_support().ok_or_else(|| {
        Error::UnsupportedModel("dynamic programming needs an arrival law with finite support".into())
    })?;
    if (model.capacity() - params.battery_capacity).abs() > 1e-12 * params.battery_capacity {
        return Err(Error::domain(
            "battery_capacity",
            format!(
                "arrival model is built for B = {} but params have B = {}",
                model.capacity(),
                params.battery_capacity
            ),
        ));
    }
    if opts.grid_size < 2 {
        return Err(Error::domain("grid_size", format!("need at least 2 intervals, got {}", opts.grid_size)));
    }
    if !(opts.span_tol > 0.0) {
        return Err(Error::domain("span_tol", format!("must be > 0, got {}", opts.span_tol)));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::domain("damping", format!("must lie in (0, 1], got {}", opts.damping)));
    }

    let k = opts.grid_size;
    let cap = params.battery_capacity;
    let step = cap / k as f64;
    let levels: Vec<f64> = (0..=k).map(|i| i as f64 * step).collect();
    let cost: Vec<f64> = levels.iter().map(|&c| min_distortion(c, params)).collect();

    // next[a][r]: grid index reached from remaining charge r·Δ under atom a
    let transitions: Vec<(f64, Vec<usize>)> = atoms
        .iter()
        .filter(|(_, prob)| *prob > 0.0)
        .map(|&(arrival, prob)| {
            let next = (0..=k)
                .map(|r| {
                    let level = (r as f64 * step + arrival).min(cap);
                    ((level / step).round() as usize).min(k)
                })
                .collect();
            (prob, next)
        })
        .collect();

    let mut h = vec![0.0; k + 1];
    let mut continuation = vec![0.0; k + 1];
    let mut updated = vec![0.0; k + 1];
    let mut choice = vec![0usize; k + 1];
    let mut span = f64::INFINITY;

    for iteration in 1..=opts.max_iterations {
        for (r, w) in continuation.iter_mut().enumerate() {
            *w = transitions.iter().map(|(prob, next)| prob * h[next[r]]).sum();
        }
        for i in 0..=k {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            // ascending spend with strict improvement: ties go to the smallest spend
            for j in 0..=i {
                let v = cost[j] + continuation[i - j];
                if v < best {
                    best = v;
                    arg = j;
                }
            }
            updated[i] = best;
            choice[i] = arg;
        }

        let (lo, hi) = updated
            .iter()
            .zip(&h)
            .map(|(t, old)| t - old)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        span = hi - lo;

        if span < opts.span_tol {
            let consumed: Vec<f64> = choice.iter().map(|&j| levels[j]).collect();
            let decisions = consumed.iter().map(|&c| optimal_split(c, params)).collect();
            return Ok(PolicyTable {
                step,
                levels,
                consumed,
                decisions,
                gain: 0.5 * (lo + hi),
                gain_bounds: (lo, hi),
                iterations: iteration,
                params: *params,
            });
        }

        let tau = opts.damping;
        let reference = h[k] + tau * (updated[k] - h[k]);
        for (old, t) in h.iter_mut().zip(&updated) {
            *old = *old + tau * (t - *old) - reference;
        }
    }

    Err(Error::Convergence {
        iterations: opts.max_iterations,
        span,
    })
}
