//! Analytic lower bounds and exact fixed-fraction performance under
//! battery-filling Bernoulli arrivals.
//!
//! Under Bernoulli arrivals of size `B` every arrival restarts the system, so
//! the long-run average is a per-cycle average over a geometric cycle length
//! `L` with `E[L] = 1/p`. The fixed fraction policy spends `(1−p)^(t−1) μ` in
//! the `t`-th slot of a cycle, hence
//!
//! ```text
//! d = p Σ_{t≥1} (1−p)^(t−1) f_ε((1−p)^(t−1) μ)
//! ```
//!
//! and the policy sits within `σ_s²/2` of the lower bound `f_ε(μ)`.

use log::warn;

use crate::error::{Error, Result};
use crate::format::sig9;
use crate::policies::min_distortion;
use crate::system::{ArrivalModel, SystemParams};

/// Default truncation tolerance for the renewal series.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

const MAX_SERIES_TERMS: usize = 100_000_000;

fn check_energy(mu: f64) -> Result<()> {
    if mu >= 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("mu", format!("must be finite and >= 0, got {mu}")))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain("p", format!("must lie in [0, 1], got {p}")))
    }
}

/// `f(μ) = σ_s² / (1 + μ/σ_c²)`, the cost-free lower bound.
pub fn lower_bound_no_cost(mu: f64, params: &SystemParams) -> Result<f64> {
    check_energy(mu)?;
    Ok(params.sigma_s_sq / (1.0 + mu / params.sigma_c_sq))
}

/// `f_ε(μ)`, the lower bound with sampling cost. Equals [`lower_bound_no_cost`]
/// when `ε = 0`.
pub fn lower_bound_with_cost(mu: f64, params: &SystemParams) -> Result<f64> {
    check_energy(mu)?;
    Ok(min_distortion(mu, params))
}

/// Exact long-run distortion of the cost-free fixed fraction policy under
/// Bernoulli(`p`) arrivals of size `B`. Ignores `params.sampling_cost`.
pub fn bernoulli_renewal_ffp(p: f64, params: &SystemParams, tail_tol: f64) -> Result<f64> {
    renewal_series(p, params, tail_tol, |budget| {
        params.sigma_s_sq / (1.0 + budget / params.sigma_c_sq)
    })
}

/// As [`bernoulli_renewal_ffp`] but with the cost-aware per-slot optimum
/// `f_ε` in place of `f`.
pub fn bernoulli_renewal_ffp_with_cost(p: f64, params: &SystemParams, tail_tol: f64) -> Result<f64> {
    renewal_series(p, params, tail_tol, |budget| min_distortion(budget, params))
}

fn renewal_series(
    p: f64,
    params: &SystemParams,
    tail_tol: f64,
    per_slot: impl Fn(f64) -> f64,
) -> Result<f64> {
    check_probability(p)?;
    if !(tail_tol > 0.0) {
        return Err(Error::domain("tail_tol", format!("must be > 0, got {tail_tol}")));
    }
    if p == 0.0 {
        warn!("renewal series with p = 0: no energy ever arrives, distortion is sigma_s^2");
        return Ok(params.sigma_s_sq);
    }
    let mu = p * params.battery_capacity;
    let miss = 1.0 - p;
    let mut weight = 1.0;
    let mut sum = 0.0;
    for _ in 0..MAX_SERIES_TERMS {
        sum += p * weight * per_slot(weight * mu);
        weight *= miss;
        // remaining mass is at most σ_s² (1−p)^T, bounded crudely by σ_s² (1−p)^T / p
        if params.sigma_s_sq * weight / p < tail_tol {
            return Ok(sum);
        }
    }
    Err(Error::Convergence {
        iterations: MAX_SERIES_TERMS,
        span: params.sigma_s_sq * weight / p,
    })
}

/// `(σ_s² p(1−p)/(1−(1−p)²), σ_s²/2)`: the Bernoulli gap term of the upper
/// bound and its uniform ceiling. Uses the simplified form `(1−p)/(2−p)`,
/// which is also the `p → 0` limit.
pub fn gap_terms(p: f64, params: &SystemParams) -> Result<(f64, f64)> {
    check_probability(p)?;
    Ok((
        params.sigma_s_sq * (1.0 - p) / (2.0 - p),
        0.5 * params.sigma_s_sq,
    ))
}

/// Bounds for one `(B, ε)` configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub battery_capacity: f64,
    pub sampling_cost: f64,
    pub mu: f64,
    pub q: f64,
    /// `f(μ)` or `f_ε(μ)`.
    pub lower: f64,
    /// Exact fixed-fraction value under Bernoulli(`q`) arrivals of size `B`.
    /// By the Bernoulli-dominance property this also upper-bounds the policy
    /// for any i.i.d. law with the same mean.
    pub renewal_value: f64,
    pub bern_gap_term: f64,
    pub gap_bound: f64,
}

impl BoundReport {
    pub const CSV_HEADER: [&'static str; 8] = [
        "B",
        "epsilon",
        "mu",
        "q",
        "lower_bound",
        "renewal_value",
        "bern_gap_term",
        "gap_bound",
    ];

    pub fn compute(model: &ArrivalModel, params: &SystemParams, tail_tol: f64) -> Result<Self> {
        let mu = model.mean();
        let q = model.fraction();
        let (bern_gap_term, gap_bound) = gap_terms(q, params)?;
        Ok(BoundReport {
            battery_capacity: params.battery_capacity,
            sampling_cost: params.sampling_cost,
            mu,
            q,
            lower: lower_bound_with_cost(mu, params)?,
            renewal_value: bernoulli_renewal_ffp_with_cost(q, params, tail_tol)?,
            bern_gap_term,
            gap_bound,
        })
    }

    /// Checks `lower ≤ renewal ≤ lower + gap_tolerance` and
    /// `bern_gap_term ≤ gap_bound`, with `slack` for rounding.
    pub fn sandwich_holds(&self, gap_tolerance: f64, slack: f64) -> bool {
        self.lower <= self.renewal_value + slack
            && self.renewal_value <= self.lower + gap_tolerance + slack
            && self.bern_gap_term <= self.gap_bound + slack
    }

    pub fn csv_record(&self) -> Vec<String> {
        [
            self.battery_capacity,
            self.sampling_cost,
            self.mu,
            self.q,
            self.lower,
            self.renewal_value,
            self.bern_gap_term,
            self.gap_bound,
        ]
        .into_iter()
        .map(sig9)
        .collect()
    }
}
