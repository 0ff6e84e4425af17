//! `verify`: a one-shot run of the invariant suites at sizes small enough for
//! a smoke test. Each suite reports the worst observed value against what it
//! is allowed to be.

use std::io::Write;

use ehdist_core::{
    bernoulli_renewal_ffp_with_cost, dp_optimal_policy, gap_terms, lower_bound_with_cost, monte_carlo,
    single_slot_optimal, slot_distortion, step_battery, ArrivalModel, BatteryState, FixedFraction, Policy,
    SimConfig, SystemParams,
};
use rand::{Rng, SeedableRng};

use crate::commands::{CliError, CliResult};
use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub observed: f64,
    pub allowed: f64,
    /// How `observed` is compared with `allowed`.
    pub relation: &'static str,
}

impl SuiteReport {
    fn at_most(name: &'static str, observed: f64, allowed: f64) -> Self {
        SuiteReport {
            name,
            passed: observed <= allowed,
            observed,
            allowed,
            relation: "<=",
        }
    }

    fn at_least(name: &'static str, observed: f64, allowed: f64) -> Self {
        SuiteReport {
            name,
            passed: observed >= allowed,
            observed,
            allowed,
            relation: ">=",
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<28} observed={:.6e} {} allowed={:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.relation,
            self.allowed
        )
    }
}

fn rng() -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed)
}

/// Worst violation of `0 ≤ b' ≤ B` over random feasible steps.
fn battery_range(params: &SystemParams) -> CliResult<SuiteReport> {
    let mut rng = rng();
    let cap = params.battery_capacity;
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let b = BatteryState::new(rng.random_range(0.0..=cap), params)?;
        let used = rng.random_range(0.0..=1.0) * b.level();
        let next = step_battery(b, used, rng.random_range(0.0..=cap), params)?.level();
        worst = worst.max(-next).max(next - cap);
    }
    Ok(SuiteReport::at_most("battery_range", worst, 0.0))
}

/// Largest violation of strict decrease / midpoint convexity of the slot distortion.
fn distortion_shape(params: &SystemParams) -> CliResult<SuiteReport> {
    let mut rng = rng();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let g1 = rng.random_range(0.0..50.0);
        let g2 = g1 + rng.random_range(1e-6..50.0);
        let (d1, d2) = (slot_distortion(g1, params)?, slot_distortion(g2, params)?);
        let dm = slot_distortion(0.5 * (g1 + g2), params)?;
        worst = worst.max(d2 - d1).max(dm - 0.5 * (d1 + d2));
    }
    Ok(SuiteReport::at_most("distortion_shape", worst, 1e-12))
}

fn cost_split_identity(params: &SystemParams) -> CliResult<SuiteReport> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let eps = rng.random_range(1e-3..5.0);
        let p = SystemParams::new(params.sigma_s_sq, params.sigma_c_sq, 10.0, eps)?;
        let budget = rng.random_range(0.0..10.0);
        let (d, _) = single_slot_optimal(budget, &p)?;
        worst = worst.max((d.consumed(&p) - budget).abs() / budget.max(1.0));
    }
    Ok(SuiteReport::at_most("cost_split_identity", worst, 1e-12))
}

/// Closed-form single-slot optimum against a θ grid of step 1e-5.
fn single_slot_oracle(params: &SystemParams) -> CliResult<SuiteReport> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    let s = params.sigma_s_sq;
    for _ in 0..20 {
        let eps = rng.random_range(0.01..5.0);
        let c = rng.random_range(0.1..5.0);
        let budget = rng.random_range(0.01..10.0);
        let p = SystemParams::new(s, c, 10.0, eps)?;
        let (_, value) = single_slot_optimal(budget, &p)?;
        let hi = (budget / eps).min(1.0);
        let steps = (hi / 1e-5).floor() as usize;
        let oracle = (1..=steps)
            .map(|k| k as f64 * 1e-5)
            .chain(std::iter::once(hi))
            .map(|theta| {
                let gbar = (budget - theta * eps).max(0.0);
                (1.0 - theta) * s + theta * s / (1.0 + gbar / (theta * c))
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((value - oracle).abs());
    }
    Ok(SuiteReport::at_most("single_slot_oracle", worst, 1e-6))
}

/// First differences of `f` and `f_ε` on a μ grid must be ≤ 0 and second
/// differences ≥ −1e-9.
fn lower_bound_shape(params: &SystemParams) -> CliResult<Vec<SuiteReport>> {
    let mut rise = f64::NEG_INFINITY;
    let mut concavity = f64::NEG_INFINITY;
    for eps in [0.0, 0.1, 1.0, 1.5, 10.0] {
        let p = params.with_sampling_cost(eps)?;
        let values: Vec<f64> = (0..1000)
            .map(|i| lower_bound_with_cost(i as f64 * 0.01, &p))
            .collect::<Result<_, _>>()?;
        for w in values.windows(2) {
            rise = rise.max(w[1] - w[0]);
        }
        for w in values.windows(3) {
            concavity = concavity.max(-(w[2] - 2.0 * w[1] + w[0]));
        }
    }
    Ok(vec![
        SuiteReport::at_most("lower_bound_decreasing", rise, 0.0),
        SuiteReport::at_most("lower_bound_convex", concavity, 1e-9),
    ])
}

fn relaxation_inequality() -> SuiteReport {
    let mut rng = rng();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let x: f64 = rng.random_range(0.0..1e3);
        worst = worst.max(1.0 / (1.0 + lambda * x) - 1.0 / (1.0 + x) - (1.0 - lambda));
    }
    SuiteReport::at_most("relaxation_inequality", worst, 1e-12)
}

fn gap_term_ceiling() -> CliResult<SuiteReport> {
    let unit = SystemParams::unit(1.0)?;
    let mut worst: f64 = 0.0;
    for i in 0..=1000 {
        worst = worst.max(gap_terms(i as f64 / 1000.0, &unit)?.0);
    }
    Ok(SuiteReport::at_most("gap_term_ceiling", worst, 0.5))
}

/// Largest `renewal − lower` over the battery sizes and both cost settings,
/// against the configured gap tolerance.
fn bound_sandwich(cfg: &ExperimentConfig) -> CliResult<Vec<SuiteReport>> {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_order = f64::INFINITY;
    let mut eps_values = vec![0.0, cfg.params.sampling_cost];
    eps_values.dedup();
    for capacity in cfg.battery_sizes() {
        let q = cfg.arrival.build(capacity)?.fraction();
        for &eps in &eps_values {
            let p = cfg.params.with_capacity(capacity)?.with_sampling_cost(eps)?;
            let lower = lower_bound_with_cost(q * capacity, &p)?;
            let renewal = bernoulli_renewal_ffp_with_cost(q, &p, cfg.tail_tol)?;
            worst_gap = worst_gap.max(renewal - lower);
            worst_order = worst_order.min(renewal - lower);
        }
    }
    Ok(vec![
        SuiteReport::at_least("sandwich_lower", worst_order, -1e-12),
        SuiteReport::at_most("sandwich_gap", worst_gap, cfg.gap_tolerance()),
    ])
}

/// `|MC − renewal|` in standard errors for the fixed fraction policy under
/// Bernoulli(q) arrivals at the configured `B`.
fn renewal_vs_simulation(cfg: &ExperimentConfig) -> CliResult<SuiteReport> {
    let capacity = cfg.params.battery_capacity;
    let q = cfg.arrival.build(capacity)?.fraction();
    let model = ArrivalModel::bernoulli(q, capacity)?;
    let params = cfg.params;
    let policy = FixedFraction::new(q, params)?;
    let sim = SimConfig {
        horizon: cfg.sim.horizon.min(100_000),
        trials: 10,
        seed: cfg.sim.seed,
        record_trace: false,
        burn_in: 0,
    };
    let mc = monte_carlo(&policy, &model, &params, &sim)?;
    let exact = bernoulli_renewal_ffp_with_cost(q, &params, cfg.tail_tol)?;
    let z = if mc.std_error > 0.0 {
        (mc.mean_distortion - exact).abs() / mc.std_error
    } else {
        (mc.mean_distortion - exact).abs() * 1e9
    };
    Ok(SuiteReport::at_most("renewal_vs_simulation", z, 3.0))
}

/// Number of regime switches (θ = 1 with shrinking power, then pinned power
/// with shrinking θ) after a single full charge; exactly one is expected.
fn single_arrival_structure(cfg: &ExperimentConfig) -> CliResult<SuiteReport> {
    let eps = if cfg.params.sampling_cost > 0.0 { cfg.params.sampling_cost } else { 1.5 };
    let p = SystemParams::new(cfg.params.sigma_s_sq, cfg.params.sigma_c_sq, 20.0, eps)?;
    let policy = FixedFraction::new(0.3, p)?;
    let pinned = (eps * p.sigma_c_sq).sqrt();
    let mut b = BatteryState::full(&p);
    let mut decisions = Vec::new();
    for _ in 0..60 {
        let d = policy.decide(b.level());
        decisions.push(d);
        b = step_battery(b, d.consumed(&p), 0.0, &p)?;
    }
    let mut switches = 0.0;
    let mut broken = false;
    for w in decisions.windows(2) {
        let in_power_phase = w[0].theta == 1.0;
        if in_power_phase && w[1].theta < 1.0 {
            switches += 1.0;
        }
        let ok = if in_power_phase {
            w[1].power < w[0].power || w[1].theta < 1.0
        } else {
            w[0].power == pinned && w[1].power == pinned && w[1].theta < w[0].theta
        };
        broken |= !ok;
    }
    Ok(SuiteReport {
        name: "single_arrival_structure",
        passed: !broken && switches == 1.0,
        observed: if broken { f64::NAN } else { switches },
        allowed: 1.0,
        relation: "==",
    })
}

/// DP gain must sit between the lower bound and the fixed fraction renewal value.
fn dp_sandwich(cfg: &ExperimentConfig) -> CliResult<Vec<SuiteReport>> {
    let capacity = cfg.params.battery_capacity;
    let q = cfg.arrival.build(capacity)?.fraction();
    let model = ArrivalModel::bernoulli(q, capacity)?;
    let table = dp_optimal_policy(&model, &cfg.params, 200, 1e-7)?;
    let lower = lower_bound_with_cost(q * capacity, &cfg.params)?;
    let ffp = bernoulli_renewal_ffp_with_cost(q, &cfg.params, cfg.tail_tol)?;
    Ok(vec![
        SuiteReport::at_least("dp_above_lower_bound", table.gain() - lower, -1e-3),
        SuiteReport::at_most("dp_below_ffp", table.gain() - ffp, 1e-3),
    ])
}

/// Same seed on one thread and on the default pool must agree bit for bit.
fn determinism(cfg: &ExperimentConfig) -> CliResult<SuiteReport> {
    let capacity = cfg.params.battery_capacity;
    let model = cfg.arrival.build(capacity)?;
    let policy = FixedFraction::for_model(&model, cfg.params)?;
    let sim = SimConfig {
        horizon: 5_000,
        trials: 8,
        seed: cfg.sim.seed,
        record_trace: false,
        burn_in: 0,
    };
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?
        .install(|| monte_carlo(&policy, &model, &cfg.params, &sim))?;
    let parallel = monte_carlo(&policy, &model, &cfg.params, &sim)?;
    let differing = serial
        .per_trial_means
        .iter()
        .zip(&parallel.per_trial_means)
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();
    Ok(SuiteReport::at_most("determinism", differing as f64, 0.0))
}

/// Runs every suite.
pub fn run_suites(cfg: &ExperimentConfig) -> CliResult<Vec<SuiteReport>> {
    cfg.validate()?;
    let params = cfg.params;
    let mut reports = vec![
        battery_range(&params)?,
        distortion_shape(&params)?,
        cost_split_identity(&params)?,
        single_slot_oracle(&params)?,
    ];
    reports.extend(lower_bound_shape(&params)?);
    reports.push(relaxation_inequality());
    reports.push(gap_term_ceiling()?);
    reports.extend(bound_sandwich(cfg)?);
    reports.push(renewal_vs_simulation(cfg)?);
    reports.push(single_arrival_structure(cfg)?);
    reports.extend(dp_sandwich(cfg)?);
    reports.push(determinism(cfg)?);
    Ok(reports)
}

/// `verify`: writes one line per suite; fails with exit code 1 if any suite fails.
pub fn cmd_verify<W: Write>(cfg: &ExperimentConfig, mut out: W) -> CliResult<Vec<SuiteReport>> {
    let reports = run_suites(cfg)?;
    for r in &reports {
        writeln!(out, "{}", r.line())?;
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    writeln!(out, "{} of {} suites passed", reports.len() - failed.len(), reports.len())?;
    out.flush()?;
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Failed(format!("verification failed: {}", failed.join(", "))))
    }
}
