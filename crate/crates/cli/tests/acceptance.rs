//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p ehdist-cli --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use ehdist_cli::{cmd_simulate, cmd_sweep, sweep_points, ExperimentConfig, PolicyKind, SweepPoint};
use ehdist_core::{
    bernoulli_renewal_ffp, bernoulli_renewal_ffp_with_cost, gap_terms, lower_bound_no_cost,
    lower_bound_with_cost, monte_carlo, single_slot_optimal, step_battery, ArrivalModel, BatteryState,
    FixedFraction, Policy, SimConfig, SystemParams,
};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unit(cap: f64, eps: f64) -> SystemParams {
    SystemParams::new(1.0, 1.0, cap, eps).unwrap()
}

fn fig1_points() -> Vec<SweepPoint> {
    // preset: σ_s² = σ_c² = 1, Bernoulli p = 0.5, ε = 0, 15 log-spaced B in
    // [0.25, 10], horizon 1e5, 50 trials, DP grid 2000, span 1e-7
    let cfg = ExperimentConfig::preset("fig1").unwrap();
    assert_eq!(cfg.dp_grid_size, 2000);
    assert_eq!(cfg.dp_span_tol, 1e-7);
    sweep_points(&cfg).map_err(|e| e.to_string()).unwrap()
}

/// Lower-bound sandwich on the `fig1` sweep.
fn ac1(points: &[SweepPoint]) -> Outcome {
    let mut max_gap = f64::NEG_INFINITY;
    for p in points {
        let mean = p.ffp.mean_distortion;
        if !(p.lower_bound <= mean && mean <= p.lower_bound + 0.5) {
            return Err(format!(
                "B={}: FFP {mean} outside [{}, {}]",
                p.battery_capacity,
                p.lower_bound,
                p.lower_bound + 0.5
            ));
        }
        max_gap = max_gap.max(p.gap_ffp_lower());
    }
    check(max_gap <= 0.16, format!("max FFP - f(mu) = {max_gap:.4} (allowed 0.16)"))
}

/// FFP within 0.04 of the DP optimum; DP not below the lower bound.
fn ac2(points: &[SweepPoint]) -> Outcome {
    let mut max_gap = f64::NEG_INFINITY;
    for p in points {
        let gain = p.dp_gain.ok_or("dp gain missing")?;
        if gain < p.lower_bound - 1e-3 {
            return Err(format!("B={}: DP gain {gain} below f(mu) {} - 1e-3", p.battery_capacity, p.lower_bound));
        }
        max_gap = max_gap.max(p.gap_ffp_dp().unwrap());
    }
    check(max_gap <= 0.04, format!("max FFP - DP = {max_gap:.4} (allowed 0.04)"))
}

/// Lower-bound sandwich on the `fig2` sweep, with sampling cost.
fn ac3() -> Outcome {
    let mut cfg = ExperimentConfig::preset("fig2").unwrap();
    cfg.policies = vec![PolicyKind::Ffp];
    let points = sweep_points(&cfg).map_err(|e| e.to_string())?;
    let mut max_gap = f64::NEG_INFINITY;
    for p in &points {
        let mean = p.ffp.mean_distortion;
        if !(p.lower_bound <= mean && mean <= p.lower_bound + 0.5) {
            return Err(format!("B={}: FFP {mean} outside [f_eps, f_eps + 0.5]", p.battery_capacity));
        }
        max_gap = max_gap.max(p.gap_ffp_lower());
    }
    check(max_gap <= 0.23, format!("max FFP - f_eps(mu) = {max_gap:.4} (allowed 0.23)"))
}

/// Renewal series against Monte Carlo, 3 standard errors.
fn ac4() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [0.1, 0.5, 0.9] {
        for eps in [0.0, 1.5] {
            let params = unit(2.0, eps);
            let model = ArrivalModel::bernoulli(p, 2.0).unwrap();
            let policy = FixedFraction::for_model(&model, params).unwrap();
            let cfg = SimConfig {
                horizon: 1_000_000,
                trials: 20,
                seed: 2017,
                ..SimConfig::default()
            };
            let mc = monte_carlo(&policy, &model, &params, &cfg).map_err(|e| e.to_string())?;
            let series = bernoulli_renewal_ffp_with_cost(p, &params, 1e-12).unwrap();
            let z = (mc.mean_distortion - series).abs() / mc.std_error;
            if z > 3.0 {
                return Err(format!("p={p} eps={eps}: |{} - {series}| = {z:.2} SE", mc.mean_distortion));
            }
            worst = worst.max(z);
        }
    }
    Ok(format!("worst deviation {worst:.2} SE over 6 configurations (allowed 3)"))
}

/// Brute-force θ grid with step 1e-5 on the substituted program.
fn grid_oracle(budget: f64, params: &SystemParams) -> f64 {
    let s = params.sigma_s_sq;
    let eps = params.sampling_cost;
    let hi = (budget / eps).min(1.0);
    let n = (hi / 1e-5).floor() as usize;
    (1..=n)
        .map(|k| k as f64 * 1e-5)
        .chain(std::iter::once(hi))
        .map(|theta| {
            let gbar = (budget - theta * eps).max(0.0);
            (1.0 - theta) * s + theta * s / (1.0 + gbar / (theta * params.sigma_c_sq))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form split against the grid oracle on 100 random triples.
fn ac5() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let (mut worst_value, mut worst_identity): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let budget = rng.random_range(0.01..10.0);
        let eps = rng.random_range(0.01..5.0);
        let noise = rng.random_range(0.1..5.0);
        let params = SystemParams::new(1.0, noise, 10.0, eps).unwrap();
        let (d, value) = single_slot_optimal(budget, &params).unwrap();
        worst_value = worst_value.max((value - grid_oracle(budget, &params)).abs());
        worst_identity = worst_identity.max((d.theta * (eps + d.power) - budget).abs());
    }
    check(
        worst_value <= 1e-6 && worst_identity <= 1e-12,
        format!("value error {worst_value:.2e} (allowed 1e-6), budget identity {worst_identity:.2e} (allowed 1e-12)"),
    )
}

/// Shape of f and f_ε, the relaxation inequality and the gap ceiling.
fn ac6() -> Outcome {
    let grid: Vec<f64> = (0..1000).map(|i| i as f64 * 0.01).collect();
    for eps in [0.0, 0.1, 1.0, 1.5, 10.0] {
        let params = unit(10.0, eps);
        let values: Vec<f64> = grid
            .iter()
            .map(|&mu| {
                if eps == 0.0 {
                    lower_bound_no_cost(mu, &params).unwrap()
                } else {
                    lower_bound_with_cost(mu, &params).unwrap()
                }
            })
            .collect();
        if values.windows(2).any(|w| w[1] - w[0] > 0.0) {
            return Err(format!("eps={eps}: lower bound increases"));
        }
        if values.windows(3).any(|w| w[2] - 2.0 * w[1] + w[0] < -1e-9) {
            return Err(format!("eps={eps}: lower bound not convex"));
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let x: f64 = rng.random_range(0.0..1e3);
        if 1.0 / (1.0 + lambda * x) > 1.0 / (1.0 + x) + (1.0 - lambda) + 1e-12 {
            return Err(format!("relaxation inequality fails at lambda={lambda}, x={x}"));
        }
    }
    let params = unit(1.0, 0.0);
    let worst = (0..=1000)
        .map(|i| gap_terms(i as f64 / 1000.0, &params).unwrap().0)
        .fold(f64::NEG_INFINITY, f64::max);
    check(
        worst <= 0.5,
        format!("f, f_eps convex and decreasing on 1e3-point grids; 1e4 inequality pairs; max (1-p)/(2-p) = {worst}"),
    )
}

/// Bernoulli dominance for arrivals uniform on {0, B/2, B}.
fn ac7() -> Outcome {
    let params = unit(2.0, 0.0);
    let model = ArrivalModel::finite(vec![(0.0, 1.0 / 3.0), (1.0, 1.0 / 3.0), (2.0, 1.0 / 3.0)], 2.0).unwrap();
    let q = model.fraction();
    let policy = FixedFraction::for_model(&model, params).unwrap();
    let cfg = SimConfig {
        horizon: 100_000,
        trials: 20,
        seed: 7,
        ..SimConfig::default()
    };
    let mc = monte_carlo(&policy, &model, &params, &cfg).map_err(|e| e.to_string())?;
    let bern = bernoulli_renewal_ffp(q, &params, 1e-12).unwrap();
    check(
        mc.mean_distortion <= bern + 3.0 * mc.std_error,
        format!("q={q:.3}: FFP {:.5} <= Bernoulli renewal {bern:.5} + 3 SE ({:.1e})", mc.mean_distortion, mc.std_error),
    )
}

/// One full charge, then no arrivals: exactly one switch from the
/// shrinking-power regime to the shrinking-on-time regime.
fn ac8() -> Outcome {
    let params = SystemParams::new(1.0, 1.0, 20.0, 1.5).unwrap();
    let policy = FixedFraction::new(0.3, params).unwrap();
    let pinned = (1.5f64).sqrt();
    let mut b = BatteryState::full(&params);
    let mut decisions = Vec::new();
    for _ in 0..60 {
        let d = policy.decide(b.level());
        decisions.push(d);
        b = step_battery(b, d.consumed(&params), 0.0, &params).unwrap();
    }
    let switch = decisions.iter().position(|d| d.theta < 1.0).ok_or("on-time never shrinks")?;
    if switch == 0 {
        return Err("no power-decreasing phase".into());
    }
    let power_phase = decisions[..switch].windows(2).all(|w| w[0].theta == 1.0 && w[1].power < w[0].power);
    let time_phase = decisions[switch..]
        .windows(2)
        .all(|w| w[0].power == pinned && w[1].power == pinned && w[1].theta < w[0].theta);
    let switches = decisions.windows(2).filter(|w| (w[0].theta == 1.0) != (w[1].theta == 1.0)).count();
    check(
        power_phase && time_phase && switches == 1,
        format!("power shrinks for {switch} slots at full on-time, then on-time shrinks at g = sqrt(eps); {switches} switch"),
    )
}

fn render(cfg: &ExperimentConfig, sweep: bool) -> Vec<u8> {
    let mut buf = Vec::new();
    if sweep {
        cmd_sweep(cfg, &mut buf).unwrap();
    } else {
        cmd_simulate(cfg, &mut buf).unwrap();
    }
    buf
}

/// Byte-identical CSV across repeated runs and thread counts.
fn ac9() -> Outcome {
    let mut cfg = ExperimentConfig::preset("fig2").unwrap();
    cfg.sim.horizon = 20_000;
    cfg.sim.trials = 12;
    cfg.sim.seed = 99;
    cfg.dp_grid_size = 200;
    cfg.policies = vec![PolicyKind::Ffp, PolicyKind::Greedy, PolicyKind::Dp];
    for sweep in [false, true] {
        cfg.threads = 1;
        let serial = render(&cfg, sweep);
        let again = render(&cfg, sweep);
        cfg.threads = 4;
        let parallel = render(&cfg, sweep);
        cfg.threads = 0;
        let default_pool = render(&cfg, sweep);
        if serial != again || serial != parallel || serial != default_pool {
            return Err(format!("{} output differs between runs", if sweep { "sweep" } else { "simulate" }));
        }
    }
    Ok("simulate and sweep CSV identical across reruns and 1/4/all threads".into())
}

fn main() -> ExitCode {
    let start = Instant::now();
    let fig1 = fig1_points();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("AC1 FFP gap to lower bound, no sampling cost", Box::new(|| ac1(&fig1))),
        ("AC2 FFP vs DP optimality gap", Box::new(|| ac2(&fig1))),
        ("AC3 FFP gap to lower bound, with sampling cost", Box::new(ac3)),
        ("AC4 renewal series vs Monte Carlo", Box::new(ac4)),
        ("AC5 closed-form single-slot optimum", Box::new(ac5)),
        ("AC6 convexity and monotonicity suites", Box::new(ac6)),
        ("AC7 Bernoulli dominance ordering", Box::new(ac7)),
        ("AC8 single-arrival regime structure", Box::new(ac8)),
        ("AC9 determinism of CSV outputs", Box::new(ac9)),
    ];
    let mut failures = 0;
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
