//! Subcommand implementations. Each writes a CSV table to `out`.

use std::fmt;
use std::io::Write;

use ehdist_core::format::sig9;
use ehdist_core::sim::write_trace_csv;
use ehdist_core::{
    dp_optimal_policy, lower_bound_with_cost, monte_carlo, sweep_battery, BoundReport, FixedFraction, Greedy,
    Policy, PolicyTable, SimResult, SystemParams,
};

use crate::config::{ConfigError, ExperimentConfig, PolicyKind};

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Invalid(String),
    /// Runtime or verification failure: exit code 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<ehdist_core::Error> for CliError {
    fn from(e: ehdist_core::Error) -> Self {
        use ehdist_core::Error::*;
        match e {
            Domain { .. } | UnsupportedModel(_) | DegenerateCost(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Failed(format!("csv error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Runs `f` on a pool with `cfg.threads` workers (0: the global pool).
pub fn with_threads<T: Send>(cfg: &ExperimentConfig, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    if cfg.threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Failed(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn params_for(cfg: &ExperimentConfig, capacity: f64) -> CliResult<SystemParams> {
    Ok(cfg.params.with_capacity(capacity)?)
}

fn require_finite_support(cfg: &ExperimentConfig) -> CliResult<()> {
    if cfg.has_policy(PolicyKind::Dp) && !cfg.arrival.is_finite() {
        return Err(CliError::Invalid(
            "unsupported arrival model: dp needs bernoulli or finite arrivals".into(),
        ));
    }
    Ok(())
}

fn solve_dp(cfg: &ExperimentConfig, capacity: f64) -> CliResult<PolicyTable> {
    let params = params_for(cfg, capacity)?;
    let model = cfg.arrival.build(capacity)?;
    Ok(dp_optimal_policy(&model, &params, cfg.dp_grid_size, cfg.dp_span_tol)?)
}

/// `bounds`: one row per `(B, ε)` with the lower bound, the Bernoulli renewal
/// value of the fixed fraction policy and the gap constants.
pub fn cmd_bounds<W: Write>(cfg: &ExperimentConfig, out: W) -> CliResult<()> {
    cfg.validate()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BoundReport::CSV_HEADER)?;
    for capacity in cfg.battery_sizes() {
        let model = cfg.arrival.build(capacity)?;
        for eps in cfg.epsilons() {
            let params = params_for(cfg, capacity)?.with_sampling_cost(eps)?;
            let report = BoundReport::compute(&model, &params, cfg.tail_tol)?;
            w.write_record(report.csv_record())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn policy_for(cfg: &ExperimentConfig, kind: PolicyKind, capacity: f64) -> CliResult<Box<dyn Policy>> {
    let params = params_for(cfg, capacity)?;
    let model = cfg.arrival.build(capacity)?;
    Ok(match kind {
        PolicyKind::Ffp => Box::new(FixedFraction::for_model(&model, params)?),
        PolicyKind::Greedy => Box::new(Greedy::new(params)),
        PolicyKind::Dp => Box::new(solve_dp(cfg, capacity)?),
    })
}

/// `simulate`: Monte Carlo estimate for every selected policy and battery size.
pub fn cmd_simulate<W: Write>(cfg: &ExperimentConfig, out: W) -> CliResult<()> {
    cfg.validate()?;
    require_finite_support(cfg)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "B", "epsilon", "mean", "std_error", "ci95"])?;
    let mut first_trace = None;
    for capacity in cfg.battery_sizes() {
        let params = params_for(cfg, capacity)?;
        let model = cfg.arrival.build(capacity)?;
        for &kind in &cfg.policies {
            let policy = policy_for(cfg, kind, capacity)?;
            let result: SimResult = with_threads(cfg, || monte_carlo(policy.as_ref(), &model, &params, &cfg.sim))??;
            w.write_record([
                kind.name().to_string(),
                sig9(capacity),
                sig9(params.sampling_cost),
                sig9(result.mean_distortion),
                sig9(result.std_error),
                sig9(result.ci95_halfwidth),
            ])?;
            if first_trace.is_none() {
                first_trace = result.trace;
            }
        }
    }
    w.flush()?;
    if let (Some(trace), Some(path)) = (first_trace, &cfg.trace_out) {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Invalid(format!("invalid config field `trace_out`: {}: {e}", path.display())))?;
        write_trace_csv(&trace, std::io::BufWriter::new(file))?;
    }
    Ok(())
}

/// One row of the figure data produced by `sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub battery_capacity: f64,
    pub lower_bound: f64,
    pub ffp: SimResult,
    pub dp_gain: Option<f64>,
}

impl SweepPoint {
    pub fn gap_ffp_lower(&self) -> f64 {
        self.ffp.mean_distortion - self.lower_bound
    }

    pub fn gap_ffp_dp(&self) -> Option<f64> {
        self.dp_gain.map(|g| self.ffp.mean_distortion - g)
    }
}

/// Computes the sweep rows without writing them.
pub fn sweep_points(cfg: &ExperimentConfig) -> CliResult<Vec<SweepPoint>> {
    cfg.validate()?;
    let sizes = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Invalid("invalid config field `sweep`: sweep needs a list of battery sizes".into()))?;
    require_finite_support(cfg)?;
    let rows = with_threads(cfg, || {
        sweep_battery(
            |model, params| FixedFraction::for_model(model, *params),
            |capacity| cfg.arrival.build(capacity),
            &cfg.params,
            &sizes,
            &cfg.sim,
        )
    })??;
    rows.into_iter()
        .map(|row| {
            let dp_gain = if cfg.has_policy(PolicyKind::Dp) {
                Some(solve_dp(cfg, row.battery_capacity)?.gain())
            } else {
                None
            };
            let params = params_for(cfg, row.battery_capacity)?;
            Ok(SweepPoint {
                battery_capacity: row.battery_capacity,
                lower_bound: lower_bound_with_cost(row.bounds.mu, &params)?,
                ffp: row.result,
                dp_gain,
            })
        })
        .collect()
}

/// `sweep`: plot-ready figure data against the battery size.
pub fn cmd_sweep<W: Write>(cfg: &ExperimentConfig, out: W) -> CliResult<()> {
    let points = sweep_points(cfg)?;
    write_sweep(&points, out)
}

pub fn write_sweep<W: Write>(points: &[SweepPoint], out: W) -> CliResult<()> {
    let with_dp = points.iter().any(|p| p.dp_gain.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["B", "lower_bound", "ffp_mean", "ffp_ci95"];
    if with_dp {
        header.push("dp_gain");
    }
    header.push("gap_ffp_lower");
    if with_dp {
        header.push("gap_ffp_dp");
    }
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![
            sig9(p.battery_capacity),
            sig9(p.lower_bound),
            sig9(p.ffp.mean_distortion),
            sig9(p.ffp.ci95_halfwidth),
        ];
        if let Some(g) = p.dp_gain {
            row.push(sig9(g));
        }
        row.push(sig9(p.gap_ffp_lower()));
        if let Some(g) = p.gap_ffp_dp() {
            row.push(sig9(g));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `dp`: solves the discretised MDP at the configured `B` and writes the
/// policy table. Returns the table so callers can report its gain.
pub fn cmd_dp<W: Write>(cfg: &ExperimentConfig, out: W) -> CliResult<PolicyTable> {
    cfg.validate()?;
    if !cfg.arrival.is_finite() {
        return Err(CliError::Invalid(
            "unsupported arrival model: dp needs bernoulli or finite arrivals".into(),
        ));
    }
    let table = solve_dp(cfg, cfg.params.battery_capacity)?;
    table.write_csv(out)?;
    Ok(table)
}
