//! Experiment configuration: a flat `key = value` text format.
//!
//! ```text
//! # Battery sweep without sampling cost
//! sigma_s_sq = 1
//! sigma_c_sq = 1
//! sampling_cost = 0
//! arrival = bernoulli
//! arrival_p = 0.5
//! sweep = 0.25:10:15        # log-spaced, or an explicit comma list
//! policies = ffp,dp
//! ```
//!
//! Arrival values (`arrival_values`, `arrival_low`, `arrival_high`) are given
//! as fractions of the battery capacity so one file describes a whole sweep.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use ehdist_core::{ArrivalModel, ContinuousArrival, SimConfig, SystemParams};

/// Invalid configuration, naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PolicyKind {
    Ffp,
    Greedy,
    Dp,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ffp => "ffp",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Dp => "dp",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ffp" => Some(PolicyKind::Ffp),
            "greedy" => Some(PolicyKind::Greedy),
            "dp" => Some(PolicyKind::Dp),
            _ => None,
        }
    }
}

/// Arrival law with values relative to `B`.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalSpec {
    Bernoulli { p: f64 },
    Finite { values: Vec<f64>, probs: Vec<f64> },
    Uniform { low: f64, high: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl ArrivalSpec {
    pub fn build(&self, capacity: f64) -> ehdist_core::Result<ArrivalModel> {
        match self {
            ArrivalSpec::Bernoulli { p } => ArrivalModel::bernoulli(*p, capacity),
            ArrivalSpec::Finite { values, probs } => ArrivalModel::finite(
                values.iter().zip(probs).map(|(v, p)| (v * capacity, *p)).collect(),
                capacity,
            ),
            ArrivalSpec::Uniform { low, high } => ArrivalModel::continuous(
                ContinuousArrival::Uniform {
                    low: low * capacity,
                    high: high * capacity,
                },
                capacity,
            ),
            ArrivalSpec::Beta { alpha, beta } => ArrivalModel::continuous(
                ContinuousArrival::ScaledBeta {
                    alpha: *alpha,
                    beta: *beta,
                    scale: capacity,
                },
                capacity,
            ),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ArrivalSpec::Bernoulli { .. } | ArrivalSpec::Finite { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    /// Extra sampling costs for `bounds`; empty means just `params.sampling_cost`.
    pub epsilon_values: Vec<f64>,
    pub arrival: ArrivalSpec,
    pub sim: SimConfig,
    pub sweep: Option<Vec<f64>>,
    pub policies: Vec<PolicyKind>,
    pub dp_grid_size: usize,
    pub dp_span_tol: f64,
    pub tail_tol: f64,
    /// Allowed FFP-over-lower-bound gap in `verify`; defaults to `σ_s²/2`.
    pub gap_tolerance: Option<f64>,
    /// Worker threads for trials; 0 uses every core.
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: SystemParams {
                sigma_s_sq: 1.0,
                sigma_c_sq: 1.0,
                battery_capacity: 2.0,
                sampling_cost: 0.0,
            },
            epsilon_values: Vec::new(),
            arrival: ArrivalSpec::Bernoulli { p: 0.5 },
            sim: SimConfig::default(),
            sweep: None,
            policies: vec![PolicyKind::Ffp],
            dp_grid_size: 2000,
            dp_span_tol: 1e-7,
            tail_tol: ehdist_core::DEFAULT_TAIL_TOL,
            gap_tolerance: None,
            threads: 0,
            out: None,
            trace_out: None,
        }
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

impl ExperimentConfig {
    /// Built-in recipes: `fig1` (no sampling cost) and `fig2` (ε = 1.5).
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig {
            sweep: Some(log_spaced(0.25, 10.0, 15)),
            policies: vec![PolicyKind::Ffp, PolicyKind::Dp],
            ..ExperimentConfig::default()
        };
        match name {
            "fig1" => {}
            "fig2" => cfg.params.sampling_cost = 1.5,
            other => {
                return Err(ConfigError::new(
                    "preset",
                    format!("unknown preset `{other}` (expected fig1 or fig2)"),
                ))
            }
        }
        Ok(cfg)
    }

    /// Parses a config file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Overlays every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let pairs = parse_pairs(text)?;
        self.apply_pairs(&pairs)
    }

    /// Overlays `KEY=VALUE` overrides from the command line.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        let mut pairs = Vec::new();
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::new(o, "override must look like KEY=VALUE"))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        self.apply_pairs(&pairs)
    }

    fn apply_pairs(&mut self, pairs: &[(String, String)]) -> Result<(), ConfigError> {
        // arrival keys are gathered first since the law's shape depends on `arrival`
        let mut arrival: BTreeMap<&str, &str> = BTreeMap::new();
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "sigma_s_sq" => self.params.sigma_s_sq = num(key, v)?,
                "sigma_c_sq" => self.params.sigma_c_sq = num(key, v)?,
                "battery_capacity" => self.params.battery_capacity = num(key, v)?,
                "sampling_cost" => self.params.sampling_cost = num(key, v)?,
                "epsilon_values" => self.epsilon_values = list(key, v)?,
                "horizon" => self.sim.horizon = int(key, v)?,
                "trials" => self.sim.trials = int(key, v)?,
                "seed" => self.sim.seed = int(key, v)?,
                "burn_in" => self.sim.burn_in = int(key, v)?,
                "record_trace" => self.sim.record_trace = boolean(key, v)?,
                "sweep" => self.sweep = sweep(key, v)?,
                "policies" => self.policies = policies(key, v)?,
                "dp_grid_size" => self.dp_grid_size = int(key, v)?,
                "dp_span_tol" => self.dp_span_tol = num(key, v)?,
                "tail_tol" => self.tail_tol = num(key, v)?,
                "gap_tolerance" => self.gap_tolerance = optional(v).map(|v| num(key, v)).transpose()?,
                "threads" => self.threads = int(key, v)?,
                "out" => self.out = optional(v).map(PathBuf::from),
                "trace_out" => self.trace_out = optional(v).map(PathBuf::from),
                "format" => {
                    if v != "csv" {
                        return Err(ConfigError::new(key, format!("only `csv` is supported, got `{v}`")));
                    }
                }
                k if k.starts_with("arrival") => {
                    arrival.insert(k, v);
                }
                other => return Err(ConfigError::new(other, "unknown key")),
            }
        }
        if !arrival.is_empty() {
            self.arrival = self.merge_arrival(&arrival)?;
        }
        self.validate()
    }

    fn merge_arrival(&self, keys: &BTreeMap<&str, &str>) -> Result<ArrivalSpec, ConfigError> {
        let kind = keys.get("arrival").copied().unwrap_or(match self.arrival {
            ArrivalSpec::Bernoulli { .. } => "bernoulli",
            ArrivalSpec::Finite { .. } => "finite",
            ArrivalSpec::Uniform { .. } => "uniform",
            ArrivalSpec::Beta { .. } => "beta",
        });
        let allowed: &[&str] = match kind {
            "bernoulli" => &["arrival", "arrival_p"],
            "finite" => &["arrival", "arrival_values", "arrival_probs"],
            "uniform" => &["arrival", "arrival_low", "arrival_high"],
            "beta" => &["arrival", "arrival_alpha", "arrival_beta"],
            other => {
                return Err(ConfigError::new(
                    "arrival",
                    format!("unknown arrival law `{other}` (bernoulli, finite, uniform, beta)"),
                ))
            }
        };
        if let Some(bad) = keys.keys().find(|k| !allowed.contains(k)) {
            return Err(ConfigError::new(bad, format!("not a parameter of `{kind}` arrivals")));
        }
        let get = |k: &str| -> Result<Option<f64>, ConfigError> { keys.get(k).map(|v| num(k, v)).transpose() };
        let current = &self.arrival;
        Ok(match kind {
            "bernoulli" => {
                let old = if let ArrivalSpec::Bernoulli { p } = current { Some(*p) } else { None };
                ArrivalSpec::Bernoulli {
                    p: get("arrival_p")?.or(old).ok_or_else(|| ConfigError::new("arrival_p", "missing"))?,
                }
            }
            "finite" => {
                let (ov, op) = match current {
                    ArrivalSpec::Finite { values, probs } => (Some(values.clone()), Some(probs.clone())),
                    _ => (None, None),
                };
                let values = match keys.get("arrival_values") {
                    Some(v) => list("arrival_values", v)?,
                    None => ov.ok_or_else(|| ConfigError::new("arrival_values", "missing"))?,
                };
                let probs = match keys.get("arrival_probs") {
                    Some(v) => list("arrival_probs", v)?,
                    None => op.ok_or_else(|| ConfigError::new("arrival_probs", "missing"))?,
                };
                ArrivalSpec::Finite { values, probs }
            }
            "uniform" => {
                let (ol, oh) = match current {
                    ArrivalSpec::Uniform { low, high } => (Some(*low), Some(*high)),
                    _ => (None, None),
                };
                ArrivalSpec::Uniform {
                    low: get("arrival_low")?.or(ol).unwrap_or(0.0),
                    high: get("arrival_high")?.or(oh).unwrap_or(1.0),
                }
            }
            _ => {
                let (oa, ob) = match current {
                    ArrivalSpec::Beta { alpha, beta } => (Some(*alpha), Some(*beta)),
                    _ => (None, None),
                };
                ArrivalSpec::Beta {
                    alpha: get("arrival_alpha")?.or(oa).ok_or_else(|| ConfigError::new("arrival_alpha", "missing"))?,
                    beta: get("arrival_beta")?.or(ob).ok_or_else(|| ConfigError::new("arrival_beta", "missing"))?,
                }
            }
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        for (name, v) in [
            ("sigma_s_sq", p.sigma_s_sq),
            ("sigma_c_sq", p.sigma_c_sq),
            ("battery_capacity", p.battery_capacity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(name, format!("must be > 0, got {v}")));
            }
        }
        if !(p.sampling_cost.is_finite() && p.sampling_cost >= 0.0) {
            return Err(ConfigError::new("sampling_cost", format!("must be >= 0, got {}", p.sampling_cost)));
        }
        if let Some(bad) = self.epsilon_values.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(ConfigError::new("epsilon_values", format!("must be >= 0, got {bad}")));
        }
        if self.sim.horizon == 0 {
            return Err(ConfigError::new("horizon", "must be >= 1"));
        }
        if self.sim.trials == 0 {
            return Err(ConfigError::new("trials", "must be >= 1"));
        }
        if self.sim.burn_in >= self.sim.horizon {
            return Err(ConfigError::new("burn_in", "must be below horizon"));
        }
        if self.policies.is_empty() {
            return Err(ConfigError::new("policies", "select at least one of ffp, greedy, dp"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() || sweep.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                return Err(ConfigError::new("sweep", "battery sizes must be positive"));
            }
            if sweep.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::new("sweep", "battery sizes must be strictly ascending"));
            }
        }
        if self.dp_grid_size < 2 {
            return Err(ConfigError::new("dp_grid_size", "must be >= 2"));
        }
        if !(self.dp_span_tol > 0.0) {
            return Err(ConfigError::new("dp_span_tol", "must be > 0"));
        }
        if !(self.tail_tol > 0.0) {
            return Err(ConfigError::new("tail_tol", "must be > 0"));
        }
        if let Some(g) = self.gap_tolerance {
            if !(g >= 0.0) {
                return Err(ConfigError::new("gap_tolerance", "must be >= 0"));
            }
        }
        match &self.arrival {
            ArrivalSpec::Bernoulli { p } if !(0.0..=1.0).contains(p) => {
                return Err(ConfigError::new("arrival_p", format!("must lie in [0, 1], got {p}")))
            }
            ArrivalSpec::Finite { values, probs } if values.len() != probs.len() => {
                return Err(ConfigError::new("arrival_probs", "needs one probability per value"))
            }
            _ => {}
        }
        // defer remaining law checks (support, normalisation) to the model itself
        self.arrival
            .build(p.battery_capacity)
            .map_err(|e| ConfigError::new(arrival_field(&self.arrival), e.to_string()))?;
        Ok(())
    }

    /// Battery sizes to run: the sweep if present, else the configured `B`.
    pub fn battery_sizes(&self) -> Vec<f64> {
        self.sweep.clone().unwrap_or_else(|| vec![self.params.battery_capacity])
    }

    pub fn epsilons(&self) -> Vec<f64> {
        if self.epsilon_values.is_empty() {
            vec![self.params.sampling_cost]
        } else {
            self.epsilon_values.clone()
        }
    }

    pub fn gap_tolerance(&self) -> f64 {
        self.gap_tolerance.unwrap_or(0.5 * self.params.sigma_s_sq)
    }

    pub fn has_policy(&self, kind: PolicyKind) -> bool {
        self.policies.contains(&kind)
    }
}

fn arrival_field(spec: &ArrivalSpec) -> &'static str {
    match spec {
        ArrivalSpec::Bernoulli { .. } => "arrival_p",
        ArrivalSpec::Finite { .. } => "arrival_values",
        ArrivalSpec::Uniform { .. } => "arrival_low",
        ArrivalSpec::Beta { .. } => "arrival_alpha",
    }
}

impl fmt::Display for ExperimentConfig {
    /// Serialises every key; parsing the output reproduces `self` exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let p = &self.params;
        writeln!(f, "sigma_s_sq = {:?}", p.sigma_s_sq)?;
        writeln!(f, "sigma_c_sq = {:?}", p.sigma_c_sq)?;
        writeln!(f, "battery_capacity = {:?}", p.battery_capacity)?;
        writeln!(f, "sampling_cost = {:?}", p.sampling_cost)?;
        writeln!(f, "epsilon_values = {}", join(&self.epsilon_values))?;
        match &self.arrival {
            ArrivalSpec::Bernoulli { p } => {
                writeln!(f, "arrival = bernoulli")?;
                writeln!(f, "arrival_p = {p:?}")?;
            }
            ArrivalSpec::Finite { values, probs } => {
                writeln!(f, "arrival = finite")?;
                writeln!(f, "arrival_values = {}", join(values))?;
                writeln!(f, "arrival_probs = {}", join(probs))?;
            }
            ArrivalSpec::Uniform { low, high } => {
                writeln!(f, "arrival = uniform")?;
                writeln!(f, "arrival_low = {low:?}")?;
                writeln!(f, "arrival_high = {high:?}")?;
            }
            ArrivalSpec::Beta { alpha, beta } => {
                writeln!(f, "arrival = beta")?;
                writeln!(f, "arrival_alpha = {alpha:?}")?;
                writeln!(f, "arrival_beta = {beta:?}")?;
            }
        }
        writeln!(f, "horizon = {}", self.sim.horizon)?;
        writeln!(f, "trials = {}", self.sim.trials)?;
        writeln!(f, "seed = {}", self.sim.seed)?;
        writeln!(f, "burn_in = {}", self.sim.burn_in)?;
        writeln!(f, "record_trace = {}", self.sim.record_trace)?;
        writeln!(f, "sweep = {}", self.sweep.as_deref().map(join).unwrap_or_default())?;
        let names: Vec<_> = self.policies.iter().map(|p| p.name()).collect();
        writeln!(f, "policies = {}", names.join(","))?;
        writeln!(f, "dp_grid_size = {}", self.dp_grid_size)?;
        writeln!(f, "dp_span_tol = {:?}", self.dp_span_tol)?;
        writeln!(f, "tail_tol = {:?}", self.tail_tol)?;
        writeln!(f, "gap_tolerance = {}", self.gap_tolerance.map(|g| format!("{g:?}")).unwrap_or_default())?;
        writeln!(f, "threads = {}", self.threads)?;
        writeln!(f, "out = {}", self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default())?;
        writeln!(
            f,
            "trace_out = {}",
            self.trace_out.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        )?;
        writeln!(f, "format = csv")
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(&format!("line {}", lineno + 1), "expected `key = value`"))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn optional(v: &str) -> Option<&str> {
    (!v.is_empty()).then_some(v)
}

fn num(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .map_err(|_| ConfigError::new(key, format!("expected a number, got `{v}`")))
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse::<T>()
        .map_err(|_| ConfigError::new(key, format!("expected a non-negative integer, got `{v}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::new(key, format!("expected true/false, got `{v}`"))),
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| num(key, x.trim())).collect()
}

/// Either `lo:hi:n` (log-spaced) or a comma list; empty disables the sweep.
fn sweep(key: &str, v: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    if v.is_empty() {
        return Ok(None);
    }
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        [_] => Ok(Some(list(key, v)?)),
        [lo, hi, n] => {
            let lo = num(key, lo.trim())?;
            let hi = num(key, hi.trim())?;
            let n: usize = int(key, n.trim())?;
            if !(lo > 0.0 && hi > lo && n >= 1) {
                return Err(ConfigError::new(key, "log range needs 0 < lo < hi and n >= 1"));
            }
            Ok(Some(log_spaced(lo, hi, n)))
        }
        _ => Err(ConfigError::new(key, "expected `lo:hi:n` or a comma-separated list")),
    }
}

fn policies(key: &str, v: &str) -> Result<Vec<PolicyKind>, ConfigError> {
    let mut out = Vec::new();
    for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind = PolicyKind::parse(name)
            .ok_or_else(|| ConfigError::new(key, format!("unknown policy `{name}` (ffp, greedy, dp)")))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
        for name in ["fig1", "fig2"] {
            let cfg = ExperimentConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.sweep.as_ref().unwrap().len(), 15);
            assert_eq!(cfg.sim.horizon, 100_000);
            assert_eq!(cfg.sim.trials, 50);
        }
        assert_eq!(ExperimentConfig::preset("fig2").unwrap().params.sampling_cost, 1.5);
        assert!(ExperimentConfig::preset("fig3").is_err());
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let v = log_spaced(0.25, 10.0, 15);
        assert_eq!(v[0], 0.25);
        assert_eq!(v[14], 10.0);
        assert!(v.windows(2).all(|w| w[1] / w[0] > 1.29 && w[1] / w[0] < 1.31));
    }

    #[test]
    fn parses_a_file() {
        let cfg = ExperimentConfig::parse(
            "# comment\nsigma_c_sq = 2 \narrival = finite\narrival_values = 0, 0.5, 1\narrival_probs = 0.25,0.25,0.5\n\
             sweep = 1,2,4\npolicies = ffp, greedy\nseed = 7  # trailing\n",
        )
        .unwrap();
        assert_eq!(cfg.params.sigma_c_sq, 2.0);
        assert_eq!(cfg.sweep, Some(vec![1.0, 2.0, 4.0]));
        assert_eq!(cfg.policies, vec![PolicyKind::Ffp, PolicyKind::Greedy]);
        assert_eq!(cfg.sim.seed, 7);
        let model = cfg.arrival.build(4.0).unwrap();
        assert_eq!(model.mean(), 2.5);
    }

    #[test]
    fn errors_name_the_field() {
        let err = |text: &str| ExperimentConfig::parse(text).unwrap_err().field;
        assert_eq!(err("sigma_c_sq = 0"), "sigma_c_sq");
        assert_eq!(err("sigma_s_sq = abc"), "sigma_s_sq");
        assert_eq!(err("nonsense = 1"), "nonsense");
        assert_eq!(err("policies = ffp,magic"), "policies");
        assert_eq!(err("policies ="), "policies");
        assert_eq!(err("arrival_p = 1.5"), "arrival_p");
        assert_eq!(err("sweep = 2,1"), "sweep");
        assert_eq!(err("arrival = finite\narrival_values = 0,2\narrival_probs = 0.5,0.5"), "arrival_values");
        assert_eq!(err("arrival = bernoulli\narrival_low = 0.1"), "arrival_low");
        assert_eq!(err("format = json"), "format");
        assert_eq!(err("just words"), "line 1");
    }

    #[test]
    fn overrides_win() {
        let mut cfg = ExperimentConfig::parse("seed = 1\nsampling_cost = 1e-12").unwrap();
        cfg.apply_overrides(&["seed=9".into(), "arrival_p = 0.25".into()]).unwrap();
        assert_eq!(cfg.sim.seed, 9);
        assert_eq!(cfg.arrival, ArrivalSpec::Bernoulli { p: 0.25 });
        assert!(cfg.apply_overrides(&["seed".into()]).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let mut configs = vec![
            ExperimentConfig::default(),
            ExperimentConfig::preset("fig1").unwrap(),
            ExperimentConfig::preset("fig2").unwrap(),
        ];
        let mut odd = ExperimentConfig::parse(
            "arrival = beta\narrival_alpha = 0.3\narrival_beta = 2.5\nsweep = 0.1:7:9\n\
             gap_tolerance = 0.3\nout = /tmp/x.csv\nepsilon_values = 0,0.1,1.5\nrecord_trace = true",
        )
        .unwrap();
        configs.push(odd.clone());
        odd.apply_text("arrival = uniform\narrival_low = 0.1\narrival_high = 0.9").unwrap();
        configs.push(odd);
        for cfg in configs {
            let text = cfg.to_string();
            let back = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(back, cfg, "{text}");
            assert_eq!(back.to_string(), text);
        }
    }
}
