//! System model: parameters, energy arrivals, battery dynamics and the
//! per-slot distortion of a Gaussian source sent over a Gaussian channel.
//!
//! Distortion in a slot with transmit power `g` is `σ_s² / (1 + g/σ_c²)`,
//! which is `σ_s² exp(-2r)` evaluated at the channel rate `r = ½ ln(1 + g/σ_c²)`.
//! With a sampling cost the sensor is on for a fraction `θ` of the slot and
//! the off part contributes the full source variance.

use rand::Rng;
use rand_distr::{Beta, Distribution, Uniform};

use crate::error::{Error, Result};

/// Relative slack (in units of `B`) allowed on energy causality before a
/// consumption is rejected.
pub const CAUSALITY_TOLERANCE: f64 = 1e-9;

/// Tolerance on the total probability mass of a finite arrival law.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Source, channel and battery parameters of one sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Source variance σ_s².
    pub sigma_s_sq: f64,
    /// Channel noise variance σ_c².
    pub sigma_c_sq: f64,
    /// Battery capacity `B`.
    pub battery_capacity: f64,
    /// Energy spent per unit on-time while sampling (ε).
    pub sampling_cost: f64,
}

impl SystemParams {
    pub fn new(
        sigma_s_sq: f64,
        sigma_c_sq: f64,
        battery_capacity: f64,
        sampling_cost: f64,
    ) -> Result<Self> {
        let params = SystemParams {
            sigma_s_sq,
            sigma_c_sq,
            battery_capacity,
            sampling_cost,
        };
        params.validate()?;
        Ok(params)
    }

    /// Unit variances, no sampling cost.
    pub fn unit(battery_capacity: f64) -> Result<Self> {
        Self::new(1.0, 1.0, battery_capacity, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("sigma_s_sq", self.sigma_s_sq)?;
        positive("sigma_c_sq", self.sigma_c_sq)?;
        positive("battery_capacity", self.battery_capacity)?;
        if !(self.sampling_cost.is_finite() && self.sampling_cost >= 0.0) {
            return Err(Error::domain(
                "sampling_cost",
                format!("must be finite and >= 0, got {}", self.sampling_cost),
            ));
        }
        Ok(())
    }

    pub fn with_capacity(self, battery_capacity: f64) -> Result<Self> {
        Self::new(
            self.sigma_s_sq,
            self.sigma_c_sq,
            battery_capacity,
            self.sampling_cost,
        )
    }

    pub fn with_sampling_cost(self, sampling_cost: f64) -> Result<Self> {
        Self::new(
            self.sigma_s_sq,
            self.sigma_c_sq,
            self.battery_capacity,
            sampling_cost,
        )
    }

    pub fn has_sampling_cost(&self) -> bool {
        self.sampling_cost > 0.0
    }

    fn causality_slack(&self) -> f64 {
        CAUSALITY_TOLERANCE * self.battery_capacity
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// Continuous harvest laws, sampled directly during simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuousArrival {
    /// Uniform on `[low, high]`.
    Uniform { low: f64, high: f64 },
    /// `scale · X` with `X ~ Beta(alpha, beta)`.
    ScaledBeta { alpha: f64, beta: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalKind {
    /// Energy `magnitude` with probability `p`, nothing otherwise.
    Bernoulli { p: f64, magnitude: f64 },
    /// `(value, probability)` atoms.
    FiniteSupport(Vec<(f64, f64)>),
    Continuous(ContinuousArrival),
}

/// An i.i.d. energy-arrival law whose support lies in `[0, B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalModel {
    kind: ArrivalKind,
    capacity: f64,
}

impl ArrivalModel {
    /// Bernoulli arrivals that fill the battery: `E ∈ {0, B}`, `P[E = B] = p`.
    pub fn bernoulli(p: f64, capacity: f64) -> Result<Self> {
        Self::new(
            ArrivalKind::Bernoulli {
                p,
                magnitude: capacity,
            },
            capacity,
        )
    }

    pub fn finite(atoms: Vec<(f64, f64)>, capacity: f64) -> Result<Self> {
        Self::new(ArrivalKind::FiniteSupport(atoms), capacity)
    }

    pub fn continuous(law: ContinuousArrival, capacity: f64) -> Result<Self> {
        Self::new(ArrivalKind::Continuous(law), capacity)
    }

    pub fn new(kind: ArrivalKind, capacity: f64) -> Result<Self> {
        positive("battery_capacity", capacity)?;
        let in_range = |v: f64| v.is_finite() && (0.0..=capacity).contains(&v);
        match &kind {
            ArrivalKind::Bernoulli { p, magnitude } => {
                probability("p", *p)?;
                if *magnitude != capacity {
                    return Err(Error::domain(
                        "magnitude",
                        format!("Bernoulli arrivals must equal the capacity {capacity}, got {magnitude}"),
                    ));
                }
            }
            ArrivalKind::FiniteSupport(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::domain("support", "no atoms given"));
                }
                let mut total = 0.0;
                for &(value, prob) in atoms {
                    if !in_range(value) {
                        return Err(Error::domain(
                            "support",
                            format!("value {value} outside [0, {capacity}]"),
                        ));
                    }
                    probability("support probability", prob)?;
                    total += prob;
                }
                if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                    return Err(Error::domain(
                        "support",
                        format!("probabilities sum to {total}, not 1"),
                    ));
                }
            }
            ArrivalKind::Continuous(ContinuousArrival::Uniform { low, high }) => {
                if !(in_range(*low) && in_range(*high) && low < high) {
                    return Err(Error::domain(
                        "uniform",
                        format!("need 0 <= low < high <= {capacity}, got [{low}, {high}]"),
                    ));
                }
            }
            ArrivalKind::Continuous(ContinuousArrival::ScaledBeta { alpha, beta, scale }) => {
                positive("alpha", *alpha)?;
                positive("beta", *beta)?;
                if !(in_range(*scale) && *scale > 0.0) {
                    return Err(Error::domain(
                        "scale",
                        format!("must lie in (0, {capacity}], got {scale}"),
                    ));
                }
            }
        }
        Ok(ArrivalModel { kind, capacity })
    }

    pub fn kind(&self) -> &ArrivalKind {
        &self.kind
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Mean harvest μ.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            ArrivalKind::Bernoulli { p, magnitude } => p * magnitude,
            ArrivalKind::FiniteSupport(atoms) => atoms.iter().map(|(v, p)| v * p).sum(),
            ArrivalKind::Continuous(ContinuousArrival::Uniform { low, high }) => 0.5 * (low + high),
            ArrivalKind::Continuous(ContinuousArrival::ScaledBeta { alpha, beta, scale }) => {
                scale * alpha / (alpha + beta)
            }
        }
    }

    /// Fraction `q = μ / B` consumed by the fixed fraction policy.
    pub fn fraction(&self) -> f64 {
        (self.mean() / self.capacity).clamp(0.0, 1.0)
    }

    /// The atoms of the law, or `None` for continuous models.
    pub fn finite_support(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            ArrivalKind::Bernoulli { p, magnitude } => Some(vec![(0.0, 1.0 - p), (*magnitude, *p)]),
            ArrivalKind::FiniteSupport(atoms) => Some(atoms.clone()),
            ArrivalKind::Continuous(_) => None,
        }
    }

    pub fn sampler(&self) -> ArrivalSampler {
        match &self.kind {
            ArrivalKind::Bernoulli { p, magnitude } => ArrivalSampler::Bernoulli {
                p: *p,
                magnitude: *magnitude,
            },
            ArrivalKind::FiniteSupport(atoms) => {
                let mut acc = 0.0;
                let cumulative = atoms
                    .iter()
                    .map(|&(v, p)| {
                        acc += p;
                        (acc, v)
                    })
                    .collect();
                ArrivalSampler::Finite { cumulative }
            }
            ArrivalKind::Continuous(ContinuousArrival::Uniform { low, high }) => {
                ArrivalSampler::Uniform(Uniform::new_inclusive(*low, *high).expect("validated bounds"))
            }
            ArrivalKind::Continuous(ContinuousArrival::ScaledBeta { alpha, beta, scale }) => {
                ArrivalSampler::Beta {
                    law: Beta::new(*alpha, *beta).expect("validated shape"),
                    scale: *scale,
                }
            }
        }
    }
}

fn probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(name, format!("must lie in [0, 1], got {p}")))
    }
}

/// Draws i.i.d. harvests for an [`ArrivalModel`].
#[derive(Debug, Clone)]
pub enum ArrivalSampler {
    Bernoulli { p: f64, magnitude: f64 },
    Finite { cumulative: Vec<(f64, f64)> },
    Uniform(Uniform<f64>),
    Beta { law: Beta<f64>, scale: f64 },
}

impl Distribution<f64> for ArrivalSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ArrivalSampler::Bernoulli { p, magnitude } => {
                if rng.random::<f64>() < *p {
                    *magnitude
                } else {
                    0.0
                }
            }
            ArrivalSampler::Finite { cumulative } => {
                let u: f64 = rng.random();
                cumulative
                    .iter()
                    .find(|(acc, _)| u < *acc)
                    .or(cumulative.last())
                    .map(|&(_, v)| v)
                    .unwrap_or(0.0)
            }
            ArrivalSampler::Uniform(law) => law.sample(rng),
            ArrivalSampler::Beta { law, scale } => scale * law.sample(rng),
        }
    }
}

/// What the sensor does in one slot: on-fraction `θ` and transmit power `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotDecision {
    pub theta: f64,
    pub power: f64,
}

impl SlotDecision {
    /// Always-on transmission at power `g`.
    pub fn on(power: f64) -> Self {
        SlotDecision { theta: 1.0, power }
    }

    /// Energy drawn from the battery: `θ (ε + g)`.
    pub fn consumed(&self, params: &SystemParams) -> f64 {
        if self.theta == 0.0 {
            0.0
        } else {
            self.theta * (params.sampling_cost + self.power)
        }
    }
}

/// Battery charge, always within `[0, B]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BatteryState {
    level: f64,
}

impl BatteryState {
    pub fn new(level: f64, params: &SystemParams) -> Result<Self> {
        if !(level.is_finite() && (0.0..=params.battery_capacity).contains(&level)) {
            return Err(Error::domain(
                "battery level",
                format!("{level} outside [0, {}]", params.battery_capacity),
            ));
        }
        Ok(BatteryState { level })
    }

    /// Fully charged battery, the initial state `b₁ = B`.
    pub fn full(params: &SystemParams) -> Self {
        BatteryState {
            level: params.battery_capacity,
        }
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

/// Advances the battery by one slot: `min(b − consumed + arrival, B)`.
///
/// Consumption may exceed the charge by at most `1e-9·B` of floating-point
/// drift; anything more is reported as an energy-causality violation.
pub fn step_battery(
    battery: BatteryState,
    consumed: f64,
    arrival: f64,
    params: &SystemParams,
) -> Result<BatteryState> {
    let slack = params.causality_slack();
    if !(consumed.is_finite() && consumed >= 0.0) {
        return Err(Error::domain(
            "consumed",
            format!("must be finite and >= 0, got {consumed}"),
        ));
    }
    if consumed > battery.level + slack {
        return Err(Error::EnergyCausality {
            slot: None,
            consumed,
            available: battery.level,
        });
    }
    if !(arrival.is_finite() && arrival >= 0.0 && arrival <= params.battery_capacity + slack) {
        return Err(Error::domain(
            "arrival",
            format!("{arrival} outside [0, {}]", params.battery_capacity),
        ));
    }
    let remaining = (battery.level - consumed).max(0.0);
    Ok(BatteryState {
        level: (remaining + arrival).min(params.battery_capacity),
    })
}

/// Distortion `σ_s² / (1 + g/σ_c²)` of a slot transmitted at power `g`.
pub fn slot_distortion(power: f64, params: &SystemParams) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::domain(
            "power",
            format!("must be >= 0, got {power}"),
        ));
    }
    Ok(distortion_at(power, params))
}

/// Unchecked form of [`slot_distortion`] for hot loops.
#[inline]
pub(crate) fn distortion_at(power: f64, params: &SystemParams) -> f64 {
    params.sigma_s_sq / (1.0 + power / params.sigma_c_sq)
}

/// Time-shared distortion `(1 − θ)σ_s² + θ σ_s² / (1 + g/σ_c²)`.
pub fn slot_distortion_with_cost(decision: SlotDecision, params: &SystemParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&decision.theta) {
        return Err(Error::domain(
            "theta",
            format!("must lie in [0, 1], got {}", decision.theta),
        ));
    }
    if decision.theta == 0.0 {
        return Ok(params.sigma_s_sq);
    }
    let on = slot_distortion(decision.power, params)?;
    if decision.theta == 1.0 {
        return Ok(on);
    }
    Ok((1.0 - decision.theta) * params.sigma_s_sq + decision.theta * on)
}
