//! Online power-control policies.
//!
//! The fixed fraction policy spends `q·b` each slot, where `q = μ/B`. With a
//! sampling cost the spent energy is split between on-time and power by the
//! single-slot program solved in [`single_slot_optimal`].

mod dp;

pub use dp::{dp_optimal_policy, dp_optimal_policy_with, DpOptions, PolicyTable};

use crate::error::{Error, Result};
use crate::system::{ArrivalModel, BatteryState, SlotDecision, SystemParams};

/// A stationary policy: maps the current battery level to a slot decision.
///
/// Implementations must never ask for more than `battery` units of energy.
pub trait Policy: Send + Sync {
    fn decide(&self, battery: f64) -> SlotDecision;
}

impl<F> Policy for F
where
    F: Fn(f64) -> SlotDecision + Send + Sync,
{
    fn decide(&self, battery: f64) -> SlotDecision {
        self(battery)
    }
}

fn check_fraction(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::domain("q", format!("must lie in [0, 1], got {q}")))
    }
}

/// Transmit power of the fixed fraction policy without sampling cost: `q·b`.
pub fn ffp_power(battery: BatteryState, q: f64) -> Result<f64> {
    check_fraction(q)?;
    Ok(q * battery.level())
}

/// Fixed fraction decision with sampling cost: spends `q·b` split as
///
/// ```text
/// θ = min{ q·b / (ε + √(ε σ_c²)), 1 }
/// g = max{ q·b − ε, √(ε σ_c²) }
/// ```
///
/// so that `θ (ε + g) = q·b`. Requires `ε > 0`; the cost-free policy is
/// [`ffp_power`] with `θ = 1`.
pub fn ffp_with_cost(battery: BatteryState, q: f64, params: &SystemParams) -> Result<SlotDecision> {
    check_fraction(q)?;
    if !(params.sampling_cost > 0.0) {
        return Err(Error::DegenerateCost(params.sampling_cost));
    }
    Ok(single_slot_optimal(q * battery.level(), params)?.0)
}

/// Minimum single-slot distortion reachable with energy `budget`, together
/// with the decision achieving it.
///
/// Substituting `ḡ = budget − θε` leaves a convex program in `θ` alone whose
/// stationary point is `θ = budget / (ε + √(ε σ_c²))`, i.e. power pinned at
/// `√(ε σ_c²)`. Projecting onto `θ ≤ 1` gives the closed form. For `ε = 0`
/// the sensor is always on and spends the whole budget on power.
pub fn single_slot_optimal(budget: f64, params: &SystemParams) -> Result<(SlotDecision, f64)> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(Error::domain(
            "budget",
            format!("must be finite and >= 0, got {budget}"),
        ));
    }
    let decision = optimal_split(budget, params);
    Ok((decision, split_distortion(decision, params)))
}

#[inline]
pub(crate) fn optimal_split(budget: f64, params: &SystemParams) -> SlotDecision {
    let eps = params.sampling_cost;
    if eps == 0.0 {
        return SlotDecision::on(budget);
    }
    let pinned = (eps * params.sigma_c_sq).sqrt();
    let theta = (budget / (eps + pinned)).min(1.0);
    let power = (budget - eps).max(pinned);
    SlotDecision { theta, power }
}

#[inline]
pub(crate) fn split_distortion(decision: SlotDecision, params: &SystemParams) -> f64 {
    let s = params.sigma_s_sq;
    (1.0 - decision.theta) * s + decision.theta * s / (1.0 + decision.power / params.sigma_c_sq)
}

/// `f_ε(budget)`: the optimal value of the single-slot program.
#[inline]
pub(crate) fn min_distortion(budget: f64, params: &SystemParams) -> f64 {
    split_distortion(optimal_split(budget, params), params)
}

/// Baseline that spends the whole battery every slot.
pub fn greedy_policy(battery: BatteryState) -> f64 {
    battery.level()
}

/// The fixed fraction policy, covering both the cost-free and costly problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedFraction {
    q: f64,
    params: SystemParams,
}

impl FixedFraction {
    pub fn new(q: f64, params: SystemParams) -> Result<Self> {
        check_fraction(q)?;
        Ok(FixedFraction { q, params })
    }

    /// Uses `q = μ/B` of the given arrival law.
    pub fn for_model(model: &ArrivalModel, params: SystemParams) -> Result<Self> {
        Self::new(model.fraction(), params)
    }

    pub fn fraction(&self) -> f64 {
        self.q
    }
}

impl Policy for FixedFraction {
    fn decide(&self, battery: f64) -> SlotDecision {
        optimal_split(self.q * battery, &self.params)
    }
}

/// Spend everything; with a sampling cost the energy is split optimally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greedy {
    params: SystemParams,
}

impl Greedy {
    pub fn new(params: SystemParams) -> Self {
        Greedy { params }
    }
}

impl Policy for Greedy {
    fn decide(&self, battery: f64) -> SlotDecision {
        optimal_split(battery, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{slot_distortion_with_cost, step_battery};
    use proptest::prelude::*;

    /// Brute-force minimiser of the θ-substituted program on a uniform θ grid.
    fn grid_oracle(budget: f64, params: &SystemParams, step: f64) -> f64 {
        let s = params.sigma_s_sq;
        if budget == 0.0 {
            return s;
        }
        let hi = (budget / params.sampling_cost).min(1.0);
        let n = (hi / step).floor() as usize;
        let eval = |theta: f64| {
            let gbar = (budget - theta * params.sampling_cost).max(0.0);
            (1.0 - theta) * s + theta * s / (1.0 + gbar / (theta * params.sigma_c_sq))
        };
        (1..=n)
            .map(|k| eval(k as f64 * step))
            .chain(std::iter::once(eval(hi)))
            .fold(f64::INFINITY, f64::min)
    }

    fn params(eps: f64) -> SystemParams {
        SystemParams::new(1.0, 1.0, 10.0, eps).unwrap()
    }

    #[test]
    fn ffp_power_examples() {
        let p = SystemParams::unit(2.0).unwrap();
        assert_eq!(ffp_power(BatteryState::new(2.0, &p).unwrap(), 0.5).unwrap(), 1.0);
        assert_eq!(ffp_power(BatteryState::new(0.0, &p).unwrap(), 0.7).unwrap(), 0.0);
        assert!(ffp_power(BatteryState::full(&p), 1.5).is_err());
        assert!(ffp_power(BatteryState::full(&p), -0.1).is_err());
    }

    #[test]
    fn ffp_battery_halves_without_arrivals() {
        let p = SystemParams::unit(2.0).unwrap();
        let mut b = BatteryState::full(&p);
        let mut powers = Vec::new();
        for _ in 0..5 {
            let g = ffp_power(b, 0.5).unwrap();
            powers.push(g);
            b = step_battery(b, g, 0.0, &p).unwrap();
        }
        assert_eq!(powers, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    }

    #[test]
    fn cost_split_examples() {
        let p = params(1.5);
        let at = |budget: f64| ffp_with_cost(BatteryState::new(budget, &p).unwrap(), 1.0, &p).unwrap();

        // grid oracle (θ step 1e-6): θ ≈ 0.734014, value 0.595917942
        let d = at(2.0);
        assert!((d.theta - 0.734014).abs() < 1e-5, "{d:?}");
        assert!((d.power - 1.5f64.sqrt()).abs() < 1e-12);
        assert!((d.consumed(&p) - 2.0).abs() < 1e-12);

        let d = at(5.0);
        assert_eq!(d.theta, 1.0);
        assert_eq!(d.power, 3.5);

        let d = at(0.0);
        assert_eq!(d.theta, 0.0);
        assert_eq!(d.power, 1.5f64.sqrt());
        assert_eq!(d.consumed(&p), 0.0);
    }

    #[test]
    fn cost_split_needs_positive_cost() {
        let p = params(0.0);
        assert_eq!(
            ffp_with_cost(BatteryState::full(&p), 0.5, &p),
            Err(Error::DegenerateCost(0.0))
        );
    }

    #[test]
    fn single_slot_examples() {
        let (d, v) = single_slot_optimal(2.0, &params(1.5)).unwrap();
        assert!((v - 0.595917942).abs() < 1e-8, "{v}");
        assert!((v - (1.0 - d.theta * (1.0 - 1.0 / (1.0 + d.power)))).abs() < 1e-15);

        let (d, v) = single_slot_optimal(1.0, &params(0.0)).unwrap();
        assert_eq!(d, SlotDecision::on(1.0));
        assert_eq!(v, 0.5);

        for eps in [0.0, 0.3, 1.5] {
            assert_eq!(single_slot_optimal(0.0, &params(eps)).unwrap().1, 1.0);
        }
        assert!(single_slot_optimal(-1.0, &params(1.5)).is_err());
    }

    #[test]
    fn single_slot_matches_grid_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let budget = rng.random_range(0.01..10.0);
            let p = SystemParams::new(1.0, rng.random_range(0.1..5.0), 10.0, rng.random_range(0.01..5.0))
                .unwrap();
            let (d, v) = single_slot_optimal(budget, &p).unwrap();
            let oracle = grid_oracle(budget, &p, 1e-5);
            assert!((v - oracle).abs() <= 1e-6, "budget {budget} {p:?}: {v} vs {oracle}");
            assert!(v <= oracle + 1e-12);
            assert!((d.consumed(&p) - budget).abs() <= 1e-12 * budget.max(1.0));
        }
    }

    #[test]
    fn single_arrival_regimes() {
        // One full battery then nothing: power shrinks while θ = 1, then
        // power sits at √(εσ_c²) while θ shrinks.
        let p = SystemParams::new(1.0, 1.0, 20.0, 1.5).unwrap();
        let policy = FixedFraction::new(0.3, p).unwrap();
        let mut b = BatteryState::full(&p);
        let mut decisions = Vec::new();
        for _ in 0..40 {
            let d = policy.decide(b.level());
            decisions.push(d);
            b = step_battery(b, d.consumed(&p), 0.0, &p).unwrap();
        }
        let switch = decisions.iter().position(|d| d.theta < 1.0).unwrap();
        assert!(switch > 1);
        let pinned = 1.5f64.sqrt();
        for w in decisions[..switch].windows(2) {
            assert_eq!(w[0].theta, 1.0);
            assert!(w[1].power < w[0].power);
        }
        for w in decisions[switch..].windows(2) {
            assert_eq!(w[0].power, pinned);
            assert!(w[1].theta < w[0].theta);
        }
    }

    #[test]
    fn greedy_examples() {
        let p = SystemParams::unit(2.0).unwrap();
        assert_eq!(greedy_policy(BatteryState::full(&p)), 2.0);
        assert_eq!(greedy_policy(BatteryState::new(0.0, &p).unwrap()), 0.0);
        assert_eq!(Greedy::new(p).decide(1.5), SlotDecision::on(1.5));
    }

    proptest! {
        #[test]
        fn cost_split_spends_exactly_the_budget(b in 0.0f64..100.0, q in 0.0f64..=1.0, eps in 1e-6f64..10.0, c in 0.01f64..10.0) {
            let p = SystemParams::new(1.0, c, 100.0, eps).unwrap();
            let d = ffp_with_cost(BatteryState::new(b, &p).unwrap(), q, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&d.theta));
            prop_assert!(d.power >= (eps * c).sqrt());
            prop_assert!((d.consumed(&p) - q * b).abs() <= 1e-12 * (q * b).max(1.0));
            prop_assert!(d.consumed(&p) <= b + 1e-12 * b.max(1.0));
        }

        #[test]
        fn vanishing_cost_recovers_plain_ffp(b in 0.01f64..100.0, q in 0.01f64..=1.0) {
            let p = SystemParams::new(1.0, 1.0, 100.0, 1e-12).unwrap();
            let d = ffp_with_cost(BatteryState::new(b, &p).unwrap(), q, &p).unwrap();
            prop_assert!((d.theta - 1.0).abs() <= 1e-5);
            prop_assert!((d.power - q * b).abs() <= 1e-5);
        }

        #[test]
        fn optimum_beats_any_feasible_split(budget in 0.0f64..20.0, eps in 0.01f64..5.0, theta in 0.0f64..=1.0) {
            let p = SystemParams::new(1.0, 1.0, 100.0, eps).unwrap();
            let (_, best) = single_slot_optimal(budget, &p).unwrap();
            // any θ that leaves non-negative power is feasible
            prop_assume!(theta * eps <= budget && theta > 0.0);
            let g = budget / theta - eps;
            let other = slot_distortion_with_cost(SlotDecision { theta, power: g }, &p).unwrap();
            prop_assert!(best <= other + 1e-12);
        }
    }
}
