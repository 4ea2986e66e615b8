//! The four-attribute incentive model.
//!
//! Each accepted request earns the provider a weighted sum of four component
//! rewards: battery level, requested energy, stay time and time of
//! provision. The provider's reward is the sum over the requests it serves.

use serde::{Deserialize, Serialize};

use crate::constants::{AttributeWeights, ModelConstants};
use crate::error::{Error, Result};
use crate::model::{ClockTime, Energy, EnergyRequest, EnergyService, TimeWindow};

/// Component rewards of one request and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub reward_bl: f64,
    pub reward_re: f64,
    pub reward_st: f64,
    pub reward_tp: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Builds a breakdown whose total is the weighted sum of the components.
    pub fn from_components(
        reward_bl: f64,
        reward_re: f64,
        reward_st: f64,
        reward_tp: f64,
        weights: &AttributeWeights,
    ) -> Self {
        let mut breakdown = RewardBreakdown {
            reward_bl,
            reward_re,
            reward_st,
            reward_tp,
            total: 0.0,
        };
        breakdown.total = breakdown.weighted_total(weights);
        breakdown
    }

    /// A breakdown carrying only a total, for plans whose components are not
    /// known (hand-built schedules, external inputs).
    pub fn total_only(total: f64) -> Self {
        RewardBreakdown {
            reward_bl: 0.0,
            reward_re: 0.0,
            reward_st: 0.0,
            reward_tp: 0.0,
            total,
        }
    }

    pub fn weighted_total(&self, w: &AttributeWeights) -> f64 {
        w.bl * self.reward_bl + w.re * self.reward_re + w.st * self.reward_st + w.tp * self.reward_tp
    }
}

/// Full reward for consumers close to shutdown or in the slow-charging band,
/// half reward otherwise. Both thresholds are strict.
pub fn reward_battery_level(battery_level: f64, constants: &ModelConstants) -> Result<f64> {
    if !(0.0..=100.0).contains(&battery_level) {
        return Err(Error::Domain(format!(
            "battery level {battery_level} is outside [0, 100]"
        )));
    }
    if battery_level < constants.bl_low_threshold || battery_level > constants.bl_high_threshold {
        Ok(constants.bl_reward_extreme)
    } else {
        Ok(constants.bl_reward_mid)
    }
}

/// Share of the provider's capacity the request consumes.
pub fn reward_requested_energy(requested: Energy, capacity: Energy) -> Result<f64> {
    if capacity.is_zero() {
        return Err(Error::Domain("provider capacity must be positive".into()));
    }
    if requested > capacity {
        return Err(Error::Domain(format!(
            "requested energy {requested} exceeds capacity {capacity}; \
             reward undefined, request must be pre-filtered"
        )));
    }
    Ok(requested.micro() as f64 / capacity.micro() as f64)
}

/// `|consumer - provider| / provider` over stay durations, so shorter
/// consumer stays earn more.
pub fn reward_stay_time(consumer: &TimeWindow, provider: &TimeWindow) -> Result<f64> {
    let p = provider.duration();
    if p == 0 {
        return Err(Error::Domain(format!("provider window {provider} is empty")));
    }
    if !provider.contains(consumer) {
        return Err(Error::Domain(format!(
            "consumer window {consumer} is not inside provider window {provider}"
        )));
    }
    let c = consumer.duration();
    Ok(f64::from(c.abs_diff(p)) / f64::from(p))
}

/// Index of the provision period containing `start`. Periods are half-open;
/// times before the first period clamp to it, times at or after the end of
/// the last clamp to the last.
pub fn provision_period(start: ClockTime, constants: &ModelConstants) -> usize {
    let periods = &constants.tp_boundaries;
    if start < periods[0].start() {
        return 0;
    }
    periods
        .iter()
        .position(|p| start >= p.start() && start < p.end())
        .unwrap_or(periods.len() - 1)
}

/// Reward of the provision period in which the consumer's stay starts.
pub fn reward_time_of_provision(consumer: &TimeWindow, constants: &ModelConstants) -> f64 {
    constants.tp_rewards[provision_period(consumer.start(), constants)]
}

/// Scores one request against the service it would be served by.
pub fn reward_request(
    request: &EnergyRequest,
    service: &EnergyService,
    constants: &ModelConstants,
) -> Result<RewardBreakdown> {
    let bl = reward_battery_level(request.battery_level, constants)?;
    let re = reward_requested_energy(request.requested_energy, service.capacity)?;
    let st = reward_stay_time(&request.window, &service.window)?;
    let tp = reward_time_of_provision(&request.window, constants);
    Ok(RewardBreakdown::from_components(
        bl,
        re,
        st,
        tp,
        &constants.attribute_weights,
    ))
}

/// Sum of the request totals, in iteration order.
pub fn provider_reward<'a, I>(breakdowns: I) -> f64
where
    I: IntoIterator<Item = &'a RewardBreakdown>,
{
    breakdowns.into_iter().map(|b| b.total).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Location;

    fn w(s: &str) -> TimeWindow {
        s.parse().unwrap()
    }

    fn units(u: f64) -> Energy {
        Energy::from_units(u).unwrap()
    }

    #[test]
    fn battery_level_thresholds() {
        let c = ModelConstants::default();
        assert_eq!(reward_battery_level(10.0, &c).unwrap(), 1.0);
        assert_eq!(reward_battery_level(50.0, &c).unwrap(), 0.5);
        assert_eq!(reward_battery_level(20.0, &c).unwrap(), 0.5);
        assert_eq!(reward_battery_level(80.0, &c).unwrap(), 0.5);
        assert_eq!(reward_battery_level(80.5, &c).unwrap(), 1.0);
        assert_eq!(reward_battery_level(0.0, &c).unwrap(), 1.0);
        assert!(reward_battery_level(-0.1, &c).is_err());
        assert!(reward_battery_level(100.1, &c).is_err());
        assert!(reward_battery_level(f64::NAN, &c).is_err());
    }

    #[test]
    fn requested_energy_ratio() {
        assert_eq!(reward_requested_energy(units(50.0), units(100.0)).unwrap(), 0.5);
        assert_eq!(reward_requested_energy(units(100.0), units(100.0)).unwrap(), 1.0);
        assert_eq!(reward_requested_energy(units(30.0), units(120.0)).unwrap(), 0.25);
        let err = reward_requested_energy(units(60.0), units(50.0)).unwrap_err();
        assert!(err.to_string().contains("pre-filtered"));
        assert!(reward_requested_energy(units(1.0), Energy::ZERO).is_err());
    }

    #[test]
    fn stay_time_ratio() {
        assert_eq!(reward_stay_time(&w("10:00-10:30"), &w("10:00-12:00")).unwrap(), 0.75);
        assert_eq!(reward_stay_time(&w("10:00-12:00"), &w("10:00-12:00")).unwrap(), 0.0);
        assert_eq!(reward_stay_time(&w("10:00-10:05"), &w("09:00-12:20")).unwrap(), 0.975);
        assert!(reward_stay_time(&w("08:50-09:20"), &w("09:00-17:00")).is_err());
        assert!(reward_stay_time(
            &w("10:00-10:05"),
            &TimeWindow::new_unchecked("10:00".parse().unwrap(), "10:00".parse().unwrap())
        )
        .is_err());
    }

    #[test]
    fn time_of_provision_periods() {
        let c = ModelConstants::default();
        let tp = |start: &str| {
            let s: ClockTime = start.parse().unwrap();
            reward_time_of_provision(&TimeWindow::new(s, s.saturating_add(1)).unwrap(), &c)
        };
        assert_eq!(tp("09:30"), 0.18);
        assert_eq!(tp("13:00"), 0.26);
        assert_eq!(tp("16:59"), 0.21);
        assert_eq!(tp("11:00"), 0.23);
        assert_eq!(tp("10:59"), 0.18);
        assert_eq!(tp("06:00"), 0.18);
        assert_eq!(tp("17:00"), 0.21);
        assert_eq!(tp("22:00"), 0.21);
    }

    fn worked_example() -> (EnergyRequest, EnergyService) {
        let service = EnergyService {
            id: "es".into(),
            owner_id: "p".into(),
            capacity: units(100.0),
            location: Location::default(),
            window: w("09:00-11:00"),
        };
        let request = EnergyRequest {
            id: "er".into(),
            owner_id: "c".into(),
            battery_level: 10.0,
            requested_energy: units(50.0),
            window: w("09:00-09:30"),
            location: Location::default(),
        };
        (request, service)
    }

    #[test]
    fn worked_example_breakdown() {
        let (request, service) = worked_example();
        let b = reward_request(&request, &service, &ModelConstants::default()).unwrap();
        assert_eq!(
            (b.reward_bl, b.reward_re, b.reward_st, b.reward_tp),
            (1.0, 0.5, 0.75, 0.18)
        );
        // Integer oracle in ten-thousandths: 27*100 + 28*50 + 23*75 + 22*18.
        let oracle = f64::from(27 * 100 + 28 * 50 + 23 * 75 + 22 * 18) / 10_000.0;
        assert_eq!(oracle, 0.6221);
        assert!((b.total - oracle).abs() <= 1e-12);
    }

    #[test]
    fn zero_components_give_zero_total() {
        let b = RewardBreakdown::from_components(0.0, 0.0, 0.0, 0.0, &AttributeWeights::default());
        assert_eq!(b.total, 0.0);
    }

    #[test]
    fn upper_bound_total() {
        let b = RewardBreakdown::from_components(1.0, 1.0, 1.0, 0.26, &AttributeWeights::default());
        assert!((b.total - 0.8372).abs() <= 1e-12);
    }

    #[test]
    fn provider_reward_sums_totals() {
        assert_eq!(provider_reward(&[]), 0.0);
        let a = RewardBreakdown::total_only(0.6221);
        let b = RewardBreakdown::total_only(0.40);
        assert_eq!(provider_reward(&[a]), 0.6221);
        assert!((provider_reward(&[a, b]) - 1.0221).abs() <= 1e-12);
    }

    #[test]
    fn over_capacity_request_propagates_error() {
        let (mut request, service) = worked_example();
        request.requested_energy = units(101.0);
        assert!(matches!(
            reward_request(&request, &service, &ModelConstants::default()),
            Err(Error::Domain(_))
        ));
    }
}
