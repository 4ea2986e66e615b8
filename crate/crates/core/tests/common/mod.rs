#![allow(dead_code)]

use eaas_compose::{Energy, EnergyRequest, EnergyService, Location, TimeWindow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A provider with default-range capacity and stay at the origin.
pub fn random_service(rng: &mut impl Rng, id: usize) -> EnergyService {
    let duration = rng.gen_range(10..=200u16);
    let start = rng.gen_range(9 * 60..=17 * 60 - duration);
    EnergyService {
        id: format!("es-{id:05}"),
        owner_id: format!("p-{id:05}"),
        capacity: Energy::from_units(rng.gen_range(50.0..=100.0)).unwrap(),
        location: Location::default(),
        window: TimeWindow::from_minutes(start, start + duration).unwrap(),
    }
}

/// `count` contending requests, mostly inside the provider's stay and range.
/// Roughly one in eight falls outside a gate so selection has work to do.
pub fn random_requests(rng: &mut impl Rng, service: &EnergyService, count: usize) -> Vec<EnergyRequest> {
    let p = service.window;
    (0..count)
        .map(|i| {
            let duration = rng.gen_range(5..=30u16).min(p.duration() as u16);
            let lo = p.start().minutes();
            let hi = p.end().minutes() - duration;
            let start = if rng.gen_ratio(1, 16) {
                lo - 3
            } else {
                rng.gen_range(lo..=hi)
            };
            let reach = if rng.gen_ratio(1, 16) { 8.0 } else { 4.5 };
            EnergyRequest {
                id: format!("er-{i:04}"),
                owner_id: format!("c-{i:04}"),
                battery_level: rng.gen_range(1.0..=80.0),
                requested_energy: Energy::from_units(rng.gen_range(1.0..=100.0)).unwrap(),
                window: TimeWindow::from_minutes(start, start + duration).unwrap(),
                location: Location::new(rng.gen_range(-reach..=reach) / 2f64.sqrt(), rng.gen_range(-reach..=reach) / 2f64.sqrt()),
            }
        })
        .collect()
}
