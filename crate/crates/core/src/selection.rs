//! Spatio-temporal selection of requests a provider can serve.
//!
//! A request survives when its stay lies inside the provider's stay, the
//! consumer is within wireless range and the provider's advertised capacity
//! covers the request. Survivors are paired with their reward breakdown.

use serde::{Deserialize, Serialize};

use crate::constants::ModelConstants;
use crate::error::Result;
use crate::incentive::{reward_request, RewardBreakdown};
use crate::model::{EnergyRequest, EnergyService, Location};

/// A request that passed selection, with its reward against the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRequest {
    pub request: EnergyRequest,
    pub reward: RewardBreakdown,
}

/// Euclidean distance in meters.
pub fn distance(a: &Location, b: &Location) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

pub fn is_temporally_composable(request: &EnergyRequest, service: &EnergyService) -> bool {
    service.window.contains(&request.window)
}

pub fn is_within_range(
    request: &EnergyRequest,
    service: &EnergyService,
    constants: &ModelConstants,
) -> bool {
    distance(&request.location, &service.location) <= constants.max_energy_distance_m
}

/// Compares against the full advertised capacity, not a running remainder.
pub fn is_affordable(request: &EnergyRequest, service: &EnergyService) -> bool {
    request.requested_energy <= service.capacity
}

/// Which selection gate a request failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Temporal,
    Spatial,
    Energy,
}

/// The first gate `request` fails, in evaluation order, or `None`.
pub fn failed_gate(
    request: &EnergyRequest,
    service: &EnergyService,
    constants: &ModelConstants,
) -> Option<Gate> {
    if !is_temporally_composable(request, service) {
        Some(Gate::Temporal)
    } else if !is_within_range(request, service, constants) {
        Some(Gate::Spatial)
    } else if !is_affordable(request, service) {
        Some(Gate::Energy)
    } else {
        None
    }
}

/// Returns the requests passing every gate, in input order, each scored
/// against `service`.
///
/// Fails only if a surviving request cannot be scored, which for a validated
/// instance means never.
pub fn select_nearby(
    service: &EnergyService,
    requests: &[EnergyRequest],
    constants: &ModelConstants,
) -> Result<Vec<ScoredRequest>> {
    requests
        .iter()
        .filter(|r| failed_gate(r, service, constants).is_none())
        .map(|r| {
            Ok(ScoredRequest {
                reward: reward_request(r, service, constants)?,
                request: r.clone(),
            })
        })
        .collect()
}
