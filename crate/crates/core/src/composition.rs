//! Composition of scored requests into a provider schedule.
//!
//! The provider serves one consumer at a time and is occupied for the
//! consumer's whole stay. A schedule is feasible when its requests do not
//! overlap in time (touching is allowed) and their total energy fits in the
//! provider's capacity.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::ModelConstants;
use crate::error::{Error, Result};
use crate::incentive::provider_reward;
use crate::model::{ClockTime, Energy, EnergyService};
use crate::selection::{failed_gate, Gate, ScoredRequest};

/// Default cap on the number of scored requests brute force will enumerate.
pub const DEFAULT_BF_LIMIT: usize = 20;

/// Hard ceiling regardless of the requested limit; subsets are bitmasks.
const MAX_BF_SIZE: usize = 40;

/// Tolerance when re-checking a plan's reward sum.
const REWARD_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// Incentive-based greedy: start time ascending, reward descending.
    #[serde(rename = "IB")]
    Ib,
    /// First come first served: start time only.
    #[serde(rename = "FCFS")]
    Fcfs,
    /// Exhaustive enumeration of feasible subsets.
    #[serde(rename = "BF")]
    Bf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ib, Algorithm::Fcfs, Algorithm::Bf];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ib => "IB",
            Algorithm::Fcfs => "FCFS",
            Algorithm::Bf => "BF",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ib" => Ok(Algorithm::Ib),
            "fcfs" => Ok(Algorithm::Fcfs),
            "bf" => Ok(Algorithm::Bf),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?}, expected ib, fcfs or bf"
            ))),
        }
    }
}

/// A feasible schedule for one provider, in start-time order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionPlan {
    pub algorithm: Algorithm,
    pub service_id: String,
    pub accepted: Vec<ScoredRequest>,
    pub total_reward: f64,
    pub remaining_energy: Energy,
}

impl CompositionPlan {
    fn empty(service: &EnergyService, algorithm: Algorithm) -> Self {
        CompositionPlan {
            algorithm,
            service_id: service.id.clone(),
            accepted: Vec::new(),
            total_reward: 0.0,
            remaining_energy: service.capacity,
        }
    }

    pub fn accepted_energy(&self) -> Energy {
        self.accepted.iter().map(|s| s.request.requested_energy).sum()
    }

    pub fn accepted_ids(&self) -> Vec<&str> {
        self.accepted.iter().map(|s| s.request.id.as_str()).collect()
    }

    pub fn to_document(&self) -> PlanDocument {
        PlanDocument {
            algorithm: self.algorithm,
            service_id: self.service_id.clone(),
            accepted: self
                .accepted
                .iter()
                .map(|s| AcceptedEntry {
                    request_id: s.request.id.clone(),
                    start: s.request.window.start(),
                    end: s.request.window.end(),
                    requested_energy: s.request.requested_energy,
                    reward_total: s.reward.total,
                })
                .collect(),
            total_reward: self.total_reward,
            remaining_energy: self.remaining_energy,
        }
    }
}

/// The JSON form of a [`CompositionPlan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub algorithm: Algorithm,
    pub service_id: String,
    pub accepted: Vec<AcceptedEntry>,
    pub total_reward: f64,
    pub remaining_energy: Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedEntry {
    pub request_id: String,
    pub start: ClockTime,
    pub end: ClockTime,
    pub requested_energy: Energy,
    pub reward_total: f64,
}

fn ib_order(a: &ScoredRequest, b: &ScoredRequest) -> Ordering {
    a.request
        .window
        .start()
        .cmp(&b.request.window.start())
        .then_with(|| b.reward.total.total_cmp(&a.reward.total))
        .then_with(|| a.request.id.cmp(&b.request.id))
}

fn fcfs_order(a: &ScoredRequest, b: &ScoredRequest) -> Ordering {
    a.request
        .window
        .start()
        .cmp(&b.request.window.start())
        .then_with(|| a.request.id.cmp(&b.request.id))
}

/// Single pass with a time cursor and an energy remainder. A request is
/// taken when it starts no earlier than the cursor and fits in what is left.
fn scan<'a>(
    service: &EnergyService,
    ordered: impl IntoIterator<Item = &'a ScoredRequest>,
    algorithm: Algorithm,
) -> CompositionPlan {
    let mut plan = CompositionPlan::empty(service, algorithm);
    let mut cursor = service.window.start();
    for candidate in ordered {
        let request = &candidate.request;
        if request.window.start() < cursor {
            continue;
        }
        let Some(left) = plan.remaining_energy.checked_sub(request.requested_energy) else {
            continue;
        };
        plan.remaining_energy = left;
        cursor = request.window.end();
        plan.accepted.push(candidate.clone());
    }
    plan.total_reward = provider_reward(plan.accepted.iter().map(|s| &s.reward));
    plan
}

/// Incentive-based greedy composition.
pub fn compose_ib(service: &EnergyService, scored: &[ScoredRequest]) -> CompositionPlan {
    let mut ordered: Vec<&ScoredRequest> = scored.iter().collect();
    ordered.sort_by(|a, b| ib_order(a, b));
    scan(service, ordered, Algorithm::Ib)
}

/// First come first served: same scan, reward plays no part in ordering.
pub fn compose_fcfs(service: &EnergyService, scored: &[ScoredRequest]) -> CompositionPlan {
    let mut ordered: Vec<&ScoredRequest> = scored.iter().collect();
    ordered.sort_by(|a, b| fcfs_order(a, b));
    scan(service, ordered, Algorithm::Fcfs)
}

/// Exact composition by enumerating every subset of `scored`.
///
/// Returns a maximum-reward feasible subset. Ties go to fewer requests, then
/// to the lexicographically smaller sorted id list.
pub fn compose_bf(
    service: &EnergyService,
    scored: &[ScoredRequest],
    limit: usize,
) -> Result<CompositionPlan> {
    compose_bf_counted(service, scored, limit).map(|(plan, _)| plan)
}

/// [`compose_bf`] that also reports how many subsets were examined.
pub fn compose_bf_counted(
    service: &EnergyService,
    scored: &[ScoredRequest],
    limit: usize,
) -> Result<(CompositionPlan, u64)> {
    let limit = limit.min(MAX_BF_SIZE);
    if scored.len() > limit {
        return Err(Error::BruteForceLimit {
            size: scored.len(),
            limit,
        });
    }

    // Start order makes feasibility a single forward pass per subset and
    // fixes the summation order of rewards to match the greedy scanners.
    let mut items: Vec<&ScoredRequest> = scored.iter().collect();
    items.sort_by(|a, b| fcfs_order(a, b));
    let n = items.len();
    let capacity = service.capacity.micro();
    let energy: Vec<u64> = items.iter().map(|s| s.request.requested_energy.micro()).collect();
    let starts: Vec<ClockTime> = items.iter().map(|s| s.request.window.start()).collect();
    let ends: Vec<ClockTime> = items.iter().map(|s| s.request.window.end()).collect();
    let rewards: Vec<f64> = items.iter().map(|s| s.reward.total).collect();

    let sorted_ids = |mask: u64| {
        let mut ids: Vec<&str> = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| items[i].request.id.as_str())
            .collect();
        ids.sort_unstable();
        ids
    };

    let mut best_mask = 0u64;
    let mut best_reward = 0.0f64;
    let mut best_count = 0u32;
    let subsets: u64 = 1 << n;
    'subsets: for mask in 1..subsets {
        let mut cursor = service.window.start();
        let mut used = 0u64;
        let mut reward = 0.0;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if starts[i] < cursor {
                continue 'subsets;
            }
            used += energy[i];
            if used > capacity {
                continue 'subsets;
            }
            cursor = ends[i];
            reward += rewards[i];
        }
        let count = mask.count_ones();
        let better = match reward.total_cmp(&best_reward) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                count < best_count
                    || (count == best_count && sorted_ids(mask) < sorted_ids(best_mask))
            }
        };
        if better {
            best_mask = mask;
            best_reward = reward;
            best_count = count;
        }
    }

    let mut plan = CompositionPlan::empty(service, Algorithm::Bf);
    plan.accepted = (0..n)
        .filter(|i| best_mask >> i & 1 == 1)
        .map(|i| items[i].clone())
        .collect();
    plan.remaining_energy = service
        .capacity
        .checked_sub(plan.accepted_energy())
        .expect("enumeration keeps subsets within capacity");
    plan.total_reward = provider_reward(plan.accepted.iter().map(|s| &s.reward));
    Ok((plan, subsets))
}

/// Dispatches to the composer for `algorithm`. `bf_limit` only matters for
/// brute force.
pub fn compose(
    algorithm: Algorithm,
    service: &EnergyService,
    scored: &[ScoredRequest],
    bf_limit: usize,
) -> Result<CompositionPlan> {
    match algorithm {
        Algorithm::Ib => Ok(compose_ib(service, scored)),
        Algorithm::Fcfs => Ok(compose_fcfs(service, scored)),
        Algorithm::Bf => compose_bf(service, scored, bf_limit),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum PlanViolation {
    ServiceMismatch { expected: String, found: String },
    DuplicateRequest { request_id: String },
    NotInStartOrder { request_id: String },
    Overlap { first: String, second: String },
    EnergyBudget { accepted: Energy, capacity: Energy },
    RemainingEnergy { expected: Energy, found: Energy },
    RewardSum { expected: f64, found: f64 },
    Gate { request_id: String, gate: Gate },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::ServiceMismatch { expected, found } => {
                write!(f, "plan is for service {found}, expected {expected}")
            }
            PlanViolation::DuplicateRequest { request_id } => {
                write!(f, "request {request_id} is accepted more than once")
            }
            PlanViolation::NotInStartOrder { request_id } => {
                write!(f, "request {request_id} is out of start-time order")
            }
            PlanViolation::Overlap { first, second } => {
                write!(f, "requests {first} and {second} overlap in time")
            }
            PlanViolation::EnergyBudget { accepted, capacity } => {
                write!(f, "accepted energy {accepted} exceeds capacity {capacity}")
            }
            PlanViolation::RemainingEnergy { expected, found } => {
                write!(f, "remaining energy is {found}, expected {expected}")
            }
            PlanViolation::RewardSum { expected, found } => {
                write!(f, "total reward is {found}, accepted rewards sum to {expected}")
            }
            PlanViolation::Gate { request_id, gate } => {
                write!(f, "request {request_id} fails the {gate:?} selection gate")
            }
        }
    }
}

/// Re-checks every plan invariant from scratch, plus the selection gates of
/// each accepted request. An empty result means the plan is valid.
pub fn verify_plan(
    service: &EnergyService,
    plan: &CompositionPlan,
    constants: &ModelConstants,
) -> Vec<PlanViolation> {
    let mut violations = Vec::new();
    if plan.service_id != service.id {
        violations.push(PlanViolation::ServiceMismatch {
            expected: service.id.clone(),
            found: plan.service_id.clone(),
        });
    }

    let mut ids: Vec<&str> = plan.accepted_ids();
    ids.sort_unstable();
    for pair in ids.windows(2) {
        if pair[0] == pair[1] {
            violations.push(PlanViolation::DuplicateRequest {
                request_id: pair[0].to_owned(),
            });
        }
    }

    for pair in plan.accepted.windows(2) {
        if pair[1].request.window.start() < pair[0].request.window.start() {
            violations.push(PlanViolation::NotInStartOrder {
                request_id: pair[1].request.id.clone(),
            });
        }
    }

    let mut by_start: Vec<&ScoredRequest> = plan.accepted.iter().collect();
    by_start.sort_by(|a, b| fcfs_order(a, b));
    for pair in by_start.windows(2) {
        if pair[0].request.window.end() > pair[1].request.window.start() {
            violations.push(PlanViolation::Overlap {
                first: pair[0].request.id.clone(),
                second: pair[1].request.id.clone(),
            });
        }
    }

    let accepted = plan.accepted_energy();
    match service.capacity.checked_sub(accepted) {
        None => violations.push(PlanViolation::EnergyBudget {
            accepted,
            capacity: service.capacity,
        }),
        Some(expected) if expected != plan.remaining_energy => {
            violations.push(PlanViolation::RemainingEnergy {
                expected,
                found: plan.remaining_energy,
            })
        }
        Some(_) => {}
    }

    let expected = provider_reward(plan.accepted.iter().map(|s| &s.reward));
    let sums_match = (expected - plan.total_reward).abs() <= REWARD_SUM_TOLERANCE;
    if !sums_match {
        violations.push(PlanViolation::RewardSum {
            expected,
            found: plan.total_reward,
        });
    }

    for s in &plan.accepted {
        if let Some(gate) = failed_gate(&s.request, service, constants) {
            violations.push(PlanViolation::Gate {
                request_id: s.request.id.clone(),
                gate,
            });
        }
    }
    violations
}
