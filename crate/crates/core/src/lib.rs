//! Incentive-based selection and composition of wireless energy service
//! requests.
//!
//! A provider advertises an [`EnergyService`] (capacity, location, stay
//! window). Consumers in the same microcell send [`EnergyRequest`]s. The
//! engine filters the requests the provider can physically serve, scores each
//! one with a four-attribute incentive model, and composes a non-overlapping,
//! energy-feasible schedule that maximizes the provider's reward.
//!
//! Three composition strategies are provided:
//!
//! * [`compose_ib`]: the incentive-based greedy scan (start time, then reward).
//! * [`compose_fcfs`]: first come first served (start time only).
//! * [`compose_bf`]: exhaustive enumeration, used as the exact baseline.
//!
//! The [`harness`] module runs all three over seeded workloads and aggregates
//! reward, remaining energy and execution time by provider stay time.

pub mod composition;
pub mod constants;
pub mod error;
pub mod harness;
pub mod incentive;
pub mod model;
pub mod selection;
pub mod workload;

pub use composition::{
    compose, compose_bf, compose_fcfs, compose_ib, verify_plan, Algorithm, CompositionPlan,
    PlanDocument, PlanViolation, DEFAULT_BF_LIMIT,
};
pub use constants::{AttributeWeights, ModelConstants};
pub use error::{Error, Result};
pub use incentive::{provider_reward, reward_request, RewardBreakdown};
pub use model::{
    validate_instance, ClockTime, Energy, EnergyRequest, EnergyService, Location, Subject,
    TimeWindow, ValidationFinding,
};
pub use selection::{select_nearby, ScoredRequest};
pub use workload::{ClosedRange, TransactionRecord, WorkloadSpec};
