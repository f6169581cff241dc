//! Discrete-event simulation of psychiatric patients moving from emergency
//! departments into inpatient units, with the referral policies, parameter
//! estimators, summary measures and rank tests used to compare them.
//!
//! The engine clock, occupancy integrals and statistics are generic over
//! [`num::Scalar`] (`f32` or `f64`); the aliases below fix them to `f64`,
//! which is what the patient-flow model uses.

pub mod estimators;
pub mod experiments;
pub mod flow;
pub mod metrics;
pub mod num;
pub mod scenario;
pub mod sim;
pub mod stats;

pub type Calendar<E> = sim::EventCalendar<f64, E>;
pub type Accumulator = sim::TimeWeighted<f64>;
pub type Occupancy = metrics::OccupancySeries<f64>;
pub type TestResult = stats::TestResult<f64>;
pub type WelchResult = stats::WelchResult<f64>;
pub type PairwiseResult = stats::PairwiseResult<f64>;

pub use flow::{PlacementPolicy, ReplicationOutput};
pub use metrics::{PatientRecord, SummaryReport};
pub use scenario::{load_scenario, ScenarioConfig};
