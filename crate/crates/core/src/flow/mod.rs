//! Patient lifecycle on top of the simulation kernel: arrival generation,
//! attribute draws, bed search under each placement policy, signal waits,
//! travel and discharge.

mod arrivals;
mod policy;
mod region;
mod replication;

pub use arrivals::{
    assign_attributes, generate_ed_arrivals, generate_non_ed_arrivals, sample_los, sample_review, thinned_poisson,
    Attributes,
};
pub use policy::{find_placement, order_candidates, Candidate, PlacementOutcome, PlacementPolicy};
pub use region::{EdInfo, FacilityInfo, Region, UnitInfo};
pub use replication::{run_replication, Patient, Replication, ReplicationOutput, ReplicationSeeds, TraceRow};
