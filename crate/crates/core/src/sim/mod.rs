//! Deterministic discrete-event kernel: event calendar, bed resources with
//! reservations, free-bed signal channels and seeded random streams.

mod accumulator;
mod calendar;
mod resource;
mod rng;
mod signal;

pub use accumulator::{OutOfOrderUpdate, TimeWeighted};
pub use calendar::{CalendarError, EventCalendar, EventHandle};
pub use resource::{BedResource, Freed, ReservationToken, ResourceError};
pub use rng::{rng_stream, variant_seed, RngStream, StreamPurpose};
pub use signal::SignalHub;
