//! Patient outcome records, unit occupancy traces, and the summary measures
//! built from them.

mod export;
mod summary;

use std::sync::Arc;

use crate::num::Scalar;
use crate::scenario::AgeGroup;
use crate::sim::{OutOfOrderUpdate, TimeWeighted};

pub use export::{export_report, write_patient_log, write_trace, ReportFormat, ReportSet};
pub use summary::{
    bucket_shares, ci_half_width, summarize, summarize_pooled, Cohort, CohortStats, MetricGroup, Route,
    RouteStats, SummaryError, SummaryReport, DISTANCE_BUCKETS,
};

/// Outcome of one ED patient's placement episode.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub replication: u32,
    pub patient_id: u64,
    pub origin_ed: Arc<str>,
    pub origin_facility: Arc<str>,
    pub origin_is_reference: bool,
    pub age_group: AgeGroup,
    pub alpha: f64,
    pub disposition_time: f64,
    /// Time a bed was secured; `None` while still searching at the horizon.
    pub placement_time: Option<f64>,
    pub coordination_hours: Option<f64>,
    pub travel_hours: f64,
    pub distance_miles: f64,
    pub destination_unit: Option<Arc<str>>,
    pub destination_facility: Option<Arc<str>>,
    pub destination_is_reference: bool,
    pub los_hours: Option<f64>,
    /// Referral requests across every search this patient made.
    pub requests_sent: u32,
    pub searches: u32,
    /// Highest acceptance probability on the first candidate list.
    pub first_search_max_gamma: Option<f64>,
    pub transferred: bool,
    pub censored: bool,
}

impl PatientRecord {
    pub fn vulnerable(&self) -> bool {
        self.age_group.is_vulnerable()
    }

    pub fn treatment_delay_hours(&self) -> Option<f64> {
        self.coordination_hours.map(|c| c + self.travel_hours)
    }

    pub fn is_internal(&self) -> bool {
        !self.censored && !self.transferred
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordDisposition {
    Accepted,
    Discarded,
}

/// Per-replication patient log with the warm-up filter applied.
#[derive(Debug, Clone, Default)]
pub struct RecordLog {
    warmup_end: f64,
    records: Vec<PatientRecord>,
    discarded: usize,
}

impl RecordLog {
    pub fn new(warmup_end: f64) -> Self {
        RecordLog {
            warmup_end,
            records: Vec::new(),
            discarded: 0,
        }
    }

    /// Keeps the record iff its disposition falls at or after warm-up end.
    pub fn record_patient(&mut self, rec: PatientRecord) -> RecordDisposition {
        if rec.disposition_time < self.warmup_end {
            self.discarded += 1;
            RecordDisposition::Discarded
        } else {
            self.records.push(rec);
            RecordDisposition::Accepted
        }
    }

    pub fn records(&self) -> &[PatientRecord] {
        &self.records
    }

    pub fn discarded(&self) -> usize {
        self.discarded
    }

    pub fn into_records(self) -> Vec<PatientRecord> {
        self.records
    }
}

/// Step trace of a unit's occupied beds, integrated from warm-up end.
#[derive(Debug, Clone)]
pub struct OccupancySeries<T: Scalar> {
    capacity: u32,
    acc: TimeWeighted<T>,
    peak: u32,
}

impl<T: Scalar> OccupancySeries<T> {
    pub fn new(capacity: u32, measure_from: T) -> Self {
        OccupancySeries {
            capacity,
            acc: TimeWeighted::new(measure_from, T::zero()),
            peak: 0,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// Highest in-service count seen, warm-up included.
    pub fn peak(&self) -> u32 {
        self.peak
    }

    pub fn occupancy_update(&mut self, time: T, in_service: u32) -> Result<(), OutOfOrderUpdate> {
        self.acc.update(time, T::from_u32(in_service).expect("u32 fits scalar"))?;
        self.peak = self.peak.max(in_service);
        Ok(())
    }

    /// Occupied bed-hours over `[warm-up end, t_end]`.
    pub fn bed_hours(&self, t_end: T) -> T {
        self.acc.integral_until(t_end)
    }

    /// Mean fraction of beds in service over `[warm-up end, t_end]`.
    pub fn occupancy_mean(&self, t_end: T) -> Option<T> {
        let cap = T::from_u32(self.capacity)?;
        self.acc.mean_until(t_end).map(|m| m / cap)
    }
}

/// Bed-weighted mean occupancy over a set of units given `(capacity, mean)`.
pub fn aggregate_occupancy<T: Scalar>(units: impl IntoIterator<Item = (u32, T)>) -> Option<T> {
    let mut beds = T::zero();
    let mut weighted = T::zero();
    for (cap, mean) in units {
        let c = T::from_u32(cap)?;
        beds = beds + c;
        weighted = weighted + c * mean;
    }
    (beds > T::zero()).then(|| weighted / beds)
}

/// End-of-run bookkeeping for one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitStats {
    pub unit_id: Arc<str>,
    pub licensed: [bool; 4],
    pub capacity: u32,
    pub commits: u64,
    pub releases: u64,
    pub in_service: u32,
    pub reserved: u32,
    pub queued: usize,
    pub peak_in_service: u32,
    pub occupancy_mean: f64,
    pub bed_hours: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(disposition_time: f64) -> PatientRecord {
        PatientRecord {
            replication: 0,
            patient_id: 0,
            origin_ed: Arc::from("E"),
            origin_facility: Arc::from("F"),
            origin_is_reference: false,
            age_group: AgeGroup::Adult,
            alpha: 0.1,
            disposition_time,
            placement_time: None,
            coordination_hours: None,
            travel_hours: 0.0,
            distance_miles: 0.0,
            destination_unit: None,
            destination_facility: None,
            destination_is_reference: false,
            los_hours: None,
            requests_sent: 0,
            searches: 1,
            first_search_max_gamma: None,
            transferred: false,
            censored: true,
        }
    }

    #[test]
    fn warmup_boundary() {
        let mut log = RecordLog::new(30.0 * 24.0);
        assert_eq!(log.record_patient(rec(29.0 * 24.0)), RecordDisposition::Discarded);
        assert_eq!(log.record_patient(rec(30.0 * 24.0)), RecordDisposition::Accepted);
        assert_eq!(log.record_patient(rec(31.0 * 24.0)), RecordDisposition::Accepted);
        assert_eq!(log.records().len(), 2);
        assert_eq!(log.discarded(), 1);
    }

    #[test]
    fn occupancy_one_of_two_busy() {
        let mut s = OccupancySeries::<f64>::new(2, 0.0);
        s.occupancy_update(0.0, 1).unwrap();
        assert_eq!(s.occupancy_mean(10.0), Some(0.5));
    }

    #[test]
    fn occupancy_step() {
        let mut s = OccupancySeries::<f32>::new(2, 0.0);
        s.occupancy_update(0.0, 1).unwrap();
        s.occupancy_update(5.0, 2).unwrap();
        assert_eq!(s.occupancy_mean(10.0), Some(0.75));
        assert!(s.occupancy_update(4.0, 0).is_err());
    }

    #[test]
    fn occupancy_ignores_warmup() {
        let mut s = OccupancySeries::<f64>::new(4, 10.0);
        s.occupancy_update(0.0, 4).unwrap();
        s.occupancy_update(10.0, 2).unwrap();
        assert_eq!(s.occupancy_mean(20.0), Some(0.5));
        assert_eq!(s.peak(), 4);
    }

    #[test]
    fn aggregate_is_bed_weighted() {
        let agg = aggregate_occupancy([(10u32, 0.5_f64), (30, 0.9)]).unwrap();
        assert!((agg - 0.8).abs() < 1e-12);
        assert_eq!(aggregate_occupancy::<f64>([]), None);
    }
}
