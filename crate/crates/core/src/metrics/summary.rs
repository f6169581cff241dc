use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{aggregate_occupancy, PatientRecord, UnitStats};
use crate::num::{mean, median, sample_variance, Scalar};
use crate::scenario::AgeGroup;

/// Cumulative distance radii (miles) for the transfer-distance shares.
pub const DISTANCE_BUCKETS: [f64; 3] = [10.0, 25.0, 50.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SummaryError {
    #[error("no accepted patient records to summarize")]
    EmptyLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cohort {
    All,
    Vulnerable,
    Adult,
}

impl Cohort {
    pub const ALL: [Cohort; 3] = [Cohort::All, Cohort::Vulnerable, Cohort::Adult];

    pub fn contains(self, rec: &PatientRecord) -> bool {
        match self {
            Cohort::All => true,
            Cohort::Vulnerable => rec.vulnerable(),
            Cohort::Adult => !rec.vulnerable(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cohort::All => "all",
            Cohort::Vulnerable => "vulnerable",
            Cohort::Adult => "adult",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    Any,
    Internal,
    Transferred,
}

impl Route {
    pub const ALL: [Route; 3] = [Route::Any, Route::Internal, Route::Transferred];

    /// Placed patients on this route; censored records never match.
    pub fn contains(self, rec: &PatientRecord) -> bool {
        !rec.censored
            && match self {
                Route::Any => true,
                Route::Internal => !rec.transferred,
                Route::Transferred => rec.transferred,
            }
    }

    pub fn name(self) -> &'static str {
        match self {
            Route::Any => "placed",
            Route::Internal => "internal",
            Route::Transferred => "transferred",
        }
    }
}

/// A (cohort, route) slice of patients, e.g. `vulnerable-transferred`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricGroup {
    pub cohort: Cohort,
    pub route: Route,
}

impl MetricGroup {
    pub const VULNERABLE_TRANSFERRED: MetricGroup = MetricGroup {
        cohort: Cohort::Vulnerable,
        route: Route::Transferred,
    };
    pub const ALL_PLACED: MetricGroup = MetricGroup {
        cohort: Cohort::All,
        route: Route::Any,
    };

    pub fn contains(self, rec: &PatientRecord) -> bool {
        self.cohort.contains(rec) && self.route.contains(rec)
    }
}

impl fmt::Display for MetricGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.route {
            Route::Any => f.write_str(self.cohort.name()),
            r => write!(f, "{}-{}", self.cohort.name(), r.name()),
        }
    }
}

impl FromStr for MetricGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, r) = s.split_once('-').unwrap_or((s, "placed"));
        let cohort = Cohort::ALL
            .into_iter()
            .find(|x| x.name() == c)
            .ok_or_else(|| format!("unknown cohort `{c}` (all, vulnerable, adult)"))?;
        let route = Route::ALL
            .into_iter()
            .find(|x| x.name() == r)
            .ok_or_else(|| format!("unknown route `{r}` (placed, internal, transferred)"))?;
        Ok(MetricGroup { cohort, route })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RouteStats {
    pub count: usize,
    pub mean_coordination_hours: Option<f64>,
    pub median_coordination_hours: Option<f64>,
    pub mean_delay_hours: Option<f64>,
    pub median_delay_hours: Option<f64>,
    pub mean_travel_hours: Option<f64>,
    pub mean_distance_miles: Option<f64>,
    pub mean_requests: Option<f64>,
}

impl RouteStats {
    fn from_records<'a>(recs: impl Iterator<Item = &'a PatientRecord>) -> RouteStats {
        let mut coord = Vec::new();
        let mut delay = Vec::new();
        let mut travel = Vec::new();
        let mut dist = Vec::new();
        let mut reqs = Vec::new();
        for r in recs {
            if let (Some(c), Some(d)) = (r.coordination_hours, r.treatment_delay_hours()) {
                coord.push(c);
                delay.push(d);
                travel.push(r.travel_hours);
                dist.push(r.distance_miles);
                reqs.push(f64::from(r.requests_sent));
            }
        }
        RouteStats {
            count: coord.len(),
            mean_coordination_hours: mean(&coord),
            median_coordination_hours: median(&coord),
            mean_delay_hours: mean(&delay),
            median_delay_hours: median(&delay),
            mean_travel_hours: mean(&travel),
            mean_distance_miles: mean(&dist),
            mean_requests: mean(&reqs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CohortStats {
    pub accepted: usize,
    pub internal: usize,
    pub transferred: usize,
    pub censored: usize,
    /// Percent of placed patients sent to another facility.
    pub pct_transferred: Option<f64>,
    /// Percent of transferred patients placed within each `DISTANCE_BUCKETS` radius.
    pub within_miles: [Option<f64>; 3],
    pub into_reference_per_day: Option<f64>,
    pub out_of_reference_per_day: Option<f64>,
    /// Indexed like `Route::ALL`.
    pub routes: [RouteStats; 3],
}

impl CohortStats {
    pub fn route(&self, route: Route) -> &RouteStats {
        &self.routes[Route::ALL.iter().position(|&r| r == route).unwrap()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub label: String,
    /// `None` for the pooled report.
    pub replication: Option<u32>,
    pub measured_days: f64,
    /// Indexed like `Cohort::ALL`.
    pub cohorts: [CohortStats; 3],
    pub occupancy_overall: Option<f64>,
    /// Bed-weighted occupancy of units licensed for each age group.
    pub occupancy_by_group: [Option<f64>; 4],
}

impl SummaryReport {
    pub fn cohort(&self, cohort: Cohort) -> &CohortStats {
        &self.cohorts[Cohort::ALL.iter().position(|&c| c == cohort).unwrap()]
    }

    pub fn group(&self, group: MetricGroup) -> &RouteStats {
        self.cohort(group.cohort).route(group.route)
    }

    /// Flattened `(name, value)` pairs in a fixed order, used for export and
    /// for confidence intervals across replications.
    pub fn metrics(&self) -> Vec<(String, Option<f64>)> {
        let mut out = Vec::new();
        let count = |n: usize| Some(n as f64);
        for (cohort, cs) in Cohort::ALL.iter().zip(&self.cohorts) {
            let c = cohort.name();
            out.push((format!("{c}.accepted"), count(cs.accepted)));
            out.push((format!("{c}.internal"), count(cs.internal)));
            out.push((format!("{c}.transferred"), count(cs.transferred)));
            out.push((format!("{c}.censored"), count(cs.censored)));
            out.push((format!("{c}.pct_transferred"), cs.pct_transferred));
            for (r, share) in DISTANCE_BUCKETS.iter().zip(cs.within_miles) {
                out.push((format!("{c}.pct_within_{r}_miles"), share));
            }
            out.push((format!("{c}.into_reference_per_day"), cs.into_reference_per_day));
            out.push((format!("{c}.out_of_reference_per_day"), cs.out_of_reference_per_day));
            for (route, rs) in Route::ALL.iter().zip(&cs.routes) {
                let p = format!("{c}.{}", route.name());
                out.push((format!("{p}.count"), count(rs.count)));
                out.push((format!("{p}.mean_coordination_hours"), rs.mean_coordination_hours));
                out.push((format!("{p}.median_coordination_hours"), rs.median_coordination_hours));
                out.push((format!("{p}.mean_delay_hours"), rs.mean_delay_hours));
                out.push((format!("{p}.median_delay_hours"), rs.median_delay_hours));
                out.push((format!("{p}.mean_travel_hours"), rs.mean_travel_hours));
                out.push((format!("{p}.mean_distance_miles"), rs.mean_distance_miles));
                out.push((format!("{p}.mean_requests"), rs.mean_requests));
            }
        }
        out.push(("occupancy.all".into(), self.occupancy_overall));
        for (g, occ) in AgeGroup::ALL.iter().zip(self.occupancy_by_group) {
            out.push((format!("occupancy.{g}"), occ));
        }
        out
    }
}

/// Cumulative percent of `distances` within each radius.
pub fn bucket_shares<T: Scalar>(distances: &[T], radii: &[T]) -> Vec<Option<T>> {
    radii
        .iter()
        .map(|&r| {
            (!distances.is_empty()).then(|| {
                let within = distances.iter().filter(|&&d| d <= r).count();
                T::lit(100.0) * T::from_count(within) / T::from_count(distances.len())
            })
        })
        .collect()
}

/// Half-width of the 95% t-interval for the mean of `values`.
pub fn ci_half_width<T: Scalar>(values: &[T]) -> Option<T> {
    let n = values.len();
    let var = sample_variance(values)?;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).ok()?.inverse_cdf(0.975);
    Some(T::lit(t) * (var / T::from_count(n)).sqrt())
}

fn percent(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| 100.0 * part as f64 / whole as f64)
}

/// Summary measures over accepted records and unit statistics.
/// `measured_days` is the post-warm-up time the records cover (summed over
/// replications when pooling).
pub fn summarize(
    label: &str,
    replication: Option<u32>,
    records: &[PatientRecord],
    units: &[UnitStats],
    measured_days: f64,
) -> Result<SummaryReport, SummaryError> {
    if records.is_empty() {
        return Err(SummaryError::EmptyLog);
    }
    let per_day = |n: usize| (measured_days > 0.0).then(|| n as f64 / measured_days);
    let cohorts = Cohort::ALL.map(|cohort| {
        let members: Vec<&PatientRecord> = records.iter().filter(|r| cohort.contains(r)).collect();
        let internal = members.iter().filter(|r| r.is_internal()).count();
        let transferred = members.iter().filter(|r| !r.censored && r.transferred).count();
        let censored = members.iter().filter(|r| r.censored).count();
        let distances: Vec<f64> = members
            .iter()
            .filter(|r| !r.censored && r.transferred)
            .map(|r| r.distance_miles)
            .collect();
        let shares = bucket_shares(&distances, &DISTANCE_BUCKETS);
        let into_ref = members
            .iter()
            .filter(|r| !r.censored && r.transferred && r.destination_is_reference && !r.origin_is_reference)
            .count();
        let out_of_ref = members
            .iter()
            .filter(|r| !r.censored && r.transferred && r.origin_is_reference)
            .count();
        CohortStats {
            accepted: members.len(),
            internal,
            transferred,
            censored,
            pct_transferred: percent(transferred, internal + transferred),
            within_miles: [shares[0], shares[1], shares[2]],
            into_reference_per_day: per_day(into_ref),
            out_of_reference_per_day: per_day(out_of_ref),
            routes: Route::ALL.map(|route| {
                RouteStats::from_records(members.iter().copied().filter(|r| route.contains(r)))
            }),
        }
    });

    let occ = |u: &UnitStats| (u.capacity, u.occupancy_mean);
    let occupancy_overall = aggregate_occupancy(units.iter().filter(|u| u.occupancy_mean.is_finite()).map(occ));
    let occupancy_by_group = std::array::from_fn(|g| {
        aggregate_occupancy(
            units
                .iter()
                .filter(|u| u.licensed[g] && u.occupancy_mean.is_finite())
                .map(occ),
        )
    });

    Ok(SummaryReport {
        label: label.to_string(),
        replication,
        measured_days,
        cohorts,
        occupancy_overall,
        occupancy_by_group,
    })
}

/// Pooled report over several replications: record-level statistics use all
/// records together, rates use the summed measured time.
pub fn summarize_pooled<'a>(
    label: &str,
    parts: impl IntoIterator<Item = (&'a [PatientRecord], &'a [UnitStats], f64)>,
) -> Result<SummaryReport, SummaryError> {
    let mut records = Vec::new();
    let mut units = Vec::new();
    let mut days = 0.0;
    for (r, u, d) in parts {
        records.extend_from_slice(r);
        units.extend_from_slice(u);
        days += d;
    }
    summarize(label, None, &records, &units, days)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    pub(crate) fn placed(age: AgeGroup, coordination: f64, transferred: bool, miles: f64) -> PatientRecord {
        PatientRecord {
            replication: 0,
            patient_id: 0,
            origin_ed: Arc::from("E"),
            origin_facility: Arc::from("F"),
            origin_is_reference: false,
            age_group: age,
            alpha: 0.1,
            disposition_time: 800.0,
            placement_time: Some(800.0 + coordination),
            coordination_hours: Some(coordination),
            travel_hours: if transferred { miles / 50.0 } else { 0.0 },
            distance_miles: miles,
            destination_unit: Some(Arc::from("U")),
            destination_facility: Some(Arc::from(if transferred { "G" } else { "F" })),
            destination_is_reference: false,
            los_hours: Some(100.0),
            requests_sent: 1,
            searches: 1,
            first_search_max_gamma: Some(1.0),
            transferred,
            censored: false,
        }
    }

    #[test]
    fn single_internal_adult() {
        let recs = [placed(AgeGroup::Adult, 0.2, false, 0.0)];
        let s = summarize("x", Some(0), &recs, &[], 335.0).unwrap();
        let adult = s.group(MetricGroup { cohort: Cohort::Adult, route: Route::Any });
        assert_eq!(adult.mean_coordination_hours, Some(0.2));
        assert_eq!(adult.median_coordination_hours, Some(0.2));
        assert_eq!(s.cohort(Cohort::Adult).pct_transferred, Some(0.0));
        assert_eq!(s.cohort(Cohort::Vulnerable).accepted, 0);
        assert_eq!(s.group(MetricGroup::VULNERABLE_TRANSFERRED).mean_coordination_hours, None);
    }

    #[test]
    fn distance_buckets_cumulative() {
        let shares = bucket_shares(&[5.0_f64, 20.0, 60.0], &DISTANCE_BUCKETS);
        let expect = [100.0 / 3.0, 200.0 / 3.0, 200.0 / 3.0];
        for (s, e) in shares.iter().zip(expect) {
            assert!((s.unwrap() - e).abs() < 1e-9);
        }
        assert_eq!(bucket_shares::<f32>(&[], &[1.0]), vec![None]);
    }

    #[test]
    fn ages_17_and_18() {
        let recs = [
            placed(AgeGroup::from_age(17), 1.0, true, 5.0),
            placed(AgeGroup::from_age(18), 1.0, true, 5.0),
        ];
        let s = summarize("x", None, &recs, &[], 1.0).unwrap();
        assert_eq!(s.cohort(Cohort::Vulnerable).accepted, 1);
        assert_eq!(s.cohort(Cohort::Adult).accepted, 1);
    }

    #[test]
    fn empty_log_errors() {
        assert_eq!(summarize("x", None, &[], &[], 1.0), Err(SummaryError::EmptyLog));
    }

    #[test]
    fn route_counts_partition_accepted() {
        let mut censored = placed(AgeGroup::Child, 0.0, false, 0.0);
        censored.censored = true;
        censored.coordination_hours = None;
        censored.placement_time = None;
        let recs = [
            placed(AgeGroup::Child, 1.0, true, 12.0),
            placed(AgeGroup::Child, 0.5, false, 0.0),
            censored,
        ];
        let s = summarize("x", None, &recs, &[], 10.0).unwrap();
        let v = s.cohort(Cohort::Vulnerable);
        assert_eq!((v.internal, v.transferred, v.censored, v.accepted), (1, 1, 1, 3));
        assert_eq!(v.route(Route::Any).count, 2);
        assert_eq!(v.within_miles, [Some(0.0), Some(100.0), Some(100.0)]);
    }

    #[test]
    fn reference_transfer_rates() {
        let mut into = placed(AgeGroup::Adult, 1.0, true, 30.0);
        into.destination_is_reference = true;
        let mut out = placed(AgeGroup::Geriatric, 1.0, true, 30.0);
        out.origin_is_reference = true;
        let s = summarize("x", None, &[into, out], &[], 4.0).unwrap();
        assert_eq!(s.cohort(Cohort::All).into_reference_per_day, Some(0.25));
        assert_eq!(s.cohort(Cohort::All).out_of_reference_per_day, Some(0.25));
        assert_eq!(s.cohort(Cohort::Adult).out_of_reference_per_day, Some(0.0));
    }

    #[test]
    fn ci_matches_t_table() {
        // n = 5, s = sqrt(2.5): t(0.975, 4) = 2.776445
        let h = ci_half_width(&[1.0_f64, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((h - 2.776445 * (2.5_f64 / 5.0).sqrt()).abs() < 1e-5);
        assert_eq!(ci_half_width(&[1.0_f64]), None);
    }

    #[test]
    fn group_parse() {
        assert_eq!("vulnerable-transferred".parse(), Ok(MetricGroup::VULNERABLE_TRANSFERRED));
        assert_eq!("all".parse(), Ok(MetricGroup::ALL_PLACED));
        assert_eq!(MetricGroup::VULNERABLE_TRANSFERRED.to_string(), "vulnerable-transferred");
        assert!("kids".parse::<MetricGroup>().is_err());
    }

    #[test]
    fn pooled_mean_is_record_weighted() {
        let a = [placed(AgeGroup::Adult, 1.0, false, 0.0)];
        let b = [placed(AgeGroup::Adult, 4.0, false, 0.0), placed(AgeGroup::Adult, 4.0, false, 0.0)];
        let pooled = summarize_pooled("x", [(&a[..], &[][..], 1.0), (&b[..], &[][..], 1.0)]).unwrap();
        assert_eq!(pooled.group(MetricGroup::ALL_PLACED).mean_coordination_hours, Some(3.0));
    }
}
