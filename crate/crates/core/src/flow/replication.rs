use std::sync::Arc;

use super::arrivals::{assign_attributes, generate_ed_arrivals, generate_non_ed_arrivals, sample_los, sample_review};
use super::policy::{find_placement, order_candidates, Candidate, PlacementOutcome, PlacementPolicy};
use super::region::Region;
use crate::metrics::{OccupancySeries, PatientRecord, RecordLog, UnitStats};
use crate::scenario::{AgeGroup, ScenarioConfig};
use crate::sim::{
    rng_stream, BedResource, EventCalendar, Freed, ReservationToken, RngStream, SignalHub, StreamPurpose,
};

/// Seeds for one replication. Arrival and attribute streams can come from a
/// different seed than the LoS and review streams (common random numbers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicationSeeds {
    pub arrivals: u64,
    pub service: u64,
}

impl ReplicationSeeds {
    pub fn uniform(seed: u64) -> Self {
        ReplicationSeeds {
            arrivals: seed,
            service: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time_hours: f64,
    pub event_type: &'static str,
    pub entity_id: String,
    pub detail: String,
}

/// One ED patient's live state.
#[derive(Debug, Clone)]
pub struct Patient {
    pub patient_id: u64,
    pub origin_ed: usize,
    pub age_group: AgeGroup,
    pub alpha: f64,
    pub disposition_time: f64,
    pub placement_time: Option<f64>,
    pub destination_unit: Option<usize>,
    pub travel_hours: f64,
    pub los_hours: Option<f64>,
    pub requests_sent: u32,
    pub searches: u32,
    pub first_search_max_gamma: Option<f64>,
    reservation: Option<ReservationToken>,
}

impl Patient {
    pub fn coordination_hours(&self) -> Option<f64> {
        self.placement_time.map(|p| p - self.disposition_time)
    }
}

#[derive(Debug, Clone, Copy)]
struct DirectAdmit {
    los_hours: f64,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    EdArrival(usize),
    NonEdArrival(usize),
    /// A failed search has finished; start waiting for a free-bed signal.
    AwaitSignal(usize),
    /// Patient reaches the unit and occupies the reserved bed.
    Commit(usize),
    Discharge(usize),
}

impl Event {
    fn code(self) -> (u8, &'static str, usize) {
        match self {
            Event::EdArrival(p) => (1, "ed_arrival", p),
            Event::NonEdArrival(u) => (2, "non_ed_arrival", u),
            Event::AwaitSignal(p) => (3, "await_signal", p),
            Event::Commit(p) => (4, "commit", p),
            Event::Discharge(u) => (5, "discharge", u),
        }
    }
}

/// Everything a finished replication reports.
#[derive(Debug, Clone)]
pub struct ReplicationOutput {
    pub replication: u32,
    pub records: Vec<PatientRecord>,
    pub units: Vec<UnitStats>,
    pub events: u64,
    pub trace_digest: u64,
    pub trace: Option<Vec<TraceRow>>,
    /// Post-warm-up days covered by the statistics.
    pub measured_days: f64,
    pub non_ed_arrivals: u64,
    pub ed_arrivals: u64,
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

pub struct Replication<'a> {
    cfg: &'a ScenarioConfig,
    region: &'a Region,
    replication: u32,
    policy: PlacementPolicy,
    cal: EventCalendar<f64, Event>,
    beds: Vec<BedResource<DirectAdmit>>,
    occupancy: Vec<OccupancySeries<f64>>,
    hub: SignalHub<usize>,
    patients: Vec<Patient>,
    los_rng: RngStream,
    review_rng: RngStream,
    digest: Fnv,
    trace: Option<Vec<TraceRow>>,
    non_ed_arrivals: u64,
    candidates: Vec<Candidate>,
}

impl<'a> Replication<'a> {
    pub fn new(
        cfg: &'a ScenarioConfig,
        region: &'a Region,
        replication: u32,
        seeds: ReplicationSeeds,
        trace: bool,
    ) -> Self {
        let horizon = cfg.horizon_hours();
        let warmup = cfg.warmup_hours();
        let mut arrivals_rng = rng_stream(seeds.arrivals, replication, StreamPurpose::Arrivals);
        let mut attr_rng = rng_stream(seeds.arrivals, replication, StreamPurpose::Attributes);

        // ED arrivals, merged across EDs so patient ids follow disposition order.
        let mut ed_times: Vec<(f64, usize)> = region
            .eds
            .iter()
            .enumerate()
            .flat_map(|(k, ed)| {
                generate_ed_arrivals(&ed.spec, cfg.rate_multiplier, &mut arrivals_rng, horizon)
                    .into_iter()
                    .map(move |t| (t, k))
            })
            .collect();
        ed_times.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut cal = EventCalendar::new();
        let mut patients = Vec::with_capacity(ed_times.len());
        for (i, &(t, k)) in ed_times.iter().enumerate() {
            let attrs = assign_attributes(&cfg.dists, &mut attr_rng);
            patients.push(Patient {
                patient_id: i as u64,
                origin_ed: k,
                age_group: attrs.age_group,
                alpha: attrs.alpha,
                disposition_time: t,
                placement_time: None,
                destination_unit: None,
                travel_hours: 0.0,
                los_hours: None,
                requests_sent: 0,
                searches: 0,
                first_search_max_gamma: None,
                reservation: None,
            });
            cal.schedule(t, Event::EdArrival(i)).expect("arrival within horizon");
        }

        let mut non_ed_arrivals = 0;
        for (u, unit) in region.units.iter().enumerate() {
            for t in generate_non_ed_arrivals(&unit.spec, &mut arrivals_rng, horizon) {
                cal.schedule(t, Event::NonEdArrival(u)).expect("arrival within horizon");
                non_ed_arrivals += 1;
            }
        }

        Replication {
            cfg,
            region,
            replication,
            policy: cfg.policy,
            cal,
            beds: region.units.iter().map(|u| BedResource::new(u.spec.bed_count)).collect(),
            occupancy: region
                .units
                .iter()
                .map(|u| OccupancySeries::new(u.spec.bed_count, warmup))
                .collect(),
            hub: SignalHub::new(),
            patients,
            los_rng: rng_stream(seeds.service, replication, StreamPurpose::Los),
            review_rng: rng_stream(seeds.service, replication, StreamPurpose::Review),
            digest: Fnv::new(),
            trace: trace.then(Vec::new),
            non_ed_arrivals,
            candidates: Vec::new(),
        }
    }

    pub fn run(mut self) -> ReplicationOutput {
        let horizon = self.cfg.horizon_hours();
        while let Some((t, ev)) = self.cal.pop_until(horizon) {
            self.log(t, ev);
            self.handle(t, ev);
        }
        self.cal.advance_to(horizon);
        self.finish()
    }

    fn log(&mut self, t: f64, ev: Event) {
        let (code, name, idx) = ev.code();
        self.digest.write(&t.to_bits().to_le_bytes());
        self.digest.write(&[code]);
        self.digest.write(&(idx as u64).to_le_bytes());
        if let Some(trace) = self.trace.as_mut() {
            let (entity_id, detail) = match ev {
                Event::EdArrival(p) | Event::AwaitSignal(p) | Event::Commit(p) => {
                    let pat = &self.patients[p];
                    let detail = match pat.destination_unit {
                        Some(u) => format!("unit={}", self.region.units[u].id),
                        None => format!("age={}", pat.age_group),
                    };
                    (format!("patient-{p}"), detail)
                }
                Event::NonEdArrival(u) | Event::Discharge(u) => (
                    self.region.units[u].id.to_string(),
                    format!("in_service={}", self.beds[u].in_service()),
                ),
            };
            trace.push(TraceRow {
                time_hours: t,
                event_type: name,
                entity_id,
                detail,
            });
        }
    }

    fn handle(&mut self, t: f64, ev: Event) {
        match ev {
            Event::EdArrival(p) => self.attempt_placement(p, t),
            Event::AwaitSignal(p) => {
                let group = self.patients[p].age_group;
                self.hub.subscribe(group, p as u64, p);
            }
            Event::NonEdArrival(u) => {
                let los = sample_los(&self.region.units[u].spec, &self.cfg.dists, &mut self.los_rng, self.cfg.los_multiplier);
                if self.beds[u].seize_or_enqueue(DirectAdmit { los_hours: los }).is_some() {
                    self.touch_occupancy(u, t);
                    self.schedule(t + los, Event::Discharge(u));
                }
            }
            Event::Commit(p) => {
                let u = self.patients[p].destination_unit.expect("committed patient has a unit");
                let token = self.patients[p].reservation.take().expect("reservation outstanding");
                self.beds[u].commit(token).expect("valid reservation");
                self.touch_occupancy(u, t);
                let los = self.patients[p].los_hours.expect("placed patient has LoS");
                self.schedule(t + los, Event::Discharge(u));
            }
            Event::Discharge(u) => match self.beds[u].release().expect("discharge from occupied unit") {
                Freed::HandedToQueue(next) => {
                    self.schedule(t + next.los_hours, Event::Discharge(u));
                }
                Freed::Idle => {
                    self.touch_occupancy(u, t);
                    for g in AgeGroup::ALL {
                        if self.region.units[u].licensed[g.index()] {
                            self.broadcast(g, t);
                        }
                    }
                }
            },
        }
    }

    fn schedule(&mut self, at: f64, ev: Event) {
        self.cal.schedule(at, ev).expect("events are never scheduled in the past");
    }

    fn touch_occupancy(&mut self, u: usize, t: f64) {
        self.occupancy[u]
            .occupancy_update(t, self.beds[u].in_service())
            .expect("calendar time is monotone");
    }

    /// Wakes waiters of `group` one by one; each re-runs its search against
    /// the availability left by those woken before it.
    fn broadcast(&mut self, group: AgeGroup, t: f64) -> usize {
        let waiters = self.hub.drain(group);
        let n = waiters.len();
        for (_, p) in waiters {
            self.attempt_placement(p, t);
        }
        n
    }

    fn build_candidates(&mut self, p: usize) {
        let pat = &self.patients[p];
        let ed = pat.origin_ed;
        let origin_facility = self.region.eds[ed].facility;
        self.candidates.clear();
        for &u in &self.region.units_by_group[pat.age_group.index()] {
            if self.beds[u].available() == 0 {
                continue;
            }
            let unit = &self.region.units[u];
            let own = unit.facility == origin_facility;
            self.candidates.push(Candidate {
                unit: u,
                gamma: if own { 1.0 } else { unit.spec.accept_prob },
                drive_hours: if own { 0.0 } else { self.region.travel[ed][u].drive_hours },
                mean_review_hours: unit.spec.mean_review_hours,
            });
        }
        order_candidates(self.policy, &mut self.candidates);
    }

    fn attempt_placement(&mut self, p: usize, t: f64) {
        self.build_candidates(p);
        let alpha = self.patients[p].alpha;
        let review_rng = &mut self.review_rng;
        let outcome = find_placement(alpha, self.policy, &self.candidates, |c| {
            sample_review(c.mean_review_hours, review_rng)
        });

        let max_gamma = self.candidates.iter().map(|c| c.gamma).reduce(f64::max);
        let pat = &mut self.patients[p];
        if pat.searches == 0 {
            pat.first_search_max_gamma = max_gamma;
        }
        pat.searches += 1;
        pat.requests_sent += outcome.requests_sent();

        match outcome {
            PlacementOutcome::Placed { unit, coordination_hours, .. } => {
                let token = self.beds[unit].reserve().expect("candidate had a free bed");
                let ed = self.patients[p].origin_ed;
                let same_facility = self.region.units[unit].facility == self.region.eds[ed].facility;
                let travel = if same_facility { 0.0 } else { self.region.travel[ed][unit].drive_hours };
                let los = sample_los(
                    &self.region.units[unit].spec,
                    &self.cfg.dists,
                    &mut self.los_rng,
                    self.cfg.los_multiplier,
                );
                let pat = &mut self.patients[p];
                let placed_at = t + coordination_hours;
                pat.placement_time = Some(placed_at);
                pat.destination_unit = Some(unit);
                pat.travel_hours = travel;
                pat.los_hours = Some(los);
                pat.reservation = Some(token);
                self.schedule(placed_at + travel, Event::Commit(p));
            }
            PlacementOutcome::NoAcceptor { coordination_hours, .. } => {
                self.schedule(t + coordination_hours, Event::AwaitSignal(p));
            }
        }
    }

    fn finish(self) -> ReplicationOutput {
        let horizon = self.cfg.horizon_hours();
        let warmup = self.cfg.warmup_hours();
        let region = self.region;
        let mut log = RecordLog::new(warmup);
        for pat in &self.patients {
            let ed = &region.eds[pat.origin_ed];
            let origin_facility = &region.facilities[ed.facility];
            let placed = pat.placement_time.is_some_and(|pt| pt <= horizon);
            let dest = pat.destination_unit.filter(|_| placed);
            let dest_facility = dest.map(|u| &region.facilities[region.units[u].facility]);
            let transferred = dest.is_some_and(|u| region.units[u].facility != ed.facility);
            log.record_patient(PatientRecord {
                replication: self.replication,
                patient_id: pat.patient_id,
                origin_ed: Arc::clone(&ed.id),
                origin_facility: Arc::clone(&origin_facility.id),
                origin_is_reference: origin_facility.is_reference,
                age_group: pat.age_group,
                alpha: pat.alpha,
                disposition_time: pat.disposition_time,
                placement_time: pat.placement_time.filter(|_| placed),
                coordination_hours: pat.coordination_hours().filter(|_| placed),
                travel_hours: if placed { pat.travel_hours } else { 0.0 },
                distance_miles: match dest {
                    Some(u) if transferred => region.travel[pat.origin_ed][u].distance_miles,
                    _ => 0.0,
                },
                destination_unit: dest.map(|u| Arc::clone(&region.units[u].id)),
                destination_facility: dest_facility.map(|f| Arc::clone(&f.id)),
                destination_is_reference: dest_facility.is_some_and(|f| f.is_reference),
                los_hours: pat.los_hours.filter(|_| placed),
                requests_sent: pat.requests_sent,
                searches: pat.searches,
                first_search_max_gamma: pat.first_search_max_gamma,
                transferred,
                censored: !placed,
            });
        }

        let units = region
            .units
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let bed = &self.beds[i];
                let occ = &self.occupancy[i];
                UnitStats {
                    unit_id: Arc::clone(&u.id),
                    licensed: u.licensed,
                    capacity: bed.capacity(),
                    commits: bed.commits(),
                    releases: bed.releases(),
                    in_service: bed.in_service(),
                    reserved: bed.reserved(),
                    queued: bed.queue_len(),
                    peak_in_service: occ.peak(),
                    occupancy_mean: occ.occupancy_mean(horizon).unwrap_or(f64::NAN),
                    bed_hours: occ.bed_hours(horizon),
                }
            })
            .collect();

        ReplicationOutput {
            replication: self.replication,
            records: log.into_records(),
            units,
            events: self.cal.processed(),
            trace_digest: self.digest.0,
            trace: self.trace,
            measured_days: (horizon - warmup) / crate::scenario::HOURS_PER_DAY,
            non_ed_arrivals: self.non_ed_arrivals,
            ed_arrivals: self.patients.len() as u64,
        }
    }
}

/// Runs one replication of `cfg` to its horizon.
pub fn run_replication(
    cfg: &ScenarioConfig,
    region: &Region,
    replication: u32,
    seeds: ReplicationSeeds,
    trace: bool,
) -> ReplicationOutput {
    Replication::new(cfg, region, replication, seeds, trace).run()
}
