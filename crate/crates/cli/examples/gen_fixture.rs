//! Writes the synthetic region used by the tests and the README walkthrough.
//!
//!     cargo run -p bedflow-cli --example gen_fixture -- fixtures/region

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use bedflow::scenario::{
    save_scenario, AgeGroup, DistributionSpec, EdUnit, Facility, IpUnit, ScenarioConfig, TravelLeg, TravelMatrix,
    Triangular, Weekday,
};
use bedflow::PlacementPolicy;

const N_FACILITIES: usize = 100;
const N_WITH_UNITS: usize = 26;
const TARGET_OCCUPANCY: f64 = 0.5;
/// Share of a unit's admissions that come directly rather than from an ED.
const DIRECT_SHARE: f64 = 0.25;
/// Beds at the last-resort hospital, as a fraction of each group's ED bed-days.
const STATE_SHARE: f64 = 0.8;

/// Weekday needs-IP arrivals per day at the reference ED, Sunday first.
const REFERENCE_PROFILE: [f64; 7] = [2.31, 5.10, 5.04, 4.83, 4.38, 4.80, 2.59];

const YOUTH: &[AgeGroup] = &[AgeGroup::Child, AgeGroup::Adolescent];
const ADULT: &[AgeGroup] = &[AgeGroup::Adult];
const GERI: &[AgeGroup] = &[AgeGroup::Geriatric];

struct Site {
    id: String,
    x: f64,
    y: f64,
}

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "fixtures/region".into());
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);

    // Two population centres and a rural remainder on a 160 x 160 mile square.
    let centres = [(60.0, 70.0), (120.0, 110.0)];
    let jitter = Normal::new(0.0, 12.0).unwrap();
    let mut sites: Vec<Site> = (0..N_FACILITIES)
        .map(|i| {
            let (x, y) = if i == 0 {
                centres[0]
            } else if i % 5 < 3 {
                let c = centres[i % 2];
                (c.0 + jitter.sample(&mut rng), c.1 + jitter.sample(&mut rng))
            } else {
                (rng.random_range(0.0..160.0), rng.random_range(0.0..160.0))
            };
            Site { id: format!("F{i:03}"), x, y }
        })
        .collect();
    sites.push(Site { id: "STATE".into(), x: 95.0, y: 40.0 });

    // LoS pool: lognormal with a five-day median.
    let pool_dist = LogNormal::new((120.0_f64).ln(), 0.8).unwrap();
    let los_samples: Vec<f64> = (0..2000)
        .map(|_| (pool_dist.sample(&mut rng) * 100.0).round() / 100.0)
        .map(|x: f64| x.max(2.0))
        .collect();
    let reference_mean_los = los_samples.iter().sum::<f64>() / los_samples.len() as f64;

    let age_mix: BTreeMap<AgeGroup, f64> = [
        (AgeGroup::Child, 0.03),
        (AgeGroup::Adolescent, 0.22),
        (AgeGroup::Adult, 0.70),
        (AgeGroup::Geriatric, 0.05),
    ]
    .into_iter()
    .collect();

    // ED volumes: the reference ED follows the weekday profile exactly, the
    // others are scaled copies of it.
    let mut ed_scale = vec![1.0];
    ed_scale.extend((1..N_FACILITIES).map(|_| rng.random_range(0.03..0.17)));
    let total_ed_daily: f64 = ed_scale.iter().sum::<f64>() * REFERENCE_PROFILE.iter().sum::<f64>() / 7.0;

    // Unit layouts. Facility 0 is the reference hospital.
    let mut layouts: Vec<(usize, Vec<&[AgeGroup]>)> = vec![(0, vec![ADULT, YOUTH])];
    for i in 1..N_WITH_UNITS {
        let f = i * (N_FACILITIES / N_WITH_UNITS);
        let mut kinds = vec![ADULT];
        match i % 5 {
            0 => kinds.push(YOUTH),
            1 => kinds.push(GERI),
            2 if i % 3 == 0 => kinds = vec![YOUTH],
            _ => {}
        }
        layouts.push((f, kinds));
    }
    let state = sites.len() - 1;
    layouts.push((state, vec![ADULT, YOUTH, GERI]));

    // Beds per kind sized for the target occupancy given ED plus direct demand.
    let demand = |kind: &[AgeGroup]| kind.iter().map(|g| age_mix[g]).sum::<f64>() * total_ed_daily;
    let los_days = reference_mean_los / 24.0;
    let units_of = |kind: &[AgeGroup]| layouts.iter().flat_map(|(_, k)| k.iter()).filter(|k| **k == kind).count();

    let mut facilities = Vec::new();
    for (fi, site) in sites.iter().enumerate() {
        let has_ed = fi < N_FACILITIES;
        let ed = has_ed.then(|| EdUnit {
            ed_id: format!("{}-ED", site.id),
            daily_rates: Weekday::ALL
                .iter()
                .map(|&d| (d, REFERENCE_PROFILE[d.index()] * ed_scale[fi]))
                .map(|(d, r)| (d, (r * 10_000.0).round() / 10_000.0))
                .collect(),
        });
        let mut ip_units = Vec::new();
        if let Some((_, kinds)) = layouts.iter().find(|(f, _)| *f == fi) {
            for (ui, kind) in kinds.iter().enumerate() {
                let is_state = fi == state;
                let kind_name = match *kind {
                    k if k == YOUTH => "Y",
                    k if k == GERI => "G",
                    _ => "A",
                };
                let beds = if is_state {
                    (demand(kind) * los_days * STATE_SHARE).round() as u32
                } else {
                    let per_unit =
                        demand(kind) * los_days / (TARGET_OCCUPANCY * (1.0 - DIRECT_SHARE)) / (units_of(kind) - 1) as f64;
                    (per_unit * rng.random_range(0.6..1.4)).round().max(4.0) as u32
                };
                let mean_los_hours = if fi == 0 && ui == 0 {
                    reference_mean_los
                } else {
                    reference_mean_los * rng.random_range(0.8..1.2)
                };
                let vulnerable = *kind != ADULT;
                let accept_prob: f64 = if is_state {
                    1.0
                } else if vulnerable {
                    rng.random_range(0.25..0.65)
                } else {
                    rng.random_range(0.4..0.9)
                };
                let direct = DIRECT_SHARE * TARGET_OCCUPANCY * f64::from(beds) / (mean_los_hours / 24.0);
                ip_units.push(IpUnit {
                    unit_id: format!("{}-{kind_name}", site.id),
                    facility_id: site.id.clone(),
                    licensed_ages: kind.to_vec(),
                    bed_count: beds,
                    accept_prob: (accept_prob * 100.0).round() / 100.0,
                    mean_review_hours: (rng.random_range::<f64, _>(if vulnerable { 1.0..3.0 } else { 0.5..2.0 }) * 100.0).round() / 100.0,
                    mean_los_hours: (mean_los_hours * 100.0).round() / 100.0,
                    non_ed_rate: (direct * 1000.0).round() / 1000.0,
                });
            }
        }
        facilities.push(Facility {
            facility_id: site.id.clone(),
            name: if fi == 0 {
                "Reference Hospital".into()
            } else if fi == state {
                "State Psychiatric Hospital".into()
            } else {
                format!("Hospital {fi}")
            },
            has_ed,
            ed,
            ip_units,
            is_reference: fi == 0,
        });
    }

    let mut travel = TravelMatrix::new();
    for (fa, a) in facilities.iter().zip(&sites) {
        let Some(ed) = &fa.ed else { continue };
        for (fb, b) in facilities.iter().zip(&sites) {
            for u in &fb.ip_units {
                let leg = if fa.facility_id == fb.facility_id {
                    TravelLeg { drive_hours: 0.0, distance_miles: 0.0 }
                } else {
                    let miles = 1.2 * ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
                    TravelLeg {
                        drive_hours: ((miles / 50.0 + 0.1) * 1000.0).round() / 1000.0,
                        distance_miles: (miles * 10.0).round() / 10.0,
                    }
                };
                travel.insert(ed.ed_id.clone(), u.unit_id.clone(), leg);
            }
        }
    }

    let cfg = ScenarioConfig {
        facilities,
        travel,
        dists: DistributionSpec {
            los_samples,
            reference_mean_los: (reference_mean_los * 100.0).round() / 100.0,
            alpha_triangular: Triangular::default(),
            age_mix,
        },
        horizon_days: ScenarioConfig::DEFAULT_HORIZON_DAYS,
        warmup_days: ScenarioConfig::DEFAULT_WARMUP_DAYS,
        replications: ScenarioConfig::DEFAULT_REPLICATIONS,
        policy: PlacementPolicy::Baseline,
        seed: 7,
        rate_multiplier: 1.0,
        los_multiplier: 1.0,
    };
    let violations = bedflow::scenario::validate_scenario(&cfg);
    assert!(violations.is_empty(), "{violations:?}");
    let path = save_scenario(&cfg, &out).expect("write fixture");
    let beds: u32 = cfg.units().map(|u| u.bed_count).sum();
    println!(
        "wrote {} ({} facilities, {} units, {beds} beds, {total_ed_daily:.1} ED patients/day)",
        path.display(),
        cfg.facilities.len(),
        cfg.units().count()
    );
}
