#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use bedflow::scenario::{
    AgeGroup, DistributionSpec, EdUnit, Facility, IpUnit, ScenarioConfig, TravelLeg, TravelMatrix, Triangular,
    Weekday,
};
use bedflow::PlacementPolicy;

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/region/scenario.toml")
}

pub fn unit(id: &str, facility: &str, ages: &[AgeGroup], beds: u32, gamma: f64) -> IpUnit {
    IpUnit {
        unit_id: id.into(),
        facility_id: facility.into(),
        licensed_ages: ages.to_vec(),
        bed_count: beds,
        accept_prob: gamma,
        mean_review_hours: 1.0,
        mean_los_hours: 96.0,
        non_ed_rate: 0.0,
    }
}

pub fn facility(id: &str, ed_rate: Option<f64>, units: Vec<IpUnit>) -> Facility {
    Facility {
        facility_id: id.into(),
        name: id.into(),
        has_ed: ed_rate.is_some(),
        ed: ed_rate.map(|r| EdUnit {
            ed_id: format!("{id}-ED"),
            daily_rates: Weekday::ALL.iter().map(|&d| (d, r)).collect(),
        }),
        ip_units: units,
        is_reference: false,
    }
}

/// Straight-line travel between facilities placed on a line, 30 miles apart.
pub fn line_travel(facilities: &[Facility]) -> TravelMatrix {
    let mut m = TravelMatrix::new();
    for (i, a) in facilities.iter().enumerate() {
        let Some(ed) = &a.ed else { continue };
        for (j, b) in facilities.iter().enumerate() {
            for u in &b.ip_units {
                let miles = 30.0 * (i as f64 - j as f64).abs();
                let leg = TravelLeg {
                    drive_hours: if miles == 0.0 { 0.0 } else { miles / 50.0 + 0.1 },
                    distance_miles: miles,
                };
                m.insert(ed.ed_id.clone(), u.unit_id.clone(), leg);
            }
        }
    }
    m
}

pub fn config(mut facilities: Vec<Facility>, age_mix: &[(AgeGroup, f64)]) -> ScenarioConfig {
    facilities[0].is_reference = true;
    let travel = line_travel(&facilities);
    ScenarioConfig {
        facilities,
        travel,
        dists: DistributionSpec {
            los_samples: vec![48.0, 72.0, 96.0, 120.0, 144.0],
            reference_mean_los: 96.0,
            alpha_triangular: Triangular::default(),
            age_mix: age_mix.iter().copied().collect::<BTreeMap<_, _>>(),
        },
        horizon_days: 120,
        warmup_days: 10,
        replications: 2,
        policy: PlacementPolicy::Baseline,
        seed: 11,
        rate_multiplier: 1.0,
        los_multiplier: 1.0,
    }
}

/// Three hospitals on a line; the middle one has no unit of its own.
pub fn small_region() -> ScenarioConfig {
    use AgeGroup::*;
    config(
        vec![
            facility("A", Some(2.0), vec![unit("A-ADULT", "A", &[Adult], 8, 0.6), unit("A-YOUTH", "A", &[Child, Adolescent], 4, 0.4)]),
            facility("B", Some(1.5), vec![]),
            facility("C", Some(1.0), vec![unit("C-ADULT", "C", &[Adult, Geriatric], 10, 0.8), unit("C-YOUTH", "C", &[Adolescent], 3, 0.7)]),
            facility("D", None, vec![unit("D-ALL", "D", &[Child, Adolescent, Geriatric], 6, 1.0), unit("D-ADULT", "D", &[Adult], 6, 1.0)]),
        ],
        &[(Child, 0.05), (Adolescent, 0.25), (Adult, 0.6), (Geriatric, 0.1)],
    )
}
