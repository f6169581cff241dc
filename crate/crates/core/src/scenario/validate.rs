use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ScenarioConfig, Weekday};
use crate::flow::PlacementPolicy;

/// One broken invariant: which entity, which field, which rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(entity: impl Into<String>, field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            entity: entity.into(),
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.entity, self.field, self.rule)
    }
}

fn nonneg_finite(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Checks every scenario invariant. Empty result means the config is usable.
pub fn validate_scenario(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |e: &str, f: &str, r: &str| out.push(Violation::new(e, f, r));

    // run controls
    if cfg.horizon_days == 0 {
        push("run", "horizon_days", "must be positive");
    }
    if cfg.warmup_days >= cfg.horizon_days {
        push("run", "warmup_days", "must be less than horizon_days");
    }
    if cfg.replications == 0 {
        push("run", "replications", "must be positive");
    }
    if !positive_finite(cfg.rate_multiplier) {
        push("run", "rate_multiplier", "must be finite and > 0");
    }
    if !positive_finite(cfg.los_multiplier) {
        push("run", "los_multiplier", "must be finite and > 0");
    }
    if let PlacementPolicy::ConcurrentProximity { m } | PlacementPolicy::ConcurrentAcceptance { m } =
        cfg.policy
    {
        if m == 0 {
            push("policy", "m", "must be >= 1");
        }
    }

    // distributions
    let d = &cfg.dists;
    if d.los_samples.is_empty() {
        push("dists", "los_samples", "must be nonempty");
    }
    if let Some(i) = d.los_samples.iter().position(|&s| !positive_finite(s)) {
        push("dists", "los_samples", &format!("sample {i} must be finite and > 0"));
    }
    if !positive_finite(d.reference_mean_los) {
        push("dists", "reference_mean_los", "must be finite and > 0");
    }
    let t = d.alpha_triangular;
    if !(0.0 <= t.min && t.min <= t.mode && t.mode <= t.max && t.max <= 1.0) {
        push("dists", "alpha_triangular", "requires 0 <= min <= mode <= max <= 1");
    }
    if d.age_mix.values().any(|&p| !nonneg_finite(p)) {
        push("dists", "age_mix", "probabilities must be finite and >= 0");
    }
    let total: f64 = d.age_mix.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        push("dists", "age_mix", &format!("must sum to 1 (got {total})"));
    }

    // facilities, EDs, units
    let mut facility_ids = BTreeSet::new();
    let mut ed_ids: BTreeMap<&str, &str> = BTreeMap::new();
    let mut unit_ids: BTreeMap<&str, &str> = BTreeMap::new();
    let mut references = 0usize;
    for fac in &cfg.facilities {
        let fid = fac.facility_id.as_str();
        let entity = format!("facility {fid}");
        if !facility_ids.insert(fid) {
            push(&entity, "facility_id", "duplicate id");
        }
        if fac.is_reference {
            references += 1;
        }
        if !fac.has_ed && fac.ip_units.is_empty() {
            push(&entity, "has_ed", "facility needs an ED or at least one IP unit");
        }
        if fac.has_ed != fac.ed.is_some() {
            push(&entity, "ed", "ed must be present exactly when has_ed is true");
        }
        if fac.ip_units.len() > 4 {
            push(&entity, "ip_units", "at most 4 IP units per facility");
        }
        let mut seen_sets = BTreeSet::new();
        for unit in &fac.ip_units {
            let mut set = unit.licensed_ages.clone();
            set.sort();
            set.dedup();
            if !set.is_empty() && !seen_sets.insert(set) {
                push(&entity, "ip_units", &format!("unit {} repeats a licensed-age set", unit.unit_id));
            }
        }

        if let Some(ed) = &fac.ed {
            let e = format!("ed {}", ed.ed_id);
            if ed_ids.insert(&ed.ed_id, fid).is_some() {
                push(&e, "ed_id", "duplicate id");
            }
            for day in Weekday::ALL {
                match ed.daily_rates.get(&day) {
                    None => push(&e, "daily_rates", &format!("missing {}", day.name())),
                    Some(&r) if !nonneg_finite(r) => {
                        push(&e, "daily_rates", &format!("{} rate must be finite and >= 0", day.name()))
                    }
                    _ => {}
                }
            }
        }

        for unit in &fac.ip_units {
            let e = format!("unit {}", unit.unit_id);
            if unit_ids.insert(&unit.unit_id, fid).is_some() {
                push(&e, "unit_id", "duplicate id");
            }
            if unit.facility_id != fac.facility_id {
                push(&e, "facility_id", &format!("does not match parent facility {fid}"));
            }
            if unit.licensed_ages.is_empty() {
                push(&e, "licensed_ages", "must be nonempty");
            }
            if unit.bed_count < 1 {
                push(&e, "bed_count", "must be >= 1");
            }
            if !(unit.accept_prob.is_finite() && (0.0..=1.0).contains(&unit.accept_prob)) {
                push(&e, "accept_prob", "must lie in [0, 1]");
            }
            if !positive_finite(unit.mean_review_hours) {
                push(&e, "mean_review_hours", "must be finite and > 0");
            }
            if !positive_finite(unit.mean_los_hours) {
                push(&e, "mean_los_hours", "must be finite and > 0");
            }
            if !nonneg_finite(unit.non_ed_rate) {
                push(&e, "non_ed_rate", "must be finite and >= 0");
            }
        }
    }
    if references > 1 {
        push("scenario", "is_reference", "reference facility not unique");
    }

    // travel
    for (ed, unit, leg) in cfg.travel.iter() {
        let e = format!("travel ({ed}, {unit})");
        let ed_fac = ed_ids.get(ed);
        let unit_fac = unit_ids.get(unit);
        if ed_fac.is_none() {
            push(&e, "ed_id", "unknown ED");
        }
        if unit_fac.is_none() {
            push(&e, "unit_id", "unknown IP unit");
        }
        if !nonneg_finite(leg.drive_hours) {
            push(&e, "drive_hours", "must be finite and >= 0");
        }
        if !nonneg_finite(leg.distance_miles) {
            push(&e, "distance_miles", "must be finite and >= 0");
        }
        if let (Some(a), Some(b)) = (ed_fac, unit_fac) {
            if a == b && (leg.drive_hours != 0.0 || leg.distance_miles != 0.0) {
                push(&e, "drive_hours", "same-facility travel must be 0");
            }
        }
    }
    for ed in ed_ids.keys() {
        for unit in unit_ids.keys() {
            if cfg.travel.get(ed, unit).is_none() {
                push(&format!("travel ({ed}, {unit})"), "travel", "missing entry for pair");
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{
        AgeGroup, DistributionSpec, EdUnit, Facility, IpUnit, TravelLeg, TravelMatrix, Triangular,
    };

    pub(crate) fn minimal() -> ScenarioConfig {
        let rates = Weekday::ALL.iter().map(|&d| (d, 1.0)).collect();
        let mut travel = TravelMatrix::new();
        travel.insert("F1-ED", "F1-A", TravelLeg { drive_hours: 0.0, distance_miles: 0.0 });
        ScenarioConfig {
            facilities: vec![Facility {
                facility_id: "F1".into(),
                name: "One".into(),
                has_ed: true,
                ed: Some(EdUnit { ed_id: "F1-ED".into(), daily_rates: rates }),
                ip_units: vec![IpUnit {
                    unit_id: "F1-A".into(),
                    facility_id: "F1".into(),
                    licensed_ages: vec![AgeGroup::Adult],
                    bed_count: 5,
                    accept_prob: 0.8,
                    mean_review_hours: 1.0,
                    mean_los_hours: 100.0,
                    non_ed_rate: 0.0,
                }],
                is_reference: true,
            }],
            travel,
            dists: DistributionSpec {
                los_samples: vec![100.0],
                reference_mean_los: 100.0,
                alpha_triangular: Triangular::default(),
                age_mix: [(AgeGroup::Adult, 1.0)].into_iter().collect(),
            },
            horizon_days: 365,
            warmup_days: 30,
            replications: 1,
            policy: PlacementPolicy::Baseline,
            seed: 1,
            rate_multiplier: 1.0,
            los_multiplier: 1.0,
        }
    }

    #[test]
    fn minimal_is_valid() {
        assert!(validate_scenario(&minimal()).is_empty());
    }

    #[test]
    fn accept_prob_out_of_range() {
        let mut cfg = minimal();
        cfg.facilities[0].ip_units[0].accept_prob = 1.2;
        let v = validate_scenario(&cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "accept_prob");
        assert!(v[0].entity.contains("F1-A"));
    }

    #[test]
    fn two_references() {
        let mut cfg = minimal();
        let mut other = cfg.facilities[0].clone();
        other.facility_id = "F2".into();
        other.has_ed = false;
        other.ed = None;
        other.ip_units[0].unit_id = "F2-A".into();
        other.ip_units[0].facility_id = "F2".into();
        cfg.facilities.push(other);
        cfg.travel.insert("F1-ED", "F2-A", TravelLeg { drive_hours: 1.0, distance_miles: 50.0 });
        let v = validate_scenario(&cfg);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, "reference facility not unique");
    }

    #[test]
    fn missing_travel_pair_is_named() {
        let mut cfg = minimal();
        cfg.travel = TravelMatrix::new();
        let v = validate_scenario(&cfg);
        assert_eq!(v.len(), 1);
        assert!(v[0].entity.contains("F1-ED") && v[0].entity.contains("F1-A"));
    }

    #[test]
    fn warmup_not_before_horizon() {
        let mut cfg = minimal();
        cfg.horizon_days = 10;
        cfg.warmup_days = 30;
        let v = validate_scenario(&cfg);
        assert!(v.iter().any(|x| x.field == "warmup_days"));
    }

    #[test]
    fn age_mix_and_triangle_rules() {
        let mut cfg = minimal();
        cfg.dists.age_mix.insert(AgeGroup::Child, 0.1);
        cfg.dists.alpha_triangular = Triangular { min: 0.5, mode: 0.2, max: 1.0 };
        let v = validate_scenario(&cfg);
        assert!(v.iter().any(|x| x.field == "age_mix"));
        assert!(v.iter().any(|x| x.field == "alpha_triangular"));
    }

    #[test]
    fn duplicate_license_set_in_facility() {
        let mut cfg = minimal();
        let mut dup = cfg.facilities[0].ip_units[0].clone();
        dup.unit_id = "F1-B".into();
        cfg.facilities[0].ip_units.push(dup);
        cfg.travel.insert("F1-ED", "F1-B", TravelLeg { drive_hours: 0.0, distance_miles: 0.0 });
        let v = validate_scenario(&cfg);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].field, "ip_units");
    }

    #[test]
    fn same_facility_travel_must_be_zero() {
        let mut cfg = minimal();
        cfg.travel.insert("F1-ED", "F1-A", TravelLeg { drive_hours: 0.5, distance_miles: 0.0 });
        assert_eq!(validate_scenario(&cfg).len(), 1);
    }
}
