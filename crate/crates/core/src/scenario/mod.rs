//! Region description: facilities, their EDs and inpatient units, travel legs
//! between them, and the distributions and run controls for a simulation.

mod io;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::flow::PlacementPolicy;

pub use io::{load_scenario, ScenarioError, read_los_samples, read_travel, save_scenario, write_los_samples, write_travel};
pub use validate::{validate_scenario, Violation};

pub const HOURS_PER_DAY: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgeGroup {
    Child,
    Adolescent,
    Adult,
    Geriatric,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 4] = [
        AgeGroup::Child,
        AgeGroup::Adolescent,
        AgeGroup::Adult,
        AgeGroup::Geriatric,
    ];

    /// Child up to 11, Adolescent 12-17, Adult 18-64, Geriatric 65 and over.
    pub fn from_age(years: u32) -> AgeGroup {
        match years {
            0..=11 => AgeGroup::Child,
            12..=17 => AgeGroup::Adolescent,
            18..=64 => AgeGroup::Adult,
            _ => AgeGroup::Geriatric,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Under 18 or 65 and over.
    pub fn is_vulnerable(self) -> bool {
        !matches!(self, AgeGroup::Adult)
    }

    pub fn name(self) -> &'static str {
        match self {
            AgeGroup::Child => "child",
            AgeGroup::Adolescent => "adolescent",
            AgeGroup::Adult => "adult",
            AgeGroup::Geriatric => "geriatric",
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Day of week; simulation hour 0 is the start of a Sunday.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weekday {
    Sunday,
    Monday,
    Tuesday,
    Wednesday,
    Thursday,
    Friday,
    Saturday,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Sunday,
        Weekday::Monday,
        Weekday::Tuesday,
        Weekday::Wednesday,
        Weekday::Thursday,
        Weekday::Friday,
        Weekday::Saturday,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Weekday {
        Self::ALL[i % 7]
    }

    /// Weekday of a simulation time in hours.
    pub fn at_hour(t: f64) -> Weekday {
        let day = (t / HOURS_PER_DAY).floor() as i64;
        Self::from_index(day.rem_euclid(7) as usize)
    }

    pub fn from_chrono(d: chrono::Weekday) -> Weekday {
        Self::from_index(d.num_days_from_sunday() as usize)
    }

    pub fn name(self) -> &'static str {
        match self {
            Weekday::Sunday => "sunday",
            Weekday::Monday => "monday",
            Weekday::Tuesday => "tuesday",
            Weekday::Wednesday => "wednesday",
            Weekday::Thursday => "thursday",
            Weekday::Friday => "friday",
            Weekday::Saturday => "saturday",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdUnit {
    pub ed_id: String,
    /// Expected IP-bound arrivals per day, by weekday.
    pub daily_rates: BTreeMap<Weekday, f64>,
}

impl EdUnit {
    pub fn rate_on(&self, day: Weekday) -> f64 {
        self.daily_rates.get(&day).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpUnit {
    pub unit_id: String,
    pub facility_id: String,
    pub licensed_ages: Vec<AgeGroup>,
    pub bed_count: u32,
    pub accept_prob: f64,
    pub mean_review_hours: f64,
    pub mean_los_hours: f64,
    /// Direct (non-ED) admissions per day.
    pub non_ed_rate: f64,
}

impl IpUnit {
    pub fn treats(&self, group: AgeGroup) -> bool {
        self.licensed_ages.contains(&group)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facility {
    pub facility_id: String,
    pub name: String,
    pub has_ed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ed: Option<EdUnit>,
    #[serde(default)]
    pub ip_units: Vec<IpUnit>,
    #[serde(default)]
    pub is_reference: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelLeg {
    pub drive_hours: f64,
    pub distance_miles: f64,
}

/// Drive time and distance for every (ED, IP unit) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TravelMatrix {
    legs: BTreeMap<(String, String), TravelLeg>,
}

impl TravelMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ed_id: impl Into<String>, unit_id: impl Into<String>, leg: TravelLeg) {
        self.legs.insert((ed_id.into(), unit_id.into()), leg);
    }

    pub fn get(&self, ed_id: &str, unit_id: &str) -> Option<TravelLeg> {
        self.legs.get(&(ed_id.to_string(), unit_id.to_string())).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, TravelLeg)> {
        self.legs.iter().map(|((e, u), l)| (e.as_str(), u.as_str(), *l))
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangular {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

impl Default for Triangular {
    fn default() -> Self {
        Triangular { min: 0.0, mode: 0.1, max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    /// Empirical length-of-stay pool, hours.
    pub los_samples: Vec<f64>,
    pub reference_mean_los: f64,
    pub alpha_triangular: Triangular,
    pub age_mix: BTreeMap<AgeGroup, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub facilities: Vec<Facility>,
    pub travel: TravelMatrix,
    pub dists: DistributionSpec,
    pub horizon_days: u32,
    pub warmup_days: u32,
    pub replications: u32,
    pub policy: PlacementPolicy,
    pub seed: u64,
    pub rate_multiplier: f64,
    pub los_multiplier: f64,
}

impl ScenarioConfig {
    pub const DEFAULT_HORIZON_DAYS: u32 = 365;
    pub const DEFAULT_WARMUP_DAYS: u32 = 30;
    pub const DEFAULT_REPLICATIONS: u32 = 20;

    pub fn units(&self) -> impl Iterator<Item = &IpUnit> {
        self.facilities.iter().flat_map(|f| f.ip_units.iter())
    }

    pub fn units_mut(&mut self) -> impl Iterator<Item = &mut IpUnit> {
        self.facilities.iter_mut().flat_map(|f| f.ip_units.iter_mut())
    }

    /// `(facility, ed)` for every facility that has an ED.
    pub fn eds(&self) -> impl Iterator<Item = (&Facility, &EdUnit)> {
        self.facilities
            .iter()
            .filter_map(|f| f.ed.as_ref().map(|ed| (f, ed)))
    }

    pub fn reference_facility(&self) -> Option<&Facility> {
        self.facilities.iter().find(|f| f.is_reference)
    }

    pub fn horizon_hours(&self) -> f64 {
        f64::from(self.horizon_days) * HOURS_PER_DAY
    }

    pub fn warmup_hours(&self) -> f64 {
        f64::from(self.warmup_days) * HOURS_PER_DAY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn age_mapping_is_total_and_disjoint() {
        for age in 0..=120u32 {
            let g = AgeGroup::from_age(age);
            let matches = [
                age <= 11,
                (12..=17).contains(&age),
                (18..=64).contains(&age),
                age >= 65,
            ];
            assert_eq!(matches.iter().filter(|m| **m).count(), 1, "age {age}");
            assert!(matches[g.index()], "age {age} mapped to {g}");
        }
    }

    #[test]
    fn vulnerable_boundary() {
        assert!(AgeGroup::from_age(17).is_vulnerable());
        assert!(!AgeGroup::from_age(18).is_vulnerable());
        assert!(!AgeGroup::from_age(64).is_vulnerable());
        assert!(AgeGroup::from_age(65).is_vulnerable());
    }

    #[test]
    fn weekday_at_hour() {
        assert_eq!(Weekday::at_hour(0.0), Weekday::Sunday);
        assert_eq!(Weekday::at_hour(24.0), Weekday::Monday);
        assert_eq!(Weekday::at_hour(23.999), Weekday::Sunday);
        assert_eq!(Weekday::at_hour(7.0 * 24.0 + 1.0), Weekday::Sunday);
    }
}
