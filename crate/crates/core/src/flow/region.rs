use std::sync::Arc;

use crate::scenario::{AgeGroup, EdUnit, IpUnit, ScenarioConfig, TravelLeg};

#[derive(Debug, Clone)]
pub struct UnitInfo {
    pub id: Arc<str>,
    pub facility: usize,
    pub spec: IpUnit,
    pub licensed: [bool; 4],
}

#[derive(Debug, Clone)]
pub struct FacilityInfo {
    pub id: Arc<str>,
    pub is_reference: bool,
}

#[derive(Debug, Clone)]
pub struct EdInfo {
    pub id: Arc<str>,
    pub facility: usize,
    pub spec: EdUnit,
}

/// Index-based view of a validated scenario. Units are sorted by id so a unit
/// index doubles as the id tie-break.
#[derive(Debug, Clone)]
pub struct Region {
    pub facilities: Vec<FacilityInfo>,
    pub units: Vec<UnitInfo>,
    pub eds: Vec<EdInfo>,
    /// `travel[ed][unit]`
    pub travel: Vec<Vec<TravelLeg>>,
    pub units_by_group: [Vec<usize>; 4],
}

impl Region {
    /// Panics if a travel leg is missing; run `validate_scenario` first.
    pub fn compile(cfg: &ScenarioConfig) -> Region {
        let facilities: Vec<FacilityInfo> = cfg
            .facilities
            .iter()
            .map(|f| FacilityInfo {
                id: Arc::from(f.facility_id.as_str()),
                is_reference: f.is_reference,
            })
            .collect();

        let mut units: Vec<UnitInfo> = cfg
            .facilities
            .iter()
            .enumerate()
            .flat_map(|(fi, f)| {
                f.ip_units.iter().map(move |u| UnitInfo {
                    id: Arc::from(u.unit_id.as_str()),
                    facility: fi,
                    spec: u.clone(),
                    licensed: std::array::from_fn(|g| u.treats(AgeGroup::ALL[g])),
                })
            })
            .collect();
        units.sort_by(|a, b| a.id.cmp(&b.id));

        let eds: Vec<EdInfo> = cfg
            .facilities
            .iter()
            .enumerate()
            .filter_map(|(fi, f)| {
                f.ed.as_ref().map(|ed| EdInfo {
                    id: Arc::from(ed.ed_id.as_str()),
                    facility: fi,
                    spec: ed.clone(),
                })
            })
            .collect();

        let travel = eds
            .iter()
            .map(|ed| {
                units
                    .iter()
                    .map(|u| {
                        cfg.travel
                            .get(&ed.id, &u.id)
                            .unwrap_or_else(|| panic!("missing travel leg ({}, {})", ed.id, u.id))
                    })
                    .collect()
            })
            .collect();

        let units_by_group = std::array::from_fn(|g| {
            units
                .iter()
                .enumerate()
                .filter(|(_, u)| u.licensed[g])
                .map(|(i, _)| i)
                .collect()
        });

        Region {
            facilities,
            units,
            eds,
            travel,
            units_by_group,
        }
    }

    pub fn unit_index(&self, unit_id: &str) -> Option<usize> {
        self.units.binary_search_by(|u| u.id.as_ref().cmp(unit_id)).ok()
    }

    pub fn total_beds(&self) -> u64 {
        self.units.iter().map(|u| u64::from(u.spec.bed_count)).sum()
    }
}
