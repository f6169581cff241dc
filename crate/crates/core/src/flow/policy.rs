use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How a social worker chooses and contacts candidate IP units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlacementPolicy {
    /// One request at a time, nearest unit first.
    #[default]
    Baseline,
    /// One request at a time, most accepting unit first.
    ByAcceptance,
    /// Rounds of `m` simultaneous requests, nearest first.
    ConcurrentProximity { m: u32 },
    /// Rounds of `m` simultaneous requests, most accepting first.
    ConcurrentAcceptance { m: u32 },
}

impl PlacementPolicy {
    /// Builds a policy from its CLI name and an optional round size.
    pub fn from_name(name: &str, m: Option<u32>) -> Result<Self, String> {
        let m_or = |default: u32| m.unwrap_or(default);
        match name {
            "baseline" => Ok(PlacementPolicy::Baseline),
            "by-acceptance" => Ok(PlacementPolicy::ByAcceptance),
            "concurrent-proximity" => Ok(PlacementPolicy::ConcurrentProximity { m: m_or(2) }),
            "concurrent-acceptance" => Ok(PlacementPolicy::ConcurrentAcceptance { m: m_or(2) }),
            other => Err(format!(
                "unknown policy `{other}` (expected baseline, by-acceptance, concurrent-proximity, concurrent-acceptance)"
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlacementPolicy::Baseline => "baseline",
            PlacementPolicy::ByAcceptance => "by-acceptance",
            PlacementPolicy::ConcurrentProximity { .. } => "concurrent-proximity",
            PlacementPolicy::ConcurrentAcceptance { .. } => "concurrent-acceptance",
        }
    }

    /// Requests per round; 1 for the sequential policies.
    pub fn round_size(self) -> usize {
        match self {
            PlacementPolicy::Baseline | PlacementPolicy::ByAcceptance => 1,
            PlacementPolicy::ConcurrentProximity { m } | PlacementPolicy::ConcurrentAcceptance { m } => {
                m.max(1) as usize
            }
        }
    }

    pub fn orders_by_acceptance(self) -> bool {
        matches!(
            self,
            PlacementPolicy::ByAcceptance | PlacementPolicy::ConcurrentAcceptance { .. }
        )
    }
}

impl fmt::Display for PlacementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlacementPolicy::ConcurrentProximity { m } | PlacementPolicy::ConcurrentAcceptance { m } => {
                write!(f, "{}:{}", self.name(), m)
            }
            _ => f.write_str(self.name()),
        }
    }
}

/// Accepts `name` or `name:m`, the same form `Display` writes.
impl FromStr for PlacementPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, m) = match s.split_once(':') {
            Some((n, m)) => {
                let m: u32 = m.parse().map_err(|_| format!("bad round size in `{s}`"))?;
                if m == 0 {
                    return Err(format!("round size must be >= 1 in `{s}`"));
                }
                (n, Some(m))
            }
            None => (s, None),
        };
        let policy = PlacementPolicy::from_name(name, m)?;
        if m.is_some() && matches!(policy, PlacementPolicy::Baseline | PlacementPolicy::ByAcceptance) {
            return Err(format!("policy `{name}` does not take a round size"));
        }
        Ok(policy)
    }
}

/// One unit a patient may be referred to, as seen at search time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    /// Index into the region's id-sorted unit list; final tie-break.
    pub unit: usize,
    /// Effective acceptance probability (1 for the patient's own facility).
    pub gamma: f64,
    pub drive_hours: f64,
    pub mean_review_hours: f64,
}

fn by_proximity(a: &Candidate, b: &Candidate) -> Ordering {
    a.drive_hours
        .total_cmp(&b.drive_hours)
        .then(a.unit.cmp(&b.unit))
}

/// Sorts candidates into the order requests go out under `policy`.
pub fn order_candidates(policy: PlacementPolicy, candidates: &mut [Candidate]) {
    if policy.orders_by_acceptance() {
        candidates.sort_by(|a, b| b.gamma.total_cmp(&a.gamma).then_with(|| by_proximity(a, b)));
    } else {
        candidates.sort_by(by_proximity);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlacementOutcome {
    Placed {
        /// Index into the candidate slice.
        position: usize,
        unit: usize,
        coordination_hours: f64,
        requests_sent: u32,
    },
    /// Every listed unit rejected (or the list was empty). The search still
    /// took `coordination_hours`.
    NoAcceptor {
        coordination_hours: f64,
        requests_sent: u32,
    },
}

impl PlacementOutcome {
    pub fn coordination_hours(&self) -> f64 {
        match *self {
            PlacementOutcome::Placed { coordination_hours, .. }
            | PlacementOutcome::NoAcceptor { coordination_hours, .. } => coordination_hours,
        }
    }

    pub fn requests_sent(&self) -> u32 {
        match *self {
            PlacementOutcome::Placed { requests_sent, .. }
            | PlacementOutcome::NoAcceptor { requests_sent, .. } => requests_sent,
        }
    }
}

/// Walks an already ordered candidate list. A unit accepts iff `alpha < gamma`.
///
/// Requests go out in rounds of `policy.round_size()`. A round with at least
/// one acceptor costs the shortest review among its acceptors; a round where
/// everyone rejects costs its longest review. Sequential policies are rounds
/// of one, so their cost is the running sum of reviews up to the acceptor.
/// `review` draws one review duration per request sent.
pub fn find_placement<F>(
    alpha: f64,
    policy: PlacementPolicy,
    candidates: &[Candidate],
    mut review: F,
) -> PlacementOutcome
where
    F: FnMut(&Candidate) -> f64,
{
    let m = policy.round_size();
    let mut cost = 0.0;
    let mut requests = 0u32;
    let mut reviews = Vec::with_capacity(m);
    for (round, chunk) in candidates.chunks(m).enumerate() {
        reviews.clear();
        reviews.extend(chunk.iter().map(&mut review));
        requests += chunk.len() as u32;

        let first_accept = chunk
            .iter()
            .zip(&reviews)
            .enumerate()
            .filter(|(_, (c, _))| alpha < c.gamma)
            .min_by(|(i, (_, ra)), (j, (_, rb))| ra.total_cmp(rb).then(i.cmp(j)));
        match first_accept {
            Some((i, (c, &r))) => {
                return PlacementOutcome::Placed {
                    position: round * m + i,
                    unit: c.unit,
                    coordination_hours: cost + r,
                    requests_sent: requests,
                };
            }
            None => {
                cost += reviews.iter().copied().fold(0.0, f64::max);
            }
        }
    }
    PlacementOutcome::NoAcceptor {
        coordination_hours: cost,
        requests_sent: requests,
    }
}
