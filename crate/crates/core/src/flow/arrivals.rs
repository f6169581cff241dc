//! Arrival streams and per-patient random attributes.

use rand::Rng;
use rand_distr::{Distribution, Exp, Triangular};

use crate::scenario::{AgeGroup, DistributionSpec, EdUnit, IpUnit, Weekday, HOURS_PER_DAY};

/// Arrival times on `[0, horizon)` of a Poisson process whose hourly rate is
/// `rate_at(t)`, generated by thinning a homogeneous process of rate
/// `max_rate`. `rate_at` must never exceed `max_rate`.
pub fn thinned_poisson<R, F>(rng: &mut R, max_rate: f64, horizon: f64, rate_at: F) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let mut out = Vec::new();
    if !(max_rate > 0.0) || !max_rate.is_finite() {
        return out;
    }
    let gap = Exp::new(max_rate).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t >= horizon {
            return out;
        }
        let r = rate_at(t);
        if r >= max_rate || rng.random::<f64>() * max_rate < r {
            out.push(t);
        }
    }
}

/// ED arrivals needing IP care: within each day the hourly rate is the
/// weekday's daily rate (times `rate_multiplier`) over 24.
pub fn generate_ed_arrivals<R: Rng + ?Sized>(
    ed: &EdUnit,
    rate_multiplier: f64,
    rng: &mut R,
    horizon_hours: f64,
) -> Vec<f64> {
    let hourly: [f64; 7] =
        std::array::from_fn(|d| ed.rate_on(Weekday::from_index(d)) * rate_multiplier / HOURS_PER_DAY);
    let max = hourly.iter().copied().fold(0.0, f64::max);
    thinned_poisson(rng, max, horizon_hours, |t| hourly[Weekday::at_hour(t).index()])
}

/// Direct admissions to one unit: stationary Poisson at `non_ed_rate / 24` per hour.
pub fn generate_non_ed_arrivals<R: Rng + ?Sized>(unit: &IpUnit, rng: &mut R, horizon_hours: f64) -> Vec<f64> {
    let rate = unit.non_ed_rate / HOURS_PER_DAY;
    thinned_poisson(rng, rate, horizon_hours, |_| rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attributes {
    pub age_group: AgeGroup,
    /// Rejection draw; a unit accepts iff `alpha < gamma`.
    pub alpha: f64,
}

/// Draws the age group from the configured mix and alpha from the triangular
/// distribution, clamped to `[0, 1]`.
pub fn assign_attributes<R: Rng + ?Sized>(dists: &DistributionSpec, rng: &mut R) -> Attributes {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut age_group = None;
    for (&g, &p) in &dists.age_mix {
        acc += p;
        if p > 0.0 {
            age_group = Some(g);
            if u < acc {
                break;
            }
        }
    }
    let t = dists.alpha_triangular;
    let tri = Triangular::new(t.min, t.max, t.mode).expect("validated triangular parameters");
    Attributes {
        age_group: age_group.unwrap_or(AgeGroup::Adult),
        alpha: tri.sample(rng).clamp(0.0, 1.0),
    }
}

/// Uniform draw from the empirical pool, scaled by the destination unit's mean
/// LoS relative to the reference mean, and by the sweep multiplier.
pub fn sample_los<R: Rng + ?Sized>(unit: &IpUnit, dists: &DistributionSpec, rng: &mut R, los_multiplier: f64) -> f64 {
    let raw = dists.los_samples[rng.random_range(0..dists.los_samples.len())];
    raw * (unit.mean_los_hours / dists.reference_mean_los) * los_multiplier
}

/// One referral review duration, exponential with the unit's mean.
pub fn sample_review<R: Rng + ?Sized>(mean_hours: f64, rng: &mut R) -> f64 {
    Exp::new(1.0 / mean_hours).expect("positive review mean").sample(rng)
}
