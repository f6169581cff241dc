//! Rank tests, Welch's t-test and multiple-comparison adjustment for
//! comparing replication outputs across policies.

use std::cmp::Ordering;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::num::{mean, sample_variance, Scalar};

/// Largest pooled size for which Mann-Whitney uses the exact null distribution.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("sample too small or without variance")]
    DegenerateSample,
    #[error("empty sample")]
    EmptySample,
    #[error("need at least two groups and three observations")]
    TooFewGroups,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    WelchT,
    MannWhitneyExact,
    MannWhitneyNormal,
    KruskalWallis,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::WelchT => "welch-t",
            TestMethod::MannWhitneyExact => "mann-whitney-exact",
            TestMethod::MannWhitneyNormal => "mann-whitney-normal",
            TestMethod::KruskalWallis => "kruskal-wallis",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult<T> {
    pub statistic: T,
    pub p_value: T,
    pub method: TestMethod,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelchResult<T> {
    pub test: TestResult<T>,
    pub df: T,
    /// mean(x) - mean(y)
    pub difference: T,
    pub ci95: (T, T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult<T> {
    pub i: usize,
    pub j: usize,
    pub test: TestResult<T>,
    pub adjusted_p: T,
}

fn clamp_p<T: Scalar>(p: f64) -> T {
    T::lit(p.clamp(0.0, 1.0))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid normal")
}

/// Midranks of the pooled groups, returned per group, plus the tie term
/// `sum(t^3 - t)` over tie blocks.
fn midranks<T: Scalar>(groups: &[&[T]]) -> (Vec<Vec<T>>, T) {
    let mut pooled: Vec<(T, usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, xs)| xs.iter().enumerate().map(move |(i, &x)| (x, g, i)))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    let mut ranks: Vec<Vec<T>> = groups.iter().map(|xs| vec![T::zero(); xs.len()]).collect();
    let mut ties = T::zero();
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        // ranks start+1 ..= end
        let r = T::from_count(start + 1 + end) / T::lit(2.0);
        for &(_, g, i) in &pooled[start..end] {
            ranks[g][i] = r;
        }
        let t = T::from_count(end - start);
        ties = ties + t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

/// `U` for the first sample and the tie term.
fn u_statistic<T: Scalar>(x: &[T], y: &[T]) -> (T, T) {
    let (ranks, ties) = midranks(&[x, y]);
    let r1: T = ranks[0].iter().copied().sum();
    let n1 = T::from_count(x.len());
    (r1 - n1 * (n1 + T::one()) / T::lit(2.0), ties)
}

fn u_moments<T: Scalar>(n1: usize, n2: usize, ties: T) -> (T, T) {
    let (a, b) = (T::from_count(n1), T::from_count(n2));
    let n = a + b;
    let mu = a * b / T::lit(2.0);
    let var = a * b / T::lit(12.0) * ((n + T::one()) - ties / (n * (n - T::one())));
    (mu, var.max(T::zero()).sqrt())
}

/// Number of rank arrangements giving each value of `U` for sizes `m`, `n`
/// (no ties). Index is `U`.
pub fn u_null_counts(m: usize, n: usize) -> Vec<f64> {
    // f[i][j][u] via f(i,j,u) = f(i-1,j,u-j) + f(i,j-1,u)
    let max_u = m * n;
    let mut f = vec![vec![vec![0.0_f64; max_u + 1]; n + 1]; m + 1];
    for (i, fi) in f.iter_mut().enumerate() {
        for (j, fij) in fi.iter_mut().enumerate() {
            if i == 0 || j == 0 {
                fij[0] = 1.0;
            }
        }
    }
    for i in 1..=m {
        for j in 1..=n {
            for u in 0..=i * j {
                let take = if u >= j { f[i - 1][j][u - j] } else { 0.0 };
                let skip = f[i][j - 1][u];
                f[i][j][u] = take + skip;
            }
        }
    }
    f.swap_remove(m).swap_remove(n)
}

/// Two-sided Mann-Whitney U test on `U_x`. Exact when the pooled size is at
/// most `EXACT_MAX_N` and there are no ties, otherwise the normal
/// approximation with tie and continuity corrections.
pub fn mann_whitney_u<T: Scalar>(x: &[T], y: &[T]) -> Result<TestResult<T>, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (u, ties) = u_statistic(x, y);
    let n = vec![x.len(), y.len()];
    if x.len() + y.len() <= EXACT_MAX_N && ties == T::zero() {
        let counts = u_null_counts(x.len(), y.len());
        let total: f64 = counts.iter().sum();
        let u_obs = u.as_f64().round() as usize;
        let lower: f64 = counts[..=u_obs].iter().sum::<f64>() / total;
        let upper: f64 = counts[u_obs..].iter().sum::<f64>() / total;
        return Ok(TestResult {
            statistic: u,
            p_value: clamp_p(2.0 * lower.min(upper)),
            method: TestMethod::MannWhitneyExact,
            n,
        });
    }
    let (mu, sigma) = u_moments(x.len(), y.len(), ties);
    let p = if sigma > T::zero() {
        let dev = ((u - mu).abs() - T::lit(0.5)).max(T::zero());
        2.0 * std_normal().sf((dev / sigma).as_f64())
    } else {
        1.0
    };
    Ok(TestResult {
        statistic: u,
        p_value: clamp_p(p),
        method: TestMethod::MannWhitneyNormal,
        n,
    })
}

/// `(U_x - mean) / sd` with the tie-corrected variance and no continuity
/// correction.
pub fn mann_whitney_z<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    if x.is_empty() || y.is_empty() {
        return None;
    }
    let (u, ties) = u_statistic(x, y);
    let (mu, sigma) = u_moments(x.len(), y.len(), ties);
    (sigma > T::zero()).then(|| (u - mu) / sigma)
}

/// Kruskal-Wallis H with tie correction; p from chi-square on `k - 1` df.
pub fn kruskal_wallis<T: Scalar>(groups: &[&[T]]) -> Result<TestResult<T>, StatsError> {
    if groups.iter().any(|g| g.is_empty()) {
        return Err(StatsError::EmptySample);
    }
    let total: usize = groups.iter().map(|g| g.len()).sum();
    if groups.len() < 2 || total < 3 {
        return Err(StatsError::TooFewGroups);
    }
    let (ranks, ties) = midranks(groups);
    let n = T::from_count(total);
    let s: T = ranks
        .iter()
        .map(|r| {
            let sum: T = r.iter().copied().sum();
            sum * sum / T::from_count(r.len())
        })
        .sum();
    let h_raw = T::lit(12.0) / (n * (n + T::one())) * s - T::lit(3.0) * (n + T::one());
    let c = T::one() - ties / (n * n * n - n);
    let (h, p) = if c > T::zero() {
        let h = (h_raw / c).max(T::zero());
        let chi = ChiSquared::new((groups.len() - 1) as f64).expect("positive df");
        (h, chi.sf(h.as_f64()))
    } else {
        (T::zero(), 1.0)
    };
    Ok(TestResult {
        statistic: h,
        p_value: clamp_p(p),
        method: TestMethod::KruskalWallis,
        n: groups.iter().map(|g| g.len()).collect(),
    })
}

/// Welch's unequal-variance t-test with a 95% interval on `mean(x) - mean(y)`.
pub fn welch_t_test<T: Scalar>(x: &[T], y: &[T]) -> Result<WelchResult<T>, StatsError> {
    let (vx, vy) = match (sample_variance(x), sample_variance(y)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(StatsError::DegenerateSample),
    };
    if vx == T::zero() && vy == T::zero() {
        return Err(StatsError::DegenerateSample);
    }
    let (nx, ny) = (T::from_count(x.len()), T::from_count(y.len()));
    let diff = mean(x).unwrap() - mean(y).unwrap();
    let (ax, ay) = (vx / nx, vy / ny);
    let se = (ax + ay).sqrt();
    let df = (ax + ay) * (ax + ay) / (ax * ax / (nx - T::one()) + ay * ay / (ny - T::one()));
    let t = diff / se;
    let dist = StudentsT::new(0.0, 1.0, df.as_f64()).map_err(|_| StatsError::DegenerateSample)?;
    let p = 2.0 * dist.sf(t.abs().as_f64());
    let half = T::lit(dist.inverse_cdf(0.975)) * se;
    Ok(WelchResult {
        test: TestResult {
            statistic: t,
            p_value: clamp_p(p),
            method: TestMethod::WelchT,
            n: vec![x.len(), y.len()],
        },
        df,
        difference: diff,
        ci95: (diff - half, diff + half),
    })
}

/// All `k(k-1)/2` Mann-Whitney comparisons with Bonferroni-adjusted p.
pub fn pairwise_compare<T: Scalar>(groups: &[&[T]]) -> Result<Vec<PairwiseResult<T>>, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    let k = groups.len();
    let factor = T::from_count(k * (k - 1) / 2);
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let test = mann_whitney_u(groups[i], groups[j])?;
            let adjusted_p = (test.p_value * factor).min(T::one());
            out.push(PairwiseResult { i, j, test, adjusted_p });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Brute-force two-sided p: enumerate every way to pick which of the
    /// pooled ranks 1..=N belong to the first sample.
    fn enumerated_p(m: usize, n: usize, u_obs: usize) -> f64 {
        let total_n = m + n;
        let mut le = 0u64;
        let mut ge = 0u64;
        let mut all = 0u64;
        for mask in 0u32..(1 << total_n) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let rank_sum: usize = (0..total_n).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).sum();
            let u = rank_sum - m * (m + 1) / 2;
            all += 1;
            le += u64::from(u <= u_obs);
            ge += u64::from(u >= u_obs);
        }
        (2.0 * (le.min(ge) as f64) / all as f64).min(1.0)
    }

    #[test]
    fn exact_matches_enumeration_exhaustive() {
        for total_n in 2..=8usize {
            for m in 1..total_n {
                let n = total_n - m;
                for mask in 0u32..(1 << total_n) {
                    if mask.count_ones() as usize != m {
                        continue;
                    }
                    let x: Vec<f64> = (0..total_n).filter(|b| mask & (1 << b) != 0).map(|b| b as f64).collect();
                    let y: Vec<f64> = (0..total_n).filter(|b| mask & (1 << b) == 0).map(|b| b as f64).collect();
                    let r = mann_whitney_u(&x, &y).unwrap();
                    assert_eq!(r.method, TestMethod::MannWhitneyExact);
                    let want = enumerated_p(m, n, r.statistic as usize);
                    assert!((r.p_value - want).abs() < 1e-12, "{x:?} {y:?}");
                }
            }
        }
    }

    #[test]
    fn two_by_two_separated() {
        let r = mann_whitney_u(&[1.0_f64, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_single_values() {
        let r = mann_whitney_u(&[5.0_f64], &[5.0]).unwrap();
        assert_eq!(r.statistic, 0.5);
        assert_eq!(r.p_value, 1.0);
        let r = mann_whitney_u(&[2.0_f32; 3], &[2.0; 3]).unwrap();
        assert_eq!(r.statistic, 4.5);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn exact_and_normal_agree_at_six_six() {
        let counts = u_null_counts(6, 6);
        let total: f64 = counts.iter().sum();
        let (mu, sigma) = u_moments::<f64>(6, 6, 0.0);
        for u in 0..=36usize {
            let lower: f64 = counts[..=u].iter().sum::<f64>() / total;
            let upper: f64 = counts[u..].iter().sum::<f64>() / total;
            let exact = (2.0 * lower.min(upper)).min(1.0);
            let dev = ((u as f64 - mu).abs() - 0.5).max(0.0);
            let approx = (2.0 * std_normal().sf(dev / sigma)).min(1.0);
            assert!((exact - approx).abs() < 0.02, "u={u} exact={exact} approx={approx}");
        }
    }

    #[test]
    fn null_counts_sum_to_binomial() {
        let c = u_null_counts(5, 7);
        assert_eq!(c.iter().sum::<f64>(), 792.0);
        assert_eq!(c.len(), 36);
    }

    #[test]
    fn kruskal_identical_groups() {
        let g = [3.0_f64, 3.0];
        let r = kruskal_wallis(&[&g, &g, &g]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn kruskal_separated_groups() {
        // two per group caps H at 32/7, so p = exp(-16/7) ~ 0.10
        let r = kruskal_wallis(&[&[1.0_f64, 2.0][..], &[10.0, 11.0], &[20.0, 21.0]]).unwrap();
        assert!((r.statistic - 32.0 / 7.0).abs() < 1e-12);
        assert!((r.p_value - (-16.0_f64 / 7.0).exp()).abs() < 1e-9);
        let r = kruskal_wallis(&[&[1.0_f64, 2.0, 3.0][..], &[10.0, 11.0, 12.0], &[20.0, 21.0, 22.0]]).unwrap();
        assert!((r.statistic - 7.2).abs() < 1e-12);
        assert!(r.p_value < 0.05);
    }

    #[test]
    fn kruskal_two_groups_is_z_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..rng.random_range(2..15)).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..rng.random_range(2..15)).map(|_| rng.random()).collect();
            let h = kruskal_wallis(&[&x, &y]).unwrap().statistic;
            let z = mann_whitney_z(&x, &y).unwrap();
            assert!((h - z * z).abs() < 1e-6);
        }
    }

    #[test]
    fn welch_identical_and_shifted() {
        let x = [1.0_f64, 2.0, 3.0];
        let r = welch_t_test(&x, &x).unwrap();
        assert_eq!(r.difference, 0.0);
        assert!((r.test.p_value - 1.0).abs() < 1e-12);
        let y = [11.0_f64, 12.0, 13.0];
        assert!(welch_t_test(&x, &y).unwrap().test.p_value < 0.01);
        assert_eq!(welch_t_test(&[1.0_f64], &y), Err(StatsError::DegenerateSample));
        assert_eq!(welch_t_test(&[1.0_f64, 1.0], &[2.0, 2.0]), Err(StatsError::DegenerateSample));
    }

    #[test]
    fn welch_hand_computed() {
        // Hand computation:
        // mean x = 20.5, var x = 13.9 ; mean y = 17, var y = 5.6
        // se^2 = 13.9/6 + 5.6/6 = 3.25 ; t = 3.5 / sqrt(3.25) = 1.941451
        // df = 3.25^2 / ((13.9/6)^2/5 + (5.6/6)^2/5) = 8.466180
        let x = [15.0_f64, 18.0, 20.0, 21.0, 24.0, 25.0];
        let y = [14.0_f64, 15.0, 16.0, 18.0, 19.0, 20.0];
        let r = welch_t_test(&x, &y).unwrap();
        assert!((r.test.statistic - 1.941451).abs() < 1e-5);
        assert!((r.df - 8.466180).abs() < 1e-5);
        let dist = StudentsT::new(0.0, 1.0, r.df).unwrap();
        assert!((r.test.p_value - 2.0 * (1.0 - dist.cdf(1.9414507))).abs() < 1e-6);
        assert!((r.test.p_value - 0.0861487).abs() < 1e-6);
        let half = dist.inverse_cdf(0.975) * 3.25_f64.sqrt();
        assert!((r.ci95.0 - (3.5 - half)).abs() < 1e-9);
        assert!(r.ci95.0 < 0.0 && r.ci95.1 > 0.0);
    }

    #[test]
    fn pairwise_bonferroni() {
        let a = [1.0_f64, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let b = [3.5_f64, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5];
        let c = [8.1_f64, 9.1, 10.1, 11.1, 12.1, 13.1, 14.1];
        let two = pairwise_compare(&[&a, &b]).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].adjusted_p, two[0].test.p_value);
        let three = pairwise_compare(&[&a, &b, &c]).unwrap();
        assert_eq!(three.len(), 3);
        for r in &three {
            assert!(r.adjusted_p >= r.test.p_value);
            assert!(r.adjusted_p <= 1.0);
            assert!((r.adjusted_p - (3.0 * r.test.p_value).min(1.0)).abs() < 1e-15);
        }
        let same = pairwise_compare(&[&a, &a, &a]).unwrap();
        assert!(same.iter().all(|r| r.adjusted_p == 1.0));
    }

    #[test]
    fn null_rejection_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 1000;
        let mut rejected = 0;
        for _ in 0..trials {
            let x: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
            if mann_whitney_u(&x, &y).unwrap().p_value < 0.05 {
                rejected += 1;
            }
        }
        let rate = f64::from(rejected) / f64::from(trials);
        assert!((0.03..=0.07).contains(&rate), "rate {rate}");
    }

    proptest! {
        #[test]
        fn reordering_does_not_matter(
            x in prop::collection::vec(-100.0f64..100.0, 1..15),
            y in prop::collection::vec(-100.0f64..100.0, 1..15),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut xs = x.clone();
            let mut ys = y.clone();
            rand::seq::SliceRandom::shuffle(&mut xs[..], &mut rng);
            rand::seq::SliceRandom::shuffle(&mut ys[..], &mut rng);
            prop_assert_eq!(mann_whitney_u(&x, &y).unwrap(), mann_whitney_u(&xs, &ys).unwrap());
            let a = kruskal_wallis(&[&x, &y]);
            let b = kruskal_wallis(&[&xs, &ys]);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!((a.statistic - b.statistic).abs() < 1e-9);
            }
        }

        #[test]
        fn monotone_transform_invariance(
            x in prop::collection::vec(-5.0f64..5.0, 1..15),
            y in prop::collection::vec(-5.0f64..5.0, 1..15),
        ) {
            let f = |v: &f64| v.exp() * 3.0 + 1.0;
            let tx: Vec<f64> = x.iter().map(f).collect();
            let ty: Vec<f64> = y.iter().map(f).collect();
            let a = mann_whitney_u(&x, &y).unwrap();
            let b = mann_whitney_u(&tx, &ty).unwrap();
            prop_assert_eq!(a.statistic, b.statistic);
            prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.p_value));
        }
    }
}
