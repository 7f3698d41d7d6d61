//! Running moments, deterministic parallel replication and goodness-of-fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::rng::{substream, SimRng};

/// Replications per parallel work unit. Fixed so that the merge tree, and
/// therefore every floating-point sum, is independent of the thread count.
pub const CHUNK: u64 = 4096;

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        self.mean += delta * other.n as f64 / nf;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / nf;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n - 1 denominator); 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Runs `replications` independent replications in parallel and folds them.
///
/// Replication `i` draws from `substream(seed, i)`. Replications are grouped
/// into fixed chunks folded sequentially, and chunk results are merged in
/// chunk order, so the result is bit-identical for any thread count.
pub fn run_replications<A, I, F, M>(replications: u64, seed: u64, init: I, step: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &mut SimRng, u64) + Sync,
    M: Fn(&mut A, A),
{
    let chunks = replications.div_ceil(CHUNK);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * CHUNK).min(replications);
            for i in c * CHUNK..end {
                let mut rng = substream(seed, i);
                step(&mut acc, &mut rng, i);
            }
            acc
        })
        .collect();
    let mut out = init();
    for part in partials {
        merge(&mut out, part);
    }
    out
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square test of integer observations against a distribution on
/// `{first, first + 1, ...}` with probability mass `pmf(k)`.
///
/// `histogram[k]` is the number of observations equal to `k`. Bins are
/// formed left to right and closed once their expected count reaches 5 and
/// enough mass remains for another bin; the last bin absorbs the whole tail.
pub fn chi_square_gof(histogram: &[u64], first: usize, pmf: impl Fn(usize) -> f64) -> ChiSquareTest {
    let n: u64 = histogram.iter().sum();
    let nf = n as f64;
    let below: u64 = histogram.iter().take(first).sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut obs = below as f64;
    let mut exp = 0.0;
    let mut remaining = 1.0;
    let mut k = first;
    // walk until the unbinned tail would be too thin to stand alone
    loop {
        let pk = pmf(k);
        obs += histogram.get(k).copied().unwrap_or(0) as f64;
        exp += nf * pk;
        remaining -= pk;
        k += 1;
        if nf * remaining < 5.0 || remaining <= 0.0 {
            break;
        }
        if exp >= 5.0 {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    let tail_obs = histogram.iter().skip(k).sum::<u64>() as f64;
    let tail_exp = nf * remaining.max(0.0);
    if tail_exp <= 0.0 && tail_obs > 0.0 {
        // observations where the law puts no mass
        bins.push((obs, exp));
        bins.push((tail_obs, 0.0));
    } else {
        obs += tail_obs;
        exp += tail_exp;
        if exp < 5.0 && !bins.is_empty() {
            let (o, e) = bins.pop().unwrap();
            obs += o;
            exp += e;
        }
        bins.push((obs, exp));
    }

    let statistic: f64 = bins
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if statistic.is_infinite() {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).map(|c| c.sf(statistic)).unwrap_or(0.0)
    };
    ChiSquareTest {
        statistic,
        dof,
        p_value,
    }
}

/// Chi-square test against Geometric(success) on `{1, 2, ...}`.
pub fn chi_square_geometric(histogram: &[u64], success: f64) -> ChiSquareTest {
    let fail = 1.0 - success;
    chi_square_gof(histogram, 1, |k| fail.powi(k as i32 - 1) * success)
}

/// Adds `other` into `hist` elementwise, growing it as needed.
pub(crate) fn merge_histogram(hist: &mut Vec<u64>, other: &[u64]) {
    if hist.len() < other.len() {
        hist.resize(other.len(), 0);
    }
    for (h, o) in hist.iter_mut().zip(other) {
        *h += o;
    }
}

pub(crate) fn bump(hist: &mut Vec<u64>, k: usize) {
    if hist.len() <= k {
        hist.resize(k + 1, 0);
    }
    hist[k] += 1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.25, 0.5];
        let mut s = RunningStats::new();
        xs.iter().for_each(|&x| s.push(x));
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((s.mean() - mean).abs() < 1e-14);
        assert!((s.variance() - var).abs() < 1e-12);
        assert!((s.std_err() - (var / 6.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constants_have_zero_spread() {
        let mut a = RunningStats::new();
        let mut b = RunningStats::new();
        (0..1000).for_each(|_| a.push(2.0));
        (0..17).for_each(|_| b.push(2.0));
        a.merge(&b);
        assert_eq!(a.mean(), 2.0);
        assert_eq!(a.std_err(), 0.0);
        assert_eq!(a.count(), 1017);
    }

    #[test]
    fn single_sample_has_zero_se() {
        let mut s = RunningStats::new();
        s.push(3.5);
        assert_eq!(s.mean(), 3.5);
        assert_eq!(s.std_err(), 0.0);
    }

    proptest! {
        #[test]
        fn merge_equals_sequential(xs in prop::collection::vec(-100.0..100.0f64, 0..60), cut in 0usize..60) {
            let cut = cut.min(xs.len());
            let mut all = RunningStats::new();
            xs.iter().for_each(|&x| all.push(x));
            let mut left = RunningStats::new();
            let mut right = RunningStats::new();
            xs[..cut].iter().for_each(|&x| left.push(x));
            xs[cut..].iter().for_each(|&x| right.push(x));
            left.merge(&right);
            prop_assert_eq!(left.count(), all.count());
            prop_assert!((left.mean() - all.mean()).abs() < 1e-9);
            prop_assert!((left.variance() - all.variance()).abs() < 1e-7 * (1.0 + all.variance()));
        }
    }

    #[test]
    fn replications_independent_of_thread_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                run_replications(
                    10_000,
                    42,
                    RunningStats::new,
                    |acc, rng, _| acc.push(rng.random::<f64>()),
                    |a, b| a.merge(&b),
                )
            })
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one, four);
        assert_eq!(one.count(), 10_000);
    }

    #[test]
    fn chi_square_accepts_exact_counts() {
        // expected counts rounded from 10^5 draws of Geometric(0.5)
        let mut hist = vec![0u64; 20];
        let mut left = 100_000u64;
        for (k, h) in hist.iter_mut().enumerate().skip(1) {
            let c = (100_000.0 * 0.5f64.powi(k as i32)).round() as u64;
            *h = c.min(left);
            left -= *h;
        }
        hist[19] += left;
        let t = chi_square_geometric(&hist, 0.5);
        assert!(t.dof >= 10);
        assert!(t.p_value > 0.99, "{t:?}");
    }

    #[test]
    fn chi_square_rejects_wrong_law() {
        let mut hist = vec![0u64; 20];
        for (k, h) in hist.iter_mut().enumerate().skip(1) {
            *h = (100_000.0 * 0.4 * 0.6f64.powi(k as i32 - 1)).round() as u64;
        }
        assert!(chi_square_geometric(&hist, 0.5).p_value < 1e-6);
    }

    #[test]
    fn chi_square_degenerate_law() {
        let hist = vec![0, 1000];
        let t = chi_square_geometric(&hist, 1.0);
        assert_eq!(t.dof, 0);
        assert_eq!(t.p_value, 1.0);
        let t = chi_square_geometric(&[0, 999, 1], 1.0);
        assert_eq!(t.p_value, 0.0);
    }
}
