//! Tree-structured feeds: every step shows `d` options at once.
//!
//! System 1 takes option `i` when it hooks (probability `p_i`); with
//! `p̂ = 1 - Π(1 - p_i)` some option hooks. Otherwise system 2 looks at the
//! best value `v = max_i v_i` and stays iff `v >= τ*`. With
//!
//! ```text
//! c = v̄ p̂ q / (1 - p̂ q) - W / (1 - p̂)
//! ψ = q (1 - p̂) / (1 - p̂ q)
//! A(τ) = E[v 1{v >= τ}] + c Pr[v >= τ]
//! B(τ) = ψ Pr[v >= τ]
//! M(γ) = max_τ A(τ) + B(τ) γ = E[max(0, v + c + γψ)]
//! ```
//!
//! the value `γ*` of an awake, interested system 2 is the fixed point of `M`
//! and `τ* = -c - γ*ψ`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::ValueDist;
use crate::error::{check_positive, check_probability, Error, Result};
use crate::model::PARTICIPATION_REL_TOL;
use crate::rng::SimRng;
use crate::stats::{run_replications, RunningStats};

/// Absolute tolerance of the fixed-point bisection.
pub const GAMMA_TOL: f64 = 1e-10;
pub const DEFAULT_D_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTreeConfig")]
pub struct TreeConfig {
    branch_p: Vec<f64>,
    q: f64,
    branch_values: Vec<ValueDist>,
    w: f64,
}

#[derive(Deserialize)]
struct RawTreeConfig {
    branch_p: Vec<f64>,
    q: f64,
    branch_values: Vec<ValueDist>,
    w: f64,
}

impl TryFrom<RawTreeConfig> for TreeConfig {
    type Error = Error;

    fn try_from(r: RawTreeConfig) -> Result<Self> {
        TreeConfig::new(r.branch_p, r.q, r.branch_values, r.w)
    }
}

impl TreeConfig {
    pub fn new(branch_p: Vec<f64>, q: f64, branch_values: Vec<ValueDist>, w: f64) -> Result<Self> {
        if branch_p.is_empty() {
            return Err(Error::invalid("d", "need at least one branch"));
        }
        if branch_p.len() != branch_values.len() {
            return Err(Error::invalid(
                "branch_values",
                format!("{} probabilities but {} distributions", branch_p.len(), branch_values.len()),
            ));
        }
        for &p in &branch_p {
            check_probability("branch_p", p)?;
        }
        check_probability("q", q)?;
        check_positive("w", w)?;
        Ok(Self {
            branch_p,
            q,
            branch_values,
            w,
        })
    }

    /// `d` identical branches.
    pub fn iid(d: usize, p: f64, q: f64, values: ValueDist, w: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "need at least one branch"));
        }
        Self::new(vec![p; d], q, vec![values; d], w)
    }

    pub fn d(&self) -> usize {
        self.branch_p.len()
    }

    pub fn branch_p(&self) -> &[f64] {
        &self.branch_p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn branch_values(&self) -> &[ValueDist] {
        &self.branch_values
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// `Π(1 - p_i)`, the chance no option hooks system 1.
    fn stay(&self) -> f64 {
        self.branch_p.iter().map(|p| 1.0 - p).product()
    }

    /// Mean value of what system 1 picks.
    fn system1_mean(&self) -> f64 {
        let total: f64 = self.branch_p.iter().sum();
        if total == 0.0 {
            self.branch_values.iter().map(ValueDist::mean).sum::<f64>() / self.d() as f64
        } else {
            self.branch_p
                .iter()
                .zip(&self.branch_values)
                .map(|(p, v)| p * v.mean())
                .sum::<f64>()
                / total
        }
    }
}

/// Distribution of the best option shown in one step.
pub fn max_value_dist(config: &TreeConfig) -> ValueDist {
    ValueDist::max_of(&config.branch_values).expect("config has at least one branch")
}

/// Quantities of the threshold problem that do not depend on `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTerms {
    pub p_hat: f64,
    pub stay: f64,
    pub v_bar: f64,
    pub c: f64,
    pub psi: f64,
    pub max_dist: ValueDist,
    q: f64,
    w: f64,
    den: f64,
}

impl TreeTerms {
    pub fn new(config: &TreeConfig) -> Result<Self> {
        let stay = config.stay();
        if stay <= 0.0 {
            return Err(Error::Numerical("probability that no option hooks underflowed to 0".into()));
        }
        let q = config.q;
        let p_hat = 1.0 - stay;
        // 1 - p̂q, computed without forming p̂
        let den = 1.0 - q + q * stay;
        let v_bar = config.system1_mean();
        Ok(Self {
            p_hat,
            stay,
            v_bar,
            c: v_bar * p_hat * q / den - config.w / stay,
            psi: q * stay / den,
            max_dist: max_value_dist(config),
            q,
            w: config.w,
            den,
        })
    }

    pub fn a(&self, tau: f64) -> f64 {
        self.max_dist.tail_mean(tau) + self.c * self.max_dist.tail_prob(tau)
    }

    pub fn b(&self, tau: f64) -> f64 {
        self.psi * self.max_dist.tail_prob(tau)
    }

    /// Value of an awake, interested system 2 that uses threshold `τ`.
    pub fn f(&self, tau: f64) -> f64 {
        self.a(tau) / (1.0 - self.b(tau))
    }

    pub fn m(&self, gamma: f64) -> f64 {
        let shift = self.c + gamma * self.psi;
        self.max_dist
            .support()
            .iter()
            .map(|&(x, pr)| pr * (x + shift).max(0.0))
            .sum()
    }

    /// Largest `γ` with `M(γ) >= γ`, to within [`GAMMA_TOL`].
    pub fn fixed_point(&self) -> Result<f64> {
        let v_max = self.max_dist.max_value().abs().max(1.0);
        let mut lo = 0.0;
        let mut hi = v_max / ((1.0 - self.q) * self.stay);
        while self.m(hi) >= hi {
            lo = hi;
            hi *= 2.0;
            if hi > 2f64.powi(60) * v_max {
                return Err(Error::Numerical("fixed-point bracket did not close".into()));
            }
        }
        while hi - lo > GAMMA_TOL {
            let mid = 0.5 * (lo + hi);
            if self.m(mid) >= mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Smallest support value accepted at level `γ`, or `+∞` if none is.
    pub fn threshold(&self, gamma: f64) -> f64 {
        let raw = -self.c - gamma * self.psi;
        let slack = 1e-9 * raw.abs().max(1.0);
        self.max_dist
            .support()
            .iter()
            .map(|a| a.0)
            .find(|&x| x >= raw - slack)
            .unwrap_or(f64::INFINITY)
    }

    /// `E[S]` of a user who visits and uses threshold `τ`; may be negative.
    pub fn utility_at(&self, tau: f64) -> f64 {
        self.p_hat * (self.v_bar / self.den - self.w / self.stay) + (self.stay / self.den) * self.f(tau)
    }

    /// `E[T]` of a user who visits and uses threshold `τ`.
    pub fn engagement_at(&self, tau: f64) -> f64 {
        let pr = self.max_dist.tail_prob(tau);
        self.p_hat / self.stay + pr / (self.den * (1.0 - self.psi * pr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSolution {
    pub p_hat: f64,
    pub v_bar: f64,
    pub gamma_star: f64,
    /// Smallest best-option value system 2 accepts; `+∞` means it never does.
    pub tau_star: f64,
    pub e_s: f64,
    pub e_t: f64,
    pub participates: bool,
}

pub fn solve_tree(config: &TreeConfig) -> Result<TreeSolution> {
    let terms = TreeTerms::new(config)?;
    let gamma_star = terms.fixed_point()?;
    let tau_star = terms.threshold(gamma_star);
    let first = terms.p_hat * (terms.v_bar / terms.den - terms.w / terms.stay);
    let rest = (terms.stay / terms.den) * terms.f(tau_star);
    let es = first + rest;
    let participates = es >= -PARTICIPATION_REL_TOL * (first.abs() + rest.abs());
    let (e_s, e_t) = if participates {
        (es.max(0.0), terms.engagement_at(tau_star))
    } else {
        (0.0, 0.0)
    };
    Ok(TreeSolution {
        p_hat: terms.p_hat,
        v_bar: terms.v_bar,
        gamma_star,
        tau_star,
        e_s,
        e_t,
        participates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TreeOutcome {
    pub t: u64,
    pub s: f64,
    /// Items consumed after system 2 stopped deriving value.
    pub overrun: u64,
}

/// Simulates one session under `solution`'s threshold policy.
///
/// When all `p_i` are equal, system 1 scans the options in a random order
/// and takes the first that hooks it. Otherwise it is hooked with
/// probability `p̂` and picks option `i` with probability proportional to
/// `p_i`.
pub fn simulate_tree_session(config: &TreeConfig, solution: &TreeSolution, rng: &mut SimRng) -> TreeOutcome {
    let mut out = TreeOutcome::default();
    if !solution.participates {
        return out;
    }
    let d = config.d();
    let equal = config.branch_p.iter().all(|&p| p == config.branch_p[0]);
    let total_p: f64 = config.branch_p.iter().sum();
    let mut order: Vec<usize> = (0..d).collect();
    let mut values = vec![0.0; d];
    let mut interested = true;
    loop {
        for (v, dist) in values.iter_mut().zip(&config.branch_values) {
            *v = dist.sample(rng);
        }
        let hooked = if equal {
            order.shuffle(rng);
            order.iter().copied().find(|&i| rng.random_bool(config.branch_p[i]))
        } else if rng.random_bool(solution.p_hat) {
            let mut u = rng.random::<f64>() * total_p;
            let mut pick = d - 1;
            for (i, &p) in config.branch_p.iter().enumerate() {
                if u < p {
                    pick = i;
                    break;
                }
                u -= p;
            }
            Some(pick)
        } else {
            None
        };
        let value = match hooked {
            Some(i) => values[i],
            None => {
                let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !interested || best < solution.tau_star {
                    return out;
                }
                best
            }
        };
        out.t += 1;
        if interested {
            out.s += value - config.w;
        } else {
            out.s -= config.w;
            out.overrun += 1;
        }
        interested = interested && rng.random_bool(config.q);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub mean_t: f64,
    pub mean_s: f64,
    pub se_t: f64,
    pub se_s: f64,
    pub mean_overrun: f64,
    pub max_overrun: u64,
    pub replications: u64,
    pub seed: u64,
}

pub fn simulate_tree(
    config: &TreeConfig,
    solution: &TreeSolution,
    replications: u64,
    seed: u64,
) -> Result<TreeSummary> {
    if replications == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let (t, s, over, max_over) = run_replications(
        replications,
        seed,
        || (RunningStats::new(), RunningStats::new(), RunningStats::new(), 0u64),
        |acc, rng, _| {
            let o = simulate_tree_session(config, solution, rng);
            acc.0.push(o.t as f64);
            acc.1.push(o.s);
            acc.2.push(o.overrun as f64);
            acc.3 = acc.3.max(o.overrun);
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1.merge(&b.1);
            a.2.merge(&b.2);
            a.3 = a.3.max(b.3);
        },
    );
    Ok(TreeSummary {
        mean_t: t.mean(),
        mean_s: s.mean(),
        se_t: t.std_err(),
        se_s: s.std_err(),
        mean_overrun: over.mean(),
        max_overrun: max_over,
        replications,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeRow {
    pub d: usize,
    pub p_hat: f64,
    pub tau_star: f64,
    pub gamma_star: f64,
    pub e_s: f64,
    pub e_t: f64,
    pub participates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingReport {
    /// Utility-maximizing `d`, 0 if the user never visits.
    pub d_s: usize,
    /// Engagement-maximizing `d`, 0 if the user never visits.
    pub d_t: usize,
    pub table: Vec<TreeRow>,
}

/// Solves `family(d)` for `d = 1..=d_max` and picks the best widths.
/// Ties go to the smaller `d`.
pub fn optimize_branching<F>(family: F, d_max: usize) -> Result<BranchingReport>
where
    F: Fn(usize) -> Result<TreeConfig> + Sync,
{
    if d_max == 0 {
        return Err(Error::invalid("d_max", "must be at least 1"));
    }
    let table = (1..=d_max)
        .into_par_iter()
        .map(|d| {
            let s = solve_tree(&family(d)?)?;
            Ok(TreeRow {
                d,
                p_hat: s.p_hat,
                tau_star: s.tau_star,
                gamma_star: s.gamma_star,
                e_s: s.e_s,
                e_t: s.e_t,
                participates: s.participates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = |key: fn(&TreeRow) -> f64| {
        let mut pick: Option<&TreeRow> = None;
        for row in table.iter().filter(|r| r.participates) {
            if pick.is_none_or(|b| key(row) > key(b)) {
                pick = Some(row);
            }
        }
        pick.map_or(0, |r| r.d)
    };
    Ok(BranchingReport {
        d_s: best(|r| r.e_s),
        d_t: best(|r| r.e_t),
        table,
    })
}
