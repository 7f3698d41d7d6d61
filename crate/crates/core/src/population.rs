//! Users with heterogeneous outside options.
//!
//! `g_S` is linear and decreasing in `W`, so a user visits iff
//! `W <= W* = v̄(1-p) / ((1-p) + p(1-q))`. Engagement given a visit does not
//! depend on `W` at all, which is what lets participation and conditional
//! engagement move in opposite directions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ContentParams;
use crate::stats::{run_replications, RunningStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Population {
    Uniform { a: f64, b: f64 },
    /// `(W, probability)` atoms.
    FiniteSupport { support: Vec<(f64, f64)> },
}

impl Population {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let p = Population::Uniform { a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn finite(support: Vec<(f64, f64)>) -> Result<Self> {
        let p = Population::FiniteSupport { support };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Population::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && a < b) {
                    return Err(Error::invalid("population", format!("need 0 < a < b, got [{a}, {b}]")));
                }
            }
            Population::FiniteSupport { support } => {
                if support.is_empty() {
                    return Err(Error::invalid("population", "support must not be empty"));
                }
                for &(w, pr) in support {
                    if !(w.is_finite() && w > 0.0) {
                        return Err(Error::invalid("population", format!("W = {w} is not positive")));
                    }
                    if !(pr.is_finite() && (0.0..=1.0).contains(&pr)) {
                        return Err(Error::invalid("population", format!("probability {pr} outside [0, 1]")));
                    }
                }
                let total: f64 = support.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid("population", format!("probabilities sum to {total}")));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Population::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Population::FiniteSupport { support } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(w, pr) in support {
                    acc += pr;
                    if u < acc {
                        return w;
                    }
                }
                support[support.len() - 1].0
            }
        }
    }
}

/// Largest outside option at which the user still visits.
pub fn participation_threshold(params: &ContentParams) -> f64 {
    let (p, q, v) = (params.p(), params.q(), params.v_bar());
    v * (1.0 - p) / ((1.0 - p) + p * (1.0 - q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationMetrics {
    pub pr_use: f64,
    pub e_t_given_use: f64,
    pub e_t_total: f64,
    /// Population mean of `E[S]`, counting non-users as 0.
    pub e_s_total: f64,
}

pub fn population_metrics(params: &ContentParams, pop: &Population) -> Result<PopulationMetrics> {
    pop.validate()?;
    let g_t = params.g_engagement();
    let (pr_use, e_s_total) = match pop {
        Population::Uniform { a, b } => {
            let w_star = participation_threshold(params);
            let pr = ((w_star - a) / (b - a)).clamp(0.0, 1.0);
            // g_S(W) = v̄/(1-q) - g_T W, integrated over [a, min(W*, b)]
            let u = w_star.min(*b);
            let es = if u > *a {
                (params.v_bar() * (u - a) / (1.0 - params.q()) - g_t * (u * u - a * a) / 2.0) / (b - a)
            } else {
                0.0
            };
            (pr, es.max(0.0))
        }
        Population::FiniteSupport { support } => support.iter().fold((0.0, 0.0), |(pr, es), &(w, m)| {
            if params.participates(w) {
                (pr + m, es + m * params.g_utility(w).max(0.0))
            } else {
                (pr, es)
            }
        }),
    };
    let e_t_given_use = if pr_use > 0.0 { g_t } else { 0.0 };
    Ok(PopulationMetrics {
        pr_use,
        e_t_given_use,
        e_t_total: pr_use * e_t_given_use,
        e_s_total,
    })
}

/// Monte Carlo estimate of the same metrics: each draw is one user, scored
/// with the closed forms for a single outside option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub pr_use: RunningStats,
    pub e_t_given_use: RunningStats,
    pub e_t_total: RunningStats,
    pub e_s_total: RunningStats,
}

pub fn population_monte_carlo(
    params: &ContentParams,
    pop: &Population,
    samples: u64,
    seed: u64,
) -> Result<PopulationEstimate> {
    pop.validate()?;
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let init = || PopulationEstimate {
        pr_use: RunningStats::new(),
        e_t_given_use: RunningStats::new(),
        e_t_total: RunningStats::new(),
        e_s_total: RunningStats::new(),
    };
    Ok(run_replications(
        samples,
        seed,
        init,
        |acc, rng, _| {
            let w = pop.sample(rng);
            let uses = params.participates(w);
            let t = if uses { params.g_engagement() } else { 0.0 };
            acc.pr_use.push(if uses { 1.0 } else { 0.0 });
            if uses {
                acc.e_t_given_use.push(t);
            }
            acc.e_t_total.push(t);
            acc.e_s_total.push(params.g_utility(w).max(0.0));
        },
        |a, b| {
            a.pr_use.merge(&b.pr_use);
            a.e_t_given_use.merge(&b.e_t_given_use);
            a.e_t_total.merge(&b.e_t_total);
            a.e_s_total.merge(&b.e_s_total);
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationRow {
    pub p: f64,
    pub q: f64,
    pub v_bar: f64,
    pub pr_use: f64,
    pub e_t_given_use: f64,
    pub e_t_total: f64,
    pub e_s_total: f64,
}

pub fn population_sweep<'a>(
    points: impl IntoIterator<Item = &'a ContentParams>,
    pop: &Population,
) -> Result<Vec<PopulationRow>> {
    points
        .into_iter()
        .map(|c| {
            let m = population_metrics(c, pop)?;
            Ok(PopulationRow {
                p: c.p(),
                q: c.q(),
                v_bar: c.v_bar(),
                pr_use: m.pr_use,
                e_t_given_use: m.e_t_given_use,
                e_t_total: m.e_t_total,
                e_s_total: m.e_s_total,
            })
        })
        .collect()
}
