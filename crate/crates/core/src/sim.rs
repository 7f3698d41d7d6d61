//! Step-level Monte Carlo simulation of the two-system agent.
//!
//! Each session starts with system 2 interested (`I = 1`). At every step the
//! user consumes one item, gaining `I * v - W`. System 1 then fires with
//! probability `p`; interest survives with probability `q`. The user moves on
//! if system 1 fired or system 2 is still interested, and leaves otherwise.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::dist::ValueDist;
use crate::error::{check_positive, Error, Result};
use crate::model::{ContentParams, ModelPoint};
use crate::rng::SimRng;
use crate::stats::{bump, chi_square_geometric, merge_histogram, run_replications, ChiSquareTest, RunningStats};

/// Traces stop recording after this many steps; the session itself goes on.
pub const MAX_TRACE_STEPS: usize = 100_000;

const MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    point: ModelPoint,
    value_dist: ValueDist,
    replications: u64,
    seed: u64,
    force_participation: bool,
    trace: bool,
}

impl SimConfig {
    /// Point-mass values at `v̄`.
    pub fn new(point: ModelPoint, replications: u64, seed: u64) -> Result<Self> {
        let value_dist = ValueDist::point_mass(point.params.v_bar())?;
        Self::with_values(point, value_dist, replications, seed)
    }

    pub fn with_values(point: ModelPoint, value_dist: ValueDist, replications: u64, seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        let (mean, v_bar) = (value_dist.mean(), point.params.v_bar());
        if (mean - v_bar).abs() > MEAN_TOL * v_bar.abs().max(1.0) {
            return Err(Error::invalid(
                "value_dist",
                format!("mean {mean} does not match v_bar {v_bar}"),
            ));
        }
        Ok(Self {
            point,
            value_dist,
            replications,
            seed,
            force_participation: false,
            trace: false,
        })
    }

    /// Simulate sessions even where the user would not participate.
    pub fn force_participation(mut self, on: bool) -> Self {
        self.force_participation = on;
        self
    }

    /// Record per-step traces (bounded by [`MAX_TRACE_STEPS`]).
    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    pub fn point(&self) -> &ModelPoint {
        &self.point
    }

    pub fn value_dist(&self) -> &ValueDist {
        &self.value_dist
    }

    pub fn replications(&self) -> u64 {
        self.replications
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn forced(&self) -> bool {
        self.force_participation
    }

    fn active(&self) -> bool {
        self.force_participation || self.point.participates()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Value the item would give system 2 (before the `I` factor).
    pub value: f64,
    /// System 1 fired on this item.
    pub system1: bool,
    /// System 2 was still interested (`I = 1`) while consuming it.
    pub interested: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub t: u64,
    pub s: f64,
    pub phase1_len: u64,
    pub phase2_len: u64,
    pub trace: Option<Vec<TraceStep>>,
}

/// Simulates one session.
pub fn simulate_session(config: &SimConfig, rng: &mut SimRng) -> SessionOutcome {
    if !config.active() {
        return SessionOutcome {
            trace: config.trace.then(Vec::new),
            ..Default::default()
        };
    }
    let p = config.point.params.p();
    let q = config.point.params.q();
    let w = config.point.w();
    let mut out = SessionOutcome {
        trace: config.trace.then(Vec::new),
        ..Default::default()
    };
    let mut interested = true;
    loop {
        let value = config.value_dist.sample(rng);
        if interested {
            out.s += value - w;
            out.phase1_len += 1;
        } else {
            out.s -= w;
            out.phase2_len += 1;
        }
        out.t += 1;
        let system1 = rng.random_bool(p);
        let next = interested && rng.random_bool(q);
        if let Some(trace) = out.trace.as_mut() {
            if trace.len() < MAX_TRACE_STEPS {
                trace.push(TraceStep {
                    value,
                    system1,
                    interested,
                });
            }
        }
        if !(system1 || next) {
            break;
        }
        interested = next;
    }
    out
}

/// Aggregated batch results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub mean_t: f64,
    pub mean_s: f64,
    pub se_t: f64,
    pub se_s: f64,
    pub replications: u64,
    pub seed: u64,
    /// `t_histogram[k]` counts sessions of length `k`.
    pub t_histogram: Vec<u64>,
    pub mean_phase2: f64,
    pub se_phase2: f64,
}

#[derive(Serialize)]
struct SummaryExport {
    mean_t: f64,
    mean_s: f64,
    se_t: f64,
    se_s: f64,
    replications: u64,
    seed: u64,
}

impl BatchSummary {
    /// The exported JSON object: means, standard errors, replications, seed.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&SummaryExport {
            mean_t: self.mean_t,
            mean_s: self.mean_s,
            se_t: self.se_t,
            se_s: self.se_s,
            replications: self.replications,
            seed: self.seed,
        })
        .expect("plain struct serializes")
    }
}

#[derive(Debug, Clone, Default)]
struct BatchAcc {
    t: RunningStats,
    s: RunningStats,
    phase2: RunningStats,
    hist: Vec<u64>,
}

impl BatchAcc {
    fn record(&mut self, o: &SessionOutcome) {
        self.t.push(o.t as f64);
        self.s.push(o.s);
        self.phase2.push(o.phase2_len as f64);
        bump(&mut self.hist, o.t as usize);
    }

    fn merge(&mut self, other: BatchAcc) {
        self.t.merge(&other.t);
        self.s.merge(&other.s);
        self.phase2.merge(&other.phase2);
        merge_histogram(&mut self.hist, &other.hist);
    }

    fn finish(self, replications: u64, seed: u64) -> BatchSummary {
        BatchSummary {
            mean_t: self.t.mean(),
            mean_s: self.s.mean(),
            se_t: self.t.std_err(),
            se_s: self.s.std_err(),
            replications,
            seed,
            t_histogram: self.hist,
            mean_phase2: self.phase2.mean(),
            se_phase2: self.phase2.std_err(),
        }
    }
}

/// Folds every simulated session of `config` into an accumulator.
///
/// Session `i` uses substream `i` of the config seed; see
/// [`run_replications`] for the determinism contract.
pub fn fold_sessions<A, I, F, M>(config: &SimConfig, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &SessionOutcome) + Sync,
    M: Fn(&mut A, A),
{
    run_replications(
        config.replications,
        config.seed,
        init,
        |acc, rng, _| fold(acc, &simulate_session(config, rng)),
        merge,
    )
}

pub fn simulate_batch(config: &SimConfig) -> BatchSummary {
    // traces are never kept in batch runs
    let cfg = config.clone().with_trace(false);
    fold_sessions(&cfg, BatchAcc::default, BatchAcc::record, BatchAcc::merge)
        .finish(config.replications, config.seed)
}

/// Per-step source switching: every item comes from source `i` with
/// probability `a_i`, and that item's `(p, q, v̄)` drive the step.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSimConfig {
    sources: Vec<(ContentParams, f64)>,
    mixed: ModelPoint,
    cumulative: Vec<f64>,
    replications: u64,
    seed: u64,
}

impl MixtureSimConfig {
    pub fn new(sources: Vec<(ContentParams, f64)>, w: f64, replications: u64, seed: u64) -> Result<Self> {
        let mixed = crate::manifold::mix(&sources)?;
        let mixed = ModelPoint::new(mixed, crate::model::OutsideOption::new(w)?);
        if replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = sources
            .iter()
            .map(|s| {
                acc += s.1;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            sources,
            mixed,
            cumulative,
            replications,
            seed,
        })
    }

    /// The single point the mixture is equivalent to.
    pub fn mixed_point(&self) -> &ModelPoint {
        &self.mixed
    }
}

pub fn simulate_mixture_session(config: &MixtureSimConfig, rng: &mut SimRng) -> SessionOutcome {
    let mut out = SessionOutcome::default();
    if !config.mixed.participates() {
        return out;
    }
    let w = config.mixed.w();
    let mut interested = true;
    loop {
        let u: f64 = rng.random();
        let k = config.cumulative.partition_point(|&c| c <= u).min(config.sources.len() - 1);
        let src = &config.sources[k].0;
        if interested {
            out.s += src.v_bar() - w;
            out.phase1_len += 1;
        } else {
            out.s -= w;
            out.phase2_len += 1;
        }
        out.t += 1;
        let system1 = rng.random_bool(src.p());
        let next = interested && rng.random_bool(src.q());
        if !(system1 || next) {
            break;
        }
        interested = next;
    }
    out
}

pub fn simulate_mixture_batch(config: &MixtureSimConfig) -> BatchSummary {
    run_replications(
        config.replications,
        config.seed,
        BatchAcc::default,
        |acc, rng, _| acc.record(&simulate_mixture_session(config, rng)),
        BatchAcc::merge,
    )
    .finish(config.replications, config.seed)
}

/// Capacity formulation of the first phase: system 2 has an exponential
/// budget `C` and stays interested while the cumulative item size fits.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityConfig {
    size_dist: ValueDist,
    lambda: f64,
    q: f64,
    replications: u64,
    seed: u64,
}

impl CapacityConfig {
    pub fn new(size_dist: ValueDist, lambda: f64, replications: u64, seed: u64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        if size_dist.min_value() < 0.0 {
            return Err(Error::invalid("size_dist", "item sizes must be nonnegative"));
        }
        if replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        let q: f64 = size_dist
            .support()
            .iter()
            .map(|&(s, pr)| pr * (-lambda * s).exp())
            .sum();
        if q >= 1.0 {
            return Err(Error::invalid("size_dist", format!("induced span E[exp(-lambda s)] = {q} is not below 1")));
        }
        Ok(Self {
            size_dist,
            lambda,
            q,
            replications,
            seed,
        })
    }

    /// Induced span `q = E[exp(-lambda s)]`.
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Length of the interested run: the first item is always valued, and item
/// `k + 1` is valued while the first `k` sizes sum to at most `C`.
pub fn simulate_capacity_session(config: &CapacityConfig, rng: &mut SimRng) -> u64 {
    let capacity = Exp::new(config.lambda).expect("validated rate").sample(rng);
    let mut run = 1;
    let mut used = 0.0;
    loop {
        used += config.size_dist.sample(rng);
        if used > capacity {
            return run;
        }
        run += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySummary {
    pub q: f64,
    pub mean_run: f64,
    pub se_run: f64,
    /// `histogram[k]` counts runs of length `k`.
    pub histogram: Vec<u64>,
    pub replications: u64,
    pub seed: u64,
}

impl CapacitySummary {
    /// Chi-square test of the run lengths against Geometric(1 - q).
    pub fn geometric_fit(&self) -> ChiSquareTest {
        chi_square_geometric(&self.histogram, 1.0 - self.q)
    }
}

pub fn simulate_capacity_batch(config: &CapacityConfig) -> CapacitySummary {
    let (stats, histogram) = run_replications(
        config.replications,
        config.seed,
        || (RunningStats::new(), Vec::new()),
        |acc: &mut (RunningStats, Vec<u64>), rng, _| {
            let run = simulate_capacity_session(config, rng);
            acc.0.push(run as f64);
            bump(&mut acc.1, run as usize);
        },
        |a, b| {
            a.0.merge(&b.0);
            merge_histogram(&mut a.1, &b.1);
        },
    );
    CapacitySummary {
        q: config.q,
        mean_run: stats.mean(),
        se_run: stats.std_err(),
        histogram,
        replications: config.replications,
        seed: config.seed,
    }
}
