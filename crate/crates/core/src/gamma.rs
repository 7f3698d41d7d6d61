//! Deterministic satiation: the `t`-th item (from 0) is worth `v̄ γ^t`.
//!
//! When system 2 is in control before item `t`, continuing is worth
//! `v̄ γ^t / (1 - pγ)` against an expected cost of `W / (1 - p)`, so system 2
//! keeps going exactly while `t <= t*`, with
//!
//! ```text
//! t* = floor( ln(W (1 - pγ) / (v̄ (1 - p))) / ln γ )
//! ```
//!
//! After `t*` only system 1 keeps the user on, for `p/(1-p)` more items.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};
use crate::rng::SimRng;
use crate::stats::{run_replications, RunningStats};

/// Slack on the floor so that exact ties (e.g. `v̄ γ^t = W` with `p = 0`)
/// are not lost to rounding in the logarithms.
const FLOOR_SLACK: f64 = 1e-10;
/// Relative slack on the direct continuation test used by the simulator.
const DECISION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGammaPoint")]
pub struct GammaPoint {
    p: f64,
    gamma: f64,
    v_bar: f64,
    w: f64,
}

#[derive(Deserialize)]
struct RawGammaPoint {
    p: f64,
    gamma: f64,
    v_bar: f64,
    w: f64,
}

impl TryFrom<RawGammaPoint> for GammaPoint {
    type Error = Error;

    fn try_from(r: RawGammaPoint) -> Result<Self> {
        GammaPoint::new(r.p, r.gamma, r.v_bar, r.w)
    }
}

impl GammaPoint {
    pub fn new(p: f64, gamma: f64, v_bar: f64, w: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("gamma", gamma)?;
        check_positive("v_bar", v_bar)?;
        check_positive("w", w)?;
        Ok(Self { p, gamma, v_bar, w })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn v_bar(&self) -> f64 {
        self.v_bar
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// Whether system 2, in control before item `t`, chooses to consume it.
    pub fn continues_at(&self, t: u64) -> bool {
        let gain = self.v_bar * self.gamma.powf(t as f64) / (1.0 - self.p * self.gamma);
        let cost = self.w / (1.0 - self.p);
        gain >= cost * (1.0 - DECISION_SLACK)
    }
}

/// Last item index system 2 is willing to start; negative when the user
/// never visits.
pub fn t_star(point: &GammaPoint) -> i64 {
    let GammaPoint { p, gamma, v_bar, w } = *point;
    if gamma == 0.0 {
        return if v_bar >= w / (1.0 - p) { 0 } else { -1 };
    }
    let r = (w * (1.0 - p * gamma) / (v_bar * (1.0 - p))).ln() / gamma.ln();
    let t = (r + FLOOR_SLACK * r.abs().max(1.0)).floor();
    t.clamp(i64::MIN as f64, i64::MAX as f64) as i64
}

/// `E[T] = t* + 1/(1 - p)` when the user visits.
pub fn gamma_engagement(point: &GammaPoint) -> f64 {
    let ts = t_star(point);
    if ts < 0 {
        0.0
    } else {
        ts as f64 + 1.0 / (1.0 - point.p)
    }
}

/// `E[S] = v̄ ((1 - γ^t*)/(1 - γ) + γ^t*/(1 - pγ)) - W (t* + 1/(1 - p))`.
pub fn gamma_utility(point: &GammaPoint) -> f64 {
    let ts = t_star(point);
    if ts < 0 {
        return 0.0;
    }
    let GammaPoint { p, gamma, v_bar, w } = *point;
    let g = gamma.powf(ts as f64);
    v_bar * ((1.0 - g) / (1.0 - gamma) + g / (1.0 - p * gamma)) - w * (ts as f64 + 1.0 / (1.0 - p))
}

/// A system-2 decision point in a simulated session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wake {
    /// Index of the item system 2 is deciding on.
    pub t: u64,
    pub continued: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GammaOutcome {
    pub t: u64,
    pub s: f64,
    pub wakes: Option<Vec<Wake>>,
}

/// Simulates one session. System 2 decides at every wake time by comparing
/// the value of continuing against the outside option directly.
pub fn simulate_gamma_session(point: &GammaPoint, rng: &mut SimRng, record: bool) -> GammaOutcome {
    let mut out = GammaOutcome {
        wakes: record.then(Vec::new),
        ..Default::default()
    };
    let decide = |t: u64, out: &mut GammaOutcome| {
        let c = point.continues_at(t);
        if let Some(w) = out.wakes.as_mut() {
            if w.len() < crate::sim::MAX_TRACE_STEPS {
                w.push(Wake { t, continued: c });
            }
        }
        c
    };
    if !decide(0, &mut out) {
        return out;
    }
    let mut t = 0u64;
    let mut value = point.v_bar;
    loop {
        out.s += value - point.w;
        out.t += 1;
        let system1 = rng.random_bool(point.p);
        if !system1 && !decide(t + 1, &mut out) {
            return out;
        }
        t += 1;
        value *= point.gamma;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub mean_t: f64,
    pub mean_s: f64,
    pub se_t: f64,
    pub se_s: f64,
    pub replications: u64,
    pub seed: u64,
}

pub fn simulate_gamma_batch(point: &GammaPoint, replications: u64, seed: u64) -> Result<GammaSummary> {
    if replications == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let (t, s) = run_replications(
        replications,
        seed,
        || (RunningStats::new(), RunningStats::new()),
        |acc: &mut (RunningStats, RunningStats), rng, _| {
            let o = simulate_gamma_session(point, rng, false);
            acc.0.push(o.t as f64);
            acc.1.push(o.s);
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1.merge(&b.1);
        },
    );
    Ok(GammaSummary {
        mean_t: t.mean(),
        mean_s: s.mean(),
        se_t: t.std_err(),
        se_s: s.std_err(),
        replications,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub p: f64,
    pub gamma: f64,
    pub v_bar: f64,
    pub w: f64,
    pub t_star: i64,
    pub e_t: f64,
    pub e_s: f64,
}

impl From<&GammaPoint> for GammaRow {
    fn from(pt: &GammaPoint) -> Self {
        GammaRow {
            p: pt.p,
            gamma: pt.gamma,
            v_bar: pt.v_bar,
            w: pt.w,
            t_star: t_star(pt),
            e_t: gamma_engagement(pt),
            e_s: gamma_utility(pt),
        }
    }
}

/// Rows for `points` in order.
pub fn gamma_sweep<'a>(points: impl IntoIterator<Item = &'a GammaPoint>) -> Vec<GammaRow> {
    points.into_iter().map(GammaRow::from).collect()
}
