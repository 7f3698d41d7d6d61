//! What a survey asking users "how was your session?" would see.
//!
//! Conditional on a session of length `T = t`, the first-phase length `T_q`
//! has `Pr[T_q = τ | T = t] ∝ β^τ` on `τ = 1..=t` with `β = q/p`, so
//!
//! ```text
//! E[S | T = t] = v̄ E[T_q | T = t] - W t
//! E[T_q | T = t] = t β^t / (β^t - 1) - 1 / (β - 1)      (p != q)
//!                = (t + 1) / 2                           (p == q)
//! ```
//!
//! The slope in `t` tells whether longer sessions look better or worse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelPoint;
use crate::sim::{fold_sessions, SimConfig};
use crate::stats::RunningStats;

/// Largest `t` scanned when locating the switch point of a regime.
pub const MAX_SCAN: u64 = 1_000_000;

/// `E[T_q | T = t]`.
fn conditional_phase1(p: f64, q: f64, t: u64) -> f64 {
    let tf = t as f64;
    if p == q {
        return (tf + 1.0) / 2.0;
    }
    if p == 0.0 {
        return tf;
    }
    if q == 0.0 {
        return 1.0;
    }
    let l = (q / p).ln();
    // t β^t / (β^t - 1) written to avoid overflow on either side of 1
    let lead = if l > 0.0 {
        tf / -(-tf * l).exp_m1()
    } else {
        tf * (tf * l).exp() / (tf * l).exp_m1()
    };
    lead - p / (q - p)
}

/// `E[S | T = t]`.
pub fn conditional_utility(point: &ModelPoint, t: u64) -> Result<f64> {
    if t < 1 {
        return Err(Error::invalid("t", "sessions have at least one item"));
    }
    let c = &point.params;
    Ok(c.v_bar() * conditional_phase1(c.p(), c.q(), t) - point.w() * t as f64)
}

/// `E[S | T = t + 1] - E[S | T = t]`.
pub fn forward_difference(point: &ModelPoint, t: u64) -> Result<f64> {
    let c = &point.params;
    if t < 1 {
        return Err(Error::invalid("t", "sessions have at least one item"));
    }
    let step = conditional_phase1(c.p(), c.q(), t + 1) - conditional_phase1(c.p(), c.q(), t);
    Ok(c.v_bar() * step - point.w())
}

/// Closed-form survey curve on `t = 1..=t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyCurve {
    pub point: ModelPoint,
    pub values: Vec<(u64, f64)>,
}

impl SurveyCurve {
    pub fn new(point: ModelPoint, t_max: u64) -> Result<Self> {
        if t_max < 1 {
            return Err(Error::invalid("t_max", "must be at least 1"));
        }
        let values = (1..=t_max)
            .map(|t| conditional_utility(&point, t).map(|s| (t, s)))
            .collect::<Result<_>>()?;
        Ok(Self { point, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    QEqP,
    QGtP,
    QLtP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    IncreasingAll,
    DecreasingAll,
    EventuallyIncreasing,
    EventuallyDecreasing,
}

impl std::fmt::Display for Monotone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Monotone::IncreasingAll => "increasing_all",
            Monotone::DecreasingAll => "decreasing_all",
            Monotone::EventuallyIncreasing => "eventually_increasing",
            Monotone::EventuallyDecreasing => "eventually_decreasing",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub monotone: Monotone,
    /// First `t` from which the forward differences keep the promised sign.
    pub t_star: Option<u64>,
}

/// Shape of the survey curve.
///
/// With `q > p` the per-item increments of `E[T_q | T = t]` rise from above
/// 1/2 towards 1, so the curve increases everywhere once `v̄ > 2W` and
/// otherwise turns upward from some `t*` (never, if `v̄ <= W`). With `q < p`
/// they fall from below 1/2 towards 0, mirroring this.
pub fn classify_regime(point: &ModelPoint) -> Result<RegimeReport> {
    let c = &point.params;
    let (p, q, v, w) = (c.p(), c.q(), c.v_bar(), point.w());
    let report = |regime, monotone, t_star| {
        Ok(RegimeReport {
            regime,
            monotone,
            t_star,
        })
    };
    if q == p {
        let m = if v > 2.0 * w {
            Monotone::IncreasingAll
        } else {
            Monotone::DecreasingAll
        };
        return report(Regime::QEqP, m, None);
    }
    if q > p {
        if v > 2.0 * w {
            return report(Regime::QGtP, Monotone::IncreasingAll, None);
        }
        if v <= w {
            return report(Regime::QGtP, Monotone::DecreasingAll, None);
        }
        let t = scan(point, |d| d > 0.0)?;
        return report(Regime::QGtP, Monotone::EventuallyIncreasing, Some(t));
    }
    if v < 2.0 * w {
        return report(Regime::QLtP, Monotone::DecreasingAll, None);
    }
    let t = scan(point, |d| d < 0.0)?;
    report(Regime::QLtP, Monotone::EventuallyDecreasing, Some(t))
}

fn scan(point: &ModelPoint, ok: impl Fn(f64) -> bool) -> Result<u64> {
    for t in 1..=MAX_SCAN {
        if ok(forward_difference(point, t)?) {
            return Ok(t);
        }
    }
    Err(Error::Numerical(format!(
        "survey curve did not switch direction within t <= {MAX_SCAN}"
    )))
}

/// Expected items consumed beyond the `1/(1-q)` system 2 wanted: `p/(1-p)`.
pub fn regretful_use(point: &ModelPoint) -> f64 {
    if point.participates() {
        point.expected_overrun()
    } else {
        0.0
    }
}

/// Simulated sessions of one length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveyBin {
    pub t: u64,
    pub stats: RunningStats,
}

/// Bins simulated sessions by length and records the utility in each bin.
/// Bins with no sessions are omitted.
pub fn empirical_conditional(config: &SimConfig) -> Vec<SurveyBin> {
    let bins = fold_sessions(
        config,
        Vec::<RunningStats>::new,
        |acc, o| {
            let t = o.t as usize;
            if acc.len() <= t {
                acc.resize(t + 1, RunningStats::new());
            }
            acc[t].push(o.s);
        },
        |a, b| {
            if a.len() < b.len() {
                a.resize(b.len(), RunningStats::new());
            }
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
        },
    );
    bins.into_iter()
        .enumerate()
        .filter(|(_, s)| s.count() > 0)
        .map(|(t, stats)| SurveyBin { t: t as u64, stats })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub t: u64,
    pub conditional_s_closed: f64,
    pub conditional_s_empirical: Option<f64>,
    pub n_samples: u64,
}

/// Closed form next to the binned simulation (if any) for `t = 1..=t_max`.
pub fn survey_table(point: &ModelPoint, t_max: u64, bins: &[SurveyBin]) -> Result<Vec<SurveyRow>> {
    let curve = SurveyCurve::new(*point, t_max)?;
    Ok(curve
        .values
        .into_iter()
        .map(|(t, closed)| {
            let bin = bins.iter().find(|b| b.t == t);
            SurveyRow {
                t,
                conditional_s_closed: closed,
                conditional_s_empirical: bin.map(|b| b.stats.mean()),
                n_samples: bin.map_or(0, |b| b.stats.count()),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(p: f64, q: f64, v: f64, w: f64) -> ModelPoint {
        ModelPoint::from_values(p, q, v, w).unwrap()
    }

    /// Joint law of (T_q, T) summed directly.
    fn enumerate(point: &ModelPoint, t: u64) -> f64 {
        let c = &point.params;
        let (p, q) = (c.p(), c.q());
        let mut num = 0.0;
        let mut den = 0.0;
        for tau in 1..=t {
            let w = (1.0 - q) * q.powi(tau as i32 - 1) * p.powi((t - tau) as i32) * (1.0 - p);
            num += tau as f64 * w;
            den += w;
        }
        c.v_bar() * num / den - point.w() * t as f64
    }

    #[test]
    fn examples() {
        assert!((conditional_utility(&pt(0.3, 0.3, 3.0, 1.0), 5).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(conditional_utility(&pt(0.0, 0.5, 3.0, 1.0), 4).unwrap(), 8.0);
        let x = pt(0.6, 0.3, 3.0, 1.0);
        assert!((conditional_utility(&x, 10).unwrap() - enumerate(&x, 10)).abs() < 1e-9);
        assert!(conditional_utility(&x, 0).is_err());
    }

    #[test]
    fn matches_enumeration_on_grid() {
        let grid = [0.0, 0.2, 0.5, 0.8];
        for &p in &grid[1..] {
            for &q in &grid {
                let x = pt(p, q, 3.0, 1.0);
                for t in 1..=30 {
                    let (a, b) = (conditional_utility(&x, t).unwrap(), enumerate(&x, t));
                    assert!((a - b).abs() < 1e-9, "p={p} q={q} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn large_t_is_finite() {
        for (p, q) in [(0.1, 0.9), (0.9, 0.1)] {
            let v = conditional_utility(&pt(p, q, 3.0, 1.0), 100_000).unwrap();
            assert!(v.is_finite());
        }
    }

    #[test]
    fn equal_rates_have_constant_slope() {
        let x = pt(0.4, 0.4, 3.0, 1.0);
        for t in 1..50 {
            assert_eq!(forward_difference(&x, t).unwrap(), 0.5);
        }
    }

    #[test]
    fn regimes() {
        let r = classify_regime(&pt(0.3, 0.3, 3.0, 1.0)).unwrap();
        assert_eq!((r.regime, r.monotone, r.t_star), (Regime::QEqP, Monotone::IncreasingAll, None));
        let r = classify_regime(&pt(0.2, 0.6, 1.5, 1.0)).unwrap();
        assert_eq!(r.monotone, Monotone::EventuallyIncreasing);
        assert!(r.t_star.is_some());
        // v̄ < 2W with q < p: every increment is below 1/2
        let r = classify_regime(&pt(0.6, 0.2, 1.5, 1.0)).unwrap();
        assert_eq!(r.monotone, Monotone::DecreasingAll);
        let r = classify_regime(&pt(0.6, 0.2, 5.0, 1.0)).unwrap();
        assert_eq!(r.monotone, Monotone::EventuallyDecreasing);
        assert!(r.t_star.unwrap() > 1);
    }

    #[test]
    fn promised_signs_hold() {
        let grid = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9];
        for &p in &grid {
            for &q in &grid {
                for v in [0.8, 1.2, 1.5, 2.0, 2.5, 4.0, 10.0] {
                    let x = pt(p, q, v, 1.0);
                    let r = classify_regime(&x).unwrap();
                    let start = r.t_star.unwrap_or(1);
                    let up = matches!(r.monotone, Monotone::IncreasingAll | Monotone::EventuallyIncreasing);
                    for t in start..start + 100 {
                        let d = forward_difference(&x, t).unwrap();
                        if up {
                            assert!(d > 0.0, "{x:?} t={t} d={d}");
                        } else {
                            assert!(d <= 0.0, "{x:?} t={t} d={d}");
                        }
                    }
                    if let Some(ts) = r.t_star.filter(|&t| t > 1) {
                        let d = forward_difference(&x, ts - 1).unwrap();
                        assert!(if up { d <= 0.0 } else { d >= 0.0 });
                    }
                }
            }
        }
    }

    #[test]
    fn regretful_use_values() {
        assert_eq!(regretful_use(&pt(0.0, 0.5, 3.0, 1.0)), 0.0);
        assert_eq!(regretful_use(&pt(0.5, 0.5, 3.0, 1.0)), 1.0);
        assert!((regretful_use(&pt(0.8, 0.5, 3.0, 1.0)) - 4.0).abs() < 1e-12);
        assert_eq!(regretful_use(&pt(0.9, 0.5, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn binned_simulation_matches() {
        let x = pt(0.6, 0.3, 1.5, 1.0);
        let cfg = SimConfig::new(x, 400_000, 5).unwrap().force_participation(true);
        let bins = empirical_conditional(&cfg);
        let total: u64 = bins.iter().map(|b| b.stats.count()).sum();
        assert_eq!(total, 400_000);
        let mut checked = 0;
        for b in bins.iter().filter(|b| b.stats.count() >= 10_000) {
            let closed = conditional_utility(&x, b.t).unwrap();
            assert!((b.stats.mean() - closed).abs() <= 3.0 * b.stats.std_err() + 1e-12, "t={}", b.t);
            checked += 1;
        }
        assert!(checked >= 3);
        let rows = survey_table(&x, 40, &bins).unwrap();
        assert_eq!(rows.len(), 40);
        assert_eq!(rows[0].n_samples, bins[0].stats.count());
    }
}
