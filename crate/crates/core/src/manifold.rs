//! Content manifolds and the utility- and engagement-maximizing points on them.
//!
//! A manifold is materialized as a finite list of grid points: a curve is
//! sampled at `resolution` equally spaced parameters, a mixture manifold at
//! the points of a simplex lattice, and a point set as given. Optimizers scan
//! that list and break ties toward the smallest index.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};
use crate::model::{ContentParams, ModelPoint, OutsideOption};

/// Default number of grid points along a curve.
pub const DEFAULT_RESOLUTION: usize = 10_000;
/// Default lattice resolution per simplex axis.
pub const DEFAULT_SIMPLEX_RESOLUTION: usize = 100;
/// Largest number of mixture sources.
pub const MAX_SOURCES: usize = 16;
/// Largest number of sources for which the simplex is gridded automatically.
pub const MAX_GRIDDED_SOURCES: usize = 4;
/// Upper end of the `[0, 1)` curve domains, closed off for grid search.
pub const OPEN_DOMAIN_END: f64 = 0.9999;

const WEIGHT_TOL: f64 = 1e-9;
const STRICT_REL: f64 = 1e-12;
const CAP_MARGIN: f64 = 1e-12;

pub type CurveMap = Arc<dyn Fn(f64) -> Result<ContentParams> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Curve,
    Mixture,
    PointSet,
}

/// Where a grid point sits in the manifold's own coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coord {
    Z(f64),
    Weights(Vec<f64>),
    Index(usize),
}

impl Coord {
    /// Scalar used in sweep output: `z` for curves, the point index otherwise.
    pub fn scalar(&self, index: usize) -> f64 {
        match self {
            Coord::Z(z) => *z,
            _ => index as f64,
        }
    }
}

#[derive(Clone)]
pub struct Manifold {
    kind: ManifoldKind,
    label: String,
    points: Vec<ContentParams>,
    coords: Vec<Coord>,
    domain: Option<(f64, f64)>,
    map: Option<CurveMap>,
    sources: Vec<ContentParams>,
}

impl fmt::Debug for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Manifold")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .field("points", &self.points.len())
            .field("domain", &self.domain)
            .finish()
    }
}

impl Manifold {
    /// Samples `map` at `resolution` equally spaced points of `[z_lo, z_hi]`.
    pub fn curve(
        label: impl Into<String>,
        z_lo: f64,
        z_hi: f64,
        resolution: usize,
        map: impl Fn(f64) -> Result<ContentParams> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(z_lo.is_finite() && z_hi.is_finite() && z_lo <= z_hi) {
            return Err(Error::invalid("domain", format!("[{z_lo}, {z_hi}] is not a bounded interval")));
        }
        if resolution == 0 {
            return Err(Error::invalid("resolution", "must be positive"));
        }
        let map: CurveMap = Arc::new(map);
        let mut points = Vec::with_capacity(resolution);
        let mut coords = Vec::with_capacity(resolution);
        for i in 0..resolution {
            let z = grid_point(z_lo, z_hi, resolution, i);
            points.push(map(z)?);
            coords.push(Coord::Z(z));
        }
        Ok(Self {
            kind: ManifoldKind::Curve,
            label: label.into(),
            points,
            coords,
            domain: Some((z_lo, z_hi)),
            map: Some(map),
            sources: Vec::new(),
        })
    }

    /// Mixtures of `sources` over a simplex lattice with `resolution` steps
    /// per axis, in lexicographic order of the weight vectors.
    pub fn mixture(sources: Vec<ContentParams>, resolution: usize) -> Result<Self> {
        check_source_count(sources.len())?;
        if sources.len() > MAX_GRIDDED_SOURCES {
            return Err(Error::invalid(
                "sources",
                format!(
                    "{} sources need an explicit weight list (lattice is limited to {MAX_GRIDDED_SOURCES})",
                    sources.len()
                ),
            ));
        }
        if resolution == 0 {
            return Err(Error::invalid("resolution", "must be positive"));
        }
        let weights = simplex_lattice(sources.len(), resolution);
        Self::mixture_weights(sources, weights)
    }

    /// Mixtures of `sources` at explicitly listed weight vectors.
    pub fn mixture_weights(sources: Vec<ContentParams>, weights: Vec<Vec<f64>>) -> Result<Self> {
        check_source_count(sources.len())?;
        if weights.is_empty() {
            return Err(Error::invalid("weights", "need at least one weight vector"));
        }
        let mut points = Vec::with_capacity(weights.len());
        for wv in &weights {
            if wv.len() != sources.len() {
                return Err(Error::invalid("weights", "each weight vector needs one entry per source"));
            }
            let pairs: Vec<(ContentParams, f64)> = sources.iter().copied().zip(wv.iter().copied()).collect();
            points.push(mix(&pairs)?);
        }
        Ok(Self {
            kind: ManifoldKind::Mixture,
            label: format!("mixture of {} sources", sources.len()),
            points,
            coords: weights.into_iter().map(Coord::Weights).collect(),
            domain: None,
            map: None,
            sources,
        })
    }

    pub fn point_set(points: Vec<ContentParams>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "point set must not be empty"));
        }
        let coords = (0..points.len()).map(Coord::Index).collect();
        Ok(Self {
            kind: ManifoldKind::PointSet,
            label: "point set".into(),
            points,
            coords,
            domain: None,
            map: None,
            sources: Vec::new(),
        })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[ContentParams] {
        &self.points
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn domain(&self) -> Option<(f64, f64)> {
        self.domain
    }

    pub fn sources(&self) -> &[ContentParams] {
        &self.sources
    }

    /// Evaluates a curve at any `z` in its domain, on or off the grid.
    pub fn at(&self, z: f64) -> Result<ContentParams> {
        match (&self.map, self.domain) {
            (Some(map), Some((lo, hi))) if (lo..=hi).contains(&z) => map(z),
            (Some(_), Some((lo, hi))) => Err(Error::invalid("z", format!("{z} outside [{lo}, {hi}]"))),
            _ => Err(Error::invalid("z", "only curves can be evaluated at a parameter")),
        }
    }

    /// True if some grid point has `g_S >= 0` at outside option `w`.
    pub fn has_feasible_point(&self, w: OutsideOption) -> bool {
        self.points.par_iter().any(|c| c.participates(w.w()))
    }
}

fn check_source_count(k: usize) -> Result<()> {
    if k == 0 || k > MAX_SOURCES {
        return Err(Error::invalid("sources", format!("need 1 to {MAX_SOURCES} sources, got {k}")));
    }
    Ok(())
}

/// `i`-th of `n` equally spaced points on `[lo, hi]`.
pub fn grid_point(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        lo
    } else if i == n - 1 {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// All weight vectors with entries in `{0, 1/r, ..., 1}` summing to 1.
fn simplex_lattice(k: usize, r: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, r: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / r as f64).collect());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(k - 1, left - c, r, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, r, r, &mut Vec::with_capacity(k), &mut out);
    out
}

/// The parameters seen when each item is drawn from source `i` with
/// probability `a_i`.
pub fn mix(sources: &[(ContentParams, f64)]) -> Result<ContentParams> {
    if sources.is_empty() {
        return Err(Error::invalid("sources", "need at least one source"));
    }
    let mut total = 0.0;
    for &(_, a) in sources {
        if !(a.is_finite() && (0.0..=1.0).contains(&a)) {
            return Err(Error::invalid("weights", format!("weight {a} outside [0, 1]")));
        }
        total += a;
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::invalid("weights", format!("weights sum to {total}, expected 1")));
    }
    let (mut p, mut q, mut v) = (0.0, 0.0, 0.0);
    for &(c, a) in sources {
        p += a * c.p();
        q += a * c.q();
        v += a * c.v_bar();
    }
    ContentParams::new(p, q, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    /// Better span and value together: `(0, q0 + z, v0 + z)` on `[0, ε]`.
    Quality,
    /// More moreishness only: `(z, q0, v0)`.
    Moreishness,
    /// Moreishness with rising value: `(z, q0, v0 + αz)`.
    Both,
}

impl std::str::FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quality" => Ok(Example::Quality),
            "moreishness" => Ok(Example::Moreishness),
            "both" => Ok(Example::Both),
            _ => Err(Error::invalid("kind", format!("unknown example manifold `{s}`"))),
        }
    }
}

/// Builds one of the three illustrative curves at the default resolution.
///
/// The `[0, 1)` domains of the moreishness curves are closed at
/// [`OPEN_DOMAIN_END`].
pub fn example_manifold(which: Example, q0: f64, v0: f64, alpha: f64, epsilon: f64) -> Result<Manifold> {
    example_manifold_with_resolution(which, q0, v0, alpha, epsilon, DEFAULT_RESOLUTION)
}

pub fn example_manifold_with_resolution(
    which: Example,
    q0: f64,
    v0: f64,
    alpha: f64,
    epsilon: f64,
    resolution: usize,
) -> Result<Manifold> {
    check_probability("q0", q0)?;
    check_positive("v0", v0)?;
    match which {
        Example::Quality => {
            if !(epsilon.is_finite() && epsilon >= 0.0) {
                return Err(Error::invalid("epsilon", format!("must be nonnegative, got {epsilon}")));
            }
            if epsilon >= 1.0 - q0 {
                return Err(Error::invalid(
                    "epsilon",
                    format!("q0 + epsilon must stay below 1 (q0 = {q0}, epsilon = {epsilon})"),
                ));
            }
            Manifold::curve("quality", 0.0, epsilon, resolution, move |z| {
                ContentParams::new(0.0, q0 + z, v0 + z)
            })
        }
        Example::Moreishness => Manifold::curve("moreishness", 0.0, OPEN_DOMAIN_END, resolution, move |z| {
            ContentParams::new(z, q0, v0)
        }),
        Example::Both => {
            if !(alpha.is_finite() && alpha >= 0.0) {
                return Err(Error::invalid("alpha", format!("must be nonnegative, got {alpha}")));
            }
            Manifold::curve("both", 0.0, OPEN_DOMAIN_END, resolution, move |z| {
                ContentParams::new(z, q0, v0 + alpha * z)
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Aligned,
    HigherMoreishness,
    HigherSpanLowerValue,
    NonStrict,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Aligned => "aligned",
            Classification::HigherMoreishness => "higher_moreishness",
            Classification::HigherSpanLowerValue => "higher_span_lower_value",
            Classification::NonStrict => "non_strict",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimaReport {
    pub omega_s: ContentParams,
    pub omega_t: ContentParams,
    pub index_s: usize,
    pub index_t: usize,
    pub coord_s: Coord,
    pub coord_t: Coord,
    /// `E[S]` at the utility optimum.
    pub s_at_s: f64,
    pub s_at_t: f64,
    pub t_at_s: f64,
    /// `E[T]` at the engagement optimum.
    pub t_at_t: f64,
    pub classification: Classification,
}

/// Index of the largest `score`, ties to the smallest index; `None` if every
/// candidate is filtered out.
fn argmax(n: usize, score: impl Fn(usize) -> Option<f64> + Sync) -> Option<usize> {
    (0..n)
        .into_par_iter()
        .filter_map(|i| score(i).map(|s| (s, i)))
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
        .map(|(_, i)| i)
}

/// Grid search for the utility optimum `ω_S` and the engagement optimum
/// `ω_T` (restricted to points where the user participates).
pub fn find_optima(manifold: &Manifold, w: OutsideOption) -> Result<OptimaReport> {
    let pts = manifold.points();
    let wv = w.w();
    let index_t = argmax(pts.len(), |i| pts[i].participates(wv).then(|| pts[i].g_engagement()))
        .ok_or(Error::NoFeasiblePoint)?;
    let index_s = argmax(pts.len(), |i| Some(pts[i].g_utility(wv))).expect("manifold is nonempty");
    let (omega_s, omega_t) = (pts[index_s], pts[index_t]);
    let classification = if index_s == index_t {
        Classification::Aligned
    } else {
        check_two_conditions(omega_s, omega_t, w)?
    };
    let at_s = ModelPoint::new(omega_s, w);
    let at_t = ModelPoint::new(omega_t, w);
    Ok(OptimaReport {
        omega_s,
        omega_t,
        index_s,
        index_t,
        coord_s: manifold.coords[index_s].clone(),
        coord_t: manifold.coords[index_t].clone(),
        s_at_s: at_s.expected_utility(),
        s_at_t: at_t.expected_utility(),
        t_at_s: at_s.expected_engagement(),
        t_at_t: at_t.expected_engagement(),
        classification,
    })
}

fn strictly_greater(a: f64, b: f64) -> bool {
    a - b > STRICT_REL * 1f64.max(a.abs()).max(b.abs())
}

/// Which of the two possible reasons explains a strict disagreement between
/// the utility and engagement optima.
///
/// Pairs that do not disagree strictly on both `E[S]` and `E[T]` come back as
/// [`Classification::NonStrict`]. A strict pair where the engagement optimum
/// has neither higher moreishness nor (higher span and lower value) is
/// reported as [`Error::TheoremViolation`].
pub fn check_two_conditions(omega_s: ContentParams, omega_t: ContentParams, w: OutsideOption) -> Result<Classification> {
    let s = ModelPoint::new(omega_s, w);
    let t = ModelPoint::new(omega_t, w);
    let strict = strictly_greater(s.expected_utility(), t.expected_utility())
        && strictly_greater(t.expected_engagement(), s.expected_engagement());
    if !strict {
        return Ok(Classification::NonStrict);
    }
    if omega_t.p() > omega_s.p() {
        Ok(Classification::HigherMoreishness)
    } else if omega_t.q() > omega_s.q() && omega_t.v_bar() < omega_s.v_bar() {
        Ok(Classification::HigherSpanLowerValue)
    } else {
        Err(Error::TheoremViolation(format!(
            "omega_s = {omega_s:?}, omega_t = {omega_t:?}, W = {}: engagement optimum has neither higher p nor higher q with lower v_bar",
            w.w()
        )))
    }
}

/// Engagement optimum on the moreishness curve: the largest `z` with
/// `g_S >= 0`, namely `1 - W / ((v̄ - W)/(1 - q) + W)`.
pub fn analytic_optima_example2(q: f64, v_bar: f64, w: f64) -> Result<f64> {
    check_probability("q", q)?;
    check_positive("v_bar", v_bar)?;
    check_positive("w", w)?;
    if v_bar <= w {
        return Err(Error::invalid("v_bar", format!("must exceed W = {w} for any participation")));
    }
    Ok(1.0 - w / ((v_bar - w) / (1.0 - q) + w))
}

/// `(z_S, z_T)` on the curve `(z, q, v0 + αz)`.
///
/// `g_S` is concave in `z` with stationary point `1 - sqrt(W(1-q)/α)`, and
/// `z_T` is the positive root of `α z² - (α - v0 + Wq) z - (v0 - W) = 0`.
pub fn analytic_optima_example3(q: f64, v0: f64, alpha: f64, w: f64) -> Result<(f64, f64)> {
    check_probability("q", q)?;
    check_positive("v0", v0)?;
    check_positive("alpha", alpha)?;
    check_positive("w", w)?;
    if v0 <= w {
        return Err(Error::invalid("v0", format!("must exceed W = {w}")));
    }
    let z_s = (1.0 - (w * (1.0 - q) / alpha).sqrt()).max(0.0);
    let b = alpha - v0 + w * q;
    let z_t = (b + (b * b - 4.0 * alpha * (w - v0)).sqrt()) / (2.0 * alpha);
    Ok((z_s, z_t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentBound {
    /// `E[S(ω_T)]`.
    pub lhs: f64,
    /// `E[S(ω_S)] - 2β E[T(ω_S)] - α(v0 + β)/(1 - α)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the utility guarantee for manifolds with bounded moreishness
/// (`p <= α` everywhere) and values near `v0` (`|v̄ - v0| < β` everywhere).
///
/// The strict value cap is checked as `|v̄ - v0| <= β - 1e-12`; with `β = 0`
/// it degenerates to `v̄ = v0` exactly.
pub fn alignment_bound_check(
    manifold: &Manifold,
    w: OutsideOption,
    alpha_cap: f64,
    beta_cap: f64,
    v0: f64,
) -> Result<AlignmentBound> {
    check_probability("alpha_cap", alpha_cap)?;
    if !(beta_cap.is_finite() && beta_cap >= 0.0) {
        return Err(Error::invalid("beta_cap", format!("must be nonnegative, got {beta_cap}")));
    }
    check_positive("v0", v0)?;
    let value_cap = (beta_cap - CAP_MARGIN).max(0.0);
    for c in manifold.points() {
        if c.p() > alpha_cap {
            return Err(Error::invalid("alpha_cap", format!("point {c:?} has p above {alpha_cap}")));
        }
        if (c.v_bar() - v0).abs() > value_cap {
            return Err(Error::invalid(
                "beta_cap",
                format!("point {c:?} has v_bar farther than {beta_cap} from {v0}"),
            ));
        }
    }
    let r = find_optima(manifold, w)?;
    let rhs = r.s_at_s - 2.0 * beta_cap * r.t_at_s - alpha_cap * (v0 + beta_cap) / (1.0 - alpha_cap);
    Ok(AlignmentBound {
        lhs: r.s_at_t,
        rhs,
        holds: r.s_at_t >= rhs,
    })
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub z: f64,
    pub p: f64,
    pub q: f64,
    pub v_bar: f64,
    pub g_s: f64,
    pub g_t: f64,
    pub participates: bool,
}

pub fn sweep(manifold: &Manifold, w: OutsideOption) -> Vec<SweepRow> {
    manifold
        .points()
        .iter()
        .zip(manifold.coords())
        .enumerate()
        .map(|(i, (c, coord))| SweepRow {
            z: coord.scalar(i),
            p: c.p(),
            q: c.q(),
            v_bar: c.v_bar(),
            g_s: c.g_utility(w.w()),
            g_t: c.g_engagement(),
            participates: c.participates(w.w()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cp(p: f64, q: f64, v: f64) -> ContentParams {
        ContentParams::new(p, q, v).unwrap()
    }

    fn w1() -> OutsideOption {
        OutsideOption::new(1.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn example_parametrizations() {
        let m = example_manifold(Example::Quality, 0.5, 3.0, 0.0, 0.4).unwrap();
        let c = m.at(0.4).unwrap();
        assert_eq!((c.p(), c.v_bar()), (0.0, 3.4));
        assert!(close(c.q(), 0.9, 1e-15));
        assert_eq!(m.points().last().unwrap(), &c);

        let m = example_manifold(Example::Moreishness, 0.5, 3.0, 0.0, 0.0).unwrap();
        assert_eq!(m.at(0.8).unwrap(), cp(0.8, 0.5, 3.0));

        let m = example_manifold(Example::Both, 0.5, 3.0, 1.0, 0.0).unwrap();
        assert_eq!(m.at(0.5).unwrap(), cp(0.5, 0.5, 3.5));
        assert!(m.at(1.0).is_err());
    }

    #[test]
    fn quality_epsilon_must_keep_span_below_one() {
        assert!(example_manifold(Example::Quality, 0.5, 3.0, 0.0, 0.5).is_err());
        assert!(example_manifold(Example::Quality, 0.5, 3.0, 0.0, 0.6).is_err());
        assert!(example_manifold(Example::Quality, 0.5, 3.0, 0.0, 0.499).is_ok());
    }

    #[test]
    fn grid_is_closed_and_even() {
        assert_eq!(grid_point(0.0, 1.0, 5, 0), 0.0);
        assert_eq!(grid_point(0.0, 1.0, 5, 2), 0.5);
        assert_eq!(grid_point(0.0, 1.0, 5, 4), 1.0);
        assert_eq!(grid_point(0.3, 0.9, 1, 0), 0.3);
    }

    #[test]
    fn mix_examples() {
        let m = mix(&[(cp(0.0, 0.5, 3.0), 0.5), (cp(0.8, 0.5, 1.0), 0.5)]).unwrap();
        assert!(close(m.p(), 0.4, 1e-15) && close(m.q(), 0.5, 1e-15) && close(m.v_bar(), 2.0, 1e-15));
        let x = cp(0.3, 0.2, 1.7);
        assert_eq!(mix(&[(x, 1.0)]).unwrap(), x);
        let b = mix(&[(cp(0.6, 0.5, 3.0), 0.9), (cp(0.0, 0.9, 0.1), 0.1)]).unwrap();
        assert!(close(b.p(), 0.54, 1e-12) && close(b.q(), 0.54, 1e-12) && close(b.v_bar(), 2.71, 1e-12));
        assert!(mix(&[(x, 0.5), (x, 0.49)]).is_err());
        assert!(mix(&[(x, 0.5), (x, 0.5 + 1e-10)]).is_ok());
        assert!(mix(&[]).is_err());
    }

    #[test]
    fn simplex_lattice_is_lexicographic() {
        let l = simplex_lattice(3, 2);
        assert_eq!(l.len(), 6);
        assert_eq!(l[0], vec![0.0, 0.0, 1.0]);
        assert_eq!(l[5], vec![1.0, 0.0, 0.0]);
        assert_eq!(simplex_lattice(4, 100).len(), 176_851);
        for wv in simplex_lattice(3, 7) {
            assert!(close(wv.iter().sum::<f64>(), 1.0, 1e-12));
        }
    }

    #[test]
    fn mixture_source_limits() {
        let src = vec![cp(0.1, 0.5, 2.0); 5];
        assert!(Manifold::mixture(src.clone(), 10).is_err());
        let wts = vec![vec![0.2; 5]];
        assert!(Manifold::mixture_weights(src, wts).is_ok());
        assert!(Manifold::mixture_weights(vec![cp(0.1, 0.5, 2.0); 17], vec![vec![1.0 / 17.0; 17]]).is_err());
    }

    #[test]
    fn mixture_manifold_optima() {
        let m = Manifold::mixture(vec![cp(0.0, 0.5, 3.0), cp(0.8, 0.5, 1.0)], 100).unwrap();
        assert_eq!(m.len(), 101);
        let r = find_optima(&m, w1()).unwrap();
        // all weight on the first source maximizes utility
        assert_eq!(r.coord_s, Coord::Weights(vec![1.0, 0.0]));
        assert!(r.omega_t.p() > r.omega_s.p());
        assert_eq!(r.classification, Classification::HigherMoreishness);
    }

    #[test]
    fn example2_optima() {
        let m = example_manifold(Example::Moreishness, 0.5, 3.0, 0.0, 0.0).unwrap();
        let r = find_optima(&m, w1()).unwrap();
        assert_eq!(r.coord_s, Coord::Z(0.0));
        let Coord::Z(z_t) = r.coord_t else { panic!() };
        let step = OPEN_DOMAIN_END / (DEFAULT_RESOLUTION - 1) as f64;
        assert!((z_t - 0.8).abs() <= step, "{z_t}");
        assert!(r.s_at_t.abs() < 5e-3);
        assert_eq!(r.classification, Classification::HigherMoreishness);
        assert!(r.s_at_s >= r.s_at_t && r.t_at_t >= r.t_at_s);
    }

    #[test]
    fn example1_is_aligned() {
        let m = example_manifold(Example::Quality, 0.5, 3.0, 0.0, 0.4).unwrap();
        let r = find_optima(&m, w1()).unwrap();
        assert_eq!(r.classification, Classification::Aligned);
        assert_eq!(r.coord_t, Coord::Z(0.4));
    }

    #[test]
    fn two_point_set() {
        let m = Manifold::point_set(vec![cp(0.2, 0.5, 3.0), cp(0.5, 0.5, 3.0)]).unwrap();
        let r = find_optima(&m, w1()).unwrap();
        assert_eq!((r.index_s, r.index_t), (0, 1));
        assert_eq!(r.classification, Classification::HigherMoreishness);
    }

    #[test]
    fn no_feasible_point() {
        let m = Manifold::point_set(vec![cp(0.9, 0.5, 3.0), cp(0.2, 0.1, 0.5)]).unwrap();
        assert_eq!(find_optima(&m, w1()).unwrap_err(), Error::NoFeasiblePoint);
        assert!(!m.has_feasible_point(w1()));
    }

    #[test]
    fn ties_break_toward_first_point() {
        let m = Manifold::point_set(vec![cp(0.2, 0.5, 3.0), cp(0.2, 0.5, 3.0)]).unwrap();
        let r = find_optima(&m, w1()).unwrap();
        assert_eq!((r.index_s, r.index_t), (0, 0));
    }

    #[test]
    fn two_conditions_examples() {
        let c = check_two_conditions(cp(0.2, 0.5, 3.0), cp(0.5, 0.5, 3.0), w1()).unwrap();
        assert_eq!(c, Classification::HigherMoreishness);
        // (0.3, 0.4, 3) and (0.3, 0.7, 2) have equal utility 10/3 - 3/7 at W = 1
        let c = check_two_conditions(cp(0.3, 0.4, 3.0), cp(0.3, 0.7, 2.0), w1()).unwrap();
        assert_eq!(c, Classification::NonStrict);
        let c = check_two_conditions(cp(0.3, 0.4, 3.0), cp(0.3, 0.7, 1.9), w1()).unwrap();
        assert_eq!(c, Classification::HigherSpanLowerValue);
        // reversed roles do not disagree strictly
        let c = check_two_conditions(cp(0.5, 0.5, 3.0), cp(0.2, 0.5, 3.0), w1()).unwrap();
        assert_eq!(c, Classification::NonStrict);
    }

    #[test]
    fn example2_analytic() {
        assert!(close(analytic_optima_example2(0.5, 3.0, 1.0).unwrap(), 0.8, 1e-15));
        assert!(close(analytic_optima_example2(0.0, 2.0, 1.0).unwrap(), 0.5, 1e-15));
        let small = analytic_optima_example2(0.5, 1.0 + 1e-9, 1.0).unwrap();
        assert!(small > 0.0 && small < 1e-8);
        assert!(analytic_optima_example2(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn example3_analytic() {
        let (z_s, z_t) = analytic_optima_example3(0.5, 3.0, 1.0, 1.0).unwrap();
        assert!(close(z_s, 1.0 - 0.5f64.sqrt(), 1e-15));
        assert!(close(z_t, 0.850_781_059_358_212_1, 1e-12));
        let (z_s, _) = analytic_optima_example3(0.5, 3.0, 0.4, 1.0).unwrap();
        assert_eq!(z_s, 0.0);
        assert!(analytic_optima_example3(0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn example3_grid_matches_analytic() {
        let m = example_manifold(Example::Both, 0.5, 3.0, 1.0, 0.0).unwrap();
        let r = find_optima(&m, w1()).unwrap();
        let (z_s, z_t) = analytic_optima_example3(0.5, 3.0, 1.0, 1.0).unwrap();
        let (Coord::Z(gs), Coord::Z(gt)) = (&r.coord_s, &r.coord_t) else { panic!() };
        assert!(close(*gs, z_s, 1e-3) && close(*gt, z_t, 1e-3));
        assert_eq!(r.classification, Classification::HigherMoreishness);
    }

    #[test]
    fn example3_curve_is_concave() {
        let m = example_manifold_with_resolution(Example::Both, 0.5, 3.0, 1.0, 0.0, 2000).unwrap();
        let g: Vec<f64> = m.points().iter().map(|c| c.g_utility(1.0)).collect();
        for win in g.windows(3) {
            assert!(win[0] - 2.0 * win[1] + win[2] <= 1e-12);
        }
    }

    #[test]
    fn example2_engagement_rises_on_feasible_set() {
        let m = example_manifold(Example::Moreishness, 0.5, 3.0, 0.0, 0.0).unwrap();
        let feasible: Vec<&ContentParams> = m.points().iter().filter(|c| c.g_utility(1.0) > 0.0).collect();
        for pair in feasible.windows(2) {
            assert!(pair[1].g_engagement() > pair[0].g_engagement());
        }
    }

    #[test]
    fn alignment_bound_examples() {
        let flat = Manifold::point_set(vec![cp(0.0, 0.3, 2.0), cp(0.0, 0.6, 2.0), cp(0.0, 0.1, 2.0)]).unwrap();
        let b = alignment_bound_check(&flat, w1(), 0.0, 0.0, 2.0).unwrap();
        assert!(b.holds);
        assert_eq!(b.lhs, b.rhs);

        let eps = 0.3;
        let m = example_manifold(Example::Quality, 0.5, 3.0, 0.0, eps).unwrap();
        // the value cap is strict, so β must exceed the curve's largest deviation ε
        assert!(alignment_bound_check(&m, w1(), 0.0, eps, 3.0).is_err());
        let b = alignment_bound_check(&m, w1(), 0.0, eps + 1e-9, 3.0).unwrap();
        assert!(b.holds);

        let bad = Manifold::point_set(vec![cp(0.2, 0.3, 3.0)]).unwrap();
        assert!(alignment_bound_check(&bad, w1(), 0.1, 1.0, 3.0).is_err());
    }

    #[test]
    fn sweep_columns() {
        let m = example_manifold_with_resolution(Example::Moreishness, 0.5, 3.0, 0.0, 0.0, 11).unwrap();
        let rows = sweep(&m, w1());
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].z, 0.0);
        assert_eq!(rows[0].g_s, 4.0);
        assert!(rows[0].participates && !rows[10].participates);
    }

    fn omega() -> impl Strategy<Value = ContentParams> {
        (0.0..0.99f64, 0.0..0.99f64, 0.05..10.0f64).prop_map(|(p, q, v)| cp(p, q, v))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn strict_pairs_never_violate(s in omega(), t in omega()) {
            prop_assert!(check_two_conditions(s, t, w1()).is_ok());
        }

        #[test]
        fn optima_are_optimal(pts in prop::collection::vec(omega(), 1..12)) {
            let m = Manifold::point_set(pts.clone()).unwrap();
            if let Ok(r) = find_optima(&m, w1()) {
                for c in &pts {
                    prop_assert!(c.g_utility(1.0) <= r.omega_s.g_utility(1.0));
                    if c.participates(1.0) {
                        prop_assert!(c.g_engagement() <= r.omega_t.g_engagement());
                    }
                }
                prop_assert!(r.s_at_s >= r.s_at_t);
                prop_assert!(r.t_at_t >= r.t_at_s);
            }
        }
    }
}
