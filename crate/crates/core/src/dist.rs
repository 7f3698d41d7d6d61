//! Finite-support value distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    PointMass,
    FiniteSupport,
}

/// A distribution over finitely many real values.
///
/// The support is kept sorted by value with duplicates merged and
/// zero-probability atoms dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawValueDist", into = "RawValueDist")]
pub struct ValueDist {
    kind: DistKind,
    support: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawValueDist {
    PointMass { value: f64 },
    FiniteSupport { support: Vec<(f64, f64)> },
}

impl TryFrom<RawValueDist> for ValueDist {
    type Error = Error;

    fn try_from(raw: RawValueDist) -> Result<Self> {
        match raw {
            RawValueDist::PointMass { value } => ValueDist::point_mass(value),
            RawValueDist::FiniteSupport { support } => ValueDist::finite(support),
        }
    }
}

impl From<ValueDist> for RawValueDist {
    fn from(d: ValueDist) -> Self {
        match d.kind {
            DistKind::PointMass => RawValueDist::PointMass {
                value: d.support[0].0,
            },
            DistKind::FiniteSupport => RawValueDist::FiniteSupport { support: d.support },
        }
    }
}

impl ValueDist {
    pub fn point_mass(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::invalid("value", format!("must be finite, got {value}")));
        }
        Ok(Self {
            kind: DistKind::PointMass,
            support: vec![(value, 1.0)],
            cumulative: vec![1.0],
        })
    }

    /// Builds a distribution from `(value, probability)` pairs.
    pub fn finite(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::invalid("support", "must not be empty"));
        }
        for &(v, pr) in &atoms {
            if !v.is_finite() {
                return Err(Error::invalid("support", format!("value {v} is not finite")));
            }
            if !(pr.is_finite() && (0.0..=1.0).contains(&pr)) {
                return Err(Error::invalid("support", format!("probability {pr} outside [0, 1]")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(
                "support",
                format!("probabilities sum to {total}, expected 1"),
            ));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, pr) in atoms {
            match support.last_mut() {
                Some(last) if last.0 == v => last.1 += pr,
                _ => support.push((v, pr)),
            }
        }
        support.retain(|a| a.1 > 0.0);
        Ok(Self::from_sorted(support))
    }

    fn from_sorted(support: Vec<(f64, f64)>) -> Self {
        let mut cumulative = Vec::with_capacity(support.len());
        let mut acc = 0.0;
        for &(_, pr) in &support {
            acc += pr;
            cumulative.push(acc);
        }
        // sampling compares against a uniform in [0, 1)
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        let kind = if support.len() == 1 {
            DistKind::PointMass
        } else {
            DistKind::FiniteSupport
        };
        Self {
            kind,
            support,
            cumulative,
        }
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    /// Sorted `(value, probability)` atoms.
    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(v, pr)| v * pr).sum()
    }

    pub fn min_value(&self) -> f64 {
        self.support[0].0
    }

    pub fn max_value(&self) -> f64 {
        self.support[self.support.len() - 1].0
    }

    /// `Pr[v <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.support.partition_point(|a| a.0 <= x) {
            0 => 0.0,
            k => self.cumulative[k - 1],
        }
    }

    /// `Pr[v >= tau]`.
    pub fn tail_prob(&self, tau: f64) -> f64 {
        let k = self.support.partition_point(|a| a.0 < tau);
        self.support[k..].iter().map(|a| a.1).sum()
    }

    /// `E[v * 1{v >= tau}]`.
    pub fn tail_mean(&self, tau: f64) -> f64 {
        let k = self.support.partition_point(|a| a.0 < tau);
        self.support[k..].iter().map(|&(v, pr)| v * pr).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.support.len() == 1 {
            return self.support[0].0;
        }
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.support[k.min(self.support.len() - 1)].0
    }

    /// Distribution of the maximum of independent draws, one from each input.
    pub fn max_of(dists: &[ValueDist]) -> Result<ValueDist> {
        match dists {
            [] => Err(Error::invalid("dists", "need at least one distribution")),
            [only] => Ok(only.clone()),
            _ => {
                let mut values: Vec<f64> = dists
                    .iter()
                    .flat_map(|d| d.support.iter().map(|a| a.0))
                    .collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                let mut support = Vec::with_capacity(values.len());
                let mut prev = 0.0;
                for v in values {
                    let joint: f64 = dists.iter().map(|d| d.cdf(v)).product();
                    support.push((v, joint - prev));
                    prev = joint;
                }
                support.retain(|a| a.1 > 0.0);
                Ok(Self::from_sorted(support))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;

    fn two_point(a: f64, b: f64) -> ValueDist {
        ValueDist::finite([(a, 0.5), (b, 0.5)]).unwrap()
    }

    #[test]
    fn construction_normalizes_support() {
        let d = ValueDist::finite([(4.0, 0.25), (1.0, 0.5), (4.0, 0.25), (9.0, 0.0)]).unwrap();
        assert_eq!(d.support(), &[(1.0, 0.5), (4.0, 0.5)]);
        assert_eq!(d.kind(), DistKind::FiniteSupport);
        assert_eq!(d.mean(), 2.5);
        assert_eq!(ValueDist::finite([(3.0, 1.0)]).unwrap().kind(), DistKind::PointMass);
    }

    #[test]
    fn rejects_bad_supports() {
        assert!(ValueDist::finite([]).is_err());
        assert!(ValueDist::finite([(1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(ValueDist::finite([(1.0, 1.5), (2.0, -0.5)]).is_err());
        assert!(ValueDist::finite([(f64::NAN, 1.0)]).is_err());
        assert!(ValueDist::point_mass(f64::INFINITY).is_err());
        // within tolerance
        assert!(ValueDist::finite([(1.0, 0.5), (2.0, 0.5 + 5e-13)]).is_ok());
    }

    #[test]
    fn tails() {
        let d = ValueDist::finite([(1.0, 0.2), (2.0, 0.3), (5.0, 0.5)]).unwrap();
        assert_eq!(d.tail_prob(2.0), 0.8);
        assert_eq!(d.tail_prob(2.5), 0.5);
        assert_eq!(d.tail_prob(6.0), 0.0);
        assert_eq!(d.tail_prob(f64::NEG_INFINITY), 1.0);
        assert!((d.tail_mean(2.0) - 3.1).abs() < 1e-15);
        assert_eq!(d.tail_mean(f64::INFINITY), 0.0);
        assert_eq!(d.cdf(0.5), 0.0);
        assert_eq!(d.cdf(2.0), 0.5);
        assert_eq!(d.cdf(5.0), 1.0);
    }

    #[test]
    fn max_of_examples() {
        let v = two_point(1.0, 4.0);
        assert_eq!(ValueDist::max_of(std::slice::from_ref(&v)).unwrap(), v);
        let m = ValueDist::max_of(&[v.clone(), v]).unwrap();
        assert_eq!(m.support(), &[(1.0, 0.25), (4.0, 0.75)]);

        let ad = two_point(1.011, 1.05);
        let m = ValueDist::max_of(&[ad.clone(), ad]).unwrap();
        assert_eq!(m.support(), &[(1.011, 0.25), (1.05, 0.75)]);
    }

    #[test]
    fn max_of_mixed_supports() {
        let a = ValueDist::finite([(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let b = ValueDist::finite([(1.0, 0.25), (3.0, 0.75)]).unwrap();
        let m = ValueDist::max_of(&[a, b]).unwrap();
        // Pr[max = 1] = Pr[a=0]Pr[b=1]; Pr[max = 2] = Pr[a=2]Pr[b=1]; rest is b=3
        assert_eq!(m.support(), &[(1.0, 0.125), (2.0, 0.125), (3.0, 0.75)]);
    }

    #[test]
    fn sampling_frequencies() {
        let d = ValueDist::finite([(1.0, 0.2), (2.0, 0.3), (5.0, 0.5)]).unwrap();
        let mut rng = substream(1, 0);
        let n = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let v = d.sample(&mut rng);
            let k = d.support().iter().position(|a| a.0 == v).unwrap();
            counts[k] += 1;
        }
        for (k, &(_, pr)) in d.support().iter().enumerate() {
            let freq = counts[k] as f64 / n as f64;
            let se = (pr * (1.0 - pr) / n as f64).sqrt();
            assert!((freq - pr).abs() < 4.0 * se, "atom {k}: {freq} vs {pr}");
        }
    }

    #[test]
    fn serde_round_trip() {
        let d = two_point(1.0, 4.0);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<ValueDist>(&s).unwrap(), d);
        let pm: ValueDist = serde_json::from_str(r#"{"kind":"point_mass","value":3}"#).unwrap();
        assert_eq!(pm.mean(), 3.0);
        assert!(serde_json::from_str::<ValueDist>(
            r#"{"kind":"finite_support","support":[[1,0.3],[2,0.3]]}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn max_matches_brute_force(
            a in prop::collection::vec((0u8..6, 1u32..10), 1..4),
            b in prop::collection::vec((0u8..6, 1u32..10), 1..4),
        ) {
            let mk = |xs: &[(u8, u32)]| {
                let tot: u32 = xs.iter().map(|x| x.1).sum();
                ValueDist::finite(xs.iter().map(|&(v, w)| (v as f64, w as f64 / tot as f64))).unwrap()
            };
            let (da, db) = (mk(&a), mk(&b));
            let m = ValueDist::max_of(&[da.clone(), db.clone()]).unwrap();
            let total: f64 = m.support().iter().map(|x| x.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for &(v, pr) in m.support() {
                let mut brute = 0.0;
                for &(x, px) in da.support() {
                    for &(y, py) in db.support() {
                        if x.max(y) == v {
                            brute += px * py;
                        }
                    }
                }
                prop_assert!((brute - pr).abs() < 1e-12);
            }
        }
    }
}
