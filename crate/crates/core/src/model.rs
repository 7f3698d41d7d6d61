//! Linear-feed model: content parameters and the closed-form evaluators for
//! participation, expected utility `E[S]` and expected engagement `E[T]`.
//!
//! A session runs in two phases. In the first, system 2 still derives value
//! from each item; its length is geometric with continuation probability `q`.
//! In the second, system 2 is done but system 1 keeps consuming while each
//! item hooks it (probability `p`), costing `W` per item. This gives
//!
//! ```text
//! g_S = (v̄ - W) / (1 - q) - p W / (1 - p)
//! g_T = 1 / (1 - q) + p / (1 - p)
//! ```
//!
//! and the user visits the platform only if `g_S >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Result};

/// Relative slack on the participation test: `g_S` counts as non-negative when
/// it is above `-REL_TOL * (|first phase| + |second phase|)`. Decimal inputs
/// such as `p = 0.8` are not representable, so points that sit exactly on the
/// participation boundary otherwise evaluate to `-1e-16`.
pub const PARTICIPATION_REL_TOL: f64 = 1e-12;

/// A point `(p, q, v̄)` of the content parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawContentParams")]
pub struct ContentParams {
    p: f64,
    q: f64,
    v_bar: f64,
}

#[derive(Deserialize)]
struct RawContentParams {
    p: f64,
    q: f64,
    v_bar: f64,
}

impl TryFrom<RawContentParams> for ContentParams {
    type Error = crate::Error;

    fn try_from(raw: RawContentParams) -> Result<Self> {
        ContentParams::new(raw.p, raw.q, raw.v_bar)
    }
}

impl ContentParams {
    /// Moreishness `p`, span `q` and mean item value `v̄`.
    pub fn new(p: f64, q: f64, v_bar: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        check_positive("v_bar", v_bar)?;
        Ok(Self { p, q, v_bar })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn v_bar(&self) -> f64 {
        self.v_bar
    }

    /// Expected engagement ignoring participation.
    pub fn g_engagement(&self) -> f64 {
        1.0 / (1.0 - self.q) + self.p / (1.0 - self.p)
    }

    /// Unclamped expected utility for outside option `w`.
    pub fn g_utility(&self, w: f64) -> f64 {
        let (gain, loss) = self.utility_terms(w);
        gain - loss
    }

    /// Participation decision for outside option `w` (boundary included).
    pub fn participates(&self, w: f64) -> bool {
        let (gain, loss) = self.utility_terms(w);
        gain - loss >= -PARTICIPATION_REL_TOL * (gain.abs() + loss.abs())
    }

    fn utility_terms(&self, w: f64) -> (f64, f64) {
        ((self.v_bar - w) / (1.0 - self.q), self.p * w / (1.0 - self.p))
    }
}

/// Per-step opportunity cost `W` of staying on the platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct OutsideOption(f64);

impl OutsideOption {
    pub fn new(w: f64) -> Result<Self> {
        check_positive("w", w)?;
        Ok(Self(w))
    }

    pub fn w(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for OutsideOption {
    type Error = crate::Error;

    fn try_from(w: f64) -> Result<Self> {
        OutsideOption::new(w)
    }
}

impl From<OutsideOption> for f64 {
    fn from(o: OutsideOption) -> f64 {
        o.0
    }
}

/// Content parameters together with the user's outside option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub params: ContentParams,
    pub outside: OutsideOption,
}

impl ModelPoint {
    pub fn new(params: ContentParams, outside: OutsideOption) -> Self {
        Self { params, outside }
    }

    /// Validating shorthand for `ModelPoint::new(ContentParams::new(..)?, OutsideOption::new(..)?)`.
    pub fn from_values(p: f64, q: f64, v_bar: f64, w: f64) -> Result<Self> {
        Ok(Self::new(ContentParams::new(p, q, v_bar)?, OutsideOption::new(w)?))
    }

    pub fn w(&self) -> f64 {
        self.outside.w()
    }

    /// `(v̄ - W)/(1 - q) - pW/(1 - p)`, possibly negative.
    pub fn g_utility(&self) -> f64 {
        self.params.g_utility(self.w())
    }

    /// `1/(1 - q) + p/(1 - p)`, regardless of participation.
    pub fn g_engagement(&self) -> f64 {
        self.params.g_engagement()
    }

    /// The user visits iff `g_S >= 0`; the boundary counts as participating.
    pub fn participates(&self) -> bool {
        self.params.participates(self.w())
    }

    /// `E[S] = max(g_S, 0)`.
    pub fn expected_utility(&self) -> f64 {
        self.g_utility().max(0.0)
    }

    /// `E[T]`: `g_T` when the user participates, else 0.
    pub fn expected_engagement(&self) -> f64 {
        if self.participates() {
            self.g_engagement()
        } else {
            0.0
        }
    }

    /// Expected length of the system-1 overrun after system 2 is done.
    pub fn expected_overrun(&self) -> f64 {
        let p = self.params.p();
        p / (1.0 - p)
    }
}
