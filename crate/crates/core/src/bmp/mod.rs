//! Bayesian matching pursuit: dominant-tap position search followed by
//! posterior-weighted MMSE combining.
//!
//! Every support hypothesis `g` is scored by its log posterior metric
//! `PI(g, y) = ln p(y | g) + ln P(g)`, where `y | g` is zero-mean Gaussian with
//! covariance `C(g) = sigma1_sq * X_g X_g^H + sigma_sq * I`. The search grows
//! supports one tap at a time and keeps the `D` best hypotheses per size. The
//! metric change caused by activating one tap is obtained from a rank-one
//! update of `C(g)^{-1}` that is never formed explicitly; see [`CandidateNode`].
//!
//! The channel estimate is the mixture of per-support conditional means
//! weighted by the normalized `exp(PI)` of the retained hypotheses.

mod metric;
mod mmse;
mod node;
mod search;

pub use metric::{expected_pi, pi_delta, pi_direct, pi_initial, Delta};
pub use mmse::{conditional_mean, conditional_mean_cached, estimate, mmse_estimate, ChannelEstimate};
pub use node::{Activation, CandidateNode};
pub use search::{search, search_with_stats, PosteriorSet, SearchStats};

use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::model::{FieldMode, PriorParams};

/// Default tail probability used to pick the maximum support size.
pub const DEFAULT_TAIL_PROB: f64 = 1e-3;
/// Default number of hypotheses kept per support size.
pub const DEFAULT_BRANCH_WIDTH: usize = 5;

/// Estimator priors and search breadth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Hypotheses kept per stage (`D`).
    pub branch_width: usize,
    /// Largest support size explored (`S`); chosen from `tail_prob` when `None`.
    pub max_support: Option<usize>,
    /// Assumed per-tap activity probability.
    pub p1: f64,
    /// Assumed active-tap variance.
    pub sigma1_sq: f64,
    /// Assumed noise variance.
    pub sigma_sq: f64,
    /// Target for `Pr(|g| > S)` when `S` is selected automatically.
    pub tail_prob: f64,
    /// Density constants of the metric.
    pub field: FieldMode,
}

impl SearchConfig {
    pub fn new(p1: f64, sigma1_sq: f64, sigma_sq: f64) -> Self {
        Self {
            branch_width: DEFAULT_BRANCH_WIDTH,
            max_support: None,
            p1,
            sigma1_sq,
            sigma_sq,
            tail_prob: DEFAULT_TAIL_PROB,
            field: FieldMode::Complex,
        }
    }

    /// Estimator priors matched to a generative prior.
    pub fn from_prior(prior: &PriorParams) -> Self {
        Self {
            field: prior.field,
            ..Self::new(prior.p1, prior.sigma1_sq, prior.sigma_sq)
        }
    }

    /// Fixed initialization `p1 = 0.01, sigma_sq = 0.05, sigma1_sq = 2`,
    /// independent of the channel statistics.
    pub fn paper_init() -> Self {
        Self::new(0.01, 2.0, 0.05)
    }

    pub fn with_branch_width(mut self, d: usize) -> Self {
        self.branch_width = d;
        self
    }

    pub fn with_max_support(mut self, s: usize) -> Self {
        self.max_support = Some(s);
        self
    }

    pub fn with_field(mut self, field: FieldMode) -> Self {
        self.field = field;
        self
    }

    pub fn validate(&self, taps: usize) -> Result<()> {
        if self.branch_width == 0 {
            return Err(Error::InvalidParameter("branch width D must be at least 1".into()));
        }
        if let Some(s) = self.max_support {
            if s == 0 || s > taps {
                return Err(Error::InvalidParameter(format!(
                    "maximum support size must lie in [1, {taps}], got {s}"
                )));
            }
        }
        if !(self.p1 > 0.0 && self.p1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "assumed activity probability must lie in (0, 1), got {}",
                self.p1
            )));
        }
        if !(self.sigma1_sq > 0.0 && self.sigma1_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "assumed active-tap variance must be positive, got {}",
                self.sigma1_sq
            )));
        }
        if !(self.tail_prob > 0.0 && self.tail_prob < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail probability must lie in (0, 1), got {}",
                self.tail_prob
            )));
        }
        Ok(())
    }

    /// `S`: the configured value, or the smallest `s` with
    /// `Pr(Bin(L, p1) > s) < tail_prob`.
    pub fn resolve_max_support(&self, taps: usize) -> Result<usize> {
        if let Some(s) = self.max_support {
            return Ok(s);
        }
        let binomial = Binomial::new(self.p1, taps as u64)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let s = (0..taps as u64)
            .find(|&s| binomial.sf(s) < self.tail_prob)
            .unwrap_or(taps as u64) as usize;
        Ok(s.clamp(1, taps))
    }

    /// `ln(p1 / (1 - p1))`, the prior gain of one more active tap.
    pub(crate) fn activation_log_odds(&self) -> f64 {
        self.p1.ln() - (-self.p1).ln_1p()
    }
}
