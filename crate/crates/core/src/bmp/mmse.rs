use nalgebra::DVector;

use super::node::CandidateNode;
use super::search::{search, PosteriorSet};
use super::SearchConfig;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, ridge, select_columns};
use crate::model::{PilotSystem, SupportIndicator, C64};

/// A channel estimate with the support hypotheses behind it.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h_hat: DVector<C64>,
    pub posterior: PosteriorSet,
    /// Support of the highest-weight hypothesis.
    pub map_support: SupportIndicator,
    /// Iterations spent by iterative estimators (stages for the search).
    pub iterations: usize,
    /// Set when a rank-deficient solve fell back to a regularized one.
    pub regularized: bool,
}

impl ChannelEstimate {
    /// Estimate carried by one support with weight one.
    pub fn single(h_hat: DVector<C64>, support: SupportIndicator, iterations: usize) -> Self {
        Self {
            h_hat,
            posterior: PosteriorSet::single(CandidateNode::bare(support.clone(), 0.0)),
            map_support: support,
            iterations,
            regularized: false,
        }
    }
}

/// `E{h | y, g}`: zero off the support and
/// `(X_T^H X_T + sigma_sq / sigma1_sq I)^{-1} X_T^H y` on it.
pub fn conditional_mean(
    support: &SupportIndicator,
    y: &DVector<C64>,
    system: &PilotSystem,
    config: &SearchConfig,
) -> Result<DVector<C64>> {
    let taps = system.taps();
    if support.len() != taps || y.len() != system.rows() {
        return Err(Error::Dimension("support or observation does not match the system".into()));
    }
    let active = support.active();
    let mut h = DVector::zeros(taps);
    if active.is_empty() {
        return Ok(h);
    }
    let xt = select_columns(system.matrix(), &active);
    let coef = if config.sigma_sq > 0.0 {
        ridge(&xt, y, config.sigma_sq / config.sigma1_sq)?
    } else {
        least_squares(&xt, y)?
    };
    for (i, &t) in active.iter().enumerate() {
        h[t] = coef[i];
    }
    Ok(h)
}

/// Conditional mean `sigma1_sq X_T^H C^{-1} y` from a candidate's cached
/// expansion, falling back to [`conditional_mean`] for bare candidates.
pub fn conditional_mean_cached(
    node: &CandidateNode,
    y: &DVector<C64>,
    system: &PilotSystem,
    config: &SearchConfig,
) -> Result<DVector<C64>> {
    if !node.has_expansion() || !(config.sigma_sq > 0.0) {
        return conditional_mean(&node.support, y, system, config);
    }
    let mut h = DVector::zeros(system.taps());
    if node.support.count() == 0 {
        return Ok(h);
    }
    if let Some(mean) = node.search_mean(system, config) {
        for (tap, v) in mean {
            h[tap] = v;
        }
        return Ok(h);
    }
    let whitened = node.whiten(y, config);
    for tap in node.support.active() {
        h[tap] = system.column(tap).dotc(&whitened) * config.sigma1_sq;
    }
    Ok(h)
}

/// Posterior-weighted mixture of the candidates' conditional means.
pub fn mmse_estimate(
    posterior: PosteriorSet,
    y: &DVector<C64>,
    system: &PilotSystem,
    config: &SearchConfig,
) -> Result<ChannelEstimate> {
    if posterior.is_empty() {
        return Err(Error::InvalidParameter("empty posterior".into()));
    }
    let mut h_hat = DVector::zeros(system.taps());
    for (cand, &w) in posterior.candidates.iter().zip(&posterior.weights) {
        if w == 0.0 {
            continue;
        }
        if let Some(mean) = cand.search_mean(system, config) {
            for (tap, v) in mean {
                h_hat[tap] += v * w;
            }
            continue;
        }
        let mean = conditional_mean_cached(cand, y, system, config)?;
        h_hat.axpy(C64::new(w, 0.0), &mean, C64::new(1.0, 0.0));
    }
    let map_support = posterior.map_candidate().support.clone();
    let iterations = map_support.count();
    Ok(ChannelEstimate {
        h_hat,
        posterior,
        map_support,
        iterations,
        regularized: false,
    })
}

/// Search followed by MMSE combining.
pub fn estimate(y: &DVector<C64>, system: &PilotSystem, config: &SearchConfig) -> Result<ChannelEstimate> {
    let posterior = search(y, system, config)?;
    mmse_estimate(posterior, y, system, config)
}
