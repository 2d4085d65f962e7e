use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::node::CandidateNode;
use super::SearchConfig;
use crate::error::{Error, Result};
use crate::linalg::{hpd_log_det, select_columns};
use crate::model::{FieldMode, PilotSystem, SupportIndicator, C64};

/// Exponent weight and log normalizer base of the Gaussian density per field.
pub(crate) fn density_constants(field: FieldMode) -> (f64, f64) {
    match field {
        FieldMode::Real => (0.5, (2.0 * PI).ln()),
        FieldMode::Complex => (1.0, PI.ln()),
    }
}

/// Metric of the empty support, where `C(0) = sigma_sq * I`.
pub fn pi_initial(y: &DVector<C64>, config: &SearchConfig, taps: usize) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Dimension("empty observation".into()));
    }
    if !(config.sigma_sq > 0.0) {
        return Err(Error::SingularMetric(
            "noise variance is zero, so C(0) is singular".into(),
        ));
    }
    let (w, log_base) = density_constants(config.field);
    let m = y.len() as f64;
    Ok(-w * (m * log_base + m * config.sigma_sq.ln() + y.norm_squared() / config.sigma_sq)
        + taps as f64 * (-config.p1).ln_1p())
}

/// Dense evaluation of `PI(g, y)` through a Cholesky factorization of `C(g)`.
///
/// Reference path for checking the incremental updates; the search never calls it.
pub fn pi_direct(
    support: &SupportIndicator,
    y: &DVector<C64>,
    system: &PilotSystem,
    config: &SearchConfig,
) -> Result<f64> {
    let taps = system.taps();
    if support.len() != taps || y.len() != system.rows() {
        return Err(Error::Dimension(format!(
            "support of length {} and observation of length {} for a {} x {} system",
            support.len(),
            y.len(),
            system.rows(),
            taps
        )));
    }
    let active = support.active();
    let xt = select_columns(system.matrix(), &active);
    let m = system.rows();
    let mut cov: DMatrix<C64> = &xt * xt.adjoint() * C64::new(config.sigma1_sq, 0.0);
    for i in 0..m {
        cov[(i, i)] += C64::new(config.sigma_sq, 0.0);
    }
    let (log_det, chol) = hpd_log_det(cov)
        .ok_or_else(|| Error::SingularMetric(format!("C(g) is singular for support {support}")))?;
    let quad = y.dotc(&chol.solve(y)).re;
    let (w, log_base) = density_constants(config.field);
    Ok(-w * (m as f64 * log_base + log_det + quad)
        + active.len() as f64 * config.activation_log_odds()
        + taps as f64 * (-config.p1).ln_1p())
}

/// Metric change from activating one tap, with the quantities that produced it.
#[derive(Debug, Clone)]
pub struct Delta {
    /// `d_l = PI(g + l, y) - PI(g, y)`.
    pub gain: f64,
    /// `b_l = C(g)^{-1} x_l`.
    pub filtered: DVector<C64>,
    /// `beta_l = 1 / (1 + sigma1_sq x_l^H b_l)`.
    pub beta: f64,
}

/// Metric change of activating `tap` in `node`, computed from the node's
/// cached rank-one expansion of `C(g)^{-1}`.
pub fn pi_delta(
    node: &CandidateNode,
    tap: usize,
    y: &DVector<C64>,
    system: &PilotSystem,
    config: &SearchConfig,
) -> Result<Delta> {
    if tap >= system.taps() {
        return Err(Error::Dimension(format!("tap {tap} out of range")));
    }
    if node.support.is_active(tap) {
        return Err(Error::AlreadyActive(tap));
    }
    let filtered = node.filter_column(tap, system, config);
    let x = system.column(tap);
    let quad = x.dotc(&filtered).re;
    let beta = (1.0 + config.sigma1_sq * quad).recip();
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Numerical(format!(
            "beta = {beta} for tap {tap}; the candidate cache is corrupted"
        )));
    }
    let proj = filtered.dotc(y);
    Ok(Delta {
        gain: activation_gain(beta, proj.norm_sqr(), config),
        filtered,
        beta,
    })
}

/// `w (ln beta + sigma1_sq beta |y^H b|^2) + ln(p1 / (1 - p1))`.
pub(crate) fn activation_gain(beta: f64, proj_sq: f64, config: &SearchConfig) -> f64 {
    let (w, _) = density_constants(config.field);
    w * (beta.ln() + config.sigma1_sq * beta * proj_sq) + config.activation_log_odds()
}

/// Closed-form diagnostic `2M + L p1 (1 - p1) ln[(sigma1_sq/sigma_sq + 1)(1 - p1)/p1]^2`.
pub fn expected_pi(config: &SearchConfig, taps: usize, rows: usize) -> Result<f64> {
    if !(config.p1 > 0.0 && config.p1 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p1 = {} divides by zero in the expected metric",
            config.p1
        )));
    }
    if !(config.sigma_sq > 0.0) {
        return Err(Error::InvalidParameter(
            "zero noise variance divides by zero in the expected metric".into(),
        ));
    }
    let ratio = config.sigma1_sq / config.sigma_sq + 1.0;
    Ok(expected_pi_from_ratio(taps, rows, config.p1, ratio))
}

fn expected_pi_from_ratio(taps: usize, rows: usize, p1: f64, snr_ratio: f64) -> f64 {
    let log_term = (snr_ratio * (1.0 - p1) / p1).ln();
    2.0 * rows as f64 + taps as f64 * p1 * (1.0 - p1) * log_term * log_term
}
