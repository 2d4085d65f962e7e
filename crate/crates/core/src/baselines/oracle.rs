use nalgebra::DVector;

use super::BaselineConfig;
use crate::bmp::ChannelEstimate;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, ridge, select_columns};
use crate::model::{PilotSystem, SupportIndicator, C64};

/// Least squares restricted to the true support: the known-support bound.
///
/// A rank-deficient `X_T` falls back to ridge regression with `config.ridge`
/// and sets [`ChannelEstimate::regularized`].
pub fn oracle_ls(
    y: &DVector<C64>,
    system: &PilotSystem,
    true_support: &SupportIndicator,
    config: &BaselineConfig,
) -> Result<ChannelEstimate> {
    let taps = system.taps();
    if y.len() != system.rows() || true_support.len() != taps {
        return Err(Error::Dimension("observation or support does not match the system".into()));
    }
    let active = true_support.active();
    let mut h: DVector<C64> = DVector::zeros(taps);
    if active.is_empty() {
        return Ok(ChannelEstimate::single(h, true_support.clone(), 0));
    }
    let xt = select_columns(system.matrix(), &active);
    let (coef, regularized) = match least_squares(&xt, y) {
        Ok(c) => (c, false),
        Err(Error::RankDeficient(_)) => (ridge(&xt, y, config.ridge.max(f64::MIN_POSITIVE))?, true),
        Err(e) => return Err(e),
    };
    for (i, &t) in active.iter().enumerate() {
        h[t] = coef[i];
    }
    let mut est = ChannelEstimate::single(h, true_support.clone(), 1);
    est.regularized = regularized;
    Ok(est)
}
