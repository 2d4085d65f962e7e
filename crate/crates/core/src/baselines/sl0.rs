use nalgebra::DVector;

use super::{top_indices, BaselineConfig};
use crate::bmp::ChannelEstimate;
use crate::error::{Error, Result};
use crate::linalg::right_pseudo_inverse;
use crate::model::{PilotSystem, SupportIndicator, C64};

/// Smoothed-l0 recovery on the affine set `X h = y`.
///
/// Starting from the minimum-norm solution, each smoothing width `sigma`
/// takes `inner_steps` steps `h <- h - step_scale * h * exp(-|h|^2 / 2 sigma^2)`,
/// each followed by the projection `h <- h - X^+ (X h - y)`, and then shrinks
/// `sigma` until it drops below `sigma_min_ratio * sigma_max`.
///
/// After at least one smoothing level, entries below the final width are
/// zeroed and at most `M` of the largest are kept. An empty schedule returns
/// `X^+ y` untouched.
pub fn sl0(y: &DVector<C64>, system: &PilotSystem, config: &BaselineConfig) -> Result<ChannelEstimate> {
    config.validate()?;
    let (rows, taps) = (system.rows(), system.taps());
    if y.len() != rows {
        return Err(Error::Dimension(format!("observation of length {} for {rows} rows", y.len())));
    }
    let x = system.matrix();
    let pinv = right_pseudo_inverse(x)?;
    let params = config.sl0;

    let mut h: DVector<C64> = &pinv * y;
    let peak = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(ChannelEstimate::single(h, SupportIndicator::empty(taps), 0));
    }
    let sigma_max = params.sigma_max_scale * peak;
    let sigma_min = params.sigma_min_ratio * sigma_max;

    let mut sigma = sigma_max;
    let mut levels = 0;
    while sigma >= sigma_min {
        let inv = 1.0 / (2.0 * sigma * sigma);
        for _ in 0..params.inner_steps {
            for v in h.iter_mut() {
                let shrink = params.step_scale * (-v.norm_sqr() * inv).exp();
                *v -= *v * shrink;
            }
            let misfit = x * &h - y;
            h -= &pinv * misfit;
        }
        levels += 1;
        sigma *= params.sigma_decrease_factor;
    }

    if levels == 0 {
        let support = SupportIndicator::from_bits(h.iter().map(|v| v.norm() > 0.0).collect());
        return Ok(ChannelEstimate::single(h, support, 0));
    }

    let last_sigma = sigma / params.sigma_decrease_factor;
    let mags: Vec<f64> = h.iter().map(|v| v.norm()).collect();
    let mut support = SupportIndicator::empty(taps);
    for l in top_indices(&mags, rows.min(taps)) {
        if mags[l] >= last_sigma {
            support.set(l, true);
        }
    }
    for (l, v) in h.iter_mut().enumerate() {
        if !support.is_active(l) {
            *v = C64::new(0.0, 0.0);
        }
    }
    Ok(ChannelEstimate::single(h, support, levels))
}
