use nalgebra::DVector;

use super::{top_indices, BaselineConfig};
use crate::bmp::ChannelEstimate;
use crate::error::{Error, Result};
use crate::linalg::{min_norm_least_squares, select_columns};
use crate::model::{PilotSystem, SupportIndicator, C64};

const DEFAULT_MAX_ITER: usize = 50;
const STAGNATION: f64 = 1e-6;

/// Compressive sampling matching pursuit with sparsity `config.sparsity_k`.
///
/// Each iteration merges the `2k` strongest proxy entries `X^H r` with the
/// current support, solves least squares on the merge, and prunes back to
/// the `k` largest coefficients. The best iterate (smallest residual) is
/// returned when the residual target, stagnation or the iteration cap stops
/// the loop.
pub fn cosamp(y: &DVector<C64>, system: &PilotSystem, config: &BaselineConfig) -> Result<ChannelEstimate> {
    config.validate()?;
    let (rows, taps) = (system.rows(), system.taps());
    if y.len() != rows {
        return Err(Error::Dimension(format!("observation of length {} for {rows} rows", y.len())));
    }
    let k = config.sparsity_k.min(taps);
    if k > rows {
        return Err(Error::RankDeficient(format!(
            "sparsity {k} exceeds the {rows} available measurements"
        )));
    }
    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Ok(ChannelEstimate::single(DVector::zeros(taps), SupportIndicator::empty(taps), 0));
    }
    let max_iter = config.max_iter.unwrap_or(DEFAULT_MAX_ITER);
    let x = system.matrix();

    let mut current: Vec<usize> = Vec::new();
    let mut h = DVector::zeros(taps);
    let mut residual = y.clone();
    let mut res_norm = y_norm;
    let mut best = (res_norm, h.clone(), current.clone());
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let proxy: Vec<f64> = (0..taps).map(|l| x.column(l).dotc(&residual).norm()).collect();
        let mut merged = current.clone();
        for l in top_indices(&proxy, (2 * k).min(taps)) {
            if !merged.contains(&l) {
                merged.push(l);
            }
        }
        // More columns than rows cannot be solved uniquely; keep the
        // current support and the strongest new candidates.
        merged.truncate(rows);
        merged.sort_unstable();

        let coef = min_norm_least_squares(&select_columns(x, &merged), y)?;
        let mags: Vec<f64> = coef.iter().map(|c| c.norm()).collect();
        let keep = top_indices(&mags, k);
        let mut next: Vec<usize> = keep.iter().map(|&i| merged[i]).collect();
        next.sort_unstable();

        let mut next_h = DVector::zeros(taps);
        for &i in &keep {
            next_h[merged[i]] = coef[i];
        }
        residual = y - x * &next_h;
        let next_norm = residual.norm();
        h = next_h;
        current = next;
        if next_norm < best.0 {
            best = (next_norm, h.clone(), current.clone());
        }
        if next_norm < config.residual_tol * y_norm || res_norm - next_norm < STAGNATION * res_norm {
            break;
        }
        res_norm = next_norm;
    }

    let (_, h, support) = best;
    let support = SupportIndicator::from_indices(taps, &support)?;
    Ok(ChannelEstimate::single(h, support, iterations))
}
