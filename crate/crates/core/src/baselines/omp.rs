use nalgebra::DVector;

use super::BaselineConfig;
use crate::bmp::ChannelEstimate;
use crate::error::{Error, Result};
use crate::model::{PilotSystem, SupportIndicator, C64};

/// Orthogonal matching pursuit.
///
/// Adds the column most correlated with the residual, re-fits least squares
/// on the selected columns (kept as an incremental QR factorization) and stops
/// once `|r| < residual_tol |y|`, after `max_iter` selections, or when the next
/// column is linearly dependent on the selected ones.
pub fn omp(y: &DVector<C64>, system: &PilotSystem, config: &BaselineConfig) -> Result<ChannelEstimate> {
    config.validate()?;
    let (rows, taps) = (system.rows(), system.taps());
    if y.len() != rows {
        return Err(Error::Dimension(format!("observation of length {} for {rows} rows", y.len())));
    }
    let max_iter = config.max_iter.unwrap_or(rows.min(taps)).min(rows.min(taps));
    let y_norm = y.norm();
    let mut selected: Vec<usize> = Vec::new();
    let mut support = SupportIndicator::empty(taps);
    if y_norm == 0.0 {
        return Ok(ChannelEstimate::single(DVector::zeros(taps), support, 0));
    }

    // Orthonormal basis q_i of the selected columns and R = Q^H X_sel.
    let mut basis: Vec<DVector<C64>> = Vec::new();
    let mut r_cols: Vec<Vec<C64>> = Vec::new();
    let mut residual = y.clone();

    while selected.len() < max_iter && residual.norm() >= config.residual_tol * y_norm {
        let mut best: Option<(usize, f64)> = None;
        for l in 0..taps {
            if support.is_active(l) {
                continue;
            }
            let c = system.column(l).dotc(&residual).norm();
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((l, c));
            }
        }
        let Some((pick, _)) = best else { break };

        let col = system.column(pick).into_owned();
        let mut v = col.clone();
        let mut coeffs = vec![C64::new(0.0, 0.0); basis.len()];
        // Two Gram-Schmidt passes keep the basis orthonormal to working precision.
        for _ in 0..2 {
            for (q, c) in basis.iter().zip(coeffs.iter_mut()) {
                let proj = q.dotc(&v);
                *c += proj;
                v.axpy(-proj, q, C64::new(1.0, 0.0));
            }
        }
        let norm = v.norm();
        if !(norm > 1e-10 * col.norm()) {
            break;
        }
        let q = v / C64::new(norm, 0.0);
        coeffs.push(C64::new(norm, 0.0));
        let step = q.dotc(&residual);
        residual.axpy(-step, &q, C64::new(1.0, 0.0));
        basis.push(q);
        r_cols.push(coeffs);
        selected.push(pick);
        support.set(pick, true);
    }

    // Back-substitution R c = Q^H y.
    let n = selected.len();
    let qty: Vec<C64> = basis.iter().map(|q| q.dotc(y)).collect();
    let mut coef = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = qty[i];
        for j in i + 1..n {
            acc -= r_cols[j][i] * coef[j];
        }
        coef[i] = acc / r_cols[i][i];
    }
    let mut h = DVector::zeros(taps);
    for (&t, c) in selected.iter().zip(coef) {
        h[t] = c;
    }
    Ok(ChannelEstimate::single(h, support, n))
}
