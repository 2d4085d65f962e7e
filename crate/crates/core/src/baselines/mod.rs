//! Reference sparse-recovery estimators: OMP, CoSaMP, smoothed-l0 and
//! least squares on the true support.
//!
//! All of them return a [`ChannelEstimate`] whose posterior is the single
//! recovered support with weight one.
//!
//! [`ChannelEstimate`]: crate::bmp::ChannelEstimate

mod cosamp;
mod omp;
mod oracle;
mod sl0;

pub use cosamp::cosamp;
pub use omp::omp;
pub use oracle::oracle_ls;
pub use sl0::sl0;

use crate::error::{Error, Result};

/// Graduated-smoothing schedule of the smoothed-l0 solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl0Params {
    /// Initial width as a multiple of `max |X^+ y|`.
    pub sigma_max_scale: f64,
    /// Width multiplier between levels.
    pub sigma_decrease_factor: f64,
    /// Gradient steps per level.
    pub inner_steps: usize,
    pub step_scale: f64,
    /// Final width relative to the initial one.
    pub sigma_min_ratio: f64,
}

impl Default for Sl0Params {
    fn default() -> Self {
        Self {
            sigma_max_scale: 2.0,
            sigma_decrease_factor: 0.5,
            inner_steps: 3,
            step_scale: 2.0,
            sigma_min_ratio: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Relative residual `|r| / |y|` at which greedy solvers stop.
    pub residual_tol: f64,
    /// Iteration cap; `None` picks `min(M, L)` for OMP and 50 for CoSaMP.
    pub max_iter: Option<usize>,
    /// Sparsity level assumed by CoSaMP.
    pub sparsity_k: usize,
    pub sl0: Sl0Params,
    /// Ridge `sigma_sq / sigma1_sq` for rank-deficient known-support solves.
    pub ridge: f64,
    /// Ablation switch read by the harness: replace `sparsity_k` with the
    /// true sparsity of each instance.
    pub oracle_sparsity: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-4,
            max_iter: None,
            sparsity_k: 1,
            sl0: Sl0Params::default(),
            ridge: 1e-6,
            oracle_sparsity: false,
        }
    }
}

impl BaselineConfig {
    /// Defaults with CoSaMP's `k = max(1, round(L p1))`.
    pub fn for_prior(taps: usize, p1: f64) -> Self {
        Self {
            sparsity_k: ((taps as f64 * p1).round() as usize).max(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter("residual tolerance must be positive".into()));
        }
        if self.sparsity_k == 0 {
            return Err(Error::InvalidParameter("sparsity level must be at least 1".into()));
        }
        let s = &self.sl0;
        if !(s.sigma_decrease_factor > 0.0 && s.sigma_decrease_factor < 1.0) {
            return Err(Error::InvalidParameter("SL0 decrease factor must lie in (0, 1)".into()));
        }
        if !(s.sigma_min_ratio > 0.0) || !(s.sigma_max_scale > 0.0) {
            return Err(Error::InvalidParameter("SL0 widths must be positive".into()));
        }
        Ok(())
    }
}

/// Indices of the `n` largest `scores`, ties to the lower index.
pub(crate) fn top_indices(scores: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(n);
    order
}

#[cfg(test)]
pub(crate) mod testutil {
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::model::{FieldMode, PilotSystem, SupportIndicator, C64};

    /// Random complex Gaussian `rows x taps` system and a `k`-sparse channel on it.
    pub fn gaussian_instance(
        rows: usize,
        taps: usize,
        k: usize,
        seed: u64,
    ) -> (PilotSystem, DVector<C64>, SupportIndicator) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = FieldMode::Complex;
        let matrix = DMatrix::from_fn(rows, taps, |_, _| field.gaussian(1.0 / rows as f64, &mut rng));
        let picked = rand::seq::index::sample(&mut rng, taps, k).into_vec();
        let support = SupportIndicator::from_indices(taps, &picked).unwrap();
        let mut h = DVector::zeros(taps);
        for &t in &picked {
            // Keep magnitudes away from zero so recovery is well posed.
            let g = field.gaussian(1.0, &mut rng);
            h[t] = g / g.norm() * (0.5 + g.norm());
        }
        (PilotSystem::from_matrix(matrix, field), h, support)
    }
}
