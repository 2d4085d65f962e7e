//! Monte-Carlo experiment engine: MSE, BER and timing sweeps over a grid of
//! SNR, activity probability and pilot count.
//!
//! Every trial draws one `(h, X, z)` realization from a seed derived from the
//! master seed and its grid coordinates, then runs all configured algorithms
//! on that same observation. Results do not depend on the worker count.

mod config;
mod ofdm;
mod results;
mod run;
mod stats;

pub use config::{parse_snr_list, Algorithm, ExperimentConfig, Mode};
pub use ofdm::{detect_bits, OfdmFrame};
pub use results::{read_results, write_results, TrialRecord, CSV_HEADER};
pub use run::{
    baseline_config, draw_instance, estimator_config, grid_points, run_algorithm, run_bench, run_ber_sweep,
    run_mse_sweep, run_sweep, trial_seed, GridPoint, Instance,
};
pub use stats::{paired_difference, summarize, timing_summary, PairedDifference, PointSummary, TimingSummary};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::C64;

/// Squared error `|h - h_hat|^2` of one trial.
pub fn mse(h_true: &DVector<C64>, h_hat: &DVector<C64>) -> Result<f64> {
    if h_true.len() != h_hat.len() {
        return Err(Error::Dimension(format!(
            "channel of length {} against estimate of length {}",
            h_true.len(),
            h_hat.len()
        )));
    }
    Ok(h_true.iter().zip(h_hat.iter()).map(|(a, b)| (a - b).norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_of_exact_estimate_is_zero() {
        let h = DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        assert_eq!(mse(&h, &h).unwrap(), 0.0);
        assert!((mse(&h, &DVector::zeros(2)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mse_matches_elementwise_sum() {
        let a = DVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.25), C64::new(3.0, -1.0)]);
        let b = DVector::from_vec(vec![C64::new(0.5, 1.0), C64::new(0.5, 0.25), C64::new(3.0, 0.0)]);
        // 0.25 + 1 + 1 + 0 + 0 + 1
        assert!((mse(&a, &b).unwrap() - 3.25).abs() < 1e-15);
    }

    #[test]
    fn mse_rejects_length_mismatch() {
        assert!(mse(&DVector::zeros(2), &DVector::zeros(3)).is_err());
    }
}
