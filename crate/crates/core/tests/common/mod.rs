#![allow(dead_code)]

use bmpce::model::{build_pilot_system, observe, sample_channel, sample_support};
use bmpce::{FieldMode, PilotSystem, PriorParams, SearchConfig, SparseChannel, C64};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub system: PilotSystem,
    pub channel: SparseChannel,
    pub y: DVector<C64>,
    pub config: SearchConfig,
}

/// Random instance with the estimator priors matched to the generator.
pub fn case(seed: u64, taps: usize, pilots: usize, p1: f64, snr_db: f64, field: FieldMode) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = bmpce::model::noise_variance(snr_db);
    let prior = PriorParams {
        taps,
        p1,
        sigma1_sq: 1.0,
        sigma_sq: noise,
        field,
    };
    let support = sample_support(&prior, &mut rng).unwrap();
    let channel = sample_channel(&prior, &support, &mut rng).unwrap();
    let system = build_pilot_system(pilots, taps, 64.max(taps), field, &mut rng).unwrap();
    let y = observe(&system, &channel, snr_db, &mut rng).unwrap().y;
    let config = SearchConfig::new(p1, 1.0 / (taps as f64 * p1), noise.max(1e-6)).with_field(field);
    Case {
        system,
        channel,
        y,
        config,
    }
}

/// `C(g) = sigma1_sq X_T X_T^H + sigma_sq I` built densely.
pub fn dense_covariance(system: &PilotSystem, active: &[usize], config: &SearchConfig) -> DMatrix<C64> {
    let m = system.rows();
    let mut c = DMatrix::<C64>::identity(m, m) * C64::new(config.sigma_sq, 0.0);
    for &t in active {
        let x = system.column(t);
        c += x * x.adjoint() * C64::new(config.sigma1_sq, 0.0);
    }
    c
}
