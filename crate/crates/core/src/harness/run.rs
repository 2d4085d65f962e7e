use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, Mode};
use super::ofdm::OfdmFrame;
use super::results::TrialRecord;
use crate::baselines::{cosamp, omp, oracle_ls, sl0, BaselineConfig};
use crate::bmp::{estimate, ChannelEstimate, SearchConfig};
use crate::error::{Error, Result};
use crate::model::{
    build_pilot_system, frequency_response, noise_variance, observe, sample_channel, sample_support, PilotSystem,
    PriorParams, SparseChannel, C64,
};

/// Smallest noise variance the estimators assume, so noiseless runs keep a
/// well-defined metric.
const NOISE_FLOOR: f64 = 1e-10;

/// One `(snr, p1, M)` cell of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub snr_index: usize,
    pub p1_index: usize,
    pub pilot_index: usize,
    pub snr_db: f64,
    pub p1: f64,
    pub pilots: usize,
}

/// Grid cells in record order: SNR outermost, then `p1`, then `M`.
pub fn grid_points(config: &ExperimentConfig) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for (snr_index, &snr_db) in config.snr_grid.iter().enumerate() {
        for (p1_index, &p1) in config.p1_list.iter().enumerate() {
            for (pilot_index, &pilots) in config.pilots.iter().enumerate() {
                points.push(GridPoint {
                    snr_index,
                    p1_index,
                    pilot_index,
                    snr_db,
                    p1,
                    pilots,
                });
            }
        }
    }
    points
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed: the master seed and the four coordinates folded through
/// splitmix64 in the order (snr, p1, M, trial).
pub fn trial_seed(master: u64, snr_index: usize, p1_index: usize, pilot_index: usize, trial: usize) -> u64 {
    [snr_index, p1_index, pilot_index, trial]
        .iter()
        .fold(splitmix64(master), |acc, &i| splitmix64(acc ^ i as u64))
}

/// Everything the algorithms of one trial share.
#[derive(Debug, Clone)]
pub struct Instance {
    pub system: PilotSystem,
    pub channel: SparseChannel,
    pub y: DVector<C64>,
    pub snr_db: f64,
    pub noise_variance: f64,
    /// Data subcarriers, BER mode only.
    pub frame: Option<OfdmFrame>,
    pub seed: u64,
}

/// Draws the channel, pilots, noise and (in BER mode) the data frame of one trial.
pub fn draw_instance(config: &ExperimentConfig, point: &GridPoint, trial: usize) -> Result<Instance> {
    let seed = trial_seed(config.master_seed, point.snr_index, point.p1_index, point.pilot_index, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = noise_variance(point.snr_db);
    let prior = PriorParams {
        taps: config.taps,
        p1: point.p1,
        // Irrelevant after unit-energy normalization.
        sigma1_sq: 1.0,
        sigma_sq: noise,
        field: config.field,
    };
    let support = sample_support(&prior, &mut rng)?;
    let channel = sample_channel(&prior, &support, &mut rng)?;
    let system = build_pilot_system(point.pilots, config.taps, config.dft_size, config.field, &mut rng)?;
    let obs = observe(&system, &channel, point.snr_db, &mut rng)?;
    let frame = match config.mode {
        Mode::Ber => Some(OfdmFrame::new(&system, &channel, noise, &mut rng)?),
        _ => None,
    };
    Ok(Instance {
        system,
        channel,
        y: obs.y,
        snr_db: point.snr_db,
        noise_variance: noise,
        frame,
        seed,
    })
}

/// Priors handed to the Bayesian estimator at one grid point.
pub fn estimator_config(config: &ExperimentConfig, p1: f64, noise_variance: f64) -> SearchConfig {
    let base = if config.paper_init {
        SearchConfig::paper_init()
    } else {
        let sigma1_sq = config.sigma1_sq.unwrap_or(1.0 / (config.taps as f64 * p1));
        SearchConfig::new(p1, sigma1_sq, noise_variance.max(NOISE_FLOOR))
    };
    SearchConfig {
        max_support: config.max_support,
        ..base.with_field(config.field).with_branch_width(config.branch_width)
    }
}

pub fn baseline_config(config: &ExperimentConfig, p1: f64, noise_variance: f64) -> BaselineConfig {
    let sigma1_sq = config.sigma1_sq.unwrap_or(1.0 / (config.taps as f64 * p1));
    BaselineConfig {
        ridge: noise_variance.max(NOISE_FLOOR) / sigma1_sq,
        oracle_sparsity: config.oracle_sparsity,
        ..BaselineConfig::for_prior(config.taps, p1)
    }
}

/// Runs one algorithm on a drawn instance. The perfect-CSI reference
/// "estimates" the true channel.
pub fn run_algorithm(
    algorithm: Algorithm,
    instance: &Instance,
    search: &SearchConfig,
    baseline: &BaselineConfig,
) -> Result<ChannelEstimate> {
    let (y, system) = (&instance.y, &instance.system);
    match algorithm {
        Algorithm::Bmp => estimate(y, system, search),
        Algorithm::Omp => omp(y, system, baseline),
        Algorithm::Cosamp if baseline.oracle_sparsity => {
            let k = instance.channel.support.count().max(1);
            cosamp(y, system, &BaselineConfig { sparsity_k: k, ..*baseline })
        }
        Algorithm::Cosamp => cosamp(y, system, baseline),
        Algorithm::Sl0 => sl0(y, system, baseline),
        Algorithm::Oracle => oracle_ls(y, system, &instance.channel.support, baseline),
        Algorithm::PerfectCsi => Ok(ChannelEstimate::single(
            instance.channel.to_vector(),
            instance.channel.support.clone(),
            0,
        )),
    }
}

fn failed_record(trial: usize, point: &GridPoint, algorithm: Algorithm) -> TrialRecord {
    TrialRecord {
        trial,
        snr_db: point.snr_db,
        p1: point.p1,
        pilots: point.pilots,
        algorithm: algorithm.name().to_string(),
        mse: f64::NAN,
        ber: f64::NAN,
        cpu_micros: 0,
        support_recovered: false,
        failed: true,
    }
}

fn run_trial(config: &ExperimentConfig, algorithms: &[Algorithm], point: &GridPoint, trial: usize) -> Vec<TrialRecord> {
    let instance = match draw_instance(config, point, trial) {
        Ok(i) => i,
        Err(_) => return algorithms.iter().map(|&a| failed_record(trial, point, a)).collect(),
    };
    let search = estimator_config(config, point.p1, instance.noise_variance);
    let baseline = baseline_config(config, point.p1, instance.noise_variance);
    let truth = instance.channel.to_vector();

    algorithms
        .iter()
        .enumerate()
        .map(|(a_index, &algorithm)| {
            let start = Instant::now();
            let result = run_algorithm(algorithm, &instance, &search, &baseline);
            let micros = start.elapsed().as_nanos().div_ceil(1000).max(1) as u64;
            let Ok(est) = result else {
                return failed_record(trial, point, algorithm);
            };
            let ber = match &instance.frame {
                Some(frame) => {
                    // Coin flips get their own stream so they never depend on
                    // which algorithms ran before.
                    let mut coin = ChaCha8Rng::seed_from_u64(splitmix64(instance.seed ^ (a_index as u64 + 1)));
                    let response = match algorithm {
                        Algorithm::PerfectCsi => frame.response.clone(),
                        _ => frequency_response(est.h_hat.as_slice(), frame.dft_size),
                    };
                    match frame.bit_error_rate(&response, &mut coin) {
                        Ok((ber, _)) => ber,
                        Err(_) => return failed_record(trial, point, algorithm),
                    }
                }
                None => f64::NAN,
            };
            TrialRecord {
                trial,
                snr_db: point.snr_db,
                p1: point.p1,
                pilots: point.pilots,
                algorithm: algorithm.name().to_string(),
                mse: super::mse(&truth, &est.h_hat).unwrap_or(f64::NAN),
                ber,
                cpu_micros: micros,
                support_recovered: est.map_support == instance.channel.support,
                failed: false,
            }
        })
        .collect()
}

/// Runs the sweep selected by `config.mode`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let algorithms = config.effective_algorithms();
    let points = grid_points(config);
    let units: Vec<(GridPoint, usize)> = points
        .iter()
        .flat_map(|p| (0..config.trials).map(move |t| (*p, t)))
        .collect();

    if config.mode == Mode::Bench {
        // Warm caches and allocators once per grid point, untimed.
        for p in &points {
            let _ = run_trial(config, &algorithms, p, 0);
        }
        return Ok(units
            .iter()
            .flat_map(|(p, t)| run_trial(config, &algorithms, p, *t))
            .collect());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let nested: Vec<Vec<TrialRecord>> = pool.install(|| {
        units
            .par_iter()
            .map(|(p, t)| run_trial(config, &algorithms, p, *t))
            .collect()
    });
    Ok(nested.into_iter().flatten().collect())
}

pub fn run_mse_sweep(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    run_sweep(&ExperimentConfig { mode: Mode::Mse, ..config.clone() })
}

pub fn run_ber_sweep(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    run_sweep(&ExperimentConfig { mode: Mode::Ber, ..config.clone() })
}

/// Timing sweep: single worker, one untimed warm-up trial per grid point.
pub fn run_bench(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    run_sweep(&ExperimentConfig {
        mode: Mode::Bench,
        workers: 1,
        ..config.clone()
    })
}
