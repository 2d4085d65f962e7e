//! Every estimator on the same seeded observation, as the `trial` subcommand does.
//!
//! ```text
//! cargo run --release --example compare_estimators -- 30
//! ```

use bmpce::harness::{self, baseline_config, draw_instance, estimator_config, grid_points, run_algorithm};
use bmpce::harness::{Algorithm, ExperimentConfig};

fn main() -> bmpce::Result<()> {
    let snr: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30.0);
    let cfg = ExperimentConfig {
        snr_grid: vec![snr],
        trials: 1,
        master_seed: 3,
        ..ExperimentConfig::default()
    };
    let point = grid_points(&cfg)[0];
    let instance = draw_instance(&cfg, &point, 0)?;
    let search = estimator_config(&cfg, point.p1, instance.noise_variance);
    let baseline = baseline_config(&cfg, point.p1, instance.noise_variance);
    let truth = instance.channel.to_vector();

    println!("SNR {snr} dB, true support {}", instance.channel.support);
    for alg in Algorithm::ESTIMATORS {
        let est = run_algorithm(alg, &instance, &search, &baseline)?;
        let hit = if est.map_support == instance.channel.support { "exact" } else { "" };
        println!(
            "{:<7} mse {:>10.3e}  {:>3} taps  {hit}",
            alg.name(),
            harness::mse(&truth, &est.h_hat)?,
            est.map_support.count()
        );
    }
    Ok(())
}
