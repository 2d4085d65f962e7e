//! Single-worker timing of the estimators, plus the search's multiply count
//! as the channel length doubles.
//!
//! ```text
//! cargo run --release --example cpu_bench
//! ```

use bmpce::bmp::search_with_stats;
use bmpce::harness::{draw_instance, estimator_config, grid_points, run_bench, timing_summary, ExperimentConfig};

fn main() -> bmpce::Result<()> {
    let cfg = ExperimentConfig {
        snr_grid: vec![20.0],
        trials: 100,
        ..ExperimentConfig::default()
    };
    for t in timing_summary(&run_bench(&cfg)?) {
        println!("{:<8} {:>8.1} us  (sd {:.1})", t.algorithm, t.mean_micros, t.sd_micros);
    }

    println!("\nmultiplies per search with S = 8, D = 5:");
    for taps in [50, 100, 200] {
        let cfg = ExperimentConfig {
            taps,
            max_support: Some(8),
            ..cfg.clone()
        };
        let point = grid_points(&cfg)[0];
        let instance = draw_instance(&cfg, &point, 0)?;
        let search = estimator_config(&cfg, point.p1, instance.noise_variance);
        let (_, stats) = search_with_stats(&instance.y, &instance.system, &search)?;
        println!("  L = {taps:>3}: {}", stats.multiplications);
    }
    Ok(())
}
