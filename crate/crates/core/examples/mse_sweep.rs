//! A short MSE-versus-SNR sweep written to CSV, with per-point means and
//! standard errors.
//!
//! ```text
//! cargo run --release --example mse_sweep -- /tmp/mse.csv
//! ```

use bmpce::harness::{run_mse_sweep, summarize, write_results, ExperimentConfig};

fn main() -> bmpce::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "mse.csv".into());
    let cfg = ExperimentConfig {
        snr_grid: vec![10.0, 20.0, 30.0, 40.0],
        trials: 100,
        master_seed: 1,
        ..ExperimentConfig::default()
    };
    let records = run_mse_sweep(&cfg)?;
    write_results(&records, out.as_ref())?;

    println!("{:>6} {:<8} {:>12} {:>10} {:>8}", "snr", "alg", "mean_mse", "se", "exact");
    for s in summarize(&records) {
        println!(
            "{:>6} {:<8} {:>12.4e} {:>10.2e} {:>7.0}%",
            s.snr_db,
            s.algorithm,
            s.mean_mse,
            s.se_mse,
            100.0 * s.support_rate
        );
    }
    println!("{} rows in {out}", records.len());
    Ok(())
}
