//! BPSK bit error rate with zero-forcing detection on the data subcarriers,
//! using each estimator's frequency response and the true one.
//!
//! ```text
//! cargo run --release --example ber_sweep
//! ```

use bmpce::harness::{paired_difference, run_ber_sweep, summarize, Algorithm, ExperimentConfig};

fn main() -> bmpce::Result<()> {
    let cfg = ExperimentConfig {
        snr_grid: vec![20.0, 30.0, 40.0],
        trials: 100,
        algorithms: vec![Algorithm::Bmp, Algorithm::Omp, Algorithm::Oracle],
        ..ExperimentConfig::default()
    };
    let records = run_ber_sweep(&cfg)?;
    for s in summarize(&records) {
        println!("{:>5} dB  {:<12} ber {:.4} (se {:.4})", s.snr_db, s.algorithm, s.mean_ber, s.se_ber);
    }
    let gap = paired_difference(&records, "bmp", "perfect_csi", |r| r.ber);
    println!("bmp - perfect CSI over {} paired trials: {:+.4} +- {:.4}", gap.pairs, gap.mean, gap.se);
    Ok(())
}
