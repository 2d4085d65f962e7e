//! Run the Bayesian matching pursuit search on one instance and inspect the
//! retained hypotheses, their posterior weights and the MMSE estimate.
//!
//! ```text
//! cargo run --release --example bmp_posterior
//! ```

use bmpce::bmp::{mmse_estimate, search_with_stats};
use bmpce::model::{build_pilot_system, noise_variance, observe, sample_channel, sample_support};
use bmpce::{FieldMode, PriorParams, SearchConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bmpce::Result<()> {
    let (taps, pilots, p1, snr_db) = (64, 32, 0.06, 40.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let prior = PriorParams {
        taps,
        p1,
        sigma1_sq: 1.0,
        sigma_sq: noise_variance(snr_db),
        field: FieldMode::Complex,
    };
    let support = sample_support(&prior, &mut rng)?;
    let channel = sample_channel(&prior, &support, &mut rng)?;
    let system = build_pilot_system(pilots, taps, 128, FieldMode::Complex, &mut rng)?;
    let y = observe(&system, &channel, snr_db, &mut rng)?.y;

    let config = SearchConfig::new(p1, 1.0 / (taps as f64 * p1), noise_variance(snr_db)).with_branch_width(5);
    println!("true support {}", channel.support);
    println!("searching up to S = {} taps with D = {}", config.resolve_max_support(taps)?, config.branch_width);

    let (posterior, stats) = search_with_stats(&y, &system, &config)?;
    println!(
        "{} hypotheses retained over {} stages; {} children scored, {} unique, {} complex multiplies",
        posterior.len(),
        stats.stages,
        stats.evaluated,
        stats.unique,
        stats.multiplications
    );
    for (cand, w) in posterior.top(5) {
        println!("  w = {w:.6}  pi = {:>10.3}  {}", cand.pi, cand.support);
    }

    let estimate = mmse_estimate(posterior, &y, &system, &config)?;
    let err = (&estimate.h_hat - channel.to_vector()).norm_squared();
    println!("MAP support {}  MMSE squared error {err:.3e}", estimate.map_support);
    Ok(())
}
