//! Draw a sparse channel, a partial-DFT pilot system and a noisy observation.
//!
//! ```text
//! cargo run --example channel_synthesis
//! ```

use bmpce::model::{build_pilot_system, frequency_response, observe, sample_channel, sample_support};
use bmpce::{FieldMode, PriorParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bmpce::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prior = PriorParams {
        taps: 100,
        p1: 0.1,
        sigma1_sq: 1.0,
        sigma_sq: 0.01,
        field: FieldMode::Complex,
    };

    let support = sample_support(&prior, &mut rng)?;
    let channel = sample_channel(&prior, &support, &mut rng)?;
    println!("support {} ({} taps), energy {:.12}", channel.support, support.count(), channel.energy());
    for t in channel.support.active() {
        println!("  h[{t:>2}] = {:+.4} {:+.4}j", channel.taps[t].re, channel.taps[t].im);
    }

    // 40 pilots out of 256 subcarriers
    let system = build_pilot_system(40, 100, 256, FieldMode::Complex, &mut rng)?;
    println!("pilot system: {} x {}, pilot rows {:?}...", system.rows(), system.taps(), &system.dft_rows[..6]);

    let obs = observe(&system, &channel, 20.0, &mut rng)?;
    let clean = system.apply(&channel.taps)?;
    let noise = (&obs.y - &clean).norm_squared() / obs.y.len() as f64;
    println!("signal power per pilot {:.3e}, noise power {:.3e}", clean.norm_squared() / 40.0, noise);

    let response = frequency_response(&channel.taps, 256);
    let mean_gain = response.iter().map(|h| h.norm_sqr()).sum::<f64>() / 256.0;
    println!("mean |H(k)|^2 over the band {mean_gain:.4e}");
    Ok(())
}
