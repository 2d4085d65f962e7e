//! The incremental metric update against a dense recomputation: activating a
//! tap changes the log posterior metric by `pi_delta`, which never forms the
//! inverse covariance explicitly.
//!
//! ```text
//! cargo run --example fast_update
//! ```

use bmpce::bmp::{pi_delta, pi_direct, pi_initial, CandidateNode};
use bmpce::model::{build_pilot_system, observe, SparseChannel};
use bmpce::{FieldMode, SearchConfig, SupportIndicator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bmpce::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let system = build_pilot_system(12, 16, 32, FieldMode::Real, &mut rng)?;
    let channel = SparseChannel::unit(16, 4)?;
    let y = observe(&system, &channel, 25.0, &mut rng)?.y;
    let config = SearchConfig::new(0.1, 1.0, 10f64.powf(-2.5)).with_field(FieldMode::Real);

    let mut node = CandidateNode::root(16, pi_initial(&y, &config, 16)?);
    for tap in [4, 9, 1] {
        let delta = pi_delta(&node, tap, &y, &system, &config)?;
        let support = node.support.with(tap);
        let dense = pi_direct(&support, &y, &system, &config)? - pi_direct(&node.support, &y, &system, &config)?;
        println!(
            "activate {tap:>2}: delta {:+.10}  dense {:+.10}  beta {:.4}",
            delta.gain, dense, delta.beta
        );
        node = node.activate(tap, &y, &system, &config)?;
    }
    let direct = pi_direct(&SupportIndicator::from_indices(16, &[1, 4, 9])?, &y, &system, &config)?;
    println!("cached metric {:.10}, dense {:.10}", node.pi, direct);
    Ok(())
}
