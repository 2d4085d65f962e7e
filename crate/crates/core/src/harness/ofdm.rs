use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{frequency_response, PilotSystem, SparseChannel, C64};

/// Magnitude below which a zero-forcing division is replaced by a coin flip.
const ZF_FLOOR: f64 = 1e-12;

/// One OFDM symbol: pilots on the estimation rows, BPSK data everywhere else.
#[derive(Debug, Clone)]
pub struct OfdmFrame {
    pub dft_size: usize,
    pub pilot_positions: Vec<usize>,
    pub data_positions: Vec<usize>,
    /// Transmitted bits as `+1 / -1`, one per data position.
    pub bits: Vec<f64>,
    /// True frequency response on all subcarriers.
    pub response: Vec<C64>,
    /// `Y(k) = H(k) b(k) + Z(k)` on the data positions.
    pub received: Vec<C64>,
}

impl OfdmFrame {
    /// Builds the data part of a frame whose pilots are those of `system`.
    pub fn new<R: Rng + ?Sized>(
        system: &PilotSystem,
        channel: &SparseChannel,
        noise_variance: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let n = system.dft_size;
        if n == 0 {
            return Err(Error::InvalidParameter("OFDM frame needs a DFT-based pilot system".into()));
        }
        let mut is_pilot = vec![false; n];
        for &k in &system.dft_rows {
            is_pilot[k] = true;
        }
        let data_positions: Vec<usize> = (0..n).filter(|&k| !is_pilot[k]).collect();
        let response = frequency_response(&channel.taps, n);
        let bits: Vec<f64> = data_positions
            .iter()
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let received = data_positions
            .iter()
            .zip(&bits)
            .map(|(&k, &b)| {
                let noise = if noise_variance > 0.0 {
                    system.field.gaussian(noise_variance, rng)
                } else {
                    C64::new(0.0, 0.0)
                };
                response[k] * b + noise
            })
            .collect();
        Ok(Self {
            dft_size: n,
            pilot_positions: system.dft_rows.clone(),
            data_positions,
            bits,
            response,
            received,
        })
    }

    /// Bit error rate of zero-forcing detection with the response `estimate`
    /// (indexed by subcarrier), and the number of coin-flip decisions.
    pub fn bit_error_rate<R: Rng + ?Sized>(&self, estimate: &[C64], rng: &mut R) -> Result<(f64, usize)> {
        if estimate.len() != self.dft_size {
            return Err(Error::Dimension(format!(
                "response estimate of length {} for {} subcarriers",
                estimate.len(),
                self.dft_size
            )));
        }
        if self.bits.is_empty() {
            return Ok((0.0, 0));
        }
        let on_data: Vec<C64> = self.data_positions.iter().map(|&k| estimate[k]).collect();
        let (decided, flips) = detect_bits(&self.received, &on_data, rng);
        let errors = decided.iter().zip(&self.bits).filter(|(a, b)| a != b).count();
        Ok((errors as f64 / self.bits.len() as f64, flips))
    }
}

/// Zero-forcing BPSK decisions `sign(Re(Y / H))`. Near-zero `H` entries are
/// decided by a fair coin; the second value counts them.
pub fn detect_bits<R: Rng + ?Sized>(received: &[C64], response: &[C64], rng: &mut R) -> (Vec<f64>, usize) {
    let mut flips = 0;
    let bits = received
        .iter()
        .zip(response)
        .map(|(y, h)| {
            if h.norm() < ZF_FLOOR {
                flips += 1;
                return if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
            if (y / h).re >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    (bits, flips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_pilot_system, FieldMode, SupportIndicator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(noise: f64, seed: u64) -> OfdmFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = build_pilot_system(40, 100, 256, FieldMode::Complex, &mut rng).unwrap();
        let channel = SparseChannel {
            taps: {
                let mut t = vec![C64::new(0.0, 0.0); 100];
                t[3] = C64::new(0.6, 0.0);
                t[40] = C64::new(0.0, -0.8);
                t
            },
            support: SupportIndicator::from_indices(100, &[3, 40]).unwrap(),
        };
        OfdmFrame::new(&sys, &channel, noise, &mut rng).unwrap()
    }

    #[test]
    fn positions_partition_the_subcarriers() {
        let f = frame(0.1, 1);
        let mut all: Vec<usize> = f.pilot_positions.iter().chain(&f.data_positions).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..256).collect::<Vec<_>>());
        assert_eq!(f.data_positions.len(), 216);
    }

    #[test]
    fn perfect_csi_noiseless_is_error_free() {
        let f = frame(0.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (ber, flips) = f.bit_error_rate(&f.response, &mut rng).unwrap();
        assert_eq!(ber, 0.0);
        assert_eq!(flips, 0);
    }

    #[test]
    fn zero_estimate_falls_back_to_coin_flips() {
        let f = frame(0.0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (ber, flips) = f.bit_error_rate(&vec![C64::new(0.0, 0.0); 256], &mut rng).unwrap();
        assert_eq!(flips, 216);
        assert!(ber > 0.3 && ber < 0.7, "ber {ber}");
    }

    #[test]
    fn negated_response_flips_every_bit() {
        let f = frame(0.0, 4);
        let negated: Vec<C64> = f.response.iter().map(|h| -h).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(f.bit_error_rate(&negated, &mut rng).unwrap().0, 1.0);
    }
}
