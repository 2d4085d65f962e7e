//! Bernoulli-Gaussian sparse channels, pilot measurement matrices and noisy
//! pilot observations.
//!
//! A channel of `L` taps is drawn by first sampling which taps are active
//! (each independently with probability `p1`) and then drawing Gaussian gains
//! of variance `sigma1_sq` on the active taps. Every realization is rescaled
//! to unit energy. Pilots sit on `M` rows of an `N_d`-point DFT, so the
//! observation is `y = diag(pilots) F h + z`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Scalar field the channel, pilots and noise are drawn over.
///
/// The field also selects the Gaussian density constants used by the support
/// metric: real-valued `(2π)^{-M/2}` normalization or circularly symmetric
/// complex `π^{-M}` normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldMode {
    Real,
    #[default]
    Complex,
}

impl FieldMode {
    /// Draws one zero-mean Gaussian scalar with the given total variance.
    pub fn gaussian<R: Rng + ?Sized>(self, variance: f64, rng: &mut R) -> C64 {
        match self {
            FieldMode::Real => {
                let re: f64 = StandardNormal.sample(rng);
                C64::new(re * variance.sqrt(), 0.0)
            }
            FieldMode::Complex => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im) * (variance / 2.0).sqrt()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldMode::Real => "real",
            FieldMode::Complex => "complex",
        }
    }
}

impl std::str::FromStr for FieldMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "real" => Ok(FieldMode::Real),
            "complex" => Ok(FieldMode::Complex),
            other => Err(Error::InvalidParameter(format!("unknown field mode `{other}`"))),
        }
    }
}

/// Generative Bernoulli-Gaussian prior of a sparse channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    /// Tap count `L`.
    pub taps: usize,
    /// Per-tap activity probability.
    pub p1: f64,
    /// Variance of an active tap before energy normalization.
    pub sigma1_sq: f64,
    /// Noise variance.
    pub sigma_sq: f64,
    pub field: FieldMode,
}

impl PriorParams {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::InvalidParameter("tap count must be at least 1".into()));
        }
        if !(self.p1 > 0.0 && self.p1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "activity probability must lie in (0, 1), got {}",
                self.p1
            )));
        }
        if !(self.sigma1_sq > 0.0 && self.sigma1_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "active-tap variance must be positive, got {}",
                self.sigma1_sq
            )));
        }
        if !(self.sigma_sq >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be non-negative, got {}",
                self.sigma_sq
            )));
        }
        Ok(())
    }
}

/// Binary indicator of the active taps of a channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportIndicator {
    bits: Vec<bool>,
}

impl SupportIndicator {
    pub fn empty(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Builds an indicator of length `len` with the listed taps active.
    pub fn from_indices(len: usize, active: &[usize]) -> Result<Self> {
        let mut bits = vec![false; len];
        for &i in active {
            if i >= len {
                return Err(Error::Dimension(format!("tap index {i} out of range for length {len}")));
            }
            bits[i] = true;
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_active(&self, tap: usize) -> bool {
        self.bits[tap]
    }

    pub fn set(&mut self, tap: usize, active: bool) {
        self.bits[tap] = active;
    }

    /// Number of active taps (the l0 norm, equal to the l1 norm of the bits).
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Active tap indices in increasing order.
    pub fn active(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Copy with one additional tap active.
    pub fn with(&self, tap: usize) -> Self {
        let mut next = self.clone();
        next.bits[tap] = true;
        next
    }
}

impl std::fmt::Display for SupportIndicator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let active = self.active();
        write!(f, "{{")?;
        for (i, tap) in active.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{tap}")?;
        }
        write!(f, "}}")
    }
}

/// Tap vector together with the support it was drawn on.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseChannel {
    pub taps: Vec<C64>,
    pub support: SupportIndicator,
}

impl SparseChannel {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    pub fn to_vector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.taps)
    }

    /// Unit-energy channel with a single active tap of gain one.
    pub fn unit(len: usize, tap: usize) -> Result<Self> {
        let support = SupportIndicator::from_indices(len, &[tap])?;
        let mut taps = vec![C64::new(0.0, 0.0); len];
        taps[tap] = C64::new(1.0, 0.0);
        Ok(Self { taps, support })
    }
}

/// Draws a Bernoulli support, rejecting the all-zero draw.
///
/// Gives up after `10 * ceil(1 / Pr[nonempty])` consecutive empty draws.
pub fn sample_support<R: Rng + ?Sized>(params: &PriorParams, rng: &mut R) -> Result<SupportIndicator> {
    params.validate()?;
    let p_nonempty = -(params.taps as f64 * (-params.p1).ln_1p()).exp_m1();
    let limit = if p_nonempty > 0.0 {
        let expected = (1.0 / p_nonempty).ceil();
        (10.0 * expected).min(u64::MAX as f64) as u64
    } else {
        0
    };
    for _ in 0..limit {
        let bits: Vec<bool> = (0..params.taps).map(|_| rng.random_bool(params.p1)).collect();
        if bits.iter().any(|&b| b) {
            return Ok(SupportIndicator::from_bits(bits));
        }
    }
    Err(Error::DegeneratePrior { attempts: limit })
}

/// Draws Gaussian gains on the active taps and rescales to unit energy.
pub fn sample_channel<R: Rng + ?Sized>(
    params: &PriorParams,
    support: &SupportIndicator,
    rng: &mut R,
) -> Result<SparseChannel> {
    let raw = sample_raw_taps(params, support, rng)?;
    let energy: f64 = raw.iter().map(|t| t.norm_sqr()).sum();
    if energy <= 0.0 {
        // Only reachable through an exact-zero Gaussian draw.
        return Err(Error::Numerical("drawn channel has zero energy".into()));
    }
    let scale = energy.sqrt().recip();
    Ok(SparseChannel {
        taps: raw.into_iter().map(|t| t * scale).collect(),
        support: support.clone(),
    })
}

/// Active-tap gains before energy normalization.
pub fn sample_raw_taps<R: Rng + ?Sized>(
    params: &PriorParams,
    support: &SupportIndicator,
    rng: &mut R,
) -> Result<Vec<C64>> {
    params.validate()?;
    if support.len() != params.taps {
        return Err(Error::Dimension(format!(
            "support length {} does not match tap count {}",
            support.len(),
            params.taps
        )));
    }
    if support.count() == 0 {
        return Err(Error::EmptySupport);
    }
    Ok(support
        .bits()
        .iter()
        .map(|&active| {
            if active {
                params.field.gaussian(params.sigma1_sq, rng)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect())
}

/// Entry `(k, l)` of the `N_d`-point DFT restricted to the first `L` columns.
pub fn dft_entry(row: usize, tap: usize, dft_size: usize) -> C64 {
    let phase = -2.0 * PI * ((row * tap) % dft_size) as f64 / dft_size as f64;
    C64::from_polar(1.0 / (dft_size as f64).sqrt(), phase)
}

/// Frequency response of `taps` on all `dft_size` subcarriers.
pub fn frequency_response(taps: &[C64], dft_size: usize) -> Vec<C64> {
    (0..dft_size)
        .map(|k| {
            taps.iter()
                .enumerate()
                .filter(|(_, t)| t.re != 0.0 || t.im != 0.0)
                .map(|(l, &t)| dft_entry(k, l, dft_size) * t)
                .sum()
        })
        .collect()
}

/// Pilot symbols on a subset of DFT rows and the resulting `M x L`
/// measurement matrix `X = diag(pilots) F`.
#[derive(Debug, Clone)]
pub struct PilotSystem {
    pub dft_size: usize,
    pub pilot_values: Vec<C64>,
    pub dft_rows: Vec<usize>,
    pub field: FieldMode,
    matrix: DMatrix<C64>,
}

impl PilotSystem {
    /// Assembles `diag(pilots) F` from explicit pilot values and DFT rows.
    pub fn from_pilots(
        pilot_values: Vec<C64>,
        dft_rows: Vec<usize>,
        taps: usize,
        dft_size: usize,
        field: FieldMode,
    ) -> Result<Self> {
        if pilot_values.len() != dft_rows.len() {
            return Err(Error::Dimension(format!(
                "{} pilot values for {} pilot rows",
                pilot_values.len(),
                dft_rows.len()
            )));
        }
        if taps == 0 || pilot_values.is_empty() {
            return Err(Error::Dimension("pilot system needs M >= 1 and L >= 1".into()));
        }
        if taps > dft_size || dft_rows.len() > dft_size {
            return Err(Error::Dimension(format!(
                "M = {} and L = {taps} must not exceed the DFT size {dft_size}",
                dft_rows.len()
            )));
        }
        if let Some(&bad) = dft_rows.iter().find(|&&k| k >= dft_size) {
            return Err(Error::Dimension(format!("DFT row {bad} out of range for size {dft_size}")));
        }
        let matrix = DMatrix::from_fn(dft_rows.len(), taps, |i, l| {
            pilot_values[i] * dft_entry(dft_rows[i], l, dft_size)
        });
        Ok(Self {
            dft_size,
            pilot_values,
            dft_rows,
            field,
            matrix,
        })
    }

    /// Wraps an arbitrary measurement matrix (no DFT structure).
    pub fn from_matrix(matrix: DMatrix<C64>, field: FieldMode) -> Self {
        Self {
            dft_size: 0,
            pilot_values: Vec::new(),
            dft_rows: Vec::new(),
            field,
            matrix,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Number of pilot measurements `M`.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Channel length `L`.
    pub fn taps(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column(&self, tap: usize) -> nalgebra::DVectorView<'_, C64> {
        self.matrix.column(tap)
    }

    /// Noiseless pilot observation `X h`.
    pub fn apply(&self, taps: &[C64]) -> Result<DVector<C64>> {
        if taps.len() != self.taps() {
            return Err(Error::Dimension(format!(
                "channel of length {} for a system with {} taps",
                taps.len(),
                self.taps()
            )));
        }
        Ok(&self.matrix * DVector::from_column_slice(taps))
    }
}

/// Draws `M` distinct pilot rows of an `N_d`-point DFT and i.i.d. standard
/// Gaussian pilot symbols.
pub fn build_pilot_system<R: Rng + ?Sized>(
    pilots: usize,
    taps: usize,
    dft_size: usize,
    field: FieldMode,
    rng: &mut R,
) -> Result<PilotSystem> {
    if pilots == 0 || taps == 0 {
        return Err(Error::Dimension("pilot system needs M >= 1 and L >= 1".into()));
    }
    if pilots > dft_size || taps > dft_size {
        return Err(Error::Dimension(format!(
            "M = {pilots} and L = {taps} must not exceed the DFT size {dft_size}"
        )));
    }
    let rows = rand::seq::index::sample(rng, dft_size, pilots).into_vec();
    let values = (0..pilots).map(|_| field.gaussian(1.0, rng)).collect();
    PilotSystem::from_pilots(values, rows, taps, dft_size, field)
}

/// Noise variance for an SNR in dB with unit symbol energy. Infinite SNR is noiseless.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Received pilot vector and the channel that produced it.
#[derive(Debug, Clone)]
pub struct Observation {
    pub y: DVector<C64>,
    pub true_channel: SparseChannel,
    pub snr_db: f64,
}

/// `y = X h + z` with white Gaussian noise of variance `10^(-snr_db/10)` per entry.
pub fn observe<R: Rng + ?Sized>(
    system: &PilotSystem,
    channel: &SparseChannel,
    snr_db: f64,
    rng: &mut R,
) -> Result<Observation> {
    let mut y = system.apply(&channel.taps)?;
    let variance = noise_variance(snr_db);
    if variance > 0.0 {
        for v in y.iter_mut() {
            *v += system.field.gaussian(variance, rng);
        }
    }
    Ok(Observation {
        y,
        true_channel: channel.clone(),
        snr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(taps: usize, p1: f64) -> PriorParams {
        PriorParams {
            taps,
            p1,
            sigma1_sq: 1.0,
            sigma_sq: 0.0,
            field: FieldMode::Complex,
        }
    }

    #[test]
    fn support_l0_equals_l1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = sample_support(&params(100, 0.05), &mut rng).unwrap();
        let l1: usize = g.bits().iter().map(|&b| b as usize).sum();
        assert_eq!(g.count(), l1);
        assert!(g.count() >= 1);
    }

    #[test]
    fn saturated_prior_gives_full_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = sample_support(&params(5, 1.0 - 1e-12), &mut rng).unwrap();
        assert_eq!(g.count(), 5);
    }

    #[test]
    fn support_count_matches_binomial_mean() {
        // Mean of Bin(100, 0.1) conditioned on nonempty is 10 / (1 - 0.9^100).
        let p = params(100, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|_| sample_support(&p, &mut rng).unwrap().count())
            .sum();
        let mean = total as f64 / draws as f64;
        let sd = (100.0f64 * 0.1 * 0.9).sqrt() / (draws as f64).sqrt();
        assert!((mean - 10.0).abs() < 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn per_position_frequency_within_binomial_bounds() {
        let p = params(20, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let draws = 100_000;
        let mut hits = vec![0usize; 20];
        for _ in 0..draws {
            for t in sample_support(&p, &mut rng).unwrap().active() {
                hits[t] += 1;
            }
        }
        let sd = (0.3f64 * 0.7 / draws as f64).sqrt();
        for h in hits {
            let f = h as f64 / draws as f64;
            assert!((f - 0.3).abs() < 4.0 * sd, "frequency {f}");
        }
    }

    #[test]
    fn channel_is_unit_energy_on_support() {
        let p = params(100, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = SupportIndicator::from_indices(100, &[3, 17, 40, 41, 99]).unwrap();
        let h = sample_channel(&p, &g, &mut rng).unwrap();
        assert!((h.energy() - 1.0).abs() < 1e-12);
        for (l, t) in h.taps.iter().enumerate() {
            assert_eq!(t.norm() != 0.0, g.is_active(l));
        }
    }

    #[test]
    fn empty_support_is_rejected() {
        let p = params(8, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = SupportIndicator::empty(8);
        assert!(matches!(sample_channel(&p, &g, &mut rng), Err(Error::EmptySupport)));
    }

    #[test]
    fn raw_tap_variance_matches_prior() {
        let p = PriorParams {
            sigma1_sq: 2.0,
            ..params(10, 0.5)
        };
        let g = SupportIndicator::from_indices(10, &[0, 2, 4, 6, 8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let n = 1000 * 5;
        for _ in 0..1000 {
            for t in sample_raw_taps(&p, &g, &mut rng).unwrap() {
                let e = t.norm_sqr();
                sum += e;
                sum_sq += e * e;
            }
        }
        let mean = sum / n as f64;
        // |h|^2 of a complex Gaussian is exponential: sd equals the mean.
        let sd = (sum_sq / n as f64 - mean * mean).sqrt() / (n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sd, "variance {mean}");
    }

    #[test]
    fn trivial_dft_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sys = build_pilot_system(1, 1, 1, FieldMode::Complex, &mut rng).unwrap();
        assert_eq!(sys.matrix()[(0, 0)], sys.pilot_values[0]);
    }

    #[test]
    fn small_dft_rows_match_direct_evaluation() {
        let pilots = vec![C64::new(1.0, 0.0); 4];
        let sys = PilotSystem::from_pilots(pilots, vec![0, 1, 2, 3], 2, 4, FieldMode::Complex).unwrap();
        for k in 0..4 {
            let expected = [
                C64::new(0.5, 0.0),
                C64::from_polar(0.5, -PI * k as f64 / 2.0),
            ];
            for l in 0..2 {
                assert!((sys.matrix()[(k, l)] - expected[l]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn default_scale_system_shape_and_row_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = build_pilot_system(40, 100, 256, FieldMode::Complex, &mut rng).unwrap();
        assert_eq!((sys.rows(), sys.taps()), (40, 100));
        let mut rows = sys.dft_rows.clone();
        rows.sort_unstable();
        rows.dedup();
        assert_eq!(rows.len(), 40);
        for &k in &sys.dft_rows {
            let norm: f64 = (0..100).map(|l| dft_entry(k, l, 256).norm_sqr()).sum();
            assert!((norm - 100.0 / 256.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_system_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(build_pilot_system(300, 10, 256, FieldMode::Complex, &mut rng).is_err());
        assert!(build_pilot_system(10, 300, 256, FieldMode::Complex, &mut rng).is_err());
    }

    #[test]
    fn noiseless_unit_channel_returns_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sys = build_pilot_system(12, 16, 64, FieldMode::Complex, &mut rng).unwrap();
        let h = SparseChannel::unit(16, 0).unwrap();
        let obs = observe(&sys, &h, f64::INFINITY, &mut rng).unwrap();
        assert!((obs.y - sys.column(0)).norm() < 1e-15);
    }

    #[test]
    fn snr_definition() {
        assert!((noise_variance(20.0) - 0.01).abs() < 1e-15);
        assert_eq!(noise_variance(f64::INFINITY), 0.0);
    }

    #[test]
    fn noise_energy_matches_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sys = build_pilot_system(20, 16, 64, FieldMode::Complex, &mut rng).unwrap();
        let h = SparseChannel::unit(16, 3).unwrap();
        let clean = sys.apply(&h.taps).unwrap();
        let trials = 10_000;
        let per_trial: Vec<f64> = (0..trials)
            .map(|_| {
                let obs = observe(&sys, &h, 10.0, &mut rng).unwrap();
                (obs.y - &clean).norm_squared() / 20.0
            })
            .collect();
        let mean = per_trial.iter().sum::<f64>() / trials as f64;
        let var = per_trial.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - 0.1).abs() < 3.0 * se, "noise energy {mean}");
    }

    #[test]
    fn observation_is_linear_in_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = params(16, 0.3);
        let sys = build_pilot_system(10, 16, 32, FieldMode::Complex, &mut rng).unwrap();
        let g1 = sample_support(&p, &mut rng).unwrap();
        let g2 = sample_support(&p, &mut rng).unwrap();
        let h1 = sample_channel(&p, &g1, &mut rng).unwrap();
        let h2 = sample_channel(&p, &g2, &mut rng).unwrap();
        let sum: Vec<C64> = h1.taps.iter().zip(&h2.taps).map(|(a, b)| a + b).collect();
        let lhs = sys.apply(&sum).unwrap();
        let rhs = sys.apply(&h1.taps).unwrap() + sys.apply(&h2.taps).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn same_seed_same_draws() {
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = params(32, 0.2);
            let sys = build_pilot_system(8, 32, 64, FieldMode::Real, &mut rng).unwrap();
            let g = sample_support(&p, &mut rng).unwrap();
            let h = sample_channel(&p, &g, &mut rng).unwrap();
            observe(&sys, &h, 10.0, &mut rng).unwrap().y
        };
        assert_eq!(run(42), run(42));
    }
}
