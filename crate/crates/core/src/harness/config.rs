use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::FieldMode;

/// Estimators the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Bmp,
    Omp,
    Cosamp,
    Sl0,
    /// Least squares on the true support.
    Oracle,
    /// Detection with the true frequency response; BER mode only.
    PerfectCsi,
}

impl Algorithm {
    pub const ESTIMATORS: [Algorithm; 5] = [Self::Bmp, Self::Omp, Self::Cosamp, Self::Sl0, Self::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bmp => "bmp",
            Self::Omp => "omp",
            Self::Cosamp => "cosamp",
            Self::Sl0 => "sl0",
            Self::Oracle => "oracle",
            Self::PerfectCsi => "perfect_csi",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bmp" => Ok(Self::Bmp),
            "omp" => Ok(Self::Omp),
            "cosamp" => Ok(Self::Cosamp),
            "sl0" => Ok(Self::Sl0),
            "oracle" | "oracle_ls" => Ok(Self::Oracle),
            "perfect_csi" => Ok(Self::PerfectCsi),
            other => Err(Error::InvalidParameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Mse,
    Ber,
    Bench,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mse => "mse",
            Self::Ber => "ber",
            Self::Bench => "bench",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mse" => Ok(Self::Mse),
            "ber" => Ok(Self::Ber),
            "bench" => Ok(Self::Bench),
            other => Err(Error::InvalidParameter(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    /// Pilot counts `M` to sweep.
    pub pilots: Vec<usize>,
    /// Channel length `L`.
    pub taps: usize,
    pub p1_list: Vec<f64>,
    /// Subcarriers `N_d`.
    pub dft_size: usize,
    /// Cyclic prefix `N_g`. Carried for completeness; the frequency-domain
    /// model assumes it covers the delay spread and never reads it.
    pub cyclic_prefix: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    pub mode: Mode,
    pub field: FieldMode,
    /// Search breadth `D` of the Bayesian estimator.
    pub branch_width: usize,
    /// Largest support size `S`; automatic when `None`.
    pub max_support: Option<usize>,
    /// Use the fixed estimator priors `p1 = 0.01, sigma_sq = 0.05, sigma1_sq = 2`
    /// instead of the true generative values.
    pub paper_init: bool,
    pub workers: usize,
    /// Active-tap variance assumed by the estimator; `1 / (L p1)` when `None`.
    pub sigma1_sq: Option<f64>,
    /// Give CoSaMP the true sparsity of each trial instead of `round(L p1)`.
    pub oracle_sparsity: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            snr_grid: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            trials: 1000,
            pilots: vec![40],
            taps: 100,
            p1_list: vec![0.1],
            dft_size: 256,
            cyclic_prefix: 16,
            algorithms: Algorithm::ESTIMATORS.to_vec(),
            master_seed: 0,
            mode: Mode::Mse,
            field: FieldMode::Complex,
            branch_width: crate::bmp::DEFAULT_BRANCH_WIDTH,
            max_support: None,
            paper_init: false,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            sigma1_sq: None,
            oracle_sparsity: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| s.is_nan()) {
            return bad("SNR grid must be a nonempty list of numbers");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        if self.pilots.is_empty() || self.p1_list.is_empty() {
            return bad("pilot and activity-probability lists must be nonempty");
        }
        if self.taps == 0 || self.taps > self.dft_size {
            return bad("channel length must lie in [1, N_d]");
        }
        if self.pilots.iter().any(|&m| m == 0 || m >= self.dft_size) {
            return bad("pilot counts must lie in [1, N_d)");
        }
        if self.p1_list.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return bad("activity probabilities must lie in (0, 1)");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.branch_width == 0 {
            return bad("branch width must be at least 1");
        }
        if let Some(s) = self.sigma1_sq {
            if !(s > 0.0 && s.is_finite()) {
                return bad("assumed active-tap variance must be positive");
            }
        }
        Ok(())
    }

    /// Algorithms actually run: BER mode always adds the perfect-CSI reference.
    pub fn effective_algorithms(&self) -> Vec<Algorithm> {
        let mut algos: Vec<Algorithm> = Vec::new();
        for &a in &self.algorithms {
            if !algos.contains(&a) && (a != Algorithm::PerfectCsi || self.mode == Mode::Ber) {
                algos.push(a);
            }
        }
        if self.mode == Mode::Ber && !algos.contains(&Algorithm::PerfectCsi) {
            algos.push(Algorithm::PerfectCsi);
        }
        algos
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("line {}: expected 'key = value', got '{line}'", n + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::InvalidParameter(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::default();
        config.apply_text(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.to_ascii_lowercase().as_str() {
            "snr_grid" | "snr" => self.snr_grid = parse_snr_list(value)?,
            "trials" => self.trials = parse_one(key, value)?,
            "m_list" | "pilots" => self.pilots = parse_list(key, value)?,
            "l" | "taps" | "channel_length" => self.taps = parse_one(key, value)?,
            "p1_list" | "p1" => self.p1_list = parse_list(key, value)?,
            "n_d" | "dft_size" => self.dft_size = parse_one(key, value)?,
            "n_g" | "cyclic_prefix" => self.cyclic_prefix = parse_one(key, value)?,
            "algorithms" | "algos" => self.algorithms = parse_list(key, value)?,
            "master_seed" | "seed" => self.master_seed = parse_one(key, value)?,
            "mode" => self.mode = value.parse()?,
            "field_mode" | "field" => self.field = value.parse()?,
            "d_best" | "branch_width" => self.branch_width = parse_one(key, value)?,
            "s_max" | "max_support" => {
                self.max_support = match value.to_ascii_lowercase().as_str() {
                    "auto" | "" => None,
                    _ => Some(parse_one(key, value)?),
                }
            }
            "paper_init" => self.paper_init = parse_one(key, value)?,
            "workers" => self.workers = parse_one(key, value)?,
            "oracle_sparsity" | "cosamp_oracle_k" => self.oracle_sparsity = parse_one(key, value)?,
            "sigma1_sq" => {
                self.sigma1_sq = match value.to_ascii_lowercase().as_str() {
                    "auto" | "" => None,
                    _ => Some(parse_one(key, value)?),
                }
            }
            other => return Err(Error::InvalidParameter(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("invalid value '{value}' for '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(key, s))
        .collect()
}

/// SNR values from a comma list (`0,10,20`) or an inclusive range `start:step:stop`.
pub fn parse_snr_list(value: &str) -> Result<Vec<f64>> {
    let value = value.trim();
    if value.contains(':') {
        let parts: Vec<f64> = value
            .split(':')
            .map(|s| parse_one("snr", s))
            .collect::<Result<_>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(Error::InvalidParameter(format!("SNR range '{value}' must be start:step:stop")));
        };
        if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid SNR range '{value}'")));
        }
        // Index-based so that rounding never drops the endpoint.
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| start + i as f64 * step).collect());
    }
    let list: Vec<f64> = parse_list("snr", value)?;
    if list.is_empty() {
        return Err(Error::InvalidParameter("empty SNR list".into()));
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_range_includes_endpoint() {
        assert_eq!(parse_snr_list("0:5:30").unwrap(), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(parse_snr_list("0:0.1:0.3").unwrap().len(), 4);
        assert_eq!(parse_snr_list("1000").unwrap(), vec![1000.0]);
        assert!(parse_snr_list("0:0:10").is_err());
        assert!(parse_snr_list("0:5").is_err());
    }

    #[test]
    fn config_text_overrides_defaults() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "# desk-scale sweep\n\
             snr_grid = 0, 10 , 20\n\
             trials = 7   # short\n\
             M_list = 20,30\n\
             algorithms = bmp, oracle\n\
             field_mode = real\n\
             s_max = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.snr_grid, vec![0.0, 10.0, 20.0]);
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.pilots, vec![20, 30]);
        assert_eq!(cfg.algorithms, vec![Algorithm::Bmp, Algorithm::Oracle]);
        assert_eq!(cfg.field, FieldMode::Real);
        assert_eq!(cfg.max_support, Some(4));
        assert_eq!(cfg.taps, 100);
    }

    #[test]
    fn bad_lines_are_reported() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_text("trials 5").is_err());
        assert!(cfg.apply_text("bogus = 1").is_err());
        assert!(cfg.apply_text("algorithms = bmp, lasso").is_err());
    }

    #[test]
    fn ber_mode_adds_perfect_csi_once() {
        let mut cfg = ExperimentConfig { mode: Mode::Ber, ..ExperimentConfig::default() };
        assert_eq!(cfg.effective_algorithms().last(), Some(&Algorithm::PerfectCsi));
        cfg.algorithms.push(Algorithm::PerfectCsi);
        let n = cfg.effective_algorithms().iter().filter(|&&a| a == Algorithm::PerfectCsi).count();
        assert_eq!(n, 1);
        cfg.mode = Mode::Mse;
        assert!(!cfg.effective_algorithms().contains(&Algorithm::PerfectCsi));
    }

    #[test]
    fn validation_catches_empty_grids() {
        let cfg = ExperimentConfig { trials: 0, ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { algorithms: vec![], ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
