//! Command-line front end: `mse`, `ber` and `bench` sweeps written as CSV,
//! and `trial` for inspecting one seeded instance.

use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{
    self, baseline_config, draw_instance, estimator_config, grid_points, parse_snr_list, run_algorithm,
    summarize, timing_summary, write_results, Algorithm, ExperimentConfig, Mode,
};
use crate::model::FieldMode;

#[derive(Debug, Parser)]
#[command(
    name = "bmpce",
    about = "Sparse OFDM channel estimation experiments",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean-square-error sweep over SNR
    Mse(Flags),
    /// Bit-error-rate sweep with BPSK and zero forcing
    Ber(Flags),
    /// Single-worker timing of every estimator
    Bench(Flags),
    /// Run one seeded instance and print the estimates and the posterior
    Trial(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// SNR values in dB: `0,10,20` or `start:step:stop`
    #[arg(long, value_parser = parse_snr_arg)]
    snr: Option<SnrGrid>,
    #[arg(long)]
    trials: Option<usize>,
    /// Pilot counts M, comma separated
    #[arg(long, value_delimiter = ',')]
    pilots: Option<Vec<usize>>,
    /// Channel length L
    #[arg(long)]
    channel_length: Option<usize>,
    /// Tap activity probabilities, comma separated
    #[arg(long, value_delimiter = ',')]
    p1: Option<Vec<f64>>,
    /// Subset of bmp,omp,cosamp,sl0,oracle
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<Algorithm>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (default: <mode>.csv)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Hypotheses kept per search stage
    #[arg(long)]
    d_best: Option<usize>,
    /// Largest support size searched
    #[arg(long)]
    s_max: Option<usize>,
    /// Fixed estimator priors p1=0.01, sigma^2=0.05, sigma1^2=2
    #[arg(long)]
    paper_init: bool,
    #[arg(long)]
    field: Option<FieldMode>,
    #[arg(long)]
    workers: Option<usize>,
    /// key = value file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Wrapper so clap treats the parsed list as one value.
#[derive(Debug, Clone)]
struct SnrGrid(Vec<f64>);

fn parse_snr_arg(s: &str) -> std::result::Result<SnrGrid, String> {
    parse_snr_list(s).map(SnrGrid).map_err(|e| e.to_string())
}

impl Flags {
    fn experiment(&self, mode: Mode) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        if let Some(v) = &self.snr {
            cfg.snr_grid = v.0.clone();
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = &self.pilots {
            cfg.pilots = v.clone();
        }
        if let Some(v) = self.channel_length {
            cfg.taps = v;
        }
        if let Some(v) = &self.p1 {
            cfg.p1_list = v.clone();
        }
        if let Some(v) = &self.algos {
            cfg.algorithms = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.d_best {
            cfg.branch_width = v;
        }
        if let Some(v) = self.s_max {
            cfg.max_support = Some(v);
        }
        if self.paper_init {
            cfg.paper_init = true;
        }
        if let Some(v) = self.field {
            cfg.field = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run(argv, &mut std::io::stdout().lock())
}

/// [`main`] with the report written to `out`.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let outcome = match &cli.command {
        Command::Mse(f) => sweep(f, Mode::Mse, out),
        Command::Ber(f) => sweep(f, Mode::Ber, out),
        Command::Bench(f) => sweep(f, Mode::Bench, out),
        Command::Trial(f) => trial(f, out),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn sweep(flags: &Flags, mode: Mode, out: &mut dyn Write) -> Result<()> {
    let cfg = flags.experiment(mode)?;
    let records = match mode {
        Mode::Mse => harness::run_mse_sweep(&cfg)?,
        Mode::Ber => harness::run_ber_sweep(&cfg)?,
        Mode::Bench => harness::run_bench(&cfg)?,
    };
    let path = flags
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", mode.name())));
    write_results(&records, &path)?;

    if mode == Mode::Bench {
        writeln!(out, "{:<12} {:>6} {:>14} {:>14}", "algorithm", "runs", "mean_us", "sd_us").map_err(io)?;
        for t in timing_summary(&records) {
            writeln!(out, "{:<12} {:>6} {:>14.1} {:>14.1}", t.algorithm, t.runs, t.mean_micros, t.sd_micros)
                .map_err(io)?;
        }
    } else {
        writeln!(
            out,
            "{:>8} {:>6} {:>4} {:<12} {:>12} {:>12} {:>6}",
            "snr_db", "p1", "M", "algorithm", "mean_mse", "mean_ber", "failed"
        )
        .map_err(io)?;
        for s in summarize(&records) {
            writeln!(
                out,
                "{:>8.2} {:>6.3} {:>4} {:<12} {:>12.4e} {:>12.4e} {:>6}",
                s.snr_db, s.p1, s.pilots, s.algorithm, s.mean_mse, s.mean_ber, s.failed
            )
            .map_err(io)?;
        }
    }
    writeln!(out, "wrote {} records to {}", records.len(), path.display()).map_err(io)?;
    Ok(())
}

fn trial(flags: &Flags, out: &mut dyn Write) -> Result<()> {
    let cfg = flags.experiment(Mode::Mse)?;
    let point = grid_points(&cfg)[0];
    let instance = draw_instance(&cfg, &point, 0)?;
    let search = estimator_config(&cfg, point.p1, instance.noise_variance);
    let baseline = baseline_config(&cfg, point.p1, instance.noise_variance);
    let truth = instance.channel.to_vector();

    writeln!(
        out,
        "seed {}  snr {} dB  L {}  M {}  p1 {}",
        cfg.master_seed, point.snr_db, cfg.taps, point.pilots, point.p1
    )
    .map_err(io)?;
    writeln!(out, "true support: {}", instance.channel.support).map_err(io)?;
    let mut bmp = None;
    for &alg in &cfg.effective_algorithms() {
        match run_algorithm(alg, &instance, &search, &baseline) {
            Ok(est) => {
                let err = harness::mse(&truth, &est.h_hat)?;
                writeln!(out, "{:<8} mse {:.3e}  support {}", alg.name(), err, est.map_support).map_err(io)?;
                if alg == Algorithm::Bmp {
                    bmp = Some(est);
                }
            }
            Err(e) => writeln!(out, "{:<8} failed: {e}", alg.name()).map_err(io)?,
        }
    }
    if let Some(est) = bmp {
        writeln!(out, "bmp posterior (top 5 of {}):", est.posterior.len()).map_err(io)?;
        for (cand, w) in est.posterior.top(5) {
            writeln!(out, "  {w:.6}  {}", cand.support).map_err(io)?;
        }
    }
    Ok(())
}
