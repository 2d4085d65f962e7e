//! Sparse channel estimation for pilot-aided OFDM.
//!
//! The crate covers the whole experiment chain:
//!
//! - [`model`]: Bernoulli-Gaussian sparse channels, partial-DFT pilot systems
//!   and noisy pilot observations.
//! - [`bmp`]: the Bayesian matching pursuit estimator, a `D`-best search over
//!   support hypotheses driven by rank-one metric updates, followed by MMSE
//!   combining of the retained hypotheses.
//! - [`baselines`]: OMP, CoSaMP, smoothed-l0 and the known-support least
//!   squares bound.
//! - [`harness`]: paired Monte-Carlo sweeps of MSE, BER (BPSK with zero
//!   forcing) and estimator run time, written as CSV.
//! - [`cli`]: the `bmpce` command-line front end.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod baselines;
pub mod bmp;
pub mod cli;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;

pub use bmp::{ChannelEstimate, PosteriorSet, SearchConfig};
pub use error::{Error, Result};
pub use model::{FieldMode, PilotSystem, PriorParams, SparseChannel, SupportIndicator, C64};
