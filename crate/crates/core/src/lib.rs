//! Joint Bayesian inference of a tournament graph with ties and of
//! per-informant error rates from several noisy, partially observed reports.
//!
//! The latent graph assigns every unordered pair of vertices one of three
//! states (`+1`: lower-ordinal vertex dominates, `-1`: the other one does,
//! `0`: tie). Each informant misreports according to three rates, and the
//! posterior over graph and rates is explored with a conjugate Gibbs sampler
//! ([`sampler::gibbs_run`]). Small instances can be solved exactly
//! ([`oracle`]) and synthetic data drawn from the model ([`simulate`]).

pub mod cli;
pub mod diagnostics;
mod error;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod simulate;

pub use error::{Error, Result};
