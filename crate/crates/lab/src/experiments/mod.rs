//! One runner per experiment kind.
//!
//! Trials fan out over a rayon pool and are collected in trial order; every
//! reduction happens afterwards on the ordered results, so outputs do not
//! depend on the worker count.

mod encoding;
mod fisher;
mod moments;
mod overlaps;
mod typicality;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::report::ResultRecord;
use crate::values::ValueError;
use capsule_core::encoding::Generator;
use capsule_core::rng::{stream_index, RngStream};
use rayon::prelude::*;
use std::fmt;

#[derive(Debug)]
pub enum RunError {
    /// The config is well formed but cannot be run as given.
    Config(String),
    Core(capsule_core::error::Error),
    Pool(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "invalid config: {m}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Pool(m) => write!(f, "thread pool: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<capsule_core::error::Error> for RunError {
    fn from(e: capsule_core::error::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<ValueError> for RunError {
    fn from(e: ValueError) -> Self {
        RunError::Config(e.0)
    }
}

pub type Result<T> = std::result::Result<T, RunError>;

/// Runs `config` on a pool of `threads` workers (at least one).
pub fn run(config: &ExperimentConfig, threads: usize) -> Result<ResultRecord> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    pool.install(|| match config.kind {
        ExperimentKind::HaarMoments => moments::haar_moments(config),
        ExperimentKind::PagePurity => moments::page_purity(config),
        ExperimentKind::CrossOverlap => overlaps::cross_overlap(config),
        ExperimentKind::Components => encoding::components(config),
        ExperimentKind::Factorization => encoding::factorization(config),
        ExperimentKind::Fisher => fisher::fisher(config),
        ExperimentKind::Isometry => fisher::isometry(config),
        ExperimentKind::IsometryLowT => fisher::isometry_low_t(config),
        ExperimentKind::Typicality => typicality::typicality(config),
    })
}

/// Stream index of `path` under this experiment's label.
fn stream_of(config: &ExperimentConfig, path: &[u64]) -> u64 {
    let mut full = Vec::with_capacity(path.len() + 1);
    full.push(config.kind.stream_label());
    full.extend_from_slice(path);
    stream_index(&full)
}

fn rng(config: &ExperimentConfig, stream: u64) -> RngStream {
    RngStream::new(config.master_seed, stream)
}

/// `f(0), …, f(count−1)` evaluated in parallel, returned in index order.
fn par_trials<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}

fn generators(config: &ExperimentConfig) -> Result<Vec<Generator>> {
    Ok(config.generators.iter().map(|g| g.build()).collect::<std::result::Result<_, _>>()?)
}

fn require(cond: bool, message: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(RunError::Config(message()))
    }
}

/// Uniform-distribution variance of each generator's eigenvalues, averaged.
fn mean_uniform_variance(gens: &[Generator]) -> f64 {
    gens.iter().map(|g| g.uniform_variance()).sum::<f64>() / gens.len() as f64
}
