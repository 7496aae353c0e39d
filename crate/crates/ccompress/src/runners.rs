//! Parallel experiment runners.
//!
//! Work is split into fixed chunks whose results are combined in chunk
//! order, and every chunk draws from streams keyed by trial index, so the
//! output does not depend on the thread count.

use std::ops::Range;

use ccompress_core::quantum::{haar_orthonormal, tail_counts, tail_report, QuantumEnsemble, TailCounts, TailExperiment, TailReport};
use ccompress_core::rng::derive_stream;
use rayon::prelude::*;

use crate::{CliError, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CCOMPRESS_THREADS";

/// Trials per work unit in [`run_tails`].
pub const TAIL_CHUNK: u64 = 256;

/// A pool sized by [`THREADS_ENV`] (rayon's default when unset).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Config(format!("cannot start worker threads: {e}")))
}

/// `f` over `items` in parallel, results in input order.
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.par_iter().map(f).collect()
}

fn chunks(trials: u64, size: u64) -> Vec<Range<u64>> {
    (0..trials.div_ceil(size)).map(|c| c * size..((c + 1) * size).min(trials)).collect()
}

/// Same counts as one sequential [`tail_counts`] over `0..trials`; the
/// hypotheses are reported in the result but not enforced.
pub fn run_tails(exp: TailExperiment, m: usize, d: usize, l: usize, trials: u64, seed: u64) -> Result<TailReport> {
    if trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    let parts = chunks(trials, TAIL_CHUNK)
        .into_par_iter()
        .map(|r| tail_counts(exp, m, d, l, seed, r))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut total: Option<TailCounts> = None;
    for p in &parts {
        match &mut total {
            Some(t) => t.merge(p),
            None => total = Some(p.clone()),
        }
    }
    Ok(tail_report(exp, m, d, l, seed, &total.expect("at least one chunk"))?)
}

/// The ensemble `build_ensemble(m, k_exp, n, seed)` would draw, with the
/// bases sampled in parallel.
pub fn build_ensemble(m: usize, k_exp: u32, n: usize, seed: u64) -> Result<QuantumEnsemble> {
    let blocks = if k_exp < usize::BITS { n >> k_exp } else { 0 };
    let bases = (0..blocks as u64)
        .into_par_iter()
        .map(|i| haar_orthonormal(m, m, &mut derive_stream(seed, &[i])).map(|s| s.basis().clone()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(QuantumEnsemble::from_bases(m, k_exp, n, bases)?)
}
