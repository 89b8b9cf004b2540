//! Thread pool sized by `BIFOCUS_THREADS`, and a pair executor on top of it.

use bifocus_core::model::{BiFocusSpectrum, GlobalMapModel};
use bifocus_core::raiser::{raise_suborder, PairExecutor, RaiseConfig, RaiseOutcome};
use bifocus_core::Result;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

pub const THREADS_ENV: &str = "BIFOCUS_THREADS";

/// A pool capped by `BIFOCUS_THREADS` when it holds a positive integer.
pub fn pool() -> ThreadPool {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0);
    let mut builder = ThreadPoolBuilder::new();
    if let Some(n) = cap {
        builder = builder.num_threads(n);
    }
    builder.build().expect("thread pool")
}

/// Runs the pairs of a round on a pool; results keep pair order.
pub struct RayonPairs<'p> {
    pub pool: &'p ThreadPool,
}

impl PairExecutor for RayonPairs<'_> {
    fn run_pairs(
        &self,
        pairs: &[(GlobalMapModel, GlobalMapModel)],
        spec: &BiFocusSpectrum,
        cfg: RaiseConfig,
    ) -> Vec<Result<RaiseOutcome>> {
        self.pool.install(|| {
            pairs
                .par_iter()
                .map(|(a, b)| raise_suborder(a, b, spec, cfg))
                .collect()
        })
    }
}
