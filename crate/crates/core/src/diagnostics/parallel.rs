//! Order-preserving fan-out over work units.
//!
//! Each unit derives its own stream from `(master seed, domain, index)`,
//! units are collected in index order and every reduction runs afterwards
//! on one thread, so output does not depend on the worker count.

use rayon::prelude::*;

use crate::rng::{SimRng, StreamFactory};
use crate::{Error, Result};

/// Runs `f(0..units)` on `threads` workers (the global pool when `None`)
/// and returns results in index order.
pub fn par_map<T, F>(threads: Option<usize>, units: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let run = || (0..units).into_par_iter().map(&f).collect::<Vec<_>>();
    let results = match threads {
        None => run(),
        Some(0) => return Err(Error::invalid("threads", "must be ≥ 1")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?
            .install(run),
    };
    results.into_iter().collect()
}

/// Draw size per work unit for large i.i.d. samples.
pub const CHUNK: usize = 1 << 14;

/// `total` i.i.d. draws of `draw`, generated in fixed-size chunks that each
/// own a stream keyed by `domain` and the chunk index.
pub fn par_draws<T, F>(
    threads: Option<usize>,
    factory: StreamFactory,
    domain: &[u64],
    total: usize,
    draw: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> T + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK);
    let parts = par_map(threads, chunks, |c| {
        let mut rng = factory.stream(domain, c as u64);
        let len = CHUNK.min(total - c * CHUNK);
        Ok((0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>())
    })?;
    Ok(parts.into_iter().flatten().collect())
}
