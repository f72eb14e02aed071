//! Deterministic parallel map over fixed work chunks.
//!
//! Work is cut into chunks whose boundaries depend only on the chunk size.
//! Results come back in chunk order, so any reduction done by the caller in
//! that order is bit-reproducible whatever the worker count.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_CHUNK: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parallelism {
    pub workers: usize,
    pub chunk_size: u64,
}

impl Default for Parallelism {
    fn default() -> Self {
        Self {
            workers: available_workers(),
            chunk_size: DEFAULT_CHUNK,
        }
    }
}

impl Parallelism {
    pub fn new(workers: usize, chunk_size: u64) -> Self {
        Self {
            workers,
            chunk_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::config("worker count must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(Error::config("chunk size must be at least 1"));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        self.validate()?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))
    }

    /// Applies `f` to consecutive index ranges covering `0..total`.
    pub fn map_chunks<T, F>(&self, total: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Range<u64>) -> T + Sync + Send,
    {
        let chunk = self.chunk_size.max(1);
        let n_chunks = total.div_ceil(chunk);
        let pool = self.pool()?;
        Ok(pool.install(|| {
            (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let start = c * chunk;
                    f(start..(start + chunk).min(total))
                })
                .collect()
        }))
    }

    /// Applies `f` to each task; output order matches input order.
    pub fn map_tasks<I, T, F>(&self, tasks: &[I], f: F) -> Result<Vec<T>>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        let pool = self.pool()?;
        Ok(pool.install(|| tasks.par_iter().map(&f).collect()))
    }
}

pub fn available_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
