//! Replicate fan-out on a dedicated rayon pool.
//!
//! Results come back indexed by replicate, and every reduction downstream
//! walks them in index order, so the worker count only affects wall time.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::LabError;

/// A fixed-size worker pool.
pub struct Workers {
    pool: ThreadPool,
    count: usize,
}

impl Workers {
    pub fn new(count: usize) -> Result<Self, LabError> {
        if count == 0 {
            return Err(LabError::InvalidArgument {
                flag: "workers",
                reason: "must be at least 1".into(),
            });
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(count)
            .build()
            .map_err(|e| LabError::Runtime(e.to_string()))?;
        Ok(Self { pool, count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `f(scratch, i)` for `i` in `0..replicates`, in index order. Each
    /// worker builds its own scratch with `init`.
    pub fn map_replicates<S, T, I, F>(&self, replicates: u64, init: I, f: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, u64) -> T + Sync + Send,
    {
        self.pool.install(|| {
            (0..replicates)
                .into_par_iter()
                .map_init(&init, |s, i| f(s, i))
                .collect()
        })
    }
}
