use bilevel_ggm_core::Executor;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Runs independent jobs on a private rayon pool. Results come back in index
/// order, so output does not depend on the thread count.
pub struct PoolExecutor {
    pool: rayon::ThreadPool,
}

impl PoolExecutor {
    /// `threads == 0` lets rayon pick.
    pub fn new(threads: usize) -> CliResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for PoolExecutor {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(&f).collect())
    }
}
