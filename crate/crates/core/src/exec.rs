//! Execution strategy for embarrassingly parallel sweeps.
//!
//! Work is split into indexed jobs whose results are collected in index order,
//! so output never depends on the strategy or the thread count.

use crate::error::{CritError, Result};

/// Environment variable read when no explicit thread count is given.
pub const THREADS_ENV: &str = "CRITLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work stealing; identical to `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `(0..n).map(job)` in index order.
    pub fn map<T, F>(self, n: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(job).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(job).collect()
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => (0..n).map(job).collect(),
        }
    }

    /// Like [`Execution::map`] but over a slice of inputs.
    pub fn map_slice<I, T, F>(self, items: &[I], job: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.map(items.len(), |i| job(&items[i]))
    }
}

/// Resolves the worker count from the flag, then `CRITLAB_THREADS`, then the
/// machine default (`None`).
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return validate(n).map(Some);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v.trim().parse().map_err(|_| CritError::InvalidParameter {
                name: "CRITLAB_THREADS",
                reason: format!("expected a positive integer, got `{v}`"),
            })?;
            validate(n).map(Some)
        }
        _ => Ok(None),
    }
}

fn validate(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(CritError::InvalidParameter {
            name: "threads",
            reason: "must be at least 1".into(),
        });
    }
    Ok(n)
}

/// Installs the global worker pool. A second call is a no-op.
pub fn init_thread_pool(threads: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        // an already-initialized pool keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_in_order() {
        let f = |i: usize| (i * i) as u64 ^ 0x5555;
        assert_eq!(Execution::Sequential.map(1000, f), Execution::Parallel.map(1000, f));
    }

    #[test]
    fn explicit_thread_flag_wins() {
        assert_eq!(resolve_threads(Some(3)).unwrap(), Some(3));
        assert!(resolve_threads(Some(0)).is_err());
    }
}
