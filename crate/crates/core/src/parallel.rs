//! Data-parallel map with a sequential fallback.
//!
//! Drops within a campaign and Monte Carlo realizations within a drop are
//! independent, so both loops funnel through [`map_indexed`]. With the
//! `parallel` feature (default) the work runs on rayon; without it, or with
//! [`Parallelism::Serial`], the same closure runs on the calling thread.
//! Results are collected in index order and reduced sequentially by callers,
//! which keeps floating-point output bit-identical across modes.

use serde::{Deserialize, Serialize};

/// Execution mode for the data-parallel loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Parallelism {
    /// Run on the calling thread.
    Serial,
    /// Use the global rayon pool (all available cores).
    #[default]
    Rayon,
    /// Use a dedicated rayon pool with this many threads.
    Threads(usize),
}

impl Parallelism {
    /// Parse the forms accepted by the CLI and the environment override:
    /// `serial`, `auto`, or a thread count.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "serial" | "seq" => Some(Self::Serial),
            "auto" | "rayon" => Some(Self::Rayon),
            n => n.parse::<usize>().ok().map(|n| {
                if n <= 1 {
                    Self::Serial
                } else {
                    Self::Threads(n)
                }
            }),
        }
    }
}

/// Apply `f` to `0..n`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(mode: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        Parallelism::Serial => (0..n).map(f).collect(),
        Parallelism::Rayon => (0..n).into_par_iter().map(f).collect(),
        Parallelism::Threads(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .expect("failed to build thread pool");
            pool.install(|| (0..n).into_par_iter().map(f).collect())
        }
    }
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(_mode: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
