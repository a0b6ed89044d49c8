//! Trial-level execution: parallel via rayon when the `parallel` feature is
//! on, sequential otherwise. Results are always returned in trial order, so
//! output never depends on scheduling.

/// How independent trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..count`, preserving order.
pub fn map_indexed<T, F>(exec: Execution, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            use rayon::prelude::*;
            return (0..count).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..count).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<I, T, F>(exec: Execution, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Runs `op` on a dedicated pool with `threads` workers. Without the
/// `parallel` feature (or with `threads <= 1`) `op` runs on the caller.
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads > 1 {
            match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => return pool.install(op),
                Err(e) => log::warn!("falling back to the global pool: {e}"),
            }
        }
    }
    let _ = threads;
    op()
}
