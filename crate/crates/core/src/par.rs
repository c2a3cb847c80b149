//! Data-parallel helpers. With the `parallel` feature disabled every helper
//! runs sequentially and `Execution::Parallel` behaves like `Sequential`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How independent work items (seeds, paths) are dispatched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Below this many items the parallel path is not worth the dispatch cost.
pub const PARALLEL_THRESHOLD: usize = 256;

/// `(0..len).map(f).collect()`, in parallel when requested and available.
pub fn map_range<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Like [`map_range`] but only goes parallel for large inputs.
pub fn map_range_auto<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let exec = if len >= PARALLEL_THRESHOLD {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    map_range(exec, len, f)
}
