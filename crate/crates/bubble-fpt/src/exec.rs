//! Per-path work scheduling.
//!
//! Monte Carlo operations map a closure over path indices. Results are
//! collected keyed by index, so the reduction order is fixed and the output
//! is bit-identical whether the map runs on a rayon pool or sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
///
/// Output order is always by index.
pub fn map_paths<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_paths_serial(n, f)
    }
}

/// Sequential reference implementation of [`map_paths`]. Always available,
/// used by the benches to compare scheduling overhead.
pub fn map_paths_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
