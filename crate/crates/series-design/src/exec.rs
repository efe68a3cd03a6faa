//! Execution-mode helper: one entry point for every data-parallel loop.
//!
//! With the default `parallel` feature the closure runs on the rayon thread
//! pool; without it (or when `parallel = false` is requested at runtime) a
//! plain sequential loop is used. Either way the result vector is ordered by
//! index, so callers observe identical output in both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, returning results in index order.
///
/// `parallel` requests the rayon path; it is ignored (always sequential) when
/// the crate is built without the `parallel` feature.
pub fn map_indexed<T, F>(parallel: bool, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return (0..n).into_par_iter().map(|i| f(i)).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// True when this build can actually run loops on a thread pool.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
