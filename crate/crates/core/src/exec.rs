//! Index-ordered maps over grid points, parallel when the `parallel`
//! feature is compiled in and requested at run time.
//!
//! Every map returns results in input order, and all reductions over those
//! results happen sequentially afterwards, so parallel and sequential runs
//! produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the thread-pool overhead dominates.
const PAR_THRESHOLD: usize = 64;

pub fn map_indexed<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel && n >= PAR_THRESHOLD {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = (parallel, PAR_THRESHOLD);
    (0..n).map(f).collect()
}

pub fn try_map_indexed<T, E, F>(n: usize, parallel: bool, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    // Collecting into Vec<Result> first keeps the reported error the
    // lowest-index one regardless of scheduling.
    map_indexed(n, parallel, f).into_iter().collect()
}

/// Whether parallel evaluation is compiled in.
pub const fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
