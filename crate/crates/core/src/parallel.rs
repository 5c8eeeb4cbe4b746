//! Thin indirection over rayon so every data-parallel loop in the crate has a
//! sequential fallback when built without the `parallel` feature.
//!
//! Both code paths produce identical output: parallel maps collect by index,
//! and all reductions are over values that are themselves deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order in the output.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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
        (0..n).map(f).collect()
    }
}

/// Folds items into per-worker accumulators and merges them with `merge`.
/// The accumulator updates and the merge must be commutative and associative
/// for the result to be thread-count independent; every use in this crate
/// accumulates integer histogram counts.
pub(crate) fn fold_merge<I, A, FInit, FFold, FMerge>(
    items: &[I],
    init: FInit,
    fold: FFold,
    merge: FMerge,
) -> A
where
    I: Sync,
    A: Send,
    FInit: Fn() -> A + Sync + Send,
    FFold: Fn(A, &I) -> A + Sync + Send,
    FMerge: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items
            .par_iter()
            .fold(&init, |acc, item| fold(acc, item))
            .reduce(&init, merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = &merge;
        items.iter().fold(init(), |acc, item| fold(acc, item))
    }
}

/// Runs two closures, in parallel when possible.
pub(crate) fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}

/// Sizes the global thread pool. A no-op that returns `false` when the pool
/// is already running or the crate was built without `parallel`.
pub fn set_thread_count(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}
