//! Parallel map with ordered results.
//!
//! Every data-parallel kernel in the crate is a `map` over independent work
//! items (moduli q, rows m, trial indices) followed by a sequential
//! compensated reduction over the collected, order-preserved results. The
//! reduction order never depends on the worker count, so parallel and
//! sequential runs agree bit for bit.

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
/// Result order always matches input order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
/// Result order always matches input order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential mirror of [`map_collect`], available regardless of features.
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
