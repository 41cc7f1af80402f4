//! Batch execution strategy.
//!
//! Pareto sweeps, Monte Carlo batches and randomized verification runs are
//! all order-preserving maps over an index range. [`map_range`] runs them
//! on the rayon pool when the `parallel` feature is enabled and falls back
//! to a plain loop otherwise; results are collected in index order either
//! way, so outputs are identical across both modes. [`map_range_seq`] is
//! always sequential and exists so benchmarks can compare the two paths in
//! a single build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every index in `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Applies `f` to every index in `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential reference implementation of [`map_range`].
pub fn map_range_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
