//! Order-preserving parallel map helpers.
//!
//! All parallelism in the crate goes through these functions, which map
//! over independent units (trees, rows, query points, replicates) and
//! collect results in input order. Reductions then run sequentially over
//! the collected vector, so floating-point results are bitwise identical
//! whether the `parallel` feature is on or off and for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over indices `0..n`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over indices `0..n`, preserving index order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Maps a fallible `f` over indices `0..n`, short-circuiting on error.
/// Output order matches index order on success.
#[cfg(feature = "parallel")]
pub fn try_map_indices<U, E, F>(n: usize, f: F) -> Result<Vec<U>, E>
where
    U: Send,
    E: Send,
    F: Fn(usize) -> Result<U, E> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Maps a fallible `f` over indices `0..n`, short-circuiting on error.
/// Output order matches index order on success.
#[cfg(not(feature = "parallel"))]
pub fn try_map_indices<U, E, F>(n: usize, f: F) -> Result<Vec<U>, E>
where
    F: Fn(usize) -> Result<U, E>,
{
    (0..n).map(f).collect()
}
