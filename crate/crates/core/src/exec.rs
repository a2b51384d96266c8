//! Deterministic chunked reductions, parallel when the `parallel` feature
//! is enabled.
//!
//! Floating-point sums depend on association order, so naive parallel
//! reduction is not reproducible across thread counts. Every reduction here
//! maps fixed-size index chunks to partial results and combines the partials
//! sequentially in chunk order. The parallel and sequential variants therefore
//! return bit-identical values, and results do not depend on the number of
//! worker threads.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per reduction chunk. Fixed so the combine order is part of the
/// numeric contract, not a scheduling artifact.
pub const CHUNK: usize = 256;

/// Sequential chunked fold over `0..n`.
pub fn fold_chunks_seq<T, M, R>(n: usize, init: T, map: M, reduce: R) -> T
where
    M: Fn(Range<usize>) -> T,
    R: Fn(T, T) -> T,
{
    let mut acc = init;
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        acc = reduce(acc, map(start..end));
        start = end;
    }
    acc
}

/// Parallel chunked fold over `0..n`. Partials are collected in chunk order
/// and combined sequentially, matching [`fold_chunks_seq`] bit for bit.
#[cfg(feature = "parallel")]
pub fn fold_chunks_par<T, M, R>(n: usize, init: T, map: M, reduce: R) -> T
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
    R: Fn(T, T) -> T,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            map(start..(start + CHUNK).min(n))
        })
        .collect();
    parts.into_iter().fold(init, reduce)
}

/// Chunked fold over `0..n`: parallel when built with the `parallel` feature,
/// sequential otherwise.
pub fn fold_chunks<T, M, R>(n: usize, init: T, map: M, reduce: R) -> T
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
    R: Fn(T, T) -> T,
{
    #[cfg(feature = "parallel")]
    {
        fold_chunks_par(n, init, map, reduce)
    }
    #[cfg(not(feature = "parallel"))]
    {
        fold_chunks_seq(n, init, map, reduce)
    }
}

/// Map each element of `items` to an output, preserving input order.
/// Used for job pools (grid points × splits); outputs are ordered by input
/// index regardless of completion order.
pub fn ordered_map<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Element-wise `a += b`.
pub fn add_assign(a: &mut [f64], b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += *y;
    }
}
