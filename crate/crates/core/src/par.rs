//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon; without it they
//! run as plain iterators. Results are always collected in index order, and
//! reductions are done over fixed-size chunks summed sequentially, so outputs
//! are bit-identical regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by [`chunked_sum`]; fixed so reductions do not depend on
/// the scheduler.
pub const REDUCE_CHUNK: usize = 4096;

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
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

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Deterministic sum of `f(i)` over `0..n`, returning the sum for each of
/// `K` accumulated quantities. Chunk boundaries are fixed at
/// [`REDUCE_CHUNK`]; `f` receives `(chunk_start, chunk_end)` and returns the
/// partial sums for that chunk.
pub fn chunked_sum<const K: usize, F>(n: usize, f: F) -> [f64; K]
where
    F: Fn(usize, usize) -> [f64; K] + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partials = map_range(chunks, |c| {
        let start = c * REDUCE_CHUNK;
        f(start, (start + REDUCE_CHUNK).min(n))
    });
    let mut total = [0.0; K];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}
