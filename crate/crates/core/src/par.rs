//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run the same closures sequentially. Reductions always combine
//! fixed-size chunk partials in index order, so results are bit-identical
//! regardless of thread count or scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used for reductions. Fixed so partial sums never depend on
/// the thread pool.
pub const REDUCE_CHUNK: usize = 4096;

/// Apply `f(chunk_index, chunk)` to consecutive chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Apply `f(index, &mut item)` to every element.
pub fn for_each_indexed_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    for_each_chunk_mut(data, REDUCE_CHUNK, |ci, c| {
        let base = ci * REDUCE_CHUNK;
        for (k, v) in c.iter_mut().enumerate() {
            f(base + k, v);
        }
    });
}

/// Collect `f(i)` for `i in 0..n`.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
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

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = map_collect(chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

/// Maximum of `f(i)` over `0..n` (0 for an empty range).
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = map_collect(chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).fold(0.0_f64, f64::max)
    });
    partial.into_iter().fold(0.0, f64::max)
}

/// Run two closures, possibly concurrently.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_sequential_order() {
        let n = 3 * REDUCE_CHUNK + 17;
        let f = |i: usize| 1.0 / (1.0 + i as f64);
        let expected: f64 = (0..n.div_ceil(REDUCE_CHUNK))
            .map(|c| {
                let lo = c * REDUCE_CHUNK;
                (lo..(lo + REDUCE_CHUNK).min(n)).map(f).sum::<f64>()
            })
            .sum();
        assert_eq!(sum(n, f).to_bits(), expected.to_bits());
    }

    #[test]
    fn indexed_mut_visits_every_element() {
        let mut v = vec![0usize; 10_000];
        for_each_indexed_mut(&mut v, |i, x| *x = i);
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
        assert_eq!(max(0, |_| 1.0), 0.0);
    }
}
