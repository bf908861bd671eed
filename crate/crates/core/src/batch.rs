//! Data-parallel map over fixed chunks with a sequential fallback.
//!
//! Collocation work is split into fixed-size chunks; chunk results are
//! combined by the caller in chunk order. Because the chunk boundaries and
//! the reduction order never depend on the thread count, outputs are
//! bit-identical whether the `parallel` feature is enabled or not.

/// Chunk length used for all collocation batches. Fixed so that results do
/// not depend on thread count.
pub const CHUNK: usize = 64;

#[cfg(feature = "parallel")]
pub fn map_chunks<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &[T]) -> U + Sync,
{
    use rayon::prelude::*;
    items
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(i, chunk)| f(i, chunk))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_chunks<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &[T]) -> U,
{
    map_chunks_seq(items, f)
}

/// Sequential version of [`map_chunks`]; always available so benchmarks can
/// compare the two paths in one binary.
pub fn map_chunks_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &[T]) -> U,
{
    items
        .chunks(CHUNK)
        .enumerate()
        .map(|(i, chunk)| f(i, chunk))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let sum = |_: usize, c: &[f64]| c.iter().fold(0.0f64, |a, b| a + b);
        let a = map_chunks(&xs, sum);
        let b = map_chunks_seq(&xs, sum);
        assert_eq!(a, b);
        let ta = a.iter().fold(0.0f64, |x, y| x + y);
        let tb = b.iter().fold(0.0f64, |x, y| x + y);
        assert_eq!(ta.to_bits(), tb.to_bits());
    }
}
