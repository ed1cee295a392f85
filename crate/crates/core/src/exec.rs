//! Chunked execution helpers shared by the parallel and sequential builds.
//!
//! All data-parallel loops in the crate go through these helpers. Work is
//! split into fixed-size chunks and per-chunk results are combined in chunk
//! order, so the output is identical whether the `parallel` feature is on or
//! off and regardless of the rayon worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fill `out` by chunks; `fill(chunk_index, offset, chunk)` writes one chunk.
pub fn fill_chunks<T, F>(out: &mut [T], chunk_len: usize, fill: F)
where
    T: Send,
    F: Fn(usize, usize, &mut [T]) + Sync + Send,
{
    debug_assert!(chunk_len > 0);
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(index, chunk)| fill(index, index * chunk_len, chunk));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (index, chunk) in out.chunks_mut(chunk_len).enumerate() {
            fill(index, index * chunk_len, chunk);
        }
    }
}

/// Map each index of `0..len` to a value, preserving order.
pub fn map_indexed<T, F>(len: usize, map: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(map).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(map).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_preserves_order() {
        let out = map_indexed(1000, |i| i * 3);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * 3));
    }

    #[test]
    fn fill_chunks_covers_every_slot() {
        let mut out = vec![0usize; 1000];
        fill_chunks(&mut out, 64, |_, offset, chunk| {
            for (i, slot) in chunk.iter_mut().enumerate() {
                *slot = offset + i;
            }
        });
        assert!(out.iter().enumerate().all(|(i, &v)| i == v));
    }
}
