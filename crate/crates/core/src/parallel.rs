//! Deterministic chunked parallel reductions.
//!
//! Draws are split into fixed-size chunks whose boundaries depend only on the
//! draw count. Each chunk is reduced sequentially and the per-chunk partials
//! come back in chunk order, so results are bit-identical for any thread count.

use rayon::prelude::*;
use std::ops::Range;

pub(crate) const CHUNK: u64 = 4096;

pub(crate) fn chunk_ranges(n: u64) -> Vec<Range<u64>> {
    (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect()
}

/// Runs `f` on every chunk of `0..n` in parallel; partials are in chunk order.
pub(crate) fn map_chunks<P, F>(n: u64, f: F) -> Vec<P>
where
    P: Send,
    F: Fn(Range<u64>) -> P + Sync + Send,
{
    chunk_ranges(n).into_par_iter().map(f).collect()
}
