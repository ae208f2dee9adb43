//! Row-parallel helpers. Every closure writes a disjoint output row, so the
//! sequential and rayon paths produce identical bits.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Calls `f(row_index, row)` for each `width`-sized chunk of `out`.
pub(crate) fn for_each_row<T, F>(out: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    {
        // small outputs are not worth the fork-join overhead
        if out.len() >= 1 << 14 {
            out.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
            return;
        }
    }
    out.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}
