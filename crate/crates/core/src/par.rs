//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run the same closures sequentially. Output order always matches input
//! order, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
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

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
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

/// Calls `f(row_index, row)` for each `row_len`-sized chunk of `values`.
pub fn for_each_row<T, F>(values: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        values.par_chunks_mut(row_len).enumerate().for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        values.chunks_mut(row_len).enumerate().for_each(|(i, row)| f(i, row));
    }
}

/// Runs `op` on a dedicated pool of `threads` workers. Without the `parallel`
/// feature this simply calls `op`.
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => pool.install(op),
            Err(_) => op(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        op()
    }
}
