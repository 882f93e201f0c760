//! Maybe-parallel iteration.
//!
//! With the `parallel` feature the helpers dispatch to rayon; without it they
//! are ordinary sequential loops. Results are always returned in input order,
//! so callers observe identical output either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
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

/// Apply `f` to consecutive chunks of `data` of length `chunk`.
pub fn for_each_chunk<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(&mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk).for_each(f);
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).for_each(f);
    }
}

/// Like [`for_each_chunk`], also passing the chunk index.
pub fn for_each_chunk_indexed<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Zip two equally chunked buffers and apply `f` to each pair of chunks.
pub fn for_each_chunk_pair<T, U, F>(a: &mut [T], b: &mut [U], chunk: usize, f: F)
where
    T: Send,
    U: Send,
    F: Fn(&mut [T], &mut [U]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        a.par_chunks_mut(chunk)
            .zip(b.par_chunks_mut(chunk))
            .for_each(|(x, y)| f(x, y));
    }
    #[cfg(not(feature = "parallel"))]
    {
        a.chunks_mut(chunk).zip(b.chunks_mut(chunk)).for_each(|(x, y)| f(x, y));
    }
}

/// Threads available to the helpers above.
pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Whether this build can run work on more than one thread.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
