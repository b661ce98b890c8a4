//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel path produces results in index order, so the two modes are
//! bit-identical; `Parallel` silently degrades to `Sequential` when the crate
//! is built without the `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// `f(i)` for every `i` in `start..end`, collected in index order.
    pub fn map_range<T, F>(self, start: u64, end: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (start..end).into_par_iter().map(f).collect(),
            _ => (start..end).map(f).collect(),
        }
    }

    /// Calls `f(chunk_index, chunk)` on consecutive `chunk_len`-sized pieces.
    pub fn for_each_chunk<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => data.par_chunks_mut(chunk_len).enumerate().for_each(|(n, c)| f(n, c)),
            _ => data.chunks_mut(chunk_len).enumerate().for_each(|(n, c)| f(n, c)),
        }
    }
}

/// Runs `f` on a pool with `jobs` workers; `None` uses the global pool.
pub fn with_jobs<R, F>(jobs: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    let _ = jobs;
    f()
}
