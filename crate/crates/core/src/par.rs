//! Order-preserving fan-out.
//!
//! With the `parallel` feature the closure runs on a dedicated rayon pool
//! sized to `threads`; without it (or with `threads <= 1`) items are mapped
//! in order on the calling thread. Output order always matches input order.

use crate::error::Result;

pub fn map_ordered<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if threads > 1 && items.len() > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(|| items.par_iter().map(&f).collect());
            }
        }
    }
    let _ = threads;
    items.iter().map(f).collect()
}

/// Like [`map_ordered`], returning the error of the earliest failing item.
pub fn try_map_ordered<T, R, F>(items: &[T], threads: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    map_ordered(items, threads, f).into_iter().collect()
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
