//! Parallel execution with a sequential reference path.
//!
//! Every parallel map here is order preserving and every cross-item
//! reduction happens afterwards in index order, so the parallel and the
//! reference path produce bit-identical results. The reference path is taken
//! when the `parallel` feature is disabled or [`set_reference_mode`] is on.

use std::sync::atomic::{AtomicBool, Ordering};

static REFERENCE: AtomicBool = AtomicBool::new(false);

/// Force (or release) the sequential reference mode process-wide.
pub fn set_reference_mode(on: bool) {
    REFERENCE.store(on, Ordering::SeqCst);
}

pub fn reference_mode() -> bool {
    !cfg!(feature = "parallel") || REFERENCE.load(Ordering::SeqCst)
}

/// `(0..n).map(f).collect()`, in parallel unless in reference mode.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !reference_mode() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, in parallel unless in reference mode.
pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !reference_mode() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}
