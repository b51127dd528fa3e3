//! Data-parallel execution helpers.
//!
//! Every parallel loop in the crate goes through [`map_indexed`], which
//! returns results in index order. Reductions over those results are then
//! performed sequentially, so serial and parallel runs produce bit-identical
//! output. With the `parallel` feature disabled (or [`force_serial`] set) the
//! loops run on the calling thread.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SERIAL: AtomicBool = AtomicBool::new(false);

/// Route all subsequent loops through the sequential path.
pub fn force_serial(serial: bool) {
    FORCE_SERIAL.store(serial, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SERIAL.load(Ordering::Relaxed)
}

/// Run `f` with loops forced serial, restoring the previous mode afterwards.
pub fn serial_scope<T>(f: impl FnOnce() -> T) -> T {
    let prev = FORCE_SERIAL.swap(true, Ordering::SeqCst);
    let out = f();
    FORCE_SERIAL.store(prev, Ordering::SeqCst);
    out
}

/// Evaluate `f(0..n)` and collect the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_indexed`]; the first error in index order wins.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(n, f).into_iter().collect()
}

/// Size of the fixed work chunks used for gradient accumulation. Chunking
/// is independent of the thread count so floating-point sums are stable.
pub const CHUNK: usize = 16;

/// Split `0..n` into fixed-size chunks.
pub fn chunks(n: usize) -> Vec<std::ops::Range<usize>> {
    (0..n)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(n))
        .collect()
}
