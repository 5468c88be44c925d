//! Thin switch between rayon data-parallel loops and sequential fallbacks.
//!
//! With the `parallel` feature (default) the helpers fan out over rayon's
//! global pool; without it they run plain loops. Bounds are identical in
//! both modes so callers compile unchanged. All reductions elsewhere in the
//! crate stay sequential, which keeps results bit-identical regardless of
//! thread count or scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
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

/// Overwrite each `out[i]` with `f(i)`.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, x)| *x = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, x) in out.iter_mut().enumerate() {
            *x = f(i);
        }
    }
}

/// Run `f` inside a rayon pool of `workers` threads (0 = rayon default).
/// Without the `parallel` feature the worker count is ignored and `f`
/// runs on the calling thread.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            f()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("failed to build worker pool")
                .install(f)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}
