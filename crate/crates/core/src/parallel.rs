//! Shared worker pool. `ASYMSPEC_THREADS` caps the worker count.
//!
//! Parallel loops in this crate write into preallocated, index-ordered slots,
//! so results never depend on the number of workers.

use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

pub const THREADS_ENV: &str = "ASYMSPEC_THREADS";

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = ThreadPoolBuilder::new().thread_name(|i| format!("asymspec-{i}"));
        if let Some(n) = thread_cap() {
            builder = builder.num_threads(n);
        }
        builder.build().expect("failed to start worker pool")
    })
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `op` inside the shared pool.
pub fn install<R: Send>(op: impl FnOnce() -> R + Send) -> R {
    if rayon::current_thread_index().is_some() {
        // already on a worker
        return op();
    }
    pool().install(op)
}

pub fn worker_count() -> usize {
    pool().current_num_threads()
}
