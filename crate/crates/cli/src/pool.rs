//! Fixed-size worker pool over an indexed job list.
//!
//! Workers pull indices from a shared counter, so uneven job costs balance
//! themselves, while the collected output is returned in job order and is
//! therefore independent of the worker count and of scheduling.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

/// Number of workers when none is requested: the available cores.
pub fn default_jobs() -> usize {
    thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1)
}

/// Runs `job(i)` for every `i` in `0..n` on up to `jobs` threads and
/// returns the results indexed like the inputs. Workers share nothing but
/// the job counter; a `jobs` of 0 or 1 runs on the calling thread.
pub fn run_indexed<T, F>(jobs: usize, n: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = jobs.max(1).min(n);
    if workers <= 1 {
        return (0..n).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let out = Mutex::new(Vec::with_capacity(n));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let value = job(i);
                out.lock().unwrap().push((i, value));
            });
        }
    });
    let mut pairs = out.into_inner().unwrap();
    pairs.sort_by_key(|&(i, _)| i);
    pairs.into_iter().map(|(_, v)| v).collect()
}
