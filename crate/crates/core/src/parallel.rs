//! Deterministic task parallelism: results are combined in task order no
//! matter how the scheduler interleaves the workers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Reads the `MBGNN_THREADS` cap; 0 or unset means auto.
pub fn thread_cap_from_env() -> usize {
    std::env::var("MBGNN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0)
}

fn effective_threads(requested: usize, n_tasks: usize) -> usize {
    let auto = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let t = if requested == 0 { auto } else { requested };
    t.clamp(1, n_tasks.max(1))
}

/// Runs `n` independent tasks on up to `threads` workers (0 = auto) and
/// returns the results indexed by task id.
pub fn run_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if n == 0 {
        return Vec::new();
    }
    let workers = effective_threads(threads, n);
    if workers == 1 {
        return (0..n).map(f).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = f(i);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("task completed"))
        .collect()
}
