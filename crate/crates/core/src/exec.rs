//! Worker pools for intra-call parallelism.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::{ThreadPool, ThreadPoolBuilder};

fn pool(threads: usize) -> Arc<ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS.get_or_init(Default::default).lock().unwrap();
    Arc::clone(pools.entry(threads).or_insert_with(|| {
        Arc::new(
            ThreadPoolBuilder::new()
                .num_threads(threads)
                .thread_name(move |i| format!("modconv-{threads}-{i}"))
                .build()
                .expect("failed to spawn worker pool"),
        )
    }))
}

/// Runs `f` serially for `threads <= 1`, otherwise inside a pool of exactly
/// `threads` workers. `f` receives whether it may fork.
pub(crate) fn run<R: Send>(threads: usize, f: impl FnOnce(bool) -> R + Send) -> R {
    if threads <= 1 {
        f(false)
    } else {
        pool(threads).install(|| f(true))
    }
}

/// Runs `a` and `b`, concurrently when allowed.
pub(crate) fn join<A, B, RA, RB>(par: bool, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    if par {
        rayon::join(a, b)
    } else {
        (a(), b())
    }
}
