//! Replica fan-out with a result order that does not depend on scheduling.
//!
//! Work runs on the ambient rayon pool; callers that need a fixed thread
//! count wrap the call in [`with_threads`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Runs `f` once per replica with that replica's own stream and collects the
/// results in replica order.
pub fn map_replicas<T, F>(master_seed: u64, replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, RngStream) -> Result<T> + Sync + Send,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(i, RngStream::for_replica(master_seed, i as u64)))
        .collect()
}

/// Runs `job` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}
