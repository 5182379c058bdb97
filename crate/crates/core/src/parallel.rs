//! Deterministic random substreams and worker-pool control.
//!
//! Every unit of parallel work (a Monte-Carlo path group, a study
//! replication, a bootstrap replicate) draws from its own ChaCha8 stream,
//! selected by the unit's index under one master seed. Results are gathered
//! in index order, so they do not depend on how many workers ran them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{IdmError, Result};

/// Random stream number `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `op` on a dedicated pool of `threads` workers; `None` uses the
/// global pool.
pub fn with_threads<T, F>(threads: Option<usize>, op: F) -> Result<T>
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    match threads {
        None => Ok(op()),
        Some(0) => Err(IdmError::InvalidArgument("thread count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| IdmError::InvalidArgument(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(op))
        }
    }
}
