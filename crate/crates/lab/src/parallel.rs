//! Replica fan-out over rayon with results merged in replica order.
//!
//! Work is cut into fixed chunks of replica indices. Each chunk runs on
//! whichever thread picks it up, but the output vector is assembled by
//! chunk index, so the result does not depend on the pool size.

use std::ops::Range;
use std::sync::OnceLock;

use rayon::prelude::*;
use stasep_core::error::Result;

/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "STASEP_THREADS";

pub const DEFAULT_CHUNK: u64 = 256;

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool")
    })
}

pub fn chunks(range: Range<u64>, chunk: u64) -> Vec<Range<u64>> {
    let chunk = chunk.max(1);
    let mut out = Vec::new();
    let mut lo = range.start;
    while lo < range.end {
        let hi = (lo + chunk).min(range.end);
        out.push(lo..hi);
        lo = hi;
    }
    out
}

/// Runs `f` on consecutive sub-ranges and concatenates in order.
pub fn map_chunks<T, F>(range: Range<u64>, chunk: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<Vec<T>> + Sync,
{
    let parts = chunks(range, chunk);
    let done: Vec<Result<Vec<T>>> = pool().install(|| parts.into_par_iter().map(&f).collect());
    let mut out = Vec::new();
    for part in done {
        out.extend(part?);
    }
    Ok(out)
}

/// Per-replica map, ordered by replica index.
pub fn map_replicas<T, F>(range: Range<u64>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    map_chunks(range, DEFAULT_CHUNK, |r| r.map(&f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_the_range() {
        let c = chunks(3..1000, 256);
        assert_eq!(c.first().unwrap().start, 3);
        assert_eq!(c.last().unwrap().end, 1000);
        assert!(c.windows(2).all(|w| w[0].end == w[1].start));
        assert!(chunks(5..5, 10).is_empty());
    }

    #[test]
    fn order_is_independent_of_chunking() {
        let a = map_chunks(0..1000, 7, |r| Ok(r.map(|i| i * i).collect())).unwrap();
        let b = map_chunks(0..1000, 300, |r| Ok(r.map(|i| i * i).collect())).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[999], 999 * 999);
    }
}
