//! Process-wide monotonic clock.

use std::sync::OnceLock;
use std::time::Instant;

fn epoch() -> Instant {
    static EPOCH: OnceLock<Instant> = OnceLock::new();
    *EPOCH.get_or_init(Instant::now)
}

/// Nanoseconds since the first call in this process. Never decreases.
pub fn monotonic_ns() -> u64 {
    epoch().elapsed().as_nanos() as u64
}
