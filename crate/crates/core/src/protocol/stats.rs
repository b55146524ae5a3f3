use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no latency samples")]
    NoSamples,
}

/// Latency percentiles (nanoseconds) plus loss counters for one topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatencyStats {
    pub count: usize,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
    pub out_of_order_count: u64,
    pub dropped_count: u64,
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p/100 · n)`, 1-based. `sorted` must be non-empty.
pub fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

impl LatencyStats {
    pub fn from_samples(
        samples: &[u64],
        out_of_order_count: u64,
        dropped_count: u64,
    ) -> Result<LatencyStats, StatsError> {
        if samples.is_empty() {
            return Err(StatsError::NoSamples);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        Ok(LatencyStats {
            count: sorted.len(),
            p50: nearest_rank(&sorted, 50.0),
            p90: nearest_rank(&sorted, 90.0),
            p99: nearest_rank(&sorted, 99.0),
            max: *sorted.last().unwrap(),
            out_of_order_count,
            dropped_count,
        })
    }
}
