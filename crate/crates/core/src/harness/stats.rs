use serde::{Deserialize, Serialize};

use crate::engine::{RunResult, RunStatus};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at 95%.
/// Returns `(0, 1)` when there are no trials.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Nearest-rank quantile: the smallest sample with at least `q N` samples
/// at or below it. `sorted` must be ascending and non-empty.
pub fn nearest_rank(sorted: &[u64], q: f64) -> u64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Summary quantiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: u64,
    pub p25: u64,
    pub p50: u64,
    pub p75: u64,
    pub p95: u64,
    pub max: u64,
}

impl Quantiles {
    pub const LABELS: [&'static str; 6] = ["min", "p25", "p50", "p75", "p95", "max"];

    /// `None` for an empty sample.
    pub fn of(mut sample: Vec<u64>) -> Option<Self> {
        if sample.is_empty() {
            return None;
        }
        sample.sort_unstable();
        let q = |p| nearest_rank(&sample, p);
        Some(Quantiles {
            min: sample[0],
            p25: q(0.25),
            p50: q(0.5),
            p75: q(0.75),
            p95: q(0.95),
            max: sample[sample.len() - 1],
        })
    }

    pub fn values(&self) -> [u64; 6] {
        [self.min, self.p25, self.p50, self.p75, self.p95, self.max]
    }
}

/// Statistics over one batch of replicas. Runs that hit a boundary are
/// counted but excluded from every other figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub replicas: u64,
    pub dispersed: u64,
    pub budget_exhausted: u64,
    pub boundary_hits: u64,
    /// `dispersed / (replicas - boundary_hits)`.
    pub dispersal_fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Over dispersed runs.
    pub t_disp: Option<Quantiles>,
    /// Over dispersed runs.
    pub d_disp: Option<Quantiles>,
    /// Over all non-boundary runs.
    pub max_distance_ever: Option<Quantiles>,
    pub mean_meetings: f64,
}

impl AggregateStats {
    pub fn from_results(results: &[RunResult]) -> Self {
        let counted: Vec<&RunResult> = results.iter().filter(|r| r.status != RunStatus::BoundaryHit).collect();
        let dispersed: Vec<&RunResult> = counted.iter().copied().filter(|r| r.is_dispersed()).collect();
        let n = counted.len() as u64;
        let k = dispersed.len() as u64;
        let (ci_lo, ci_hi) = wilson_interval(k, n);
        let mean_meetings = if counted.is_empty() {
            0.0
        } else {
            counted.iter().map(|r| r.meeting_total as f64).sum::<f64>() / n as f64
        };
        AggregateStats {
            replicas: results.len() as u64,
            dispersed: k,
            budget_exhausted: n - k,
            boundary_hits: results.len() as u64 - n,
            dispersal_fraction: if n == 0 { 0.0 } else { k as f64 / n as f64 },
            ci_lo,
            ci_hi,
            t_disp: Quantiles::of(dispersed.iter().filter_map(|r| r.t_disp).collect()),
            d_disp: Quantiles::of(dispersed.iter().map(|r| r.d_disp).collect()),
            max_distance_ever: Quantiles::of(counted.iter().map(|r| r.max_distance_ever).collect()),
            mean_meetings,
        }
    }
}
