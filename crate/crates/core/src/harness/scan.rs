use serde::{Deserialize, Serialize};

use crate::engine::Variant;
use crate::topology::TopologySpec;

use super::{run_replicas_with_progress, AggregateStats, ExperimentSpec, HarnessError};

/// Parameter varied by a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanAxis {
    /// `M / n`; `M = round(value * n)` on the base graph.
    Density,
    /// Lazy move probability.
    LazyP,
    /// Tree degree.
    TreeK,
    /// Grid dimension.
    GridDim,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::Density => "density",
            ScanAxis::LazyP => "lazy-p",
            ScanAxis::TreeK => "tree-k",
            ScanAxis::GridDim => "grid-dim",
        }
    }
}

impl std::str::FromStr for ScanAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [ScanAxis::Density, ScanAxis::LazyP, ScanAxis::TreeK, ScanAxis::GridDim]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| HarnessError::InvalidSpec(format!("unknown scan axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub base: ExperimentSpec,
    pub axis: ScanAxis,
    pub grid: Vec<f64>,
}

/// One scan point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub axis: ScanAxis,
    pub value: f64,
    pub experiment: ExperimentSpec,
    pub stats: AggregateStats,
}

/// Fixed CSV column order for scan and run summaries.
pub const CSV_COLUMNS: [&str; 24] = [
    "axis",
    "value",
    "particles",
    "replicas",
    "dispersed",
    "budget_exhausted",
    "boundary_hits",
    "dispersal_fraction",
    "ci_lo",
    "ci_hi",
    "t_disp_min",
    "t_disp_p25",
    "t_disp_p50",
    "t_disp_p75",
    "t_disp_p95",
    "t_disp_max",
    "d_disp_min",
    "d_disp_p25",
    "d_disp_p50",
    "d_disp_p75",
    "d_disp_p95",
    "d_disp_max",
    "max_distance_ever_max",
    "mean_meetings",
];

impl ScanRow {
    /// Cells in [`CSV_COLUMNS`] order; empty quantiles give empty cells.
    pub fn csv_cells(&self) -> Vec<String> {
        stats_cells(self.axis.name(), &self.value.to_string(), &self.experiment, &self.stats)
    }
}

/// Cells in [`CSV_COLUMNS`] order for an arbitrary batch.
pub fn stats_cells(axis: &str, value: &str, exp: &ExperimentSpec, s: &AggregateStats) -> Vec<String> {
    let mut cells = vec![
        axis.to_string(),
        value.to_string(),
        exp.particles.to_string(),
        s.replicas.to_string(),
        s.dispersed.to_string(),
        s.budget_exhausted.to_string(),
        s.boundary_hits.to_string(),
        s.dispersal_fraction.to_string(),
        s.ci_lo.to_string(),
        s.ci_hi.to_string(),
    ];
    for q in [s.t_disp, s.d_disp] {
        match q {
            Some(q) => cells.extend(q.values().iter().map(u64::to_string)),
            None => cells.extend(std::iter::repeat_n(String::new(), 6)),
        }
    }
    cells.push(s.max_distance_ever.map_or(String::new(), |q| q.max.to_string()));
    cells.push(s.mean_meetings.to_string());
    cells
}

impl ScanSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.grid.is_empty() {
            return Err(HarnessError::InvalidSpec("scan grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(HarnessError::InvalidSpec("scan grid must be strictly increasing".into()));
        }
        self.base.validate()
    }

    /// The experiment run at grid value `value`.
    pub fn point(&self, value: f64) -> Result<ExperimentSpec, HarnessError> {
        let mut exp = self.base.clone();
        let integral = |what: &str| -> Result<u32, HarnessError> {
            if value.fract() == 0.0 && value >= 1.0 && value <= f64::from(u32::MAX) {
                Ok(value as u32)
            } else {
                Err(HarnessError::InvalidSpec(format!("{what} must be a positive integer, got {value}")))
            }
        };
        match self.axis {
            ScanAxis::Density => {
                let topo = exp.topology.build()?;
                let n = topo
                    .vertex_count()
                    .ok_or_else(|| HarnessError::Unsupported("density scans need a finite graph".into()))?;
                if !(value > 0.0 && value <= 1.0) {
                    return Err(HarnessError::InvalidSpec(format!("density must lie in (0, 1], got {value}")));
                }
                exp.particles = ((value * n as f64).round() as u64).max(1);
            }
            ScanAxis::LazyP => exp.variant = Variant::lazy(value)?,
            ScanAxis::TreeK => {
                let k = integral("tree degree")?;
                match &mut exp.topology {
                    TopologySpec::TreeKRegular { k: kk, .. } => *kk = k,
                    other => *other = TopologySpec::TreeKRegular { k, leaf_depth: 0 },
                }
            }
            ScanAxis::GridDim => exp.topology = TopologySpec::GridInfinite { dim: integral("grid dimension")? },
        }
        Ok(exp)
    }
}

/// Runs every grid point with the base master seed, in grid order.
pub fn scan(s: &ScanSpec, parallelism: usize) -> Result<Vec<ScanRow>, HarnessError> {
    scan_with_progress(s, parallelism, &|_, _| {})
}

/// Like [`scan`], calling `progress(row, done)` as replicas finish.
pub fn scan_with_progress(
    s: &ScanSpec,
    parallelism: usize,
    progress: &(dyn Fn(usize, u64) + Sync),
) -> Result<Vec<ScanRow>, HarnessError> {
    s.validate()?;
    s.grid
        .iter()
        .enumerate()
        .map(|(row, &value)| {
            let exp = s.point(value)?;
            let batch = run_replicas_with_progress(&exp, parallelism, &|done| progress(row, done))?;
            Ok(ScanRow { axis: s.axis, value, experiment: batch.experiment, stats: batch.stats })
        })
        .collect()
}
