//! Replicated experiments, parameter scans and the validation suite.

mod audit;
mod scan;
mod stats;
mod validate;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, ParticleSystem, ParticleTrajectory, RunResult, Variant, WalkMode};
use crate::oracles::{tree_default_leaf_depth, OracleError};
use crate::rng::derive_seed;
use crate::topology::{TopologyError, TopologySpec};

pub use audit::{pair_coupling_audit, CouplingAudit};
pub use scan::{scan, scan_with_progress, stats_cells, ScanAxis, ScanRow, ScanSpec, CSV_COLUMNS};
pub use stats::{nearest_rank, wilson_interval, AggregateStats, Quantiles, Z95};
pub use validate::{validate_suite, CheckResult, ValidateOptions, ValidationReport};

/// Default `omega` for grid experiments.
pub const DEFAULT_GRID_OMEGA: f64 = 20.0;
/// Default `omega` for the hypercube particle cap.
pub const DEFAULT_HYPERCUBE_OMEGA: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// A batch of independent runs sharing everything but their seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub topology: TopologySpec,
    pub particles: u64,
    pub variant: Variant,
    pub budget: u64,
    pub replicas: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub record_trajectories: bool,
    #[serde(default)]
    pub walk_mode: WalkMode,
    /// Replace a tree's `leaf_depth` with the default rule for `particles`.
    #[serde(default)]
    pub auto_leaf_depth: bool,
}

impl ExperimentSpec {
    pub fn new(topology: TopologySpec, particles: u64) -> Self {
        ExperimentSpec {
            topology,
            particles,
            variant: Variant::Standard,
            budget: crate::engine::DEFAULT_BUDGET,
            replicas: 1,
            master_seed: 0,
            record_trajectories: false,
            walk_mode: WalkMode::OnDemand,
            auto_leaf_depth: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicas == 0 {
            return Err(HarnessError::InvalidSpec("replicas must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(HarnessError::InvalidSpec("budget must be at least 1".into()));
        }
        if self.particles == 0 {
            return Err(HarnessError::Engine(EngineError::NoParticles));
        }
        Ok(())
    }

    /// The spec with any automatic leaf depth filled in.
    pub fn resolved(&self) -> Result<ExperimentSpec, HarnessError> {
        let mut out = self.clone();
        if let (true, TopologySpec::TreeKRegular { k, leaf_depth }) = (self.auto_leaf_depth, &mut out.topology) {
            *leaf_depth = tree_default_leaf_depth(*k, self.particles)?;
        }
        out.auto_leaf_depth = false;
        Ok(out)
    }

    /// Seed of replica `i`.
    pub fn replica_seed(&self, i: u64) -> u64 {
        derive_seed(self.master_seed, i)
    }
}

/// Results of [`run_replicas`], in replica order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaBatch {
    /// The resolved experiment that was run.
    pub experiment: ExperimentSpec,
    pub results: Vec<RunResult>,
    pub stats: AggregateStats,
    /// Per replica, when recording was requested.
    pub trajectories: Option<Vec<Vec<ParticleTrajectory>>>,
}

/// Runs every replica of `exp` on `parallelism` threads (0 = all cores).
pub fn run_replicas(exp: &ExperimentSpec, parallelism: usize) -> Result<ReplicaBatch, HarnessError> {
    run_replicas_with_progress(exp, parallelism, &|_| {})
}

/// Like [`run_replicas`], calling `progress(done)` as replicas finish.
pub fn run_replicas_with_progress(
    exp: &ExperimentSpec,
    parallelism: usize,
    progress: &(dyn Fn(u64) + Sync),
) -> Result<ReplicaBatch, HarnessError> {
    exp.validate()?;
    let exp = exp.resolved()?;
    let topology = Arc::new(exp.topology.build()?);
    topology.check_capacity(exp.particles)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let done = AtomicU64::new(0);
    let outcomes: Vec<Result<(RunResult, Option<Vec<ParticleTrajectory>>), HarnessError>> = pool.install(|| {
        (0..exp.replicas)
            .into_par_iter()
            .map(|i| {
                let mut sys = ParticleSystem::new(
                    Arc::clone(&topology),
                    exp.particles,
                    exp.variant,
                    exp.replica_seed(i),
                    exp.walk_mode,
                )?;
                sys.record_trajectories(exp.record_trajectories)?;
                let result = sys.run(exp.budget);
                let traj = if exp.record_trajectories { Some(sys.trajectories()?.to_vec()) } else { None };
                progress(done.fetch_add(1, Ordering::Relaxed) + 1);
                Ok((result, traj))
            })
            .collect()
    });
    let mut results = Vec::with_capacity(outcomes.len());
    let mut trajectories = exp.record_trajectories.then(Vec::new);
    for o in outcomes {
        let (r, t) = o?;
        results.push(r);
        if let (Some(all), Some(t)) = (&mut trajectories, t) {
            all.push(t);
        }
    }
    let stats = AggregateStats::from_results(&results);
    Ok(ReplicaBatch { experiment: exp, results, stats, trajectories })
}
