//! The synchronous dispersion process.
//!
//! At the start of every step the occupancy is snapshotted. Every particle
//! that shares its vertex is unhappy and moves (in the lazy variant: moves
//! with probability `p`) to a uniform neighbour; all moves land at once.
//! Lone particles never move.

mod occupancy;
mod trajectory;
mod walker;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{ParticleStream, StreamTag};
use crate::topology::{Topology, TopologyError, VertexAddress};

use occupancy::Occupancy;
use trajectory::TrajectoryLog;
pub use trajectory::{ParticleTrajectory, WalkStep, TRAJECTORY_ENTRY_LIMIT};
use walker::Walker;

/// Step cap used when an experiment does not set one.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Version tag written into every serialised record.
pub const RECORD_SCHEMA: &str = "disperse/1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("a system needs at least one particle")]
    NoParticles,
    #[error("lazy move probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("trajectory recording must be configured before the first step")]
    RecordingAfterStart,
    #[error("trajectory log exceeded its limit of {0} entries")]
    TrajectoryLimit(usize),
    #[error("trajectories were not recorded")]
    NotRecorded,
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

/// Standard or lazy dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Variant {
    Standard,
    /// Each unhappy particle moves with probability `p`, else stays.
    Lazy { p: f64 },
}

impl Variant {
    pub fn lazy(p: f64) -> Result<Self, EngineError> {
        if p > 0.0 && p <= 1.0 {
            Ok(Variant::Lazy { p })
        } else {
            Err(EngineError::InvalidProbability(p))
        }
    }

    pub fn move_probability(&self) -> f64 {
        match self {
            Variant::Standard => 1.0,
            Variant::Lazy { p } => *p,
        }
    }

    fn validate(&self) -> Result<(), EngineError> {
        match self {
            Variant::Standard => Ok(()),
            Variant::Lazy { p } => Variant::lazy(*p).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkMode {
    /// Directions drawn when a particle is asked to move.
    #[default]
    OnDemand,
    /// Each particle's walk is sampled ahead of the process and consumed
    /// one entry per walk step.
    Predetermined,
}

/// What happened during one process step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepReport {
    pub movers: u64,
    /// Previously unhappy particles now alone.
    pub newly_happy: u64,
    /// Previously happy particles landed on.
    pub newly_unhappy: u64,
    /// `sum_v C(occ(v), 2)` over the start-of-step occupancy.
    pub pairwise_meetings: u64,
    pub dispersed_after: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Dispersed,
    BudgetExhausted,
    BoundaryHit,
}

/// Outcome of [`ParticleSystem::run`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: RunStatus,
    /// Steps to dispersal; set iff `status == Dispersed`.
    pub t_disp: Option<u64>,
    /// Largest origin distance over particles when the run ended.
    pub d_disp: u64,
    pub max_distance_ever: u64,
    pub walk_counts: Vec<u64>,
    pub meeting_total: u64,
    pub steps: u64,
    pub seed: u64,
}

/// One NDJSON line per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub status: RunStatus,
    pub t_disp: Option<u64>,
    pub d_disp: u64,
    pub max_distance_ever: u64,
    pub meeting_total: u64,
    pub walk_steps_min: u64,
    pub walk_steps_median: u64,
    pub walk_steps_max: u64,
    pub seed: u64,
}

impl RunResult {
    pub fn is_dispersed(&self) -> bool {
        self.status == RunStatus::Dispersed
    }

    pub fn record(&self) -> RunRecord {
        let mut walks = self.walk_counts.clone();
        walks.sort_unstable();
        // lower median
        let median = walks.get((walks.len().max(1) - 1) / 2).copied().unwrap_or(0);
        RunRecord {
            schema: RECORD_SCHEMA.to_string(),
            status: self.status,
            t_disp: self.t_disp,
            d_disp: self.d_disp,
            max_distance_ever: self.max_distance_ever,
            meeting_total: self.meeting_total,
            walk_steps_min: walks.first().copied().unwrap_or(0),
            walk_steps_median: median,
            walk_steps_max: walks.last().copied().unwrap_or(0),
            seed: self.seed,
        }
    }
}

/// Full mutable state of one dispersion run.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    topology: Arc<Topology>,
    variant: Variant,
    walk_mode: WalkMode,
    seed: u64,
    positions: Vec<VertexAddress>,
    walk_counts: Vec<u64>,
    step_count: u64,
    walkers: Vec<Walker>,
    laziness: Vec<ParticleStream>,
    occupancy: Occupancy,
    /// Sorted ids of particles sharing their vertex.
    unhappy: Vec<u32>,
    unhappy_flag: Vec<bool>,
    max_distance_ever: u64,
    meeting_total: u64,
    boundary_flag: bool,
    halted: bool,
    log: Option<TrajectoryLog>,
}

impl ParticleSystem {
    /// Places `particles` particles on the origin.
    pub fn new(
        topology: Arc<Topology>,
        particles: u64,
        variant: Variant,
        seed: u64,
        walk_mode: WalkMode,
    ) -> Result<Self, EngineError> {
        if particles == 0 {
            return Err(EngineError::NoParticles);
        }
        variant.validate()?;
        topology.check_capacity(particles)?;
        let m = usize::try_from(particles).map_err(|_| EngineError::NoParticles)?;
        let origin = topology.origin();
        let walkers = (0..m as u64)
            .map(|i| {
                let stream = ParticleStream::new(seed, i, StreamTag::Direction);
                match walk_mode {
                    WalkMode::OnDemand => Walker::on_demand(stream),
                    WalkMode::Predetermined => Walker::predetermined(stream, &topology, origin.clone()),
                }
            })
            .collect();
        let laziness = match variant {
            Variant::Standard => Vec::new(),
            Variant::Lazy { .. } => (0..m as u64)
                .map(|i| ParticleStream::new(seed, i, StreamTag::Laziness))
                .collect(),
        };
        let mut occupancy = Occupancy::for_topology(&topology);
        for id in 0..m as u32 {
            occupancy.add(&topology, &origin, id);
        }
        let (unhappy, unhappy_flag) = if m > 1 {
            ((0..m as u32).collect(), vec![true; m])
        } else {
            (Vec::new(), vec![false; m])
        };
        Ok(Self {
            topology,
            variant,
            walk_mode,
            seed,
            positions: vec![origin; m],
            walk_counts: vec![0; m],
            step_count: 0,
            walkers,
            laziness,
            occupancy,
            unhappy,
            unhappy_flag,
            max_distance_ever: 0,
            meeting_total: 0,
            boundary_flag: false,
            halted: false,
            log: None,
        })
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn walk_mode(&self) -> WalkMode {
        self.walk_mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn particle_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[VertexAddress] {
        &self.positions
    }

    pub fn walk_counts(&self) -> &[u64] {
        &self.walk_counts
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn max_distance_ever(&self) -> u64 {
        self.max_distance_ever
    }

    pub fn meeting_total(&self) -> u64 {
        self.meeting_total
    }

    /// Set once a tree leaf was reached or a coordinate left the safe range.
    pub fn boundary_flag(&self) -> bool {
        self.boundary_flag
    }

    /// Set when a coordinate left the safe range; the run cannot continue.
    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn is_dispersed(&self) -> bool {
        self.unhappy.is_empty()
    }

    /// `(H, U)`: particles alone at their vertex, and the rest.
    pub fn happy_unhappy_counts(&self) -> (u64, u64) {
        let u = self.unhappy.len() as u64;
        (self.positions.len() as u64 - u, u)
    }

    /// Largest origin distance over current positions.
    pub fn current_max_distance(&self) -> u64 {
        self.positions
            .iter()
            .map(|v| self.topology.distance_unchecked(v))
            .max()
            .unwrap_or(0)
    }

    /// Turns per-particle trajectory recording on or off. Must be called
    /// before the first step.
    pub fn record_trajectories(&mut self, on: bool) -> Result<(), EngineError> {
        self.record_trajectories_with_limit(on, TRAJECTORY_ENTRY_LIMIT)
    }

    pub fn record_trajectories_with_limit(&mut self, on: bool, limit: usize) -> Result<(), EngineError> {
        if self.step_count > 0 {
            return Err(EngineError::RecordingAfterStart);
        }
        self.log = on.then(|| TrajectoryLog::new(&self.positions, limit));
        Ok(())
    }

    /// Recorded trajectories, one per particle.
    pub fn trajectories(&self) -> Result<&[ParticleTrajectory], EngineError> {
        match &self.log {
            None => Err(EngineError::NotRecorded),
            Some(log) if log.overflowed => Err(EngineError::TrajectoryLimit(log.limit)),
            Some(log) => Ok(&log.particles),
        }
    }

    /// Advances the process by one synchronous step. A dispersed (or halted)
    /// system is left unchanged.
    pub fn step(&mut self) -> StepReport {
        if self.unhappy.is_empty() || self.halted {
            return StepReport { dispersed_after: self.unhappy.is_empty(), ..StepReport::default() };
        }
        let snapshot = std::mem::take(&mut self.unhappy);
        let p = self.variant.move_probability();
        let lazy = matches!(self.variant, Variant::Lazy { .. });
        let mut moves = Vec::with_capacity(snapshot.len());
        for &id in &snapshot {
            let i = id as usize;
            if lazy && self.laziness[i].next_unit() >= p {
                continue;
            }
            let to = self.walkers[i].advance(&self.topology, &self.positions[i]);
            moves.push((id, to));
        }
        self.commit(snapshot, moves)
    }

    fn commit(&mut self, snapshot: Vec<u32>, moves: Vec<(u32, VertexAddress)>) -> StepReport {
        let topo = Arc::clone(&self.topology);
        // sum over unhappy particles of (occ - 1) counts every pair twice
        let twice_meetings: u64 = snapshot
            .iter()
            .map(|&id| self.occupancy.occupants(&topo, &self.positions[id as usize]).len() as u64 - 1)
            .sum();
        let pairwise_meetings = twice_meetings / 2;

        let mut touched: Vec<VertexAddress> = snapshot.iter().map(|&id| self.positions[id as usize].clone()).collect();
        for (id, _) in &moves {
            self.occupancy.remove(&topo, &self.positions[*id as usize], *id);
        }
        let time = self.step_count;
        for (id, to) in moves.iter() {
            let i = *id as usize;
            self.occupancy.add(&topo, to, *id);
            self.walk_counts[i] += 1;
            let d = topo.distance_unchecked(to);
            self.max_distance_ever = self.max_distance_ever.max(d);
            if topo.is_leaf(to) {
                self.boundary_flag = true;
            }
            if topo.beyond_safety_limit(to) {
                self.boundary_flag = true;
                self.halted = true;
            }
            if let Some(log) = &mut self.log {
                log.push(i, time, to);
            }
            self.positions[i] = to.clone();
        }
        touched.extend(moves.iter().map(|(_, to)| to.clone()));
        touched.sort_unstable();
        touched.dedup();

        let mut next: Vec<u32> = Vec::new();
        for v in &touched {
            let occ = self.occupancy.occupants(&topo, v);
            if occ.len() >= 2 {
                next.extend(occ.iter().copied());
            }
        }
        next.sort_unstable();

        let mut newly_unhappy = 0;
        for &id in &next {
            if !self.unhappy_flag[id as usize] {
                newly_unhappy += 1;
            }
        }
        for &id in &snapshot {
            self.unhappy_flag[id as usize] = false;
        }
        for &id in &next {
            self.unhappy_flag[id as usize] = true;
        }
        let newly_happy = snapshot.iter().filter(|&&id| !self.unhappy_flag[id as usize]).count() as u64;

        self.unhappy = next;
        self.step_count += 1;
        self.meeting_total += pairwise_meetings;
        StepReport {
            movers: moves.len() as u64,
            newly_happy,
            newly_unhappy,
            pairwise_meetings,
            dispersed_after: self.unhappy.is_empty(),
        }
    }

    /// Applies externally supplied moves as one step, checking that every
    /// mover is unhappy and steps to a neighbour.
    pub fn apply_step(&mut self, moves: &[(usize, VertexAddress)]) -> Result<StepReport, EngineError> {
        let mut seen = vec![false; self.positions.len()];
        for (i, to) in moves {
            let i = *i;
            if i >= self.positions.len() || seen[i] {
                return Err(EngineError::ReplayMismatch(format!("bad or repeated particle index {i}")));
            }
            seen[i] = true;
            if !self.unhappy_flag[i] {
                return Err(EngineError::ReplayMismatch(format!(
                    "particle {i} is alone at step {} and cannot move",
                    self.step_count
                )));
            }
            if !self.topology.neighbors(&self.positions[i])?.contains(to) {
                return Err(EngineError::ReplayMismatch(format!(
                    "{to} is not a neighbour of {}",
                    self.positions[i]
                )));
            }
        }
        let snapshot = std::mem::take(&mut self.unhappy);
        let moves = moves.iter().map(|(i, to)| (*i as u32, to.clone())).collect();
        Ok(self.commit(snapshot, moves))
    }

    /// Feeds recorded trajectories through this (fresh) system step by step.
    pub fn replay(&mut self, trajectories: &[ParticleTrajectory]) -> Result<(), EngineError> {
        if trajectories.len() != self.positions.len() {
            return Err(EngineError::ReplayMismatch("particle count differs".into()));
        }
        let mut events: Vec<(u64, usize, &VertexAddress)> = trajectories
            .iter()
            .enumerate()
            .flat_map(|(i, tr)| tr.moves.iter().map(move |m| (m.time, i, &m.to)))
            .collect();
        events.sort_by_key(|&(t, i, _)| (t, i));
        let last = events.last().map_or(0, |e| e.0 + 1);
        let mut cursor = 0;
        for t in self.step_count..last {
            let start = cursor;
            while cursor < events.len() && events[cursor].0 == t {
                cursor += 1;
            }
            let moves: Vec<(usize, VertexAddress)> = events[start..cursor]
                .iter()
                .map(|&(_, i, to)| (i, to.clone()))
                .collect();
            self.apply_step(&moves)?;
        }
        Ok(())
    }

    /// Steps until dispersed, halted, or `budget` total steps have elapsed.
    pub fn run(&mut self, budget: u64) -> RunResult {
        while !self.is_dispersed() && !self.halted && self.step_count < budget {
            self.step();
        }
        self.result()
    }

    /// Snapshot of the outcome so far.
    pub fn result(&self) -> RunResult {
        let dispersed = self.is_dispersed();
        let status = if self.boundary_flag {
            RunStatus::BoundaryHit
        } else if dispersed {
            RunStatus::Dispersed
        } else {
            RunStatus::BudgetExhausted
        };
        RunResult {
            status,
            t_disp: (status == RunStatus::Dispersed).then_some(self.step_count),
            d_disp: self.current_max_distance(),
            max_distance_ever: self.max_distance_ever,
            walk_counts: self.walk_counts.clone(),
            meeting_total: self.meeting_total,
            steps: self.step_count,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests;
