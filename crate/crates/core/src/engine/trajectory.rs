use serde::{Deserialize, Serialize};

use crate::topology::VertexAddress;

/// Default cap on recorded walk steps across all particles (~160 MB).
pub const TRAJECTORY_ENTRY_LIMIT: usize = 1 << 22;

/// One walk step: at process step `time` the particle moved to `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStep {
    pub time: u64,
    pub to: VertexAddress,
}

/// The recorded history of one particle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticleTrajectory {
    pub start: VertexAddress,
    pub moves: Vec<WalkStep>,
}

impl ParticleTrajectory {
    /// Positions visited, starting position first.
    pub fn positions(&self) -> Vec<VertexAddress> {
        std::iter::once(self.start.clone())
            .chain(self.moves.iter().map(|m| m.to.clone()))
            .collect()
    }

    /// Position at the start of process step `time`.
    pub fn position_at(&self, time: u64) -> &VertexAddress {
        let moved = self.moves.partition_point(|m| m.time < time);
        if moved == 0 {
            &self.start
        } else {
            &self.moves[moved - 1].to
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct TrajectoryLog {
    pub particles: Vec<ParticleTrajectory>,
    pub entries: usize,
    pub limit: usize,
    pub overflowed: bool,
}

impl TrajectoryLog {
    pub fn new(start: &[VertexAddress], limit: usize) -> Self {
        Self {
            particles: start
                .iter()
                .map(|v| ParticleTrajectory { start: v.clone(), moves: Vec::new() })
                .collect(),
            entries: 0,
            limit,
            overflowed: false,
        }
    }

    pub fn push(&mut self, particle: usize, time: u64, to: &VertexAddress) {
        if self.overflowed {
            return;
        }
        if self.entries >= self.limit {
            self.overflowed = true;
            self.particles.iter_mut().for_each(|p| p.moves = Vec::new());
            return;
        }
        self.entries += 1;
        self.particles[particle].moves.push(WalkStep { time, to: to.clone() });
    }
}
