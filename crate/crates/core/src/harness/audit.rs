use serde::{Deserialize, Serialize};

use crate::engine::ParticleTrajectory;
use crate::topology::VertexAddress;

use super::HarnessError;

/// Meetings of a particle pair against origin visits of their combined walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingAudit {
    /// Process steps at whose start both particles share a vertex.
    pub meetings: u64,
    /// Prefixes (the empty one included) of the combined walk that sit at
    /// the origin.
    pub combined_returns: u64,
}

impl CouplingAudit {
    pub fn holds(&self) -> bool {
        self.combined_returns >= self.meetings
    }
}

/// Difference of two positions, in the group the walk lives in.
#[derive(Debug, Clone, PartialEq)]
enum Diff {
    Line(i64),
    Grid(Vec<i64>),
    Cube(u64),
}

impl Diff {
    fn zero_like(v: &VertexAddress) -> Result<Self, HarnessError> {
        match v {
            VertexAddress::Offset(_) => Ok(Diff::Line(0)),
            VertexAddress::Lattice(x) => Ok(Diff::Grid(vec![0; x.len()])),
            VertexAddress::Bits(_) => Ok(Diff::Cube(0)),
            other => Err(HarnessError::Unsupported(format!(
                "coupling audit needs line, grid or hypercube positions, got {other}"
            ))),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Diff::Line(x) => *x == 0,
            Diff::Grid(x) => x.iter().all(|&c| c == 0),
            Diff::Cube(x) => *x == 0,
        }
    }

    /// Adds `sign * (to - from)`; on the hypercube the sign is irrelevant.
    fn add_step(&mut self, from: &VertexAddress, to: &VertexAddress, sign: i64) -> Result<(), HarnessError> {
        match (self, from, to) {
            (Diff::Line(acc), VertexAddress::Offset(a), VertexAddress::Offset(b)) => *acc += sign * (b - a),
            (Diff::Grid(acc), VertexAddress::Lattice(a), VertexAddress::Lattice(b)) if a.len() == acc.len() => {
                for ((c, x), y) in acc.iter_mut().zip(a).zip(b) {
                    *c += sign * (y - x);
                }
            }
            (Diff::Cube(acc), VertexAddress::Bits(a), VertexAddress::Bits(b)) => *acc ^= a ^ b,
            _ => return Err(HarnessError::Unsupported("trajectories from different families".into())),
        }
        Ok(())
    }
}

/// Interleaves particle `a`'s moves with particle `b`'s reversed moves,
/// step by step, and counts how often the partial sums return to the
/// origin. Every meeting is such a return, so `combined_returns >= meetings`
/// for standard runs.
pub fn pair_coupling_audit(a: &ParticleTrajectory, b: &ParticleTrajectory) -> Result<CouplingAudit, HarnessError> {
    let mut y = Diff::zero_like(&a.start)?;
    y.add_step(&b.start, &a.start, 1)?;
    let mut returns = u64::from(y.is_zero());

    let (mut pa, mut pb) = (&a.start, &b.start);
    let (mut ia, mut ib) = (0, 0);
    let mut meetings = 0u64;
    let mut t = 0u64;
    loop {
        if pa == pb {
            meetings += 1;
        }
        let na = a.moves.get(ia).map(|m| m.time);
        let nb = b.moves.get(ib).map(|m| m.time);
        let next = match (na, nb) {
            (None, None) => break,
            (Some(x), None) | (None, Some(x)) => x,
            (Some(x), Some(z)) => x.min(z),
        };
        // positions are constant on (t, next]; count the skipped step starts
        if pa == pb {
            meetings += next - t;
        }
        if na == Some(next) {
            let to = &a.moves[ia].to;
            y.add_step(pa, to, 1)?;
            returns += u64::from(y.is_zero());
            pa = to;
            ia += 1;
        }
        if nb == Some(next) {
            let to = &b.moves[ib].to;
            y.add_step(pb, to, -1)?;
            returns += u64::from(y.is_zero());
            pb = to;
            ib += 1;
        }
        t = next + 1;
    }
    Ok(CouplingAudit { meetings, combined_returns: returns })
}
