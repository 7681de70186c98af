use std::collections::VecDeque;

use rand::RngCore;

use crate::rng::ParticleStream;
use crate::topology::{Topology, VertexAddress};

/// How many walk steps a predetermined walk is extended by at a time.
const PREDETERMINED_BLOCK: usize = 64;

/// Source of a particle's next walk position.
///
/// Both modes read the particle's direction stream in the same order, so
/// they produce identical walks; the predetermined mode just samples them
/// ahead of time, independently of when the process asks for them.
#[derive(Debug, Clone)]
pub(crate) enum Walker {
    OnDemand(ParticleStream),
    Predetermined {
        stream: ParticleStream,
        ahead: VecDeque<VertexAddress>,
        tail: VertexAddress,
    },
}

impl Walker {
    pub fn on_demand(stream: ParticleStream) -> Self {
        Walker::OnDemand(stream)
    }

    pub fn predetermined(stream: ParticleStream, topo: &Topology, start: VertexAddress) -> Self {
        let mut w = Walker::Predetermined { stream, ahead: VecDeque::new(), tail: start };
        w.extend(topo);
        w
    }

    fn extend(&mut self, topo: &Topology) {
        if let Walker::Predetermined { stream, ahead, tail } = self {
            for _ in 0..PREDETERMINED_BLOCK {
                let next = topo.neighbor_by_draw(tail, stream.next_u64());
                ahead.push_back(next.clone());
                *tail = next;
            }
        }
    }

    /// Next position of a particle currently at `current`.
    pub fn advance(&mut self, topo: &Topology, current: &VertexAddress) -> VertexAddress {
        match self {
            Walker::OnDemand(stream) => topo.neighbor_by_draw(current, stream.next_u64()),
            Walker::Predetermined { .. } => {
                if let Walker::Predetermined { ahead, .. } = self {
                    if let Some(v) = ahead.pop_front() {
                        return v;
                    }
                }
                self.extend(topo);
                match self {
                    Walker::Predetermined { ahead, .. } => ahead.pop_front().expect("block just extended"),
                    Walker::OnDemand(_) => unreachable!(),
                }
            }
        }
    }
}
