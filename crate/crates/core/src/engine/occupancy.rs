use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::topology::{Topology, VertexAddress};

pub(crate) type Occupants = SmallVec<[u32; 2]>;

/// Vertex -> particles currently on it. Small finite graphs use a dense
/// table, everything else a hash map holding occupied vertices only.
#[derive(Debug, Clone)]
pub(crate) enum Occupancy {
    Dense(Vec<Occupants>),
    Sparse(FxHashMap<VertexAddress, Occupants>),
}

static EMPTY: Occupants = SmallVec::new_const();

impl Occupancy {
    pub fn for_topology(topo: &Topology) -> Self {
        match topo.dense_len() {
            Some(n) => Occupancy::Dense(vec![Occupants::new(); n]),
            None => Occupancy::Sparse(FxHashMap::default()),
        }
    }

    pub fn add(&mut self, topo: &Topology, v: &VertexAddress, id: u32) {
        match self {
            Occupancy::Dense(table) => table[topo.dense_index(v)].push(id),
            Occupancy::Sparse(map) => map.entry(v.clone()).or_default().push(id),
        }
    }

    pub fn remove(&mut self, topo: &Topology, v: &VertexAddress, id: u32) {
        let remove_from = |list: &mut Occupants| {
            let at = list.iter().position(|&x| x == id).expect("particle registered at its vertex");
            list.swap_remove(at);
        };
        match self {
            Occupancy::Dense(table) => remove_from(&mut table[topo.dense_index(v)]),
            Occupancy::Sparse(map) => {
                let list = map.get_mut(v).expect("occupied vertex present");
                remove_from(list);
                if list.is_empty() {
                    map.remove(v);
                }
            }
        }
    }

    pub fn occupants(&self, topo: &Topology, v: &VertexAddress) -> &Occupants {
        match self {
            Occupancy::Dense(table) => &table[topo.dense_index(v)],
            Occupancy::Sparse(map) => map.get(v).unwrap_or(&EMPTY),
        }
    }
}
