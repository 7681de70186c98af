//! Graph families the process runs on.
//!
//! Infinite families (line, grid, regular tree) are never materialised:
//! vertices are coordinates and neighbours are computed on demand.

mod cayley;
mod config;

use std::fmt;
use std::sync::Arc;

use num_integer::binomial;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::index_from_draw;

use cayley::CayleyGraph;
pub use cayley::CAYLEY_MAX_ORDER;
pub use config::ConfigError;

/// Coordinates of infinite families are kept strictly below this magnitude.
pub const COORDINATE_LIMIT: i64 = 1 << 40;

/// Finite graphs up to this many vertices get dense occupancy tables.
pub const DENSE_INDEX_LIMIT: u64 = 1 << 18;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("invalid topology: {0}")]
    InvalidSpec(String),
    #[error("vertex {vertex} is not a valid address for {family}")]
    AddressMismatch { vertex: String, family: Family },
    #[error("vertex count overflow at radius {0}")]
    Overflow(u64),
    #[error("{particles} particles do not fit on {vertices} vertices")]
    TooManyParticles { particles: u64, vertices: u64 },
}

/// Graph family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Complete,
    Star,
    Path,
    Cycle,
    Tree,
    Grid,
    Hypercube,
    Cayley,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Complete,
        Family::Star,
        Family::Path,
        Family::Cycle,
        Family::Tree,
        Family::Grid,
        Family::Hypercube,
        Family::Cayley,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Complete => "complete",
            Family::Star => "star",
            Family::Path => "path",
            Family::Cycle => "cycle",
            Family::Tree => "tree",
            Family::Grid => "grid",
            Family::Hypercube => "hypercube",
            Family::Cayley => "cayley",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| TopologyError::InvalidSpec(format!("unknown family `{s}`")))
    }
}

/// Declarative description of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologySpec {
    /// `K_n`, optionally with a loop at every vertex.
    Complete { n: u64, with_loops: bool },
    /// A centre (vertex 0, the origin) joined to `leaves` leaves.
    Star { leaves: u64 },
    /// The integer line.
    PathInfinite,
    /// `C_n`, vertices `0..n`.
    Cycle { n: u64 },
    /// Rooted tree where every internal vertex has degree `k`.
    /// `leaf_depth == 0` means infinite.
    TreeKRegular { k: u32, leaf_depth: u32 },
    /// `Z^dim` with unit steps.
    GridInfinite { dim: u32 },
    /// `{0,1}^dim` with single bit flips.
    Hypercube { dim: u32 },
    /// Symmetric Cayley graph of `Z_m1 x ... x Z_mr`.
    FiniteAbelianCayley { moduli: Vec<u64>, generators: Vec<Vec<i64>> },
}

impl TopologySpec {
    pub fn family(&self) -> Family {
        match self {
            TopologySpec::Complete { .. } => Family::Complete,
            TopologySpec::Star { .. } => Family::Star,
            TopologySpec::PathInfinite => Family::Path,
            TopologySpec::Cycle { .. } => Family::Cycle,
            TopologySpec::TreeKRegular { .. } => Family::Tree,
            TopologySpec::GridInfinite { .. } => Family::Grid,
            TopologySpec::Hypercube { .. } => Family::Hypercube,
            TopologySpec::FiniteAbelianCayley { .. } => Family::Cayley,
        }
    }

    /// Validates the parameters and precomputes whatever the queries need.
    pub fn build(&self) -> Result<Topology, TopologyError> {
        Topology::new(self.clone())
    }

    /// The cycle `C_n` written as a Cayley graph of `Z_n`.
    pub fn cycle_as_cayley(n: u64) -> Self {
        TopologySpec::FiniteAbelianCayley { moduli: vec![n], generators: vec![vec![1], vec![-1]] }
    }

    /// The hypercube `Q_d` written as a Cayley graph of `Z_2^d`.
    pub fn hypercube_as_cayley(dim: u32) -> Self {
        let d = dim as usize;
        let generators = (0..d)
            .map(|j| (0..d).map(|i| i64::from(i == j)).collect())
            .collect();
        TopologySpec::FiniteAbelianCayley { moduli: vec![2; d], generators }
    }
}

/// Identity of a vertex, shaped after its family.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexAddress {
    /// Complete, Star (0 = centre) and Cycle vertices.
    Node(u64),
    /// Position on the integer line.
    Offset(i64),
    /// Point of `Z^d`.
    Lattice(Vec<i64>),
    /// Hypercube vertex, bit `j` = coordinate `j`.
    Bits(u64),
    /// Tree vertex at `depth`. `index` packs the child-index sequence from
    /// the root in mixed radix: the first digit is base `k`, the rest base `k-1`.
    Tree { depth: u32, index: u128 },
    /// Element of a finite abelian group.
    Residues(Vec<u64>),
}

impl fmt::Display for VertexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexAddress::Node(i) => write!(f, "{i}"),
            VertexAddress::Offset(x) => write!(f, "{x}"),
            VertexAddress::Lattice(xs) => write!(f, "{xs:?}"),
            VertexAddress::Bits(b) => write!(f, "{b:#b}"),
            VertexAddress::Tree { depth, index } => write!(f, "tree(depth={depth}, index={index})"),
            VertexAddress::Residues(rs) => write!(f, "{rs:?}"),
        }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Complete { n: u64, loops: bool },
    Star { leaves: u64 },
    Path,
    Cycle { n: u64 },
    Tree { k: u32, leaf_depth: u32, max_depth: u32 },
    Grid { dim: usize },
    Hypercube { dim: u32 },
    Cayley(Arc<CayleyGraph>),
}

/// A validated, query-ready graph. Read-only after construction.
#[derive(Debug, Clone)]
pub struct Topology {
    spec: TopologySpec,
    shape: Shape,
}

impl Topology {
    pub fn new(spec: TopologySpec) -> Result<Self, TopologyError> {
        let invalid = |msg: &str| Err(TopologyError::InvalidSpec(msg.to_string()));
        let shape = match &spec {
            TopologySpec::Complete { n, with_loops } => {
                if *n == 0 {
                    return invalid("complete: n must be >= 1");
                }
                Shape::Complete { n: *n, loops: *with_loops }
            }
            TopologySpec::Star { leaves } => {
                if *leaves == 0 {
                    return invalid("star: needs at least one leaf");
                }
                Shape::Star { leaves: *leaves }
            }
            TopologySpec::PathInfinite => Shape::Path,
            TopologySpec::Cycle { n } => {
                if *n < 3 {
                    return invalid("cycle: n must be >= 3");
                }
                Shape::Cycle { n: *n }
            }
            TopologySpec::TreeKRegular { k, leaf_depth } => {
                if *k < 2 {
                    return invalid("tree: k must be >= 2");
                }
                let max_depth = tree_max_depth(*k);
                if *leaf_depth > max_depth {
                    return Err(TopologyError::InvalidSpec(format!(
                        "tree: leaf_depth {leaf_depth} exceeds the addressable depth {max_depth} for k={k}"
                    )));
                }
                Shape::Tree { k: *k, leaf_depth: *leaf_depth, max_depth }
            }
            TopologySpec::GridInfinite { dim } => {
                if *dim == 0 {
                    return invalid("grid: dim must be >= 1");
                }
                Shape::Grid { dim: *dim as usize }
            }
            TopologySpec::Hypercube { dim } => {
                if *dim == 0 || *dim > 63 {
                    return invalid("hypercube: dim must be in 1..=63");
                }
                Shape::Hypercube { dim: *dim }
            }
            TopologySpec::FiniteAbelianCayley { moduli, generators } => {
                Shape::Cayley(Arc::new(CayleyGraph::new(moduli, generators)?))
            }
        };
        Ok(Self { spec, shape })
    }

    pub fn spec(&self) -> &TopologySpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family()
    }

    /// Number of vertices, `None` for infinite families.
    pub fn vertex_count(&self) -> Option<u64> {
        match &self.shape {
            Shape::Complete { n, .. } | Shape::Cycle { n } => Some(*n),
            Shape::Star { leaves } => Some(leaves + 1),
            Shape::Path | Shape::Grid { .. } => None,
            Shape::Tree { k, leaf_depth, .. } => {
                if *leaf_depth == 0 {
                    None
                } else {
                    tree_ball(*k, *leaf_depth as u64)
                        .and_then(|b| u64::try_from(b).ok())
                }
            }
            Shape::Hypercube { dim } => Some(1u64 << dim),
            Shape::Cayley(g) => Some(g.order),
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.shape {
            Shape::Path | Shape::Grid { .. } => false,
            Shape::Tree { leaf_depth, .. } => *leaf_depth > 0,
            _ => true,
        }
    }

    /// The distinguished vertex particles start from.
    pub fn origin(&self) -> VertexAddress {
        match &self.shape {
            Shape::Complete { .. } | Shape::Star { .. } | Shape::Cycle { .. } => VertexAddress::Node(0),
            Shape::Path => VertexAddress::Offset(0),
            Shape::Grid { dim } => VertexAddress::Lattice(vec![0; *dim]),
            Shape::Hypercube { .. } => VertexAddress::Bits(0),
            Shape::Tree { .. } => VertexAddress::Tree { depth: 0, index: 0 },
            Shape::Cayley(g) => VertexAddress::Residues(vec![0; g.moduli.len()]),
        }
    }

    fn mismatch(&self, v: &VertexAddress) -> TopologyError {
        TopologyError::AddressMismatch { vertex: v.to_string(), family: self.family() }
    }

    /// Checks that `v` is a vertex of this graph.
    pub fn validate(&self, v: &VertexAddress) -> Result<(), TopologyError> {
        let ok = match (&self.shape, v) {
            (Shape::Complete { n, .. }, VertexAddress::Node(i)) => i < n,
            (Shape::Star { leaves }, VertexAddress::Node(i)) => *i <= *leaves,
            (Shape::Cycle { n }, VertexAddress::Node(i)) => i < n,
            (Shape::Path, VertexAddress::Offset(_)) => true,
            (Shape::Grid { dim }, VertexAddress::Lattice(xs)) => xs.len() == *dim,
            (Shape::Hypercube { dim }, VertexAddress::Bits(b)) => b >> dim == 0,
            (Shape::Tree { k, leaf_depth, max_depth }, VertexAddress::Tree { depth, index }) => {
                let limit = if *leaf_depth == 0 { *max_depth } else { *leaf_depth };
                *depth <= limit && tree_level_size(*k, *depth).is_some_and(|s| *index < s)
            }
            (Shape::Cayley(g), VertexAddress::Residues(rs)) => {
                rs.len() == g.moduli.len() && rs.iter().zip(&g.moduli).all(|(r, m)| r < m)
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(self.mismatch(v))
        }
    }

    /// Number of outgoing transitions at `v` (a loop counts once).
    pub fn degree(&self, v: &VertexAddress) -> Result<u64, TopologyError> {
        self.validate(v)?;
        Ok(self.degree_unchecked(v))
    }

    fn degree_unchecked(&self, v: &VertexAddress) -> u64 {
        match (&self.shape, v) {
            (Shape::Complete { n, loops }, _) => {
                if *loops {
                    *n
                } else {
                    n - 1
                }
            }
            (Shape::Star { leaves }, VertexAddress::Node(i)) => {
                if *i == 0 {
                    *leaves
                } else {
                    1
                }
            }
            (Shape::Path, _) | (Shape::Cycle { .. }, _) => 2,
            (Shape::Grid { dim }, _) => 2 * *dim as u64,
            (Shape::Hypercube { dim }, _) => u64::from(*dim),
            (Shape::Tree { k, leaf_depth, .. }, VertexAddress::Tree { depth, .. }) => {
                if *leaf_depth > 0 && depth == leaf_depth {
                    1
                } else {
                    u64::from(*k)
                }
            }
            (Shape::Cayley(g), _) => g.generators.len() as u64,
            _ => unreachable!("address validated against shape"),
        }
    }

    /// Uniform neighbour of `v`, consuming exactly one 64-bit draw from `rng`.
    pub fn sample_neighbor<R: RngCore + ?Sized>(
        &self,
        v: &VertexAddress,
        rng: &mut R,
    ) -> Result<VertexAddress, TopologyError> {
        self.validate(v)?;
        if self.degree_unchecked(v) == 0 {
            return Err(TopologyError::InvalidSpec(format!("vertex {v} has no neighbours")));
        }
        Ok(self.neighbor_by_draw(v, rng.next_u64()))
    }

    /// Neighbour of a valid `v` selected by a raw 64-bit draw.
    pub(crate) fn neighbor_by_draw(&self, v: &VertexAddress, draw: u64) -> VertexAddress {
        let j = index_from_draw(draw, self.degree_unchecked(v));
        self.nth_neighbor(v, j)
    }

    /// The `j`-th entry of the neighbour multiset of a valid `v`.
    fn nth_neighbor(&self, v: &VertexAddress, j: u64) -> VertexAddress {
        match (&self.shape, v) {
            (Shape::Complete { loops, .. }, VertexAddress::Node(i)) => {
                if *loops || j < *i {
                    VertexAddress::Node(j)
                } else {
                    VertexAddress::Node(j + 1)
                }
            }
            (Shape::Star { .. }, VertexAddress::Node(i)) => {
                if *i == 0 {
                    VertexAddress::Node(j + 1)
                } else {
                    VertexAddress::Node(0)
                }
            }
            (Shape::Cycle { n }, VertexAddress::Node(i)) => {
                if j == 0 {
                    VertexAddress::Node((i + 1) % n)
                } else {
                    VertexAddress::Node((i + n - 1) % n)
                }
            }
            (Shape::Path, VertexAddress::Offset(x)) => {
                VertexAddress::Offset(if j == 0 { x + 1 } else { x - 1 })
            }
            (Shape::Grid { .. }, VertexAddress::Lattice(xs)) => {
                let mut ys = xs.clone();
                let axis = (j / 2) as usize;
                ys[axis] += if j % 2 == 0 { 1 } else { -1 };
                VertexAddress::Lattice(ys)
            }
            (Shape::Hypercube { .. }, VertexAddress::Bits(b)) => VertexAddress::Bits(b ^ (1 << j)),
            (Shape::Tree { k, leaf_depth, .. }, VertexAddress::Tree { depth, index }) => {
                let k = u128::from(*k);
                let at_leaf = *leaf_depth > 0 && depth == leaf_depth;
                if *depth == 0 {
                    VertexAddress::Tree { depth: 1, index: u128::from(j) }
                } else if at_leaf || j == 0 {
                    tree_parent(k, *depth, *index)
                } else {
                    VertexAddress::Tree { depth: depth + 1, index: index * (k - 1) + u128::from(j - 1) }
                }
            }
            (Shape::Cayley(g), VertexAddress::Residues(rs)) => {
                VertexAddress::Residues(g.add(rs, &g.generators[j as usize]))
            }
            _ => unreachable!("address validated against shape"),
        }
    }

    /// The full neighbour multiset of `v`, in draw order.
    pub fn neighbors(&self, v: &VertexAddress) -> Result<Vec<VertexAddress>, TopologyError> {
        let deg = self.degree(v)?;
        Ok((0..deg).map(|j| self.nth_neighbor(v, j)).collect())
    }

    /// Graph distance from the origin.
    pub fn distance_to_origin(&self, v: &VertexAddress) -> Result<u64, TopologyError> {
        self.validate(v)?;
        Ok(self.distance_unchecked(v))
    }

    pub(crate) fn distance_unchecked(&self, v: &VertexAddress) -> u64 {
        match (&self.shape, v) {
            (Shape::Complete { .. }, VertexAddress::Node(i))
            | (Shape::Star { .. }, VertexAddress::Node(i)) => u64::from(*i != 0),
            (Shape::Cycle { n }, VertexAddress::Node(i)) => (*i).min(n - i),
            (Shape::Path, VertexAddress::Offset(x)) => x.unsigned_abs(),
            (Shape::Grid { .. }, VertexAddress::Lattice(xs)) => xs.iter().map(|x| x.unsigned_abs()).sum(),
            (Shape::Hypercube { .. }, VertexAddress::Bits(b)) => u64::from(b.count_ones()),
            (Shape::Tree { .. }, VertexAddress::Tree { depth, .. }) => u64::from(*depth),
            (Shape::Cayley(g), VertexAddress::Residues(rs)) => {
                g.distance(rs).map_or(u64::MAX, u64::from)
            }
            _ => unreachable!("address validated against shape"),
        }
    }

    /// Number of vertices within distance `r` of the origin.
    pub fn ball_size(&self, r: u64) -> Result<u128, TopologyError> {
        let overflow = || TopologyError::Overflow(r);
        let size = match &self.shape {
            Shape::Complete { n, .. } => {
                if r == 0 {
                    1
                } else {
                    u128::from(*n)
                }
            }
            Shape::Star { leaves } => {
                if r == 0 {
                    1
                } else {
                    u128::from(*leaves) + 1
                }
            }
            Shape::Cycle { n } => (2 * u128::from(r) + 1).min(u128::from(*n)),
            Shape::Path => 2 * u128::from(r) + 1,
            Shape::Grid { dim } => grid_ball(*dim as u64, r).ok_or_else(overflow)?,
            Shape::Hypercube { dim } => {
                let d = u128::from(*dim);
                (0..=u128::from(r).min(d)).map(|i| binomial(d, i)).sum()
            }
            Shape::Tree { k, leaf_depth, .. } => {
                let depth = if *leaf_depth == 0 { r } else { r.min(u64::from(*leaf_depth)) };
                tree_ball(*k, depth).ok_or_else(overflow)?
            }
            Shape::Cayley(g) => {
                let idx = (r as usize).min(g.ball.len() - 1);
                u128::from(g.ball[idx])
            }
        };
        Ok(size)
    }

    /// Smallest radius whose origin ball holds at least `particles` vertices.
    pub fn pigeonhole_radius(&self, particles: u64) -> Result<u64, TopologyError> {
        if particles == 0 {
            return Err(TopologyError::InvalidSpec("particle count must be >= 1".into()));
        }
        self.check_capacity(particles)?;
        let reached = |r: u64| match self.ball_size(r) {
            Ok(b) => b >= u128::from(particles),
            Err(TopologyError::Overflow(_)) => true,
            Err(_) => false,
        };
        if reached(0) {
            return Ok(0);
        }
        let mut hi = 1u64;
        while !reached(hi) {
            hi *= 2;
        }
        let mut lo = hi / 2;
        // invariant: !reached(lo) && reached(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if reached(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Errors when a finite graph cannot host `particles` distinct positions.
    pub fn check_capacity(&self, particles: u64) -> Result<(), TopologyError> {
        match self.vertex_count() {
            Some(n) if particles > n => Err(TopologyError::TooManyParticles { particles, vertices: n }),
            _ => Ok(()),
        }
    }

    pub fn is_bipartite(&self) -> bool {
        match &self.shape {
            Shape::Complete { n, loops } => !loops && *n <= 2,
            Shape::Cycle { n } => n % 2 == 0,
            Shape::Cayley(g) => g.bipartite,
            Shape::Star { .. } | Shape::Path | Shape::Tree { .. } | Shape::Grid { .. } | Shape::Hypercube { .. } => true,
        }
    }

    /// True when no transition maps a vertex to itself.
    pub fn is_loop_free(&self) -> bool {
        match &self.shape {
            Shape::Complete { loops, .. } => !loops,
            Shape::Cayley(g) => !g.has_identity_generator,
            _ => true,
        }
    }

    /// Finite Cayley graphs only: whether the generators reach every element.
    pub fn is_connected(&self) -> bool {
        match &self.shape {
            Shape::Cayley(g) => g.connected,
            _ => true,
        }
    }

    /// True for vertices on the truncation boundary of a finite tree.
    pub fn is_leaf(&self, v: &VertexAddress) -> bool {
        matches!(
            (&self.shape, v),
            (Shape::Tree { leaf_depth, .. }, VertexAddress::Tree { depth, .. })
                if *leaf_depth > 0 && depth == leaf_depth
        )
    }

    /// True once a vertex of an infinite family approaches the limit of its
    /// coordinate representation.
    pub fn beyond_safety_limit(&self, v: &VertexAddress) -> bool {
        match (&self.shape, v) {
            (Shape::Path, VertexAddress::Offset(x)) => x.unsigned_abs() >= COORDINATE_LIMIT as u64,
            (Shape::Grid { .. }, VertexAddress::Lattice(xs)) => {
                xs.iter().any(|x| x.unsigned_abs() >= COORDINATE_LIMIT as u64)
            }
            (Shape::Tree { leaf_depth: 0, max_depth, .. }, VertexAddress::Tree { depth, .. }) => {
                depth >= max_depth
            }
            _ => false,
        }
    }

    /// Dense index for finite graphs small enough to tabulate.
    pub(crate) fn dense_len(&self) -> Option<usize> {
        match &self.shape {
            Shape::Tree { .. } => None,
            _ => self
                .vertex_count()
                .filter(|&n| n <= DENSE_INDEX_LIMIT)
                .map(|n| n as usize),
        }
    }

    pub(crate) fn dense_index(&self, v: &VertexAddress) -> usize {
        match (&self.shape, v) {
            (_, VertexAddress::Node(i)) => *i as usize,
            (_, VertexAddress::Bits(b)) => *b as usize,
            (Shape::Cayley(g), VertexAddress::Residues(rs)) => g.encode(rs) as usize,
            _ => unreachable!("dense index requested for an untabulated family"),
        }
    }

    /// Tree only: the child-index sequence from the root to `v`.
    pub fn child_path(&self, v: &VertexAddress) -> Result<Vec<u32>, TopologyError> {
        self.validate(v)?;
        match (&self.shape, v) {
            (Shape::Tree { k, .. }, VertexAddress::Tree { depth, index }) => {
                let mut digits = Vec::with_capacity(*depth as usize);
                let mut rest = *index;
                for level in (1..=*depth).rev() {
                    let base = if level == 1 { u128::from(*k) } else { u128::from(*k) - 1 };
                    digits.push((rest % base) as u32);
                    rest /= base;
                }
                digits.reverse();
                Ok(digits)
            }
            _ => Err(self.mismatch(v)),
        }
    }

    /// Tree only: the vertex reached from the root by `path`.
    pub fn tree_vertex(&self, path: &[u32]) -> Result<VertexAddress, TopologyError> {
        let Shape::Tree { k, .. } = &self.shape else {
            return Err(TopologyError::InvalidSpec("tree_vertex on a non-tree topology".into()));
        };
        let mut index = 0u128;
        for (level, &c) in path.iter().enumerate() {
            let base = if level == 0 { *k } else { k - 1 };
            if c >= base {
                return Err(TopologyError::InvalidSpec(format!("child index {c} out of range at level {level}")));
            }
            index = index * u128::from(base) + u128::from(c);
        }
        let v = VertexAddress::Tree { depth: path.len() as u32, index };
        self.validate(&v)?;
        Ok(v)
    }

    /// Finite vertex-transitive graphs: all vertices, in dense-index order.
    pub fn vertices(&self) -> Option<Vec<VertexAddress>> {
        let n = self.dense_len()? as u64;
        Some(match &self.shape {
            Shape::Complete { .. } | Shape::Star { .. } | Shape::Cycle { .. } => {
                (0..n).map(VertexAddress::Node).collect()
            }
            Shape::Hypercube { .. } => (0..n).map(VertexAddress::Bits).collect(),
            Shape::Cayley(g) => (0..n)
                .map(|i| {
                    let mut rs = vec![0; g.moduli.len()];
                    g.decode_into(i, &mut rs);
                    VertexAddress::Residues(rs)
                })
                .collect(),
            _ => return None,
        })
    }

    /// Eigenvalues of the walk's transition matrix with multiplicities, for
    /// the vertex-transitive finite families.
    pub(crate) fn walk_spectrum(&self) -> Option<Vec<(f64, u64)>> {
        match &self.shape {
            Shape::Hypercube { dim } => {
                let d = u64::from(*dim);
                Some(
                    (0..=d)
                        .map(|k| ((d as f64 - 2.0 * k as f64) / d as f64, binomial(d, k)))
                        .collect(),
                )
            }
            Shape::Cycle { n } => Some(
                (0..*n)
                    .map(|j| ((std::f64::consts::TAU * j as f64 / *n as f64).cos(), 1))
                    .collect(),
            ),
            Shape::Cayley(g) => {
                let mut chi = vec![0u64; g.moduli.len()];
                let s = g.generators.len() as f64;
                Some(
                    (0..g.order)
                        .map(|i| {
                            g.decode_into(i, &mut chi);
                            let sum: f64 = g
                                .generators
                                .iter()
                                .map(|gen| {
                                    let phase: f64 = chi
                                        .iter()
                                        .zip(gen)
                                        .zip(&g.moduli)
                                        .map(|((&c, &x), &m)| ((c * x) % m) as f64 / m as f64)
                                        .sum();
                                    (std::f64::consts::TAU * phase).cos()
                                })
                                .sum();
                            (sum / s, 1)
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }
}

fn tree_parent(k: u128, depth: u32, index: u128) -> VertexAddress {
    if depth == 1 {
        VertexAddress::Tree { depth: 0, index: 0 }
    } else {
        VertexAddress::Tree { depth: depth - 1, index: index / (k - 1) }
    }
}

/// Vertices at exactly `depth`, if representable.
fn tree_level_size(k: u32, depth: u32) -> Option<u128> {
    if depth == 0 {
        return Some(1);
    }
    let base = u128::from(k - 1);
    let mut size = u128::from(k);
    for _ in 1..depth {
        size = size.checked_mul(base)?;
    }
    Some(size)
}

/// Deepest level whose packed indices fit, capped so the boundary policy
/// still applies to k = 2.
fn tree_max_depth(k: u32) -> u32 {
    if k == 2 {
        return 1 << 30;
    }
    let mut depth = 1u32;
    while tree_level_size(k, depth + 1).is_some_and(|s| s < (1u128 << 126)) {
        depth += 1;
    }
    depth
}

fn tree_ball(k: u32, depth: u64) -> Option<u128> {
    if k == 2 {
        return 2u128.checked_mul(u128::from(depth))?.checked_add(1);
    }
    let mut total = 1u128;
    let mut level = u128::from(k);
    for d in 1..=depth {
        total = total.checked_add(level)?;
        if d < depth {
            level = level.checked_mul(u128::from(k - 1))?;
        }
    }
    Some(total)
}

/// Lattice points of `Z^d` with L1 norm at most `r`:
/// `sum_i 2^i C(d,i) C(r,i)`.
fn grid_ball(d: u64, r: u64) -> Option<u128> {
    let mut total = 0u128;
    for i in 0..=d.min(r) {
        let term = 2u128
            .checked_pow(u32::try_from(i).ok()?)?
            .checked_mul(binomial(u128::from(d), u128::from(i)))?
            .checked_mul(checked_binomial(u128::from(r), u128::from(i))?)?;
        total = total.checked_add(term)?;
    }
    Some(total)
}

fn checked_binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}
