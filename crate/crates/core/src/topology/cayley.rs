use std::collections::VecDeque;

use super::TopologyError;

/// Largest group order for which distance tables are materialised.
pub const CAYLEY_MAX_ORDER: u64 = 1 << 22;

/// A symmetric Cayley graph of a finite abelian group `Z_m1 x ... x Z_mr`,
/// with BFS distances from the identity precomputed.
#[derive(Debug, Clone)]
pub(crate) struct CayleyGraph {
    pub moduli: Vec<u64>,
    pub generators: Vec<Vec<u64>>,
    pub order: u64,
    pub dist: Vec<u32>,
    /// `ball[r]` = number of elements within distance `r` of the identity.
    pub ball: Vec<u64>,
    pub bipartite: bool,
    pub connected: bool,
    pub has_identity_generator: bool,
}

impl CayleyGraph {
    pub fn new(moduli: &[u64], generators: &[Vec<i64>]) -> Result<Self, TopologyError> {
        if moduli.is_empty() {
            return Err(TopologyError::InvalidSpec("cayley: moduli must be non-empty".into()));
        }
        if moduli.iter().any(|&m| m < 2) {
            return Err(TopologyError::InvalidSpec("cayley: every modulus must be >= 2".into()));
        }
        if generators.is_empty() {
            return Err(TopologyError::InvalidSpec("cayley: generator set is empty".into()));
        }
        let order = moduli
            .iter()
            .try_fold(1u64, |acc, &m| acc.checked_mul(m))
            .filter(|&n| n <= CAYLEY_MAX_ORDER)
            .ok_or_else(|| {
                TopologyError::InvalidSpec(format!("cayley: group order exceeds {CAYLEY_MAX_ORDER}"))
            })?;
        let mut gens = Vec::with_capacity(generators.len());
        for g in generators {
            if g.len() != moduli.len() {
                return Err(TopologyError::InvalidSpec(format!(
                    "cayley: generator {g:?} has {} components, expected {}",
                    g.len(),
                    moduli.len()
                )));
            }
            gens.push(normalize(g, moduli));
        }
        // symmetric as a multiset: #g == #(-g)
        for g in &gens {
            let inv = negate(g, moduli);
            let a = gens.iter().filter(|h| *h == g).count();
            let b = gens.iter().filter(|h| **h == inv).count();
            if a != b {
                return Err(TopologyError::InvalidSpec(format!(
                    "cayley: generator set is not symmetric ({g:?} lacks its inverse)"
                )));
            }
        }
        let has_identity_generator = gens.iter().any(|g| g.iter().all(|&c| c == 0));

        let mut graph = Self {
            moduli: moduli.to_vec(),
            generators: gens,
            order,
            dist: Vec::new(),
            ball: Vec::new(),
            bipartite: false,
            connected: false,
            has_identity_generator,
        };
        graph.explore();
        Ok(graph)
    }

    fn explore(&mut self) {
        let n = self.order as usize;
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        dist[0] = 0;
        queue.push_back(0usize);
        let mut bipartite = true;
        let mut residues = vec![0u64; self.moduli.len()];
        while let Some(u) = queue.pop_front() {
            self.decode_into(u as u64, &mut residues);
            for g in &self.generators {
                let v = self.encode_sum(&residues, g) as usize;
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                } else if dist[v] % 2 == dist[u] % 2 {
                    bipartite = false;
                }
            }
        }
        let reached = dist.iter().filter(|&&d| d != u32::MAX).count();
        self.connected = reached == n;
        self.bipartite = bipartite;
        let max = dist.iter().filter(|&&d| d != u32::MAX).max().copied().unwrap_or(0) as usize;
        let mut ball = vec![0u64; max + 1];
        for &d in dist.iter().filter(|&&d| d != u32::MAX) {
            ball[d as usize] += 1;
        }
        for r in 1..ball.len() {
            ball[r] += ball[r - 1];
        }
        self.dist = dist;
        self.ball = ball;
    }

    /// Mixed-radix index of a residue vector (first coordinate most significant).
    pub fn encode(&self, residues: &[u64]) -> u64 {
        residues
            .iter()
            .zip(&self.moduli)
            .fold(0u64, |acc, (&r, &m)| acc * m + r)
    }

    fn encode_sum(&self, residues: &[u64], g: &[u64]) -> u64 {
        residues
            .iter()
            .zip(g)
            .zip(&self.moduli)
            .fold(0u64, |acc, ((&r, &x), &m)| acc * m + (r + x) % m)
    }

    pub fn decode_into(&self, mut index: u64, out: &mut [u64]) {
        for (slot, &m) in out.iter_mut().zip(&self.moduli).rev() {
            *slot = index % m;
            index /= m;
        }
    }

    pub fn add(&self, residues: &[u64], g: &[u64]) -> Vec<u64> {
        residues
            .iter()
            .zip(g)
            .zip(&self.moduli)
            .map(|((&r, &x), &m)| (r + x) % m)
            .collect()
    }

    pub fn distance(&self, residues: &[u64]) -> Option<u32> {
        let d = self.dist[self.encode(residues) as usize];
        (d != u32::MAX).then_some(d)
    }
}

fn normalize(g: &[i64], moduli: &[u64]) -> Vec<u64> {
    g.iter()
        .zip(moduli)
        .map(|(&x, &m)| x.rem_euclid(m as i64) as u64)
        .collect()
}

fn negate(g: &[u64], moduli: &[u64]) -> Vec<u64> {
    g.iter().zip(moduli).map(|(&x, &m)| (m - x) % m).collect()
}
