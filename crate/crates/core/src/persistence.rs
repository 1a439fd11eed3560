//! Vietoris–Rips persistence over a dense distance matrix.
//!
//! H0 comes from Kruskal's algorithm over the sorted edge list. H1 is an
//! opt-in column reduction over GF(2) on the edge/triangle filtration.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;

/// Largest cloud accepted by [`vr_h1_pairing`].
pub const DEFAULT_H1_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiltrationEdge {
    pub i: usize,
    pub j: usize,
    pub length: f64,
}

impl FiltrationEdge {
    fn new(a: usize, b: usize, length: f64) -> Self {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        Self { i, j, length }
    }

    /// Filtration order: length, then `(i, j)`.
    fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.length
            .total_cmp(&other.length)
            .then(self.i.cmp(&other.i))
            .then(self.j.cmp(&other.j))
    }
}

/// One H1 feature: the edge that closes the cycle and the longest edge of the
/// triangle that fills it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclePair {
    pub creator: FiltrationEdge,
    pub destroyer: FiltrationEdge,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PersistencePairing {
    /// Merge edges in filtration order; they form a minimum spanning forest.
    pub dim0_edges: Vec<FiltrationEdge>,
    pub dim1_pairs: Option<Vec<CyclePair>>,
    /// Classes that never die (connected components at infinite scale).
    pub essential: usize,
}

impl PersistencePairing {
    /// Index pairs whose distances carry the topological signature, in a
    /// fixed order: H0 edges, then creator/destroyer edges of each H1 pair.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.dim0_edges.iter().map(|e| (e.i, e.j)).collect();
        if let Some(pairs) = &self.dim1_pairs {
            for p in pairs {
                out.push((p.creator.i, p.creator.j));
                out.push((p.destroyer.i, p.destroyer.j));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagram {
    pub dim0: Vec<(f64, f64)>,
    pub dim1: Vec<(f64, f64)>,
}

/// Flat diagram entry for JSON export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramRecord {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

impl Diagram {
    pub fn records(&self) -> Vec<DiagramRecord> {
        let d0 = self.dim0.iter().map(|&(birth, death)| DiagramRecord {
            dim: 0,
            birth,
            death,
        });
        let d1 = self.dim1.iter().map(|&(birth, death)| DiagramRecord {
            dim: 1,
            birth,
            death,
        });
        d0.chain(d1).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.records()).map_err(|e| Error::param(e.to_string()))
    }
}

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false when already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// All edges `i < j` in filtration order.
pub fn sorted_edges(dist: &DistanceMatrix) -> Vec<FiltrationEdge> {
    let n = dist.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push(FiltrationEdge::new(i, j, dist.get(i, j)));
        }
    }
    edges.sort_by(FiltrationEdge::filtration_cmp);
    edges
}

pub fn vr_h0_pairing(dist: &DistanceMatrix) -> (PersistencePairing, Diagram) {
    let n = dist.len();
    let mut uf = UnionFind::new(n);
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for e in sorted_edges(dist) {
        if uf.union(e.i, e.j) {
            merges.push(e);
            if merges.len() + 1 == n {
                break;
            }
        }
    }
    let diagram = Diagram {
        dim0: merges.iter().map(|e| (0.0, e.length)).collect(),
        dim1: Vec::new(),
    };
    let pairing = PersistencePairing {
        essential: n - merges.len(),
        dim0_edges: merges,
        dim1_pairs: None,
    };
    (pairing, diagram)
}

/// Symmetric difference of two sorted index lists.
fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            Ordering::Less => {
                out.push(a[x]);
                x += 1;
            }
            Ordering::Greater => {
                out.push(b[y]);
                y += 1;
            }
            Ordering::Equal => {
                x += 1;
                y += 1;
            }
        }
    }
    out.extend_from_slice(&a[x..]);
    out.extend_from_slice(&b[y..]);
    out
}

/// H1 pairs with positive persistence.
///
/// Triangles are enumerated lazily in filtration order by their longest
/// edge, so memory stays proportional to the reduced columns rather than to
/// the full triangle count. The sweep stops once every cycle-creating edge
/// has been paired.
pub fn vr_h1_pairing(dist: &DistanceMatrix, cap: usize) -> Result<(Vec<CyclePair>, Diagram)> {
    let n = dist.len();
    if n > cap {
        return Err(Error::Capacity(format!(
            "H1 persistence is limited to {cap} points, got {n}; use H0-only mode"
        )));
    }
    if n < 3 {
        return Ok((Vec::new(), Diagram::default()));
    }
    let edges = sorted_edges(dist);
    let mut order = vec![vec![0usize; n]; n];
    for (idx, e) in edges.iter().enumerate() {
        order[e.i][e.j] = idx;
        order[e.j][e.i] = idx;
    }

    // Edges that do not merge components create cycles; all of them die
    // because the full complex on N vertices has trivial H1.
    let mut uf = UnionFind::new(n);
    let positive = edges.iter().filter(|e| !uf.union(e.i, e.j)).count();

    let mut pivots: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut pairs = Vec::new();
    let mut paired = 0usize;
    'sweep: for (max_idx, e) in edges.iter().enumerate() {
        for k in 0..n {
            if k == e.i || k == e.j {
                continue;
            }
            let (a, b) = (order[e.i][k], order[e.j][k]);
            if a > max_idx || b > max_idx {
                continue;
            }
            let mut col = vec![a.min(b), a.max(b), max_idx];
            while let Some(&low) = col.last() {
                match pivots.get(&low) {
                    Some(other) => col = xor_sorted(&col, other),
                    None => break,
                }
            }
            let Some(&low) = col.last() else { continue };
            let creator = edges[low];
            if e.length > creator.length {
                pairs.push(CyclePair {
                    creator,
                    destroyer: *e,
                });
            }
            pivots.insert(low, col);
            paired += 1;
            if paired == positive {
                break 'sweep;
            }
        }
    }
    let diagram = Diagram {
        dim0: Vec::new(),
        dim1: pairs
            .iter()
            .map(|p| (p.creator.length, p.destroyer.length))
            .collect(),
    };
    Ok((pairs, diagram))
}

/// H0 pairing, plus H1 when `h1` is set.
pub fn vr_pairing(
    dist: &DistanceMatrix,
    h1: bool,
    cap: usize,
) -> Result<(PersistencePairing, Diagram)> {
    let (mut pairing, mut diagram) = vr_h0_pairing(dist);
    if h1 {
        let (pairs, d1) = vr_h1_pairing(dist, cap)?;
        pairing.dim1_pairs = Some(pairs);
        diagram.dim1 = d1.dim1;
    }
    Ok((pairing, diagram))
}

/// Distances at the pairing's edges, in [`PersistencePairing::edges`] order.
pub fn select_distances(dist: &DistanceMatrix, pairing: &PersistencePairing) -> Vec<f64> {
    let n = dist.len();
    pairing
        .edges()
        .into_iter()
        .map(|(i, j)| {
            assert!(i < n && j < n, "pairing index out of range");
            dist.get(i, j)
        })
        .collect()
}
