//! Direct simulation of the dynamic rank-one graph.
//!
//! Edge `{i, j}` arrives at `E_ij ~ Exp(w_i w_j)` and is present at `lambda`
//! iff `E_ij <= lambda / n`. A union-find pass over the sorted arrivals
//! tracks component counts and volumes for every `lambda` in one sweep.
//! Memory is quadratic in `n`, so this is a small-n oracle.

use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use thiserror::Error;

use crate::rng::rng_from;
use crate::weights::WeightVector;

pub const DEFAULT_CAP: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("n = {n} exceeds the direct-simulation cap of {cap} vertices")]
    CapExceeded { n: usize, cap: usize },
    #[error("expected {expected} arrivals, got {got}")]
    ArrivalCount { expected: usize, got: usize },
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("edge ({0}, {1}) given twice")]
    DuplicateEdge(usize, usize),
    #[error("arrival time {0} must be finite and positive")]
    InvalidArrival(f64),
    #[error("lambda grid must be ascending and non-negative")]
    UnsortedGrid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arrival {
    pub i: u32,
    pub j: u32,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicGraphRealization {
    weights: WeightVector,
    arrivals: Vec<Arrival>,
}

fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Samples every arrival time. Pair `(i, j)` is drawn in lexicographic order.
pub fn simulate_dynamic_graph(
    w: &WeightVector,
    seed: u64,
    cap: usize,
) -> Result<DynamicGraphRealization, GraphError> {
    let n = w.n();
    if n > cap {
        return Err(GraphError::CapExceeded { n, cap });
    }
    let ws = w.weights();
    let mut rng = rng_from(seed);
    let mut arrivals = Vec::with_capacity(edge_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            let e: f64 = Exp1.sample(&mut rng);
            arrivals.push(Arrival {
                i: i as u32,
                j: j as u32,
                time: e.max(f64::MIN_POSITIVE) / (ws[i] * ws[j]),
            });
        }
    }
    sort_arrivals(&mut arrivals);
    Ok(DynamicGraphRealization {
        weights: w.clone(),
        arrivals,
    })
}

fn sort_arrivals(arrivals: &mut [Arrival]) {
    arrivals.sort_by(|a, b| a.time.total_cmp(&b.time).then((a.i, a.j).cmp(&(b.i, b.j))));
}

impl DynamicGraphRealization {
    /// Injects explicit arrivals (one per unordered pair), for deterministic tests.
    pub fn from_arrivals(w: &WeightVector, mut arrivals: Vec<Arrival>) -> Result<Self, GraphError> {
        let n = w.n();
        if arrivals.len() != edge_count(n) {
            return Err(GraphError::ArrivalCount {
                expected: edge_count(n),
                got: arrivals.len(),
            });
        }
        let mut seen = vec![false; n * n];
        for a in &arrivals {
            let (i, j) = (a.i as usize, a.j as usize);
            if i >= j || j >= n {
                return Err(GraphError::InvalidEdge(i, j));
            }
            if std::mem::replace(&mut seen[i * n + j], true) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
            if !(a.time.is_finite() && a.time > 0.0) {
                return Err(GraphError::InvalidArrival(a.time));
            }
        }
        sort_arrivals(&mut arrivals);
        Ok(Self {
            weights: w.clone(),
            arrivals,
        })
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Arrivals in ascending time order.
    pub fn arrivals(&self) -> &[Arrival] {
        &self.arrivals
    }

    /// Largest-volume component at each `lambda` of an ascending grid.
    pub fn giant_path(&self, grid: &[f64]) -> Result<Vec<GiantSnapshot>, GraphError> {
        if grid.windows(2).any(|p| p[1] < p[0]) || grid.iter().any(|l| !(*l >= 0.0)) {
            return Err(GraphError::UnsortedGrid);
        }
        let n = self.weights.n() as f64;
        let mut uf = VolumeUnionFind::new(self.weights.weights());
        let mut next = 0;
        let mut out = Vec::with_capacity(grid.len());
        for &lambda in grid {
            let cutoff = lambda / n;
            while next < self.arrivals.len() && self.arrivals[next].time <= cutoff {
                let a = self.arrivals[next];
                uf.union(a.i as usize, a.j as usize);
                next += 1;
            }
            let giant = uf.largest();
            out.push(GiantSnapshot {
                lambda,
                count: giant.count,
                volume: giant.volume,
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GiantSnapshot {
    pub lambda: f64,
    /// `L`: cardinality of the most voluminous component.
    pub count: usize,
    /// `V`: its volume.
    pub volume: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Component {
    pub root: usize,
    pub count: usize,
    pub volume: f64,
    /// Smallest vertex index in the component.
    pub min_vertex: usize,
}

/// Union by size with path compression; each root carries its vertex count,
/// volume and smallest member.
#[derive(Clone, Debug)]
pub struct VolumeUnionFind {
    parent: Vec<usize>,
    count: Vec<usize>,
    volume: Vec<f64>,
    min_vertex: Vec<usize>,
}

impl VolumeUnionFind {
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        Self {
            parent: (0..n).collect(),
            count: vec![1; n],
            volume: weights.to_vec(),
            min_vertex: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Returns `true` if two components were merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.count[ra] < self.count[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.count[ra] += self.count[rb];
        self.volume[ra] += self.volume[rb];
        self.min_vertex[ra] = self.min_vertex[ra].min(self.min_vertex[rb]);
        true
    }

    pub fn components(&self) -> Vec<Component> {
        (0..self.parent.len())
            .filter(|&v| self.parent[v] == v)
            .map(|r| Component {
                root: r,
                count: self.count[r],
                volume: self.volume[r],
                min_vertex: self.min_vertex[r],
            })
            .collect()
    }

    /// Maximum-volume component; ties go to the one holding the smallest vertex.
    pub fn largest(&self) -> Component {
        let comps = self.components();
        let mut best = comps[0];
        for c in &comps[1..] {
            if c.volume > best.volume || (c.volume == best.volume && c.min_vertex < best.min_vertex)
            {
                best = *c;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(w: &[f64]) -> WeightVector {
        WeightVector::explicit(w.to_vec()).unwrap()
    }

    #[test]
    fn tiny_graphs() {
        let r = simulate_dynamic_graph(&wv(&[2.5]), 1, DEFAULT_CAP).unwrap();
        assert!(r.arrivals().is_empty());
        let snap = r.giant_path(&[0.0, 10.0]).unwrap();
        assert!(snap.iter().all(|s| s.count == 1 && s.volume == 2.5));
    }

    #[test]
    fn cap_is_enforced() {
        let w = WeightVector::explicit(vec![1.0; 11]).unwrap();
        assert_eq!(
            simulate_dynamic_graph(&w, 0, 10),
            Err(GraphError::CapExceeded { n: 11, cap: 10 })
        );
    }

    #[test]
    fn arrivals_are_sorted_and_complete() {
        let w = wv(&[1.0, 2.0, 0.5, 3.0, 1.5]);
        let r = simulate_dynamic_graph(&w, 42, DEFAULT_CAP).unwrap();
        assert_eq!(r.arrivals().len(), 10);
        assert!(r.arrivals().windows(2).all(|p| p[0].time <= p[1].time));
        assert!(r.arrivals().iter().all(|a| a.time > 0.0 && a.i < a.j));
    }

    #[test]
    fn endpoints_of_the_sweep() {
        let w = wv(&[1.0, 2.0, 0.5, 3.0, 1.5]);
        let r = simulate_dynamic_graph(&w, 3, DEFAULT_CAP).unwrap();
        let last = r.arrivals().last().unwrap().time;
        let snaps = r.giant_path(&[0.0, last * 5.0]).unwrap();
        assert_eq!(snaps[0].count, 1);
        assert_eq!(snaps[0].volume, 3.0);
        assert_eq!(snaps[1].count, 5);
        assert_eq!(snaps[1].volume, 8.0);
    }

    #[test]
    fn injected_triangle() {
        let n = 3.0;
        let w = wv(&[1.0, 1.0, 1.0]);
        let arrivals = vec![
            Arrival {
                i: 0,
                j: 1,
                time: 0.1 / n,
            },
            Arrival {
                i: 0,
                j: 2,
                time: 0.5 / n,
            },
            Arrival {
                i: 1,
                j: 2,
                time: 0.9 / n,
            },
        ];
        let r = DynamicGraphRealization::from_arrivals(&w, arrivals).unwrap();
        let snaps = r.giant_path(&[0.05, 0.3, 0.7, 1.0]).unwrap();
        let got: Vec<(usize, f64)> = snaps.iter().map(|s| (s.count, s.volume)).collect();
        assert_eq!(got, vec![(1, 1.0), (2, 2.0), (3, 3.0), (3, 3.0)]);
    }

    #[test]
    fn injection_is_validated() {
        let w = wv(&[1.0, 1.0, 1.0]);
        let a = |i, j, time| Arrival { i, j, time };
        assert!(matches!(
            DynamicGraphRealization::from_arrivals(&w, vec![a(0, 1, 0.1)]),
            Err(GraphError::ArrivalCount { .. })
        ));
        assert_eq!(
            DynamicGraphRealization::from_arrivals(
                &w,
                vec![a(0, 1, 0.1), a(0, 1, 0.2), a(1, 2, 0.3)]
            ),
            Err(GraphError::DuplicateEdge(0, 1))
        );
        assert_eq!(
            DynamicGraphRealization::from_arrivals(
                &w,
                vec![a(1, 0, 0.1), a(0, 2, 0.2), a(1, 2, 0.3)]
            ),
            Err(GraphError::InvalidEdge(1, 0))
        );
        assert_eq!(
            DynamicGraphRealization::from_arrivals(
                &w,
                vec![a(0, 1, 0.0), a(0, 2, 0.2), a(1, 2, 0.3)]
            ),
            Err(GraphError::InvalidArrival(0.0))
        );
    }

    #[test]
    fn equal_volume_tie_prefers_smallest_vertex() {
        // {2,3} forms first, then {0,1}; both have volume 2.
        let w = wv(&[1.0, 1.0, 1.0, 1.0]);
        let a = |i, j, time| Arrival { i, j, time };
        let arrivals = vec![
            a(2, 3, 0.1),
            a(0, 1, 0.2),
            a(0, 2, 5.0),
            a(0, 3, 5.0),
            a(1, 2, 5.0),
            a(1, 3, 5.0),
        ];
        let r = DynamicGraphRealization::from_arrivals(&w, arrivals).unwrap();
        let snaps = r.giant_path(&[0.15 * 4.0, 0.3 * 4.0]).unwrap();
        assert_eq!(snaps[0].count, 2);
        let mut uf = VolumeUnionFind::new(w.weights());
        uf.union(2, 3);
        uf.union(0, 1);
        assert_eq!(uf.largest().min_vertex, 0);
    }

    #[test]
    fn edge_probability_matches_closed_form() {
        let w = wv(&[1.0, 1.0]);
        let lambda = 1.3;
        let reps = 100_000;
        let hits = (0..reps)
            .filter(|&s| {
                let r = simulate_dynamic_graph(&w, s, DEFAULT_CAP).unwrap();
                r.arrivals()[0].time <= lambda / 2.0
            })
            .count();
        let p = 1.0 - (-lambda * 1.0 * 1.0 / 2.0f64).exp();
        let freq = hits as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * se, "freq={freq} p={p}");
    }
}
