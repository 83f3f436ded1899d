//! Check graph for one Pauli type: checks are nodes, data qubits are edges.
//!
//! A qubit touched by two checks joins them; a qubit touched by one check joins
//! it to the virtual boundary node (index `n_checks`).

use std::collections::VecDeque;

use crate::bits::{BitMatrix, BitVec};

const UNSEEN: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub qubit: usize,
}

#[derive(Clone, Debug)]
pub struct DecodingGraph {
    n_checks: usize,
    n_qubits: usize,
    edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    /// `dist[src * n_nodes + dst]`, hop counts.
    dist: Vec<u32>,
    /// Edge used to enter `dst` on a BFS tree rooted at `src`.
    parent_edge: Vec<u32>,
}

impl DecodingGraph {
    /// Builds the graph from a detector matrix (rows are checks).
    pub fn from_checks(h: &BitMatrix) -> Self {
        let n_checks = h.n_rows();
        let n_qubits = h.n_cols();
        let boundary = n_checks;
        let mut edges = Vec::with_capacity(n_qubits);
        for q in 0..n_qubits {
            let touching: Vec<usize> = h.column(q).ones_iter().collect();
            let edge = match touching.as_slice() {
                [a] => GraphEdge { a: *a, b: boundary, qubit: q },
                [a, b] => GraphEdge { a: *a, b: *b, qubit: q },
                other => panic!("qubit {q} touches {} checks; expected 1 or 2", other.len()),
            };
            edges.push(edge);
        }
        let n_nodes = n_checks + 1;
        let mut adjacency = vec![Vec::new(); n_nodes];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.a].push((e.b, k));
            adjacency[e.b].push((e.a, k));
        }

        let mut dist = vec![UNSEEN; n_nodes * n_nodes];
        let mut parent_edge = vec![UNSEEN; n_nodes * n_nodes];
        let mut queue = VecDeque::new();
        for src in 0..n_nodes {
            let row = src * n_nodes;
            dist[row + src] = 0;
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                // Paths never pass through the boundary node.
                if u == boundary && u != src {
                    continue;
                }
                for &(v, k) in &adjacency[u] {
                    if dist[row + v] == UNSEEN {
                        dist[row + v] = dist[row + u] + 1;
                        parent_edge[row + v] = k as u32;
                        queue.push_back(v);
                    }
                }
            }
        }
        DecodingGraph { n_checks, n_qubits, edges, adjacency, dist, parent_edge }
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn boundary(&self) -> usize {
        self.n_checks
    }

    pub fn n_nodes(&self) -> usize {
        self.n_checks + 1
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn neighbours(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.dist[a * self.n_nodes() + b]
    }

    pub fn boundary_distance(&self, a: usize) -> u32 {
        self.distance(a, self.boundary())
    }

    /// Flips, in `out`, every qubit on the stored shortest path from `src` to `dst`.
    pub fn flip_path(&self, src: usize, dst: usize, out: &mut BitVec) {
        let row = src * self.n_nodes();
        let mut node = dst;
        while node != src {
            let k = self.parent_edge[row + node];
            assert!(k != UNSEEN, "no path from {src} to {dst}");
            let e = self.edges[k as usize];
            out.flip(e.qubit);
            node = if e.a == node { e.b } else { e.a };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_code;

    #[test]
    fn paths_reproduce_their_endpoints() {
        let code = build_code(5).unwrap();
        let g = DecodingGraph::from_checks(&code.h_z);
        for a in 0..g.n_nodes() {
            for b in 0..g.n_nodes() {
                let mut flips = BitVec::zeros(code.n_data);
                g.flip_path(a, b, &mut flips);
                assert_eq!(flips.weight() as u32, g.distance(a, b));
                let s = code.h_z.mul_vec(&flips);
                let mut expect = BitVec::zeros(g.n_checks());
                for node in [a, b] {
                    if node != g.boundary() {
                        expect.flip(node);
                    }
                }
                if a == b {
                    expect = BitVec::zeros(g.n_checks());
                }
                assert_eq!(s, expect, "path {a} -> {b}");
            }
        }
    }

    #[test]
    fn distances_are_symmetric_and_connected() {
        let code = build_code(7).unwrap();
        let g = DecodingGraph::from_checks(&code.h_x);
        for a in 0..g.n_nodes() {
            for b in 0..g.n_nodes() {
                assert_eq!(g.distance(a, b), g.distance(b, a));
                assert!(g.distance(a, b) < UNSEEN);
            }
        }
        // Matching needs at most d/2 + 1 hops to reach a boundary.
        for a in 0..g.n_checks() {
            assert!(g.boundary_distance(a) as usize <= 7 / 2 + 1);
        }
    }
}
