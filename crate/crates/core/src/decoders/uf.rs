//! Union-Find decoder: cluster growth in half-edge steps, then peeling.

use crate::bits::BitVec;
use crate::error::Result;
use crate::lattice::{CheckKind, CodeLayout, Syndrome};

use super::graph::DecodingGraph;
use super::{DecodeResult, Decoder, DecoderKind};

#[derive(Clone, Debug)]
pub struct UnionFindDecoder {
    n_data: usize,
    graphs: [DecodingGraph; 2],
}

struct Clusters {
    parent: Vec<usize>,
    size: Vec<usize>,
    odd: Vec<bool>,
    boundary: Vec<bool>,
    members: Vec<Vec<usize>>,
}

impl Clusters {
    fn new(n_nodes: usize, boundary_node: usize, defects: &[bool]) -> Self {
        let mut boundary = vec![false; n_nodes];
        boundary[boundary_node] = true;
        Clusters {
            parent: (0..n_nodes).collect(),
            size: vec![1; n_nodes],
            odd: defects.to_vec(),
            boundary,
            members: (0..n_nodes).map(|v| vec![v]).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] || (self.size[ra] == self.size[rb] && rb < ra) {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.odd[ra] ^= self.odd[rb];
        self.boundary[ra] |= self.boundary[rb];
        let moved = std::mem::take(&mut self.members[rb]);
        self.members[ra].extend(moved);
    }

    fn is_active(&mut self, v: usize) -> bool {
        let r = self.find(v);
        self.odd[r] && !self.boundary[r]
    }
}

impl UnionFindDecoder {
    pub fn new(layout: &CodeLayout) -> Self {
        UnionFindDecoder {
            n_data: layout.n_data,
            graphs: [
                DecodingGraph::from_checks(layout.detector_matrix(CheckKind::X)),
                DecodingGraph::from_checks(layout.detector_matrix(CheckKind::Z)),
            ],
        }
    }

    /// Returns the correction and whether peeling left an unmatched defect.
    fn decode_half(&self, graph: &DecodingGraph, bits: &BitVec) -> (BitVec, bool) {
        let n_nodes = graph.n_nodes();
        let boundary = graph.boundary();
        let mut defects = vec![false; n_nodes];
        for c in bits.ones_iter() {
            defects[c] = true;
        }
        let mut clusters = Clusters::new(n_nodes, boundary, &defects);
        let mut support = vec![0u8; graph.edges().len()];

        // Growth: every odd, boundary-free cluster grows all its frontier edges
        // by half an edge per round; full edges merge their endpoints.
        loop {
            let mut roots: Vec<usize> = (0..graph.n_checks())
                .filter(|&c| defects[c])
                .filter_map(|c| clusters.is_active(c).then(|| clusters.find(c)))
                .collect();
            roots.sort_unstable();
            roots.dedup();
            if roots.is_empty() {
                break;
            }
            let mut fused = Vec::new();
            for root in roots {
                for &v in &clusters.members[root] {
                    for &(_, e) in graph.neighbours(v) {
                        if support[e] < 2 {
                            support[e] += 1;
                            if support[e] == 2 {
                                fused.push(e);
                            }
                        }
                    }
                }
            }
            for e in fused {
                let edge = graph.edges()[e];
                clusters.union(edge.a, edge.b);
            }
        }

        // Peeling: every boundary edge leads to its own boundary vertex, so a
        // spanning tree may hold at most one. Each grown component is peeled
        // once per candidate root and the lightest valid result is kept.
        let n_checks = graph.n_checks();
        let internal = |e: usize| {
            let edge = graph.edges()[e];
            support[e] == 2 && edge.a != boundary && edge.b != boundary
        };
        let mut component = vec![usize::MAX; n_checks];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for start in 0..n_checks {
            if component[start] != usize::MAX {
                continue;
            }
            let id = members.len();
            component[start] = id;
            let mut list = vec![start];
            let mut head = 0;
            while head < list.len() {
                let u = list[head];
                head += 1;
                for &(v, e) in graph.neighbours(u) {
                    if internal(e) && component[v] == usize::MAX {
                        component[v] = id;
                        list.push(v);
                    }
                }
            }
            members.push(list);
        }
        let mut exits: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
        for &(c, e) in graph.neighbours(boundary) {
            if support[e] == 2 {
                exits[component[c]].push(e);
            }
        }

        let mut correction = BitVec::zeros(self.n_data);
        let mut pending = defects;
        for (id, list) in members.iter().enumerate() {
            if !list.iter().any(|&c| pending[c]) {
                continue;
            }
            let odd = list.iter().filter(|&&c| pending[c]).count() % 2 == 1;
            // Candidate roots: each boundary exit, or none when parity is even.
            let mut candidates: Vec<Option<usize>> = exits[id].iter().map(|&e| Some(e)).collect();
            if !odd || candidates.is_empty() {
                candidates.insert(0, None);
            }
            let best = candidates
                .into_iter()
                .map(|exit| peel(graph, list, exit, &internal, &pending))
                .min_by_key(|(flips, left)| (*left, flips.len()))
                .expect("at least one candidate");
            for q in best.0 {
                correction.flip(q);
            }
            for &c in list {
                pending[c] = false;
            }
            if best.1 {
                pending[list[0]] = true;
            }
        }
        let failed = pending[..n_checks].iter().any(|&p| p);
        (correction, failed)
    }
}

/// Peels one grown component along a BFS spanning tree. The tree is rooted at
/// the check behind `exit` (a boundary edge) or at the component's first check.
/// Returns the flipped qubits and whether a defect was left unmatched.
fn peel(
    graph: &DecodingGraph,
    list: &[usize],
    exit: Option<usize>,
    internal: &dyn Fn(usize) -> bool,
    pending: &[bool],
) -> (Vec<usize>, bool) {
    let boundary = graph.boundary();
    let root = match exit {
        None => list[0],
        Some(e) => {
            let edge = graph.edges()[e];
            if edge.a == boundary { edge.b } else { edge.a }
        }
    };
    let mut tree_edge = vec![usize::MAX; graph.n_nodes()];
    let mut seen = vec![false; graph.n_nodes()];
    let mut charge = vec![false; graph.n_nodes()];
    for &c in list {
        charge[c] = pending[c];
    }
    seen[root] = true;
    tree_edge[root] = exit.unwrap_or(usize::MAX);
    let mut order = vec![root];
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &(v, e) in graph.neighbours(u) {
            if internal(e) && !seen[v] {
                seen[v] = true;
                tree_edge[v] = e;
                order.push(v);
            }
        }
    }
    let mut flips = Vec::new();
    for &v in order.iter().rev() {
        let e = tree_edge[v];
        if e == usize::MAX || !charge[v] {
            continue;
        }
        let edge = graph.edges()[e];
        let parent = if edge.a == v { edge.b } else { edge.a };
        flips.push(edge.qubit);
        charge[v] = false;
        charge[parent] ^= true;
    }
    (flips, charge[root])
}

impl Decoder for UnionFindDecoder {
    fn kind(&self) -> DecoderKind {
        DecoderKind::UnionFind
    }

    fn decode(&self, syndrome: &Syndrome) -> Result<DecodeResult> {
        crate::error::check_len("s_z", syndrome.s_z.len(), self.graphs[0].n_checks())?;
        crate::error::check_len("s_x", syndrome.s_x.len(), self.graphs[1].n_checks())?;
        let (c_x, fx) = self.decode_half(&self.graphs[0], &syndrome.s_z);
        let (c_z, fz) = self.decode_half(&self.graphs[1], &syndrome.s_x);
        Ok(DecodeResult::from_halves(self.n_data, syndrome, c_x, c_z, fx || fz))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_code, extract_syndrome, logical_failure, residual, ErrorState};
    use crate::rng::CounterStream;

    #[test]
    fn empty_syndrome() {
        let code = build_code(3).unwrap();
        let r = UnionFindDecoder::new(&code).decode(&Syndrome::zeros(&code)).unwrap();
        assert_eq!(r.correction_weight, 0);
        assert!(!r.failed);
    }

    #[test]
    fn corrects_single_errors() {
        for d in [3, 5, 7] {
            let code = build_code(d).unwrap();
            let dec = UnionFindDecoder::new(&code);
            for q in 0..code.n_data {
                let mut e = ErrorState::zeros(code.n_data);
                e.e_x.set(q, true);
                e.e_z.set(q, true);
                let s = extract_syndrome(&code, &e).unwrap();
                let r = dec.decode(&s).unwrap();
                assert!(!r.failed);
                assert!(!logical_failure(&code, &residual(&e, &r.correction).unwrap()).unwrap(), "d={d} q={q}");
            }
        }
    }

    #[test]
    fn always_reproduces_random_syndromes() {
        let code = build_code(7).unwrap();
        let dec = UnionFindDecoder::new(&code);
        let mut rng = CounterStream::new(99);
        for _ in 0..500 {
            let mut s = Syndrome::zeros(&code);
            for i in 0..code.m_z() {
                if rng.bernoulli(0.2) {
                    s.s_z.flip(i);
                }
                if rng.bernoulli(0.2) {
                    s.s_x.flip(i);
                }
            }
            let r = dec.decode(&s).unwrap();
            assert!(!r.failed);
            assert_eq!(extract_syndrome(&code, &r.correction).unwrap(), s);
        }
    }
}
