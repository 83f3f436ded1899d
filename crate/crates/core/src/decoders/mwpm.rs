//! Minimum-weight perfect matching over syndrome defects.
//!
//! Every defect gets a private boundary twin; twins are mutually joined at
//! zero cost, so a perfect matching always exists and a defect matched to its
//! own twin is routed to the lattice boundary. Edge weights are shortest-path
//! lengths on the check graph, optionally scaled by a [`GuideTable`].

use crate::bits::BitVec;
use crate::error::Result;
use crate::lattice::{CheckKind, CodeLayout, Syndrome};

use super::blossom::max_weight_matching;
use super::graph::DecodingGraph;
use super::{DecodeResult, Decoder, DecoderKind, EdgeKey, GuideTable};

/// Fixed-point scale for real-valued edge weights handed to the integer matcher.
const WEIGHT_SCALE: f64 = (1u64 << 20) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partner {
    Defect(usize),
    Boundary,
}

/// A pairing of defects (by position in the defect list).
#[derive(Clone, Debug, PartialEq)]
pub struct Pairing {
    pub partners: Vec<Partner>,
    pub total_weight: f64,
}

/// Exact minimum-weight pairing where each defect pairs with another defect or
/// with the boundary. `pair(i, j)` and `boundary(i)` give edge weights.
pub fn min_weight_pairing(k: usize, pair: impl Fn(usize, usize) -> f64, boundary: impl Fn(usize) -> f64) -> Pairing {
    if k == 0 {
        return Pairing { partners: Vec::new(), total_weight: 0.0 };
    }
    let q = |w: f64| (w * WEIGHT_SCALE).round() as i64;
    let mut edges = Vec::with_capacity(k * k);
    let bw: Vec<i64> = (0..k).map(|i| q(boundary(i))).collect();
    for i in 0..k {
        for j in i + 1..k {
            let w = q(pair(i, j));
            // A pair edge at least as heavy as both boundary routes is never needed.
            if w < bw[i] + bw[j] {
                edges.push((i, j, w));
            }
        }
        edges.push((i, k + i, bw[i]));
        for j in i + 1..k {
            edges.push((k + i, k + j, 0));
        }
    }
    let ceiling = edges.iter().map(|e| e.2).max().unwrap_or(0) + 1;
    let flipped: Vec<_> = edges.iter().map(|&(a, b, w)| (a, b, ceiling - w)).collect();
    let mate = max_weight_matching(2 * k, &flipped, true);

    let mut partners = Vec::with_capacity(k);
    let mut total = 0.0;
    for (i, m) in mate.iter().take(k).enumerate() {
        let m = m.expect("boundary twins guarantee a perfect matching");
        if m < k {
            partners.push(Partner::Defect(m));
            if i < m {
                total += pair(i, m);
            }
        } else {
            debug_assert_eq!(m, k + i);
            partners.push(Partner::Boundary);
            total += boundary(i);
        }
    }
    Pairing { partners, total_weight: total }
}

#[derive(Clone, Debug)]
pub struct MwpmDecoder {
    n_data: usize,
    /// Graph for X errors (Z checks) and for Z errors (X checks).
    graphs: [DecodingGraph; 2],
    guide: Option<GuideTable>,
}

impl MwpmDecoder {
    pub fn new(layout: &CodeLayout) -> Self {
        MwpmDecoder {
            n_data: layout.n_data,
            graphs: [
                DecodingGraph::from_checks(layout.detector_matrix(CheckKind::X)),
                DecodingGraph::from_checks(layout.detector_matrix(CheckKind::Z)),
            ],
            guide: None,
        }
    }

    pub fn guided(layout: &CodeLayout, guide: GuideTable) -> Self {
        MwpmDecoder { guide: Some(guide), ..MwpmDecoder::new(layout) }
    }

    pub fn graph(&self, error: CheckKind) -> &DecodingGraph {
        match error {
            CheckKind::X => &self.graphs[0],
            CheckKind::Z => &self.graphs[1],
        }
    }

    fn multiplier(&self, key: EdgeKey) -> f64 {
        self.guide.as_ref().map_or(1.0, |g| g.multiplier(key))
    }

    pub fn pair_weight(&self, error: CheckKind, a: usize, b: usize) -> f64 {
        self.graph(error).distance(a, b) as f64 * self.multiplier(EdgeKey::pair(a, b))
    }

    pub fn boundary_weight(&self, error: CheckKind, a: usize) -> f64 {
        self.graph(error).boundary_distance(a) as f64 * self.multiplier(EdgeKey::Boundary(a))
    }

    /// Minimum-weight pairing of the lit checks in `defects` (check indices).
    pub fn pairing(&self, error: CheckKind, defects: &[usize]) -> Pairing {
        min_weight_pairing(
            defects.len(),
            |i, j| self.pair_weight(error, defects[i], defects[j]),
            |i| self.boundary_weight(error, defects[i]),
        )
    }

    fn decode_half(&self, error: CheckKind, bits: &BitVec) -> BitVec {
        let graph = self.graph(error);
        let defects: Vec<usize> = bits.ones_iter().collect();
        let pairing = self.pairing(error, &defects);
        let mut correction = BitVec::zeros(self.n_data);
        for (i, p) in pairing.partners.iter().enumerate() {
            match *p {
                Partner::Defect(j) if i < j => graph.flip_path(defects[i], defects[j], &mut correction),
                Partner::Defect(_) => {}
                Partner::Boundary => graph.flip_path(defects[i], graph.boundary(), &mut correction),
            }
        }
        correction
    }
}

impl Decoder for MwpmDecoder {
    fn kind(&self) -> DecoderKind {
        if self.guide.is_some() {
            DecoderKind::GuidedMwpm
        } else {
            DecoderKind::Mwpm
        }
    }

    fn decode(&self, syndrome: &Syndrome) -> Result<DecodeResult> {
        crate::error::check_len("s_z", syndrome.s_z.len(), self.graphs[0].n_checks())?;
        crate::error::check_len("s_x", syndrome.s_x.len(), self.graphs[1].n_checks())?;
        let c_x = self.decode_half(CheckKind::X, &syndrome.s_z);
        let c_z = self.decode_half(CheckKind::Z, &syndrome.s_x);
        Ok(DecodeResult::from_halves(self.n_data, syndrome, c_x, c_z, false))
    }
}
