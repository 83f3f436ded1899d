//! Sum-product belief propagation on the Tanner graph, flooding schedule.

use crate::bits::{BitMatrix, BitVec};
use crate::error::{Error, Result};
use crate::lattice::{CheckKind, CodeLayout, Syndrome};

use super::{DecodeResult, Decoder, DecoderKind};

/// Largest |tanh| product kept away from ±1 so `atanh` stays finite.
const TANH_CLAMP: f64 = 1.0 - 1e-15;

/// Sparse Tanner graph of one check matrix.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    n_checks: usize,
    n_bits: usize,
    /// Edge list `(check, bit)`, grouped by check.
    edges: Vec<(usize, usize)>,
    check_edges: Vec<Vec<usize>>,
    bit_edges: Vec<Vec<usize>>,
}

impl TannerGraph {
    pub fn new(h: &BitMatrix) -> Self {
        let n_checks = h.n_rows();
        let n_bits = h.n_cols();
        let mut edges = Vec::new();
        let mut check_edges = vec![Vec::new(); n_checks];
        let mut bit_edges = vec![Vec::new(); n_bits];
        for (c, row) in h.rows().iter().enumerate() {
            for b in row.ones_iter() {
                check_edges[c].push(edges.len());
                bit_edges[b].push(edges.len());
                edges.push((c, b));
            }
        }
        TannerGraph { n_checks, n_bits, edges, check_edges, bit_edges }
    }

    fn syndrome_of(&self, hard: &[bool]) -> Vec<bool> {
        self.check_edges
            .iter()
            .map(|es| es.iter().filter(|&&e| hard[self.edges[e].1]).count() % 2 == 1)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpOutcome {
    pub hard_decision: BitVec,
    /// Posterior log-likelihood ratios `ln P(0)/P(1)` per bit.
    pub posterior_llr: Vec<f64>,
    /// Iterations run; 0 means the all-zero guess already satisfied the syndrome.
    pub iterations: usize,
    pub converged: bool,
}

/// Channel LLR `ln((1 - p) / p)` of a flip probability.
pub fn channel_llr(prior: f64) -> f64 {
    ((1.0 - prior) / prior).ln()
}

/// Runs BP for one check matrix with per-bit channel LLRs. Stops as soon as
/// the hard decision reproduces `syndrome`, or after `max_iters` iterations.
pub fn run_bp(graph: &TannerGraph, syndrome: &BitVec, channel: &[f64], max_iters: usize) -> BpOutcome {
    assert_eq!(syndrome.len(), graph.n_checks);
    assert_eq!(channel.len(), graph.n_bits);
    let target: Vec<bool> = (0..graph.n_checks).map(|c| syndrome.get(c)).collect();
    let mut posterior = channel.to_vec();
    let mut hard = vec![false; graph.n_bits];

    if !target.iter().any(|&s| s) {
        return BpOutcome {
            hard_decision: BitVec::zeros(graph.n_bits),
            posterior_llr: posterior,
            iterations: 0,
            converged: true,
        };
    }

    let mut bit_to_check: Vec<f64> = graph.edges.iter().map(|&(_, b)| channel[b]).collect();
    let mut check_to_bit = vec![0.0; graph.edges.len()];
    let mut converged = false;
    let mut iterations = 0;
    let mut tanh_buf = Vec::new();

    while iterations < max_iters {
        iterations += 1;
        for (c, es) in graph.check_edges.iter().enumerate() {
            tanh_buf.clear();
            tanh_buf.extend(es.iter().map(|&e| (0.5 * bit_to_check[e]).tanh()));
            let sign = if target[c] { -1.0 } else { 1.0 };
            for (i, &e) in es.iter().enumerate() {
                let prod: f64 = tanh_buf
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, t)| t)
                    .product();
                check_to_bit[e] = sign * 2.0 * prod.clamp(-TANH_CLAMP, TANH_CLAMP).atanh();
            }
        }
        for (b, es) in graph.bit_edges.iter().enumerate() {
            let total = channel[b] + es.iter().map(|&e| check_to_bit[e]).sum::<f64>();
            posterior[b] = total;
            hard[b] = total < 0.0;
            for &e in es {
                bit_to_check[e] = total - check_to_bit[e];
            }
        }
        if graph.syndrome_of(&hard) == target {
            converged = true;
            break;
        }
    }

    BpOutcome { hard_decision: BitVec::from_bools(&hard), posterior_llr: posterior, iterations, converged }
}

#[derive(Clone, Debug)]
pub struct BpDecoder {
    n_data: usize,
    graphs: [TannerGraph; 2],
    prior: f64,
    max_iters: usize,
    decimation_rounds: usize,
}

/// Channel LLR pinning a decimated bit to "flipped".
const PINNED_LLR: f64 = -30.0;

/// BP followed, while unconverged, by up to `rounds` decimation steps: the
/// free bit with the lowest posterior LLR is pinned to 1 and BP restarts.
/// Degenerate twins (two qubits sharing their only check) have exact marginals
/// of at most 1/2, so plain marginal decisions cannot resolve them.
pub fn run_bp_decimated(graph: &TannerGraph, syndrome: &BitVec, prior: f64, max_iters: usize, rounds: usize) -> BpOutcome {
    let mut channel = vec![channel_llr(prior); graph.n_bits];
    let mut out = run_bp(graph, syndrome, &channel, max_iters);
    let mut total_iters = out.iterations;
    for _ in 0..rounds {
        if out.converged {
            break;
        }
        let pick = (0..graph.n_bits)
            .filter(|&b| channel[b] != PINNED_LLR)
            .min_by(|&a, &b| out.posterior_llr[a].total_cmp(&out.posterior_llr[b]).then(a.cmp(&b)));
        let Some(bit) = pick else { break };
        channel[bit] = PINNED_LLR;
        out = run_bp(graph, syndrome, &channel, max_iters);
        total_iters += out.iterations;
    }
    out.iterations = total_iters;
    out
}

impl BpDecoder {
    pub fn new(layout: &CodeLayout, prior: f64, max_iters: usize) -> Result<Self> {
        Self::with_decimation(layout, prior, max_iters, 1)
    }

    pub fn with_decimation(layout: &CodeLayout, prior: f64, max_iters: usize, decimation_rounds: usize) -> Result<Self> {
        if !(prior > 0.0 && prior < 0.5) {
            return Err(Error::InvalidParameter(format!("BP prior {prior} must lie in (0, 0.5)")));
        }
        Ok(BpDecoder {
            n_data: layout.n_data,
            graphs: [
                TannerGraph::new(layout.detector_matrix(CheckKind::X)),
                TannerGraph::new(layout.detector_matrix(CheckKind::Z)),
            ],
            prior,
            max_iters,
            decimation_rounds,
        })
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }
}

impl Decoder for BpDecoder {
    fn kind(&self) -> DecoderKind {
        DecoderKind::Bp
    }

    fn decode(&self, syndrome: &Syndrome) -> Result<DecodeResult> {
        crate::error::check_len("s_z", syndrome.s_z.len(), self.graphs[0].n_checks)?;
        crate::error::check_len("s_x", syndrome.s_x.len(), self.graphs[1].n_checks)?;
        let x = run_bp_decimated(&self.graphs[0], &syndrome.s_z, self.prior, self.max_iters, self.decimation_rounds);
        let z = run_bp_decimated(&self.graphs[1], &syndrome.s_x, self.prior, self.max_iters, self.decimation_rounds);
        let failed = !(x.converged && z.converged);
        Ok(DecodeResult::from_halves(self.n_data, syndrome, x.hard_decision, z.hard_decision, failed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_code;

    #[test]
    fn rejects_bad_prior() {
        let code = build_code(3).unwrap();
        for p in [0.0, 0.5, 0.7, -0.1] {
            assert!(BpDecoder::new(&code, p, 10).is_err());
        }
    }

    #[test]
    fn trivial_syndrome_converges_immediately() {
        let code = build_code(3).unwrap();
        let g = TannerGraph::new(&code.h_z);
        let out = run_bp(&g, &BitVec::zeros(4), &[channel_llr(0.1); 9], 50);
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
        assert!(out.hard_decision.is_zero());
    }

    #[test]
    fn symmetric_pair_cannot_be_resolved() {
        // One check on two bits with a lit syndrome: both bits are equally
        // likely, the posterior is exactly 1/2 and no hard decision satisfies it.
        let h = BitMatrix::from_rows(vec![BitVec::parse("11").unwrap()]);
        let out = run_bp(&TannerGraph::new(&h), &BitVec::parse("1").unwrap(), &[channel_llr(0.1); 2], 20);
        assert!(!out.converged);
        assert_eq!(out.iterations, 20);
        assert!(out.hard_decision.is_zero());
    }
}
