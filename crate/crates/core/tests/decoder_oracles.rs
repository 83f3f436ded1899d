//! Decoders against brute-force references.

use qtb_core::bits::{BitMatrix, BitVec};
use qtb_core::decoders::bp::{channel_llr, run_bp, TannerGraph};
use qtb_core::decoders::{
    build_decoder, Decoder, DecoderKind, DecoderSettings, EdgeKey, GuideTable, MwpmDecoder, UnionFindDecoder,
};
use qtb_core::lattice::{build_code, extract_syndrome, logical_failure, residual, CheckKind, ErrorState, Syndrome};
use qtb_core::rng::CounterStream;

/// Minimum total weight over all ways to pair defects with each other or the boundary.
fn exhaustive_pairing(k: usize, pair: &dyn Fn(usize, usize) -> f64, boundary: &dyn Fn(usize) -> f64) -> f64 {
    fn go(left: u32, pair: &dyn Fn(usize, usize) -> f64, boundary: &dyn Fn(usize) -> f64) -> f64 {
        if left == 0 {
            return 0.0;
        }
        let i = left.trailing_zeros() as usize;
        let rest = left & !(1 << i);
        let mut best = boundary(i) + go(rest, pair, boundary);
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            best = best.min(pair(i, j) + go(rest & !(1 << j), pair, boundary));
        }
        best
    }
    go(((1u64 << k) - 1) as u32, pair, boundary)
}

fn check_exact(dec: &MwpmDecoder, kind: CheckKind, defects: &[usize]) {
    let got = dec.pairing(kind, defects).total_weight;
    let want = exhaustive_pairing(
        defects.len(),
        &|i, j| dec.pair_weight(kind, defects[i], defects[j]),
        &|i| dec.boundary_weight(kind, defects[i]),
    );
    assert!((got - want).abs() < 1e-9, "defects {defects:?}: {got} vs {want}");
}

#[test]
fn mwpm_exact_on_all_two_qubit_errors_d3() {
    let code = build_code(3).unwrap();
    let dec = MwpmDecoder::new(&code);
    let n = code.n_data;
    for a in 0..n {
        for b in a..n {
            let e = BitVec::from_support(n, &if a == b { vec![a] } else { vec![a, b] });
            for kind in [CheckKind::X, CheckKind::Z] {
                let defects: Vec<usize> = code.detector_matrix(kind).mul_vec(&e).ones_iter().collect();
                check_exact(&dec, kind, &defects);
            }
        }
    }
}

#[test]
fn mwpm_exact_on_random_syndromes_d5() {
    let code = build_code(5).unwrap();
    let dec = MwpmDecoder::new(&code);
    let mut rng = CounterStream::new(23);
    let m = code.m_z();
    for _ in 0..1000 {
        let k = 1 + (rng.next_u64() % 8) as usize;
        let mut defects: Vec<usize> = Vec::new();
        while defects.len() < k {
            let c = (rng.next_u64() % m as u64) as usize;
            if !defects.contains(&c) {
                defects.push(c);
            }
        }
        defects.sort_unstable();
        let kind = if rng.bernoulli(0.5) { CheckKind::X } else { CheckKind::Z };
        check_exact(&dec, kind, &defects);
    }
}

#[test]
fn guided_matching_stays_exact_and_respects_multipliers() {
    let code = build_code(5).unwrap();
    let plain = MwpmDecoder::new(&code);
    let mut rng = CounterStream::new(31);
    for _ in 0..300 {
        let mut defects: Vec<usize> = (0..code.m_z()).filter(|_| rng.bernoulli(0.25)).take(8).collect();
        defects.dedup();
        if defects.len() < 2 {
            continue;
        }
        let (a, b) = (defects[0], defects[1]);
        let mut guide = GuideTable::new();
        guide.insert(EdgeKey::pair(a, b), 2.0).unwrap();
        guide.insert(EdgeKey::Boundary(defects[defects.len() - 1]), 0.5).unwrap();
        let guided = MwpmDecoder::guided(&code, guide);
        check_exact(&guided, CheckKind::X, &defects);
        assert_eq!(guided.pair_weight(CheckKind::X, a, b), 2.0 * plain.pair_weight(CheckKind::X, a, b));
    }
}

#[test]
fn all_decoders_correct_weight_one_errors_d3() {
    let code = build_code(3).unwrap();
    let mut settings = DecoderSettings::default();
    let mut guide = GuideTable::new();
    guide.insert(EdgeKey::pair(0, 1), 1.5).unwrap();
    settings.guide = Some(guide);
    for kind in DecoderKind::ALL {
        let dec = build_decoder(kind, &code, &settings).unwrap();
        for q in 0..code.n_data {
            for (x, z) in [(true, false), (false, true), (true, true)] {
                let mut e = ErrorState::zeros(code.n_data);
                e.e_x.set(q, x);
                e.e_z.set(q, z);
                let s = extract_syndrome(&code, &e).unwrap();
                let r = dec.decode(&s).unwrap();
                assert!(!r.failed, "{kind} q={q}");
                assert_eq!(extract_syndrome(&code, &r.correction).unwrap(), s, "{kind} q={q}");
                assert!(!logical_failure(&code, &residual(&e, &r.correction).unwrap()).unwrap(), "{kind} q={q}");
            }
        }
    }
}

#[test]
fn union_find_agrees_with_matching_on_weight_two_errors_d3() {
    let code = build_code(3).unwrap();
    let mwpm = MwpmDecoder::new(&code);
    let uf = UnionFindDecoder::new(&code);
    let n = code.n_data;
    let (mut agree, mut total) = (0, 0);
    for a in 0..n {
        for b in 0..n {
            // X pair (a < b), Z pair (a < b), and mixed X at a with Z at b.
            let mut cases = vec![];
            if a < b {
                let v = BitVec::from_support(n, &[a, b]);
                cases.push(ErrorState { e_x: v.clone(), ..ErrorState::zeros(n) });
                cases.push(ErrorState { e_z: v, ..ErrorState::zeros(n) });
            }
            if a != b {
                cases.push(ErrorState {
                    e_x: BitVec::from_support(n, &[a]),
                    e_z: BitVec::from_support(n, &[b]),
                    erased: BitVec::zeros(n),
                });
            }
            for e in cases {
                let s = extract_syndrome(&code, &e).unwrap();
                let fail = |d: &dyn Decoder| logical_failure(&code, &residual(&e, &d.decode(&s).unwrap().correction).unwrap()).unwrap();
                total += 1;
                agree += (fail(&mwpm) == fail(&uf)) as usize;
            }
        }
    }
    let rate = agree as f64 / total as f64;
    assert!(rate >= 0.95, "agreement {agree}/{total}");
}

#[test]
fn decoders_reproduce_syndromes_when_not_failed() {
    let code = build_code(5).unwrap();
    let settings = DecoderSettings { bp_prior: 0.05, ..DecoderSettings::default() };
    let mut rng = CounterStream::new(41);
    let decs: Vec<Box<dyn Decoder>> = [DecoderKind::Mwpm, DecoderKind::UnionFind, DecoderKind::Bp]
        .iter()
        .map(|&k| build_decoder(k, &code, &settings).unwrap())
        .collect();
    for _ in 0..300 {
        let mut e = ErrorState::zeros(code.n_data);
        for q in 0..code.n_data {
            e.e_x.set(q, rng.bernoulli(0.06));
            e.e_z.set(q, rng.bernoulli(0.06));
        }
        let s = extract_syndrome(&code, &e).unwrap();
        for dec in &decs {
            let r = dec.decode(&s).unwrap();
            assert_eq!(r.defect_count, s.defect_count());
            assert_eq!(r.correction_weight, r.correction.weight());
            if !r.failed {
                assert_eq!(extract_syndrome(&code, &r.correction).unwrap(), s, "{}", dec.kind());
            }
            assert_eq!(dec.decode(&s).unwrap(), r, "decoding is a pure function");
        }
    }
}

#[test]
fn shape_mismatch_is_rejected() {
    let code = build_code(3).unwrap();
    let other = build_code(5).unwrap();
    let s = Syndrome::zeros(&other);
    for kind in [DecoderKind::Mwpm, DecoderKind::UnionFind, DecoderKind::Bp] {
        let dec = build_decoder(kind, &code, &DecoderSettings::default()).unwrap();
        assert!(dec.decode(&s).is_err());
    }
}

#[test]
fn bp_is_exact_on_a_single_check() {
    // Two bits under one lit check: exact posterior from the two consistent patterns.
    let h = BitMatrix::from_rows(vec![BitVec::parse("11").unwrap()]);
    let graph = TannerGraph::new(&h);
    for (p1, p2) in [(0.3, 0.1), (0.05, 0.2), (0.4, 0.01)] {
        let out = run_bp(&graph, &BitVec::parse("1").unwrap(), &[channel_llr(p1), channel_llr(p2)], 10);
        let w10 = p1 * (1.0 - p2);
        let w01 = (1.0 - p1) * p2;
        let exact = [(w01 / w10).ln(), (w10 / w01).ln()];
        for b in 0..2 {
            assert!((out.posterior_llr[b] - exact[b]).abs() < 1e-9, "{:?} vs {exact:?}", out.posterior_llr);
        }
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
    }
}

#[test]
fn bp_reports_failure_when_stuck() {
    let h = BitMatrix::from_rows(vec![BitVec::parse("11").unwrap()]);
    let out = run_bp(&TannerGraph::new(&h), &BitVec::parse("1").unwrap(), &[channel_llr(0.1); 2], 7);
    assert!(!out.converged);
    assert_eq!(out.iterations, 7);
}
