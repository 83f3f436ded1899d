//! GKP digitization against numeric integration, channel frequencies, and seed mixing.

use std::collections::HashSet;

use qtb_core::lattice::build_code;
use qtb_core::noise::{gkp_digitize, gkp_flip_probability, sample, NoiseConfig};
use qtb_core::rng::{mix_seed, CounterStream, Lane, SeedContext};

/// Gaussian mass of the odd rounding bins by composite Simpson integration.
fn odd_bin_mass(sigma: f64) -> f64 {
    let lambda = std::f64::consts::PI.sqrt();
    let pdf = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let simpson = |a: f64, b: f64| {
        let n = 4000;
        let h = (b - a) / n as f64;
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let mut total = 0.0;
    let mut n = 1.0;
    while (n - 0.5) * lambda < 40.0 * sigma {
        total += 2.0 * simpson((n - 0.5) * lambda, (n + 0.5) * lambda);
        n += 2.0;
    }
    total
}

#[test]
fn analytic_flip_probability_matches_quadrature() {
    for sigma in [0.1, 0.2, 0.35, 0.5, 0.8, 1.5] {
        let a = gkp_flip_probability(sigma);
        let q = odd_bin_mass(sigma);
        assert!((a - q).abs() < 1e-9 * q.max(1e-300) + 1e-15, "σ={sigma}: {a} vs {q}");
    }
    assert!((odd_bin_mass(0.5) - 0.0763).abs() < 5e-5);
}

#[test]
fn empirical_flip_frequency() {
    for (seed, sigma) in [(1u64, 0.2), (2, 0.35), (3, 0.5)] {
        let mut rng = CounterStream::new(seed);
        let draws = 400_000;
        let hits = (0..draws).filter(|_| gkp_digitize(sigma * rng.standard_normal())).count();
        let p = odd_bin_mass(sigma);
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let f = hits as f64 / draws as f64;
        assert!((f - p).abs() <= 3.0 * se + 1e-12, "σ={sigma}: {f} vs {p} (se {se})");
    }
}

#[test]
fn channel_rates_match_configuration() {
    let code = build_code(5).unwrap();
    let n = code.n_data as f64;
    let trials = 4000;
    let count = |cfg: &NoiseConfig| {
        let (mut x, mut z, mut lost, mut meas) = (0usize, 0usize, 0usize, 0usize);
        for t in 0..trials {
            let (e, m) = sample(&code, cfg, &SeedContext::new(9, 5, 0, t));
            x += e.e_x.weight();
            z += e.e_z.weight();
            lost += e.erased.weight();
            meas += m.defect_count();
        }
        let per = |c: usize, m: f64| c as f64 / (trials as f64 * m);
        (per(x, n), per(z, n), per(lost, n), per(meas, (code.m_x() + code.m_z()) as f64))
    };
    let (x, z, _, _) = count(&NoiseConfig::pauli(0.1));
    assert!((x - 0.1).abs() < 0.005 && (z - 0.1).abs() < 0.005);

    let cfg = NoiseConfig { p_gate: 0.05, p_meas: 0.03, ..NoiseConfig::gkp(0.0) };
    let (x, z, lost, meas) = count(&cfg);
    assert!((x - 0.05).abs() < 0.004 && (z - 0.05).abs() < 0.004, "{x} {z}");
    assert_eq!(lost, 0.0);
    assert!((meas - 0.03).abs() < 0.003, "{meas}");

    let cfg = NoiseConfig { p_loss: 0.2, ..NoiseConfig::gkp(0.0) };
    let (x, _, lost, _) = count(&cfg);
    assert!((lost - 0.2).abs() < 0.006, "{lost}");
    assert!((x - 0.1).abs() < 0.006, "lost qubits flip with probability 1/2: {x}");
}

#[test]
fn seeds_do_not_collide() {
    let mut seen = HashSet::new();
    for d in [3usize, 5, 7] {
        for sweep in 0..20 {
            for trial in 0..500u64 {
                for lane in Lane::ALL {
                    assert!(seen.insert(mix_seed(&SeedContext::new(123, d, sweep, trial), lane)));
                }
            }
        }
    }
}

#[test]
fn seed_mixing_avalanches() {
    let mut total = 0u64;
    let mut samples = 0u64;
    for base in 0..64u64 {
        let ctx = SeedContext::new(base * 0x1234_5678_9ABC, 5, 3, 99);
        let reference = mix_seed(&ctx, Lane::Q);
        for bit in 0..64 {
            let flipped = SeedContext { base_seed: ctx.base_seed ^ (1 << bit), ..ctx };
            total += (mix_seed(&flipped, Lane::Q) ^ reference).count_ones() as u64;
            samples += 1;
        }
        let next_trial = SeedContext { trial_index: ctx.trial_index + 1, ..ctx };
        total += (mix_seed(&next_trial, Lane::Q) ^ reference).count_ones() as u64;
        samples += 1;
    }
    let mean = total as f64 / samples as f64;
    assert!((mean - 32.0).abs() < 1.0, "mean flipped bits {mean}");
}

#[test]
fn lanes_are_independent_streams() {
    let ctx = SeedContext::new(7, 3, 1, 2);
    let firsts: HashSet<u64> = Lane::ALL.iter().map(|&l| ctx.stream(l).next_u64()).collect();
    assert_eq!(firsts.len(), Lane::ALL.len());
}
