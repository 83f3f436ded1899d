//! Binomial estimators for logical error rates and the summaries built on them.
//!
//! Bootstrap routines resample each point's failure count as
//! `k' ~ Binomial(N, k/N)`. Every resample draws from its own generator seeded
//! by mixing `(seed, resample index)`, so results do not depend on how
//! resamples are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::mix_step;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub trials: u64,
    pub failures: u64,
    pub ler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// A sweep coordinate paired with its estimate.
pub type CurvePoint = (f64, PointEstimate);

/// Wilson score interval at 95%, clamped to [0, 1].
pub fn wilson_ci(k: u64, n: u64) -> Result<PointEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("Wilson interval needs N >= 1".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("failures {k} exceed trials {n}")));
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let den = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / den;
    let half = Z95 / den * ((p * (1.0 - p) + z2 / (4.0 * nf)) / nf).sqrt();
    Ok(PointEstimate {
        trials: n,
        failures: k,
        ler: p,
        ci_low: (centre - half).max(0.0).min(p),
        ci_high: (centre + half).min(1.0).max(p),
    })
}

fn check_grid(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} points vs {}", a.len(), b.len())));
    }
    if let Some(i) = a.iter().zip(b).position(|(x, y)| x.to_bits() != y.to_bits()) {
        return Err(Error::GridMismatch(format!("coordinate {i}: {} vs {}", a[i], b[i])));
    }
    Ok(())
}

fn grid_of(curve: &[CurvePoint]) -> Vec<f64> {
    curve.iter().map(|p| p.0).collect()
}

/// Piecewise-linear crossing of two curves on a shared grid: the lowest `x`
/// where `ler1 - ler2` changes sign. `None` when it never does.
pub fn crossing(curve1: &[(f64, f64)], curve2: &[(f64, f64)]) -> Result<Option<f64>> {
    let xs: Vec<f64> = curve1.iter().map(|p| p.0).collect();
    check_grid(&xs, &curve2.iter().map(|p| p.0).collect::<Vec<_>>())?;
    if xs.len() < 2 {
        return Err(Error::GridMismatch("crossing needs at least two grid points".into()));
    }
    let delta: Vec<f64> = curve1.iter().zip(curve2).map(|(a, b)| a.1 - b.1).collect();
    Ok(first_crossing(&xs, &delta))
}

fn first_crossing(xs: &[f64], delta: &[f64]) -> Option<f64> {
    for k in 0..xs.len() {
        if delta[k] == 0.0 {
            return Some(xs[k]);
        }
        if k + 1 < xs.len() && delta[k] * delta[k + 1] < 0.0 {
            let t = delta[k] / (delta[k] - delta[k + 1]);
            return Some(xs[k] + (xs[k + 1] - xs[k]) * t);
        }
    }
    None
}

/// Nearest-rank quantile of sorted data; `None` when empty.
pub fn nearest_rank(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

fn resample_rng(seed: u64, r: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_step(seed, r as u64))
}

fn resample_ler(est: &PointEstimate, rng: &mut ChaCha8Rng) -> f64 {
    if est.trials == 0 {
        return f64::NAN;
    }
    let p = est.failures as f64 / est.trials as f64;
    let k = Binomial::new(est.trials, p).expect("p is a valid probability").sample(rng);
    k as f64 / est.trials as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingSummary {
    pub decoder: String,
    pub pair: (usize, usize),
    pub median: Option<f64>,
    pub q05: Option<f64>,
    pub q95: Option<f64>,
    pub valid_count: usize,
    pub total_resamples: usize,
}

/// Bootstrap distribution of the crossing between the curves of two distances.
pub fn bootstrap_crossings(
    decoder: &str,
    pair: (usize, usize),
    small: &[CurvePoint],
    large: &[CurvePoint],
    resamples: usize,
    seed: u64,
) -> Result<CrossingSummary> {
    let xs = grid_of(small);
    check_grid(&xs, &grid_of(large))?;
    if resamples == 0 {
        return Err(Error::InvalidParameter("bootstrap needs at least one resample".into()));
    }
    let samples: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = resample_rng(seed, r);
            let a: Vec<f64> = small.iter().map(|p| resample_ler(&p.1, &mut rng)).collect();
            let b: Vec<f64> = large.iter().map(|p| resample_ler(&p.1, &mut rng)).collect();
            let delta: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            first_crossing(&xs, &delta)
        })
        .collect();
    let mut valid: Vec<f64> = samples.into_iter().flatten().collect();
    valid.sort_by(f64::total_cmp);
    Ok(CrossingSummary {
        decoder: decoder.to_string(),
        pair,
        median: nearest_rank(&valid, 0.5),
        q05: nearest_rank(&valid, 0.05),
        q95: nearest_rank(&valid, 0.95),
        valid_count: valid.len(),
        total_resamples: resamples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub pair: (String, String),
    pub mean_delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn mean_delta(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64
}

/// Mean pointwise LER difference `a - b` with a 95% percentile bootstrap interval.
pub fn effect_size(
    names: (&str, &str),
    a: &[CurvePoint],
    b: &[CurvePoint],
    resamples: usize,
    seed: u64,
) -> Result<EffectSize> {
    if a.is_empty() {
        return Err(Error::EmptyData("effect size over an empty grid".into()));
    }
    check_grid(&grid_of(a), &grid_of(b))?;
    let la: Vec<f64> = a.iter().map(|p| p.1.ler).collect();
    let lb: Vec<f64> = b.iter().map(|p| p.1.ler).collect();
    let observed = mean_delta(&la, &lb);
    let mut boot: Vec<f64> = (0..resamples.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = resample_rng(seed, r);
            let ra: Vec<f64> = a.iter().map(|p| resample_ler(&p.1, &mut rng)).collect();
            let rb: Vec<f64> = b.iter().map(|p| resample_ler(&p.1, &mut rng)).collect();
            mean_delta(&ra, &rb)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let lo = nearest_rank(&boot, 0.025).expect("non-empty");
    let hi = nearest_rank(&boot, 0.975).expect("non-empty");
    Ok(EffectSize {
        pair: (names.0.to_string(), names.1.to_string()),
        mean_delta: observed,
        ci_low: lo.min(observed),
        ci_high: hi.max(observed),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankBand {
    pub decoder: String,
    pub x: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Ranks of each decoder at every grid point for one set of LERs. Rank 1 is
/// the lowest LER; ties go to the decoder whose name sorts first.
pub fn rank_at(names: &[&str], lers: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&i, &j| lers[i].total_cmp(&lers[j]).then_with(|| names[i].cmp(names[j])));
    let mut ranks = vec![0; names.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

/// Bootstrap rank trajectories; one band per decoder per grid point.
pub fn rank_stability(curves: &[(&str, &[CurvePoint])], resamples: usize, seed: u64) -> Result<Vec<RankBand>> {
    if curves.len() < 2 {
        return Err(Error::InvalidParameter("rank stability needs at least two decoders".into()));
    }
    let xs = grid_of(curves[0].1);
    for (_, c) in &curves[1..] {
        check_grid(&xs, &grid_of(c))?;
    }
    let names: Vec<&str> = curves.iter().map(|c| c.0).collect();
    let k = curves.len();
    let m = xs.len();
    // ranks[r][x][decoder]
    let ranks: Vec<Vec<Vec<usize>>> = (0..resamples.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = resample_rng(seed, r);
            let lers: Vec<Vec<f64>> =
                curves.iter().map(|(_, c)| c.iter().map(|p| resample_ler(&p.1, &mut rng)).collect()).collect();
            (0..m)
                .map(|xi| rank_at(&names, &(0..k).map(|d| lers[d][xi]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();

    let mut bands = Vec::with_capacity(k * m);
    for (d, name) in names.iter().enumerate() {
        for (xi, &x) in xs.iter().enumerate() {
            let mut samples: Vec<f64> = ranks.iter().map(|r| r[xi][d] as f64).collect();
            samples.sort_by(f64::total_cmp);
            bands.push(RankBand {
                decoder: name.to_string(),
                x,
                median: nearest_rank(&samples, 0.5).expect("non-empty"),
                q05: nearest_rank(&samples, 0.05).expect("non-empty"),
                q95: nearest_rank(&samples, 0.95).expect("non-empty"),
            });
        }
    }
    Ok(bands)
}

/// `ler(small) / ler(large)` per grid point; `None` where the larger code saw no failures.
pub fn distance_gain(small: &[CurvePoint], large: &[CurvePoint]) -> Result<Vec<(f64, Option<f64>)>> {
    check_grid(&grid_of(small), &grid_of(large))?;
    Ok(small
        .iter()
        .zip(large)
        .map(|(a, b)| (a.0, (b.1.ler > 0.0).then(|| a.1.ler / b.1.ler)))
        .collect())
}

/// Ordinary least-squares slope of LER against the noise level.
pub fn ablation_slope(levels: &[f64], lers: &[f64]) -> Result<f64> {
    if levels.len() != lers.len() {
        return Err(Error::LengthMismatch { what: "lers", got: lers.len(), expected: levels.len() });
    }
    if levels.len() < 2 {
        return Err(Error::InvalidParameter("slope needs at least two levels".into()));
    }
    let n = levels.len() as f64;
    let mx = levels.iter().sum::<f64>() / n;
    let my = lers.iter().sum::<f64>() / n;
    let sxx: f64 = levels.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all ablation levels are identical".into()));
    }
    let sxy: f64 = levels.iter().zip(lers).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityDelta {
    pub per_point: Vec<(f64, f64)>,
    pub mean: f64,
    pub max: f64,
    pub correlation: Option<f64>,
}

/// Pointwise `|ler_serial - ler_parallel|` with mean, max and correlation.
pub fn fidelity_delta(serial: &[CurvePoint], parallel: &[CurvePoint]) -> Result<FidelityDelta> {
    check_grid(&grid_of(serial), &grid_of(parallel))?;
    if serial.is_empty() {
        return Err(Error::EmptyData("no shared sweep points".into()));
    }
    let per_point: Vec<(f64, f64)> =
        serial.iter().zip(parallel).map(|(s, p)| (s.0, (s.1.ler - p.1.ler).abs())).collect();
    let mean = per_point.iter().map(|p| p.1).sum::<f64>() / per_point.len() as f64;
    let max = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    let a: Vec<f64> = serial.iter().map(|p| p.1.ler).collect();
    let b: Vec<f64> = parallel.iter().map(|p| p.1.ler).collect();
    Ok(FidelityDelta { per_point, mean, max, correlation: pearson(&a, &b) })
}
