//! Sweep execution over (decoder, distance, grid point, trial).
//!
//! Trials at a grid point are cut into fixed-size shards that a rayon pool
//! works through. Every trial draws its noise from seeds mixed from
//! `(base_seed, distance, sweep_index, trial_index)`, and shard tallies are
//! plain sums, so records do not depend on the thread count.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{build_decoder, Decoder, DecoderKind, DecoderSettings, GuideTable};
use crate::error::{Error, Result};
use crate::lattice::{build_code, extract_syndrome, logical_failure, residual, CodeLayout};
use crate::noise::{self, NoiseConfig, NoiseMode};
use crate::rng::SeedContext;
use crate::stats::{self, CurvePoint, PointEstimate};

/// Trials per work unit handed to the pool. Fixed so sharding is independent
/// of the thread count.
const SHARD: u64 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridVariable {
    #[serde(rename = "p")]
    P,
    #[serde(rename = "sigma")]
    Sigma,
}

impl GridVariable {
    pub fn name(self) -> &'static str {
        match self {
            GridVariable::P => "p",
            GridVariable::Sigma => "sigma",
        }
    }

    pub fn default_for(mode: NoiseMode) -> Self {
        match mode {
            NoiseMode::Pauli => GridVariable::P,
            NoiseMode::Gkp => GridVariable::Sigma,
        }
    }

    fn apply(self, cfg: &mut NoiseConfig, x: f64) {
        match self {
            GridVariable::P => cfg.p = x,
            GridVariable::Sigma => cfg.sigma = x,
        }
    }
}

impl FromStr for GridVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "p" => Ok(GridVariable::P),
            "sigma" => Ok(GridVariable::Sigma),
            other => Err(Error::Config(format!("unknown grid variable `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub variable: GridVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// Points `start + i·step` up to `stop` inclusive, rounded to 12 decimals
    /// so coordinates print cleanly and compare exactly.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("grid step {} must be positive", self.step)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(Error::EmptyData(format!("empty grid [{}, {}]", self.start, self.stop)));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| round12(self.start + i as f64 * self.step)).collect())
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub decoders: Vec<DecoderKind>,
    pub distances: Vec<usize>,
    pub grid: Grid,
    pub trials: u64,
    pub base_seed: u64,
    /// Worker threads; 0 lets rayon choose.
    pub threads: usize,
    /// Base noise; the grid variable overrides `p` or `sigma` per point.
    pub noise: NoiseConfig,
    pub guide_table: Option<PathBuf>,
    pub bp_max_iters: usize,
    pub bp_decimation_rounds: usize,
}

impl SweepSpec {
    pub fn new(noise: NoiseConfig, decoders: Vec<DecoderKind>, distances: Vec<usize>, grid: Grid, trials: u64) -> Self {
        let defaults = DecoderSettings::default();
        SweepSpec {
            decoders,
            distances,
            grid,
            trials,
            base_seed: 0,
            threads: 0,
            noise,
            guide_table: None,
            bp_max_iters: defaults.bp_max_iters,
            bp_decimation_rounds: defaults.bp_decimation_rounds,
        }
    }

    pub fn mode(&self) -> NoiseMode {
        self.noise.mode
    }

    /// The dense critical window: σ from 0.08 to 0.24 in steps of 0.01 at d = 3, 5, 7.
    pub fn dense_window(noise: NoiseConfig, decoders: Vec<DecoderKind>, trials: u64) -> Self {
        let grid = Grid { variable: GridVariable::Sigma, start: 0.08, stop: 0.24, step: 0.01 };
        SweepSpec::new(noise, decoders, vec![3, 5, 7], grid, trials)
    }

    fn validate(&self) -> Result<()> {
        if self.decoders.is_empty() {
            return Err(Error::Config("no decoders selected".into()));
        }
        if self.distances.is_empty() {
            return Err(Error::Config("no distances selected".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPointRecord {
    pub mode: String,
    pub decoder: String,
    pub distance: usize,
    pub variable: String,
    pub x: f64,
    pub trials: u64,
    pub failures: u64,
    pub ler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_defects: f64,
    pub mean_correction_weight: f64,
    pub decoder_failure_rate: f64,
    pub runtime_s: f64,
    pub base_seed: u64,
}

impl SweepPointRecord {
    pub fn estimate(&self) -> PointEstimate {
        PointEstimate {
            trials: self.trials,
            failures: self.failures,
            ler: self.ler,
            ci_low: self.ci_low,
            ci_high: self.ci_high,
        }
    }
}

/// A decoder the sweep was asked for but could not run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub decoder: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepPointRecord>,
    pub skipped: Vec<SkipEntry>,
}

impl SweepOutcome {
    /// Records of one decoder at one distance, in grid order.
    pub fn curve(&self, decoder: &str, distance: usize) -> Vec<CurvePoint> {
        curve_of(&self.records, decoder, distance)
    }
}

pub fn curve_of(records: &[SweepPointRecord], decoder: &str, distance: usize) -> Vec<CurvePoint> {
    records
        .iter()
        .filter(|r| r.decoder == decoder && r.distance == distance)
        .map(|r| (r.x, r.estimate()))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Tally {
    failures: u64,
    defects: u64,
    weight: u64,
    decoder_failures: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            failures: self.failures + o.failures,
            defects: self.defects + o.defects,
            weight: self.weight + o.weight,
            decoder_failures: self.decoder_failures + o.decoder_failures,
        }
    }
}

/// One Monte Carlo trial: sample, extract (with measurement flips), decode,
/// and test the residual against the logical operators. A decoder that could
/// not satisfy the syndrome leaves the state outside the code space, and the
/// trial counts as failed.
fn run_trial(layout: &CodeLayout, cfg: &NoiseConfig, decoder: &dyn Decoder, ctx: &SeedContext) -> Result<Tally> {
    let (err, meas) = noise::sample(layout, cfg, ctx);
    let mut syndrome = extract_syndrome(layout, &err)?;
    syndrome.s_z.xor_assign(&meas.s_z);
    syndrome.s_x.xor_assign(&meas.s_x);
    let out = decoder.decode(&syndrome)?;
    let res = residual(&err, &out.correction)?;
    Ok(Tally {
        failures: (out.failed || logical_failure(layout, &res)?) as u64,
        defects: out.defect_count as u64,
        weight: out.correction_weight as u64,
        decoder_failures: out.failed as u64,
    })
}

fn run_point(
    layout: &CodeLayout,
    cfg: &NoiseConfig,
    decoder: &dyn Decoder,
    base_seed: u64,
    sweep_index: usize,
    trials: u64,
) -> Result<Tally> {
    let shards = trials.div_ceil(SHARD);
    (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut tally = Tally::default();
            for t in s * SHARD..((s + 1) * SHARD).min(trials) {
                let ctx = SeedContext::new(base_seed, layout.distance, sweep_index, t);
                tally = tally + run_trial(layout, cfg, decoder, &ctx)?;
            }
            Ok(tally)
        })
        .try_reduce(Tally::default, |a, b| Ok(a + b))
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Resolves the decoder list once: the guided matcher needs a readable guide
/// table and is skipped with a warning otherwise.
fn resolve_decoders(spec: &SweepSpec) -> Result<(Vec<DecoderKind>, Option<GuideTable>, Vec<SkipEntry>)> {
    let mut kinds = Vec::new();
    let mut guide = None;
    let mut skipped = Vec::new();
    for &kind in &spec.decoders {
        if kinds.contains(&kind) {
            continue;
        }
        if kind == DecoderKind::GuidedMwpm {
            let reason = match &spec.guide_table {
                None => Some("no guide table configured".to_string()),
                Some(path) if !path.is_file() => Some(format!("guide table {} not found", path.display())),
                Some(path) => {
                    guide = Some(GuideTable::load(path)?);
                    None
                }
            };
            if let Some(reason) = reason {
                warn!("skipping {kind}: {reason}");
                skipped.push(SkipEntry { decoder: kind.to_string(), reason });
                continue;
            }
        }
        kinds.push(kind);
    }
    Ok((kinds, guide, skipped))
}

/// A sweep point: its index in the seed schedule, coordinate and noise.
struct Point {
    index: usize,
    variable: String,
    x: f64,
    noise: NoiseConfig,
}

fn execute(spec: &SweepSpec, points: &[Point]) -> Result<SweepOutcome> {
    spec.validate()?;
    let (kinds, guide, skipped) = resolve_decoders(spec)?;
    let pool = pool(spec.threads)?;
    let mut records = Vec::new();

    for &kind in &kinds {
        for &d in &spec.distances {
            let layout = build_code(d)?;
            for p in points {
                p.noise.validate(layout.n_data)?;
            }
            let settings = |cfg: &NoiseConfig| DecoderSettings {
                bp_prior: cfg.bp_prior(),
                bp_max_iters: spec.bp_max_iters,
                bp_decimation_rounds: spec.bp_decimation_rounds,
                guide: guide.clone(),
            };
            let Some(first) = points.first() else {
                return Err(Error::EmptyData("sweep has no points".into()));
            };
            // Untimed warm-up trial.
            let warm = build_decoder(kind, &layout, &settings(&first.noise))?;
            run_trial(&layout, &first.noise, warm.as_ref(), &SeedContext::new(spec.base_seed, d, first.index, 0))?;

            let shared = (kind != DecoderKind::Bp).then_some(warm);
            for p in points {
                let own;
                let decoder: &dyn Decoder = match &shared {
                    Some(dec) => dec.as_ref(),
                    None => {
                        own = build_decoder(kind, &layout, &settings(&p.noise))?;
                        own.as_ref()
                    }
                };
                let started = Instant::now();
                let tally =
                    pool.install(|| run_point(&layout, &p.noise, decoder, spec.base_seed, p.index, spec.trials))?;
                let runtime = started.elapsed().as_secs_f64();
                let est = stats::wilson_ci(tally.failures, spec.trials)?;
                let n = spec.trials as f64;
                records.push(SweepPointRecord {
                    mode: spec.mode().as_str().to_string(),
                    decoder: kind.to_string(),
                    distance: d,
                    variable: p.variable.clone(),
                    x: p.x,
                    trials: spec.trials,
                    failures: tally.failures,
                    ler: est.ler,
                    ci_low: est.ci_low,
                    ci_high: est.ci_high,
                    mean_defects: tally.defects as f64 / n,
                    mean_correction_weight: tally.weight as f64 / n,
                    decoder_failure_rate: tally.decoder_failures as f64 / n,
                    runtime_s: runtime,
                    base_seed: spec.base_seed,
                });
            }
            info!("{kind} d={d}: {} points done", points.len());
        }
    }
    Ok(SweepOutcome { records, skipped })
}

/// Runs every (decoder, distance, grid point) of `spec`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    let points: Vec<Point> = spec
        .grid
        .points()?
        .into_iter()
        .enumerate()
        .map(|(index, x)| {
            let mut noise = spec.noise.clone();
            spec.grid.variable.apply(&mut noise, x);
            Point { index, variable: spec.grid.variable.name().to_string(), x, noise }
        })
        .collect();
    execute(spec, &points)
}

/// `t_serial / t_parallel`.
pub fn speedup(t_serial: f64, t_parallel: f64) -> f64 {
    t_serial / t_parallel
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub decoder: String,
    pub distance: usize,
    pub x: f64,
    pub ler_serial: f64,
    pub ler_parallel: f64,
    pub abs_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub serial_threads: usize,
    pub parallel_threads: usize,
    pub t_serial: f64,
    pub t_parallel: f64,
    pub speedup: f64,
    /// Trials per second of the parallel run.
    pub throughput: f64,
    pub throughput_serial: f64,
    pub total_trials: u64,
    pub points: Vec<FidelityPoint>,
    pub mean_delta: f64,
    pub max_delta: f64,
    pub correlation: Option<f64>,
}

/// Runs `spec` once serially and once on `parallel_threads` workers and compares them.
pub fn run_fidelity_study(spec: &SweepSpec, parallel_threads: usize) -> Result<FidelityReport> {
    if parallel_threads < 2 {
        return Err(Error::Config("the parallel run needs at least 2 threads".into()));
    }
    let timed = |threads: usize| -> Result<(SweepOutcome, f64)> {
        let spec = SweepSpec { threads, ..spec.clone() };
        let started = Instant::now();
        let out = run_sweep(&spec)?;
        Ok((out, started.elapsed().as_secs_f64()))
    };
    let (serial, t_serial) = timed(1)?;
    let (parallel, t_parallel) = timed(parallel_threads)?;

    let mut s = Vec::new();
    let mut p = Vec::new();
    let mut decoders: Vec<&str> = serial.records.iter().map(|r| r.decoder.as_str()).collect();
    decoders.dedup();
    for decoder in decoders {
        let pick = |rs: &[SweepPointRecord]| rs.iter().filter(|r| r.decoder == decoder).cloned().collect();
        let merged = crate::io::merge_shared_grid(&[pick(&serial.records), pick(&parallel.records)])?;
        let [a, b]: [Vec<SweepPointRecord>; 2] = merged.tables.try_into().expect("two tables in, two out");
        s.extend(a);
        p.extend(b);
    }
    let to_curve = |rs: &[SweepPointRecord]| -> Vec<CurvePoint> { rs.iter().map(|r| (r.x, r.estimate())).collect() };
    let delta = stats::fidelity_delta(&to_curve(&s), &to_curve(&p))?;
    let points = s
        .iter()
        .zip(&p)
        .map(|(a, b)| FidelityPoint {
            decoder: a.decoder.clone(),
            distance: a.distance,
            x: a.x,
            ler_serial: a.ler,
            ler_parallel: b.ler,
            abs_delta: (a.ler - b.ler).abs(),
        })
        .collect();
    let total_trials: u64 = s.iter().map(|r| r.trials).sum();
    Ok(FidelityReport {
        serial_threads: 1,
        parallel_threads,
        t_serial,
        t_parallel,
        speedup: speedup(t_serial, t_parallel),
        throughput: total_trials as f64 / t_parallel,
        throughput_serial: total_trials as f64 / t_serial,
        total_trials,
        points,
        mean_delta: delta.mean,
        max_delta: delta.max,
        correlation: delta.correlation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseComponent {
    Gate,
    Meas,
    Idle,
    Loss,
}

impl NoiseComponent {
    pub const ALL: [NoiseComponent; 4] =
        [NoiseComponent::Gate, NoiseComponent::Meas, NoiseComponent::Idle, NoiseComponent::Loss];

    pub fn name(self) -> &'static str {
        match self {
            NoiseComponent::Gate => "gate",
            NoiseComponent::Meas => "meas",
            NoiseComponent::Idle => "idle",
            NoiseComponent::Loss => "loss",
        }
    }

    fn apply(self, cfg: &mut NoiseConfig, level: f64) {
        match self {
            NoiseComponent::Gate => cfg.p_gate = level,
            NoiseComponent::Meas => cfg.p_meas = level,
            NoiseComponent::Idle => cfg.p_idle = level,
            NoiseComponent::Loss => {
                cfg.p_loss = level;
                cfg.loss_map = None;
            }
        }
    }
}

impl FromStr for NoiseComponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseComponent::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::UnknownComponent(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSlope {
    pub decoder: String,
    pub distance: usize,
    pub component: String,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationReport {
    pub component: NoiseComponent,
    pub outcome: SweepOutcome,
    pub slopes: Vec<AblationSlope>,
}

/// One-factor sweep of `component` over `levels` at the spec's base noise and
/// fixed σ; every other channel keeps its base value.
pub fn run_ablation(spec: &SweepSpec, component: NoiseComponent, levels: &[f64]) -> Result<AblationReport> {
    if spec.mode() != NoiseMode::Gkp {
        return Err(Error::Config("ablation runs in GKP mode".into()));
    }
    if levels.is_empty() {
        return Err(Error::EmptyData("no ablation levels".into()));
    }
    let points: Vec<Point> = levels
        .iter()
        .enumerate()
        .map(|(index, &x)| {
            let mut noise = spec.noise.clone();
            component.apply(&mut noise, x);
            Point { index, variable: format!("p_{}", component.name()), x, noise }
        })
        .collect();
    let outcome = execute(spec, &points)?;
    let mut slopes = Vec::new();
    let mut series: Vec<(String, usize)> = outcome.records.iter().map(|r| (r.decoder.clone(), r.distance)).collect();
    series.dedup();
    for (decoder, distance) in series {
        let curve = outcome.curve(&decoder, distance);
        let xs: Vec<f64> = curve.iter().map(|c| c.0).collect();
        let ys: Vec<f64> = curve.iter().map(|c| c.1.ler).collect();
        slopes.push(AblationSlope {
            decoder,
            distance,
            component: component.name().to_string(),
            slope: ablation_slope_or_flat(&xs, &ys)?,
        });
    }
    Ok(AblationReport { component, outcome, slopes })
}

/// OLS slope, except that constant LERs give 0 even when the levels coincide.
fn ablation_slope_or_flat(levels: &[f64], lers: &[f64]) -> Result<f64> {
    if lers.windows(2).all(|w| w[0] == w[1]) {
        return Ok(0.0);
    }
    stats::ablation_slope(levels, lers)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub decoder: String,
    pub d_small: usize,
    pub d_large: usize,
    pub crossing: Option<f64>,
}

/// Point-estimate crossings of each decoder's curves for consecutive distances.
pub fn crossing_table(outcome: &SweepOutcome, distances: &[usize]) -> Result<Vec<CrossingRow>> {
    let mut ds = distances.to_vec();
    ds.sort_unstable();
    ds.dedup();
    let mut decoders: Vec<String> = outcome.records.iter().map(|r| r.decoder.clone()).collect();
    decoders.dedup();
    let mut rows = Vec::new();
    for decoder in decoders {
        for w in ds.windows(2) {
            let lers = |d| -> Vec<(f64, f64)> { outcome.curve(&decoder, d).iter().map(|c| (c.0, c.1.ler)).collect() };
            rows.push(CrossingRow {
                decoder: decoder.clone(),
                d_small: w[0],
                d_large: w[1],
                crossing: stats::crossing(&lers(w[0]), &lers(w[1]))?,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseWindowReport {
    pub outcome: SweepOutcome,
    pub crossings: Vec<CrossingRow>,
}

/// Dense sweep (see [`SweepSpec::dense_window`]) plus its crossing table.
pub fn run_dense_window(spec: &SweepSpec) -> Result<DenseWindowReport> {
    if spec.mode() != NoiseMode::Gkp {
        return Err(Error::Config("the dense window is a GKP sweep".into()));
    }
    let outcome = run_sweep(spec)?;
    let crossings = crossing_table(&outcome, &spec.distances)?;
    Ok(DenseWindowReport { outcome, crossings })
}
