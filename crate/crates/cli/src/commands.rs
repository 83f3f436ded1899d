use std::collections::HashSet;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use qtb_core::decoders::DecoderKind;
use qtb_core::harness::{
    curve_of, run_ablation, run_dense_window, run_fidelity_study, run_sweep, SkipEntry,
    SweepPointRecord, SweepSpec,
};
use qtb_core::io::{load_records, pareto_inputs, pareto_report, records_table, Cell, Format, Table};
use qtb_core::lattice::build_code;
use qtb_core::stats::{bootstrap_crossings, distance_gain, effect_size, rank_stability, CurvePoint};
use qtb_core::{Error, Result};

use crate::config::SpecFile;
use crate::RunArgs;

pub fn layout(distance: usize) -> Result<()> {
    let code = build_code(distance)?;
    println!("{}", serde_json::to_string_pretty(&code.dump())?);
    Ok(())
}

/// Everything a command needs: the resolved sweep, the spec file for
/// analysis keys, and output settings.
struct Ctx<'a> {
    command: &'a str,
    args: &'a RunArgs,
    file: SpecFile,
    spec: SweepSpec,
    format: Format,
    stamp: String,
}

impl Ctx<'_> {
    fn artifact(&self, mode: &str, suffix: &str) -> PathBuf {
        let ext = self.format.extension();
        let name = if self.args.stable {
            format!("{}_{mode}{suffix}.{ext}", self.command)
        } else {
            format!("{}_{mode}_{}{suffix}.{ext}", self.command, self.stamp)
        };
        self.args.out.join(name)
    }

    fn write(&self, table: &Table, mode: &str, suffix: &str) -> Result<PathBuf> {
        let path = self.artifact(mode, suffix);
        table.write(&path, self.format)?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_primary(&self, table: &Table, mode: &str) -> Result<()> {
        if table.rows.is_empty() {
            return Err(Error::EmptyData(format!("{} produced no rows", self.command)));
        }
        let path = self.write(table, mode, "")?;
        println!("{}", path.display());
        Ok(())
    }

    fn write_skipped(&self, skipped: &[SkipEntry], mode: &str) -> Result<()> {
        if skipped.is_empty() {
            return Ok(());
        }
        let mut t = Table::new("skipped", &["decoder", "reason"]);
        for s in skipped {
            t.push(vec![s.decoder.as_str().into(), s.reason.as_str().into()]);
        }
        self.write(&t, mode, "_skipped")?;
        Ok(())
    }

    fn resamples(&self) -> Result<usize> {
        self.file.resamples()
    }

    fn inputs(&self) -> Vec<PathBuf> {
        if !self.args.input.is_empty() {
            return self.args.input.clone();
        }
        self.file.path("input").into_iter().collect()
    }

    /// Sweep records from `--input` files when given, otherwise a fresh sweep.
    fn records(&self) -> Result<(Vec<SweepPointRecord>, Vec<SkipEntry>, String)> {
        let inputs = self.inputs();
        let (mut records, skipped) = if inputs.is_empty() {
            let out = run_sweep(&self.spec)?;
            (out.records, out.skipped)
        } else {
            let mut all = Vec::new();
            for p in &inputs {
                all.extend(load_records(p)?);
            }
            check_unique(&all)?;
            (all, Vec::new())
        };
        if records.is_empty() {
            return Err(Error::EmptyData("no sweep records".into()));
        }
        if self.args.stable {
            zero_runtime(&mut records);
        }
        let mode = records[0].mode.clone();
        Ok((records, skipped, mode))
    }
}

fn check_unique(records: &[SweepPointRecord]) -> Result<()> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert((r.decoder.clone(), r.distance, r.x.to_bits())) {
            return Err(Error::GridMismatch(format!("{} d={} x={} appears twice", r.decoder, r.distance, r.x)));
        }
    }
    Ok(())
}

fn zero_runtime(records: &mut [SweepPointRecord]) {
    for r in records {
        r.runtime_s = 0.0;
    }
}

/// Decoders in first-appearance order.
fn decoders_of(records: &[SweepPointRecord]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in records {
        if !out.contains(&r.decoder) {
            out.push(r.decoder.clone());
        }
    }
    out
}

fn distances_of(records: &[SweepPointRecord], decoder: &str) -> Vec<usize> {
    let mut ds: Vec<usize> = records.iter().filter(|r| r.decoder == decoder).map(|r| r.distance).collect();
    ds.sort_unstable();
    ds.dedup();
    ds
}

fn all_distances(records: &[SweepPointRecord]) -> Vec<usize> {
    let mut ds: Vec<usize> = records.iter().map(|r| r.distance).collect();
    ds.sort_unstable();
    ds.dedup();
    ds
}

fn unix_stamp() -> String {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string()
}

fn strict_precheck(spec: &SweepSpec) -> Result<()> {
    if !spec.decoders.contains(&DecoderKind::GuidedMwpm) {
        return Ok(());
    }
    match &spec.guide_table {
        None => Err(Error::GuideTable("guided-mwpm requested without a guide_table".into())),
        Some(p) if !p.is_file() => Err(Error::GuideTable(format!("{} not found", p.display()))),
        Some(_) => Ok(()),
    }
}

fn build_ctx<'a>(command: &'a str, args: &'a RunArgs) -> Result<Ctx<'a>> {
    let file = SpecFile::load(&args.spec)?;
    let mut spec = file.sweep()?;
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    if let Some(threads) = args.threads {
        spec.threads = threads;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if args.strict {
        strict_precheck(&spec)?;
    }
    Ok(Ctx { command, args, file, spec, format: args.format(), stamp: unix_stamp() })
}

pub fn run(command: &str, args: &RunArgs) -> Result<()> {
    let ctx = build_ctx(command, args)?;
    match command {
        "sweep" => sweep(&ctx),
        "pareto" => pareto(&ctx),
        "crossing-bootstrap" => crossing_bootstrap(&ctx),
        "distance-gain" => gain(&ctx),
        "ablation" => ablation(&ctx),
        "rank-stability" => ranks(&ctx),
        "effect-size" => effects(&ctx),
        "fidelity" => fidelity(&ctx),
        "dense-window" => dense_window(&ctx),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }
}

fn sweep(ctx: &Ctx) -> Result<()> {
    let (records, skipped, mode) = ctx.records()?;
    ctx.write_skipped(&skipped, &mode)?;
    ctx.write_primary(&records_table(&records), &mode)
}

fn pareto(ctx: &Ctx) -> Result<()> {
    let (records, skipped, mode) = ctx.records()?;
    ctx.write_skipped(&skipped, &mode)?;
    let distance = ctx.file.number("pareto.distance", 5)?;
    let reference = ctx.file.number("reference", 0.20)?;
    let rows = pareto_report(&pareto_inputs(&records, distance, reference)?)?;
    let mut t = Table::new("pareto", &["decoder", "distance", "reference_x", "runtime_s", "ler", "pareto"]);
    for r in rows {
        t.push(vec![
            r.decoder.into(),
            distance.into(),
            reference.into(),
            r.runtime_s.into(),
            r.ler.into(),
            r.pareto.into(),
        ]);
    }
    ctx.write_primary(&t, &mode)
}

fn crossing_bootstrap(ctx: &Ctx) -> Result<()> {
    let (records, skipped, mode) = ctx.records()?;
    ctx.write_skipped(&skipped, &mode)?;
    let mut t = Table::new(
        "crossing_bootstrap",
        &["decoder", "d_small", "d_large", "median", "q05", "q95", "valid_count", "total_resamples"],
    );
    for decoder in decoders_of(&records) {
        for w in distances_of(&records, &decoder).windows(2) {
            let s = bootstrap_crossings(
                &decoder,
                (w[0], w[1]),
                &curve_of(&records, &decoder, w[0]),
                &curve_of(&records, &decoder, w[1]),
                ctx.resamples()?,
                ctx.spec.base_seed,
            )?;
            if s.valid_count == 0 {
                warn!("{decoder} d={}/{}: no resample crossed inside the window", w[0], w[1]);
            }
            t.push(vec![
                s.decoder.into(),
                w[0].into(),
                w[1].into(),
                Cell::opt(s.median),
                Cell::opt(s.q05),
                Cell::opt(s.q95),
                s.valid_count.into(),
                s.total_resamples.into(),
            ]);
        }
    }
    ctx.write_primary(&t, &mode)
}

fn gain(ctx: &Ctx) -> Result<()> {
    let (records, skipped, mode) = ctx.records()?;
    ctx.write_skipped(&skipped, &mode)?;
    let mut t = Table::new("distance_gain", &["decoder", "d_small", "d_large", "x", "gain"]);
    for decoder in decoders_of(&records) {
        for w in distances_of(&records, &decoder).windows(2) {
            let small = curve_of(&records, &decoder, w[0]);
            let large = curve_of(&records, &decoder, w[1]);
            for (x, g) in distance_gain(&small, &large)? {
                t.push(vec![decoder.as_str().into(), w[0].into(), w[1].into(), x.into(), Cell::opt(g)]);
            }
        }
    }
    ctx.write_primary(&t, &mode)
}

fn ablation(ctx: &Ctx) -> Result<()> {
    let levels = ctx.file.ablation_levels()?;
    let mode = ctx.spec.mode().as_str();
    let mut slopes = Table::new("ablation_slopes", &["component", "decoder", "distance", "slope"]);
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for component in ctx.file.ablation_components()? {
        let report = run_ablation(&ctx.spec, component, &levels)?;
        for s in report.slopes {
            slopes.push(vec![s.component.into(), s.decoder.into(), s.distance.into(), s.slope.into()]);
        }
        records.extend(report.outcome.records);
        if skipped.is_empty() {
            skipped = report.outcome.skipped;
        }
    }
    if ctx.args.stable {
        zero_runtime(&mut records);
    }
    ctx.write_skipped(&skipped, mode)?;
    ctx.write_primary(&slopes, mode)?;
    ctx.write(&records_table(&records), mode, "_records")?;
    Ok(())
}

fn ranks(ctx: &Ctx) -> Result<()> {
    let (records, skipped, mode) = ctx.records()?;
    ctx.write_skipped(&skipped, &mode)?;
    let decoders = decoders_of(&records);
    let mut t = Table::new("rank_stability", &["distance", "decoder", "x", "median", "q05", "q95"]);
    for d in all_distances(&records) {
        let curves: Vec<(&str, Vec<CurvePoint>)> = decoders
            .iter()
            .map(|n| (n.as_str(), curve_of(&records, n, d)))
            .filter(|(_, c)| !c.is_empty())
            .collect();
        if curves.len() < 2 {
            continue;
        }
        let borrowed: Vec<(&str, &[CurvePoint])> = curves.iter().map(|(n, c)| (*n, c.as_slice())).collect();
        for b in rank_stability(&borrowed, ctx.resamples()?, ctx.spec.base_seed)? {
            t.push(vec![d.into(), b.decoder.into(), b.x.into(), b.median.into(), b.q05.into(), b.q95.into()]);
        }
    }
    ctx.write_primary(&t, &mode)
}

fn effects(ctx: &Ctx) -> Result<()> {
    let (records, skipped, mode) = ctx.records()?;
    ctx.write_skipped(&skipped, &mode)?;
    let decoders = decoders_of(&records);
    let pairs = match ctx.file.effect_pairs()? {
        Some(p) => p,
        None => {
            let mut p = Vec::new();
            for (i, a) in decoders.iter().enumerate() {
                for b in &decoders[i + 1..] {
                    p.push((a.clone(), b.clone()));
                }
            }
            p
        }
    };
    let mut t = Table::new("effect_size", &["distance", "decoder_a", "decoder_b", "mean_delta", "ci_low", "ci_high"]);
    for d in all_distances(&records) {
        for (a, b) in &pairs {
            let (ca, cb) = (curve_of(&records, a, d), curve_of(&records, b, d));
            if ca.is_empty() || cb.is_empty() {
                warn!("effect size {a}-{b} at d={d}: missing curve");
                continue;
            }
            let e = effect_size((a, b), &ca, &cb, ctx.resamples()?, ctx.spec.base_seed)?;
            t.push(vec![
                d.into(),
                a.as_str().into(),
                b.as_str().into(),
                e.mean_delta.into(),
                e.ci_low.into(),
                e.ci_high.into(),
            ]);
        }
    }
    ctx.write_primary(&t, &mode)
}

fn fidelity(ctx: &Ctx) -> Result<()> {
    let threads = match ctx.args.threads {
        Some(t) => t,
        None => ctx.file.number("fidelity.threads", 4)?,
    };
    let r = run_fidelity_study(&ctx.spec, threads)?;
    let mode = ctx.spec.mode().as_str();
    let mut points =
        Table::new("fidelity_points", &["decoder", "distance", "x", "ler_serial", "ler_parallel", "abs_delta"]);
    for p in &r.points {
        points.push(vec![
            p.decoder.as_str().into(),
            p.distance.into(),
            p.x.into(),
            p.ler_serial.into(),
            p.ler_parallel.into(),
            p.abs_delta.into(),
        ]);
    }
    let timing = |v: f64| if ctx.args.stable { 0.0 } else { v };
    let mut summary = Table::new(
        "fidelity_summary",
        &[
            "serial_threads",
            "parallel_threads",
            "t_serial",
            "t_parallel",
            "speedup",
            "throughput_serial",
            "throughput",
            "total_trials",
            "mean_delta",
            "max_delta",
            "correlation",
        ],
    );
    summary.push(vec![
        r.serial_threads.into(),
        r.parallel_threads.into(),
        timing(r.t_serial).into(),
        timing(r.t_parallel).into(),
        timing(r.speedup).into(),
        timing(r.throughput_serial).into(),
        timing(r.throughput).into(),
        r.total_trials.into(),
        r.mean_delta.into(),
        r.max_delta.into(),
        Cell::opt(r.correlation),
    ]);
    ctx.write_primary(&points, mode)?;
    ctx.write(&summary, mode, "_summary")?;
    Ok(())
}

fn dense_window(ctx: &Ctx) -> Result<()> {
    let mut spec = SweepSpec::dense_window(ctx.spec.noise.clone(), ctx.spec.decoders.clone(), ctx.spec.trials);
    if ctx.file.has("distances") {
        spec.distances = ctx.spec.distances.clone();
    }
    spec.base_seed = ctx.spec.base_seed;
    spec.threads = ctx.spec.threads;
    spec.guide_table = ctx.spec.guide_table.clone();
    spec.bp_max_iters = ctx.spec.bp_max_iters;
    spec.bp_decimation_rounds = ctx.spec.bp_decimation_rounds;
    let mut report = run_dense_window(&spec)?;
    if ctx.args.stable {
        zero_runtime(&mut report.outcome.records);
    }
    let mode = spec.mode().as_str();
    let mut t = Table::new("dense_window_crossings", &["decoder", "d_small", "d_large", "crossing"]);
    for c in &report.crossings {
        t.push(vec![c.decoder.as_str().into(), c.d_small.into(), c.d_large.into(), Cell::opt(c.crossing)]);
    }
    ctx.write_skipped(&report.outcome.skipped, mode)?;
    ctx.write_primary(&t, mode)?;
    ctx.write(&records_table(&report.outcome.records), mode, "_records")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(decoder: &str, distance: usize, x: f64) -> SweepPointRecord {
        SweepPointRecord {
            mode: "pauli".into(),
            decoder: decoder.into(),
            distance,
            variable: "p".into(),
            x,
            trials: 10,
            failures: 1,
            ler: 0.1,
            ci_low: 0.0,
            ci_high: 0.4,
            mean_defects: 0.0,
            mean_correction_weight: 0.0,
            decoder_failure_rate: 0.0,
            runtime_s: 1.5,
            base_seed: 0,
        }
    }

    #[test]
    fn duplicate_points_are_rejected() {
        let rs = vec![rec("mwpm", 3, 0.1), rec("mwpm", 3, 0.1)];
        assert!(matches!(check_unique(&rs), Err(Error::GridMismatch(_))));
        assert!(check_unique(&[rec("mwpm", 3, 0.1), rec("uf", 3, 0.1)]).is_ok());
    }

    #[test]
    fn decoder_and_distance_order() {
        let rs = vec![rec("uf", 5, 0.1), rec("mwpm", 3, 0.1), rec("uf", 3, 0.1)];
        assert_eq!(decoders_of(&rs), vec!["uf", "mwpm"]);
        assert_eq!(distances_of(&rs, "uf"), vec![3, 5]);
        assert_eq!(all_distances(&rs), vec![3, 5]);
    }
}
