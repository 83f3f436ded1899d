//! CLI behaviour outside the numbered criteria: exit codes, precedence, Pareto labels.

use std::path::{Path, PathBuf};
use std::process::Command;

use qtb_core::harness::SweepPointRecord;
use qtb_core::io::{records_table, Format, RawTable};
use qtb_core::stats::wilson_ci;

fn qtb(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qtb")).args(args).env_remove("QTB_SEED").env_remove("QTB_THREADS").output().unwrap()
}

fn run_ok(args: &[&str]) -> PathBuf {
    let out = qtb(args);
    assert!(out.status.success(), "qtb {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
}

fn write_spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn col<'a>(t: &'a RawTable, row: &'a [String], name: &str) -> &'a str {
    &row[t.column(name).unwrap()]
}

fn record(decoder: &str, runtime_s: f64, ler: f64) -> SweepPointRecord {
    let e = wilson_ci(1000, 10_000).unwrap();
    SweepPointRecord {
        mode: "gkp".into(),
        decoder: decoder.into(),
        distance: 5,
        variable: "sigma".into(),
        x: 0.2,
        trials: 10_000,
        failures: 1000,
        ler,
        ci_low: e.ci_low,
        ci_high: e.ci_high,
        mean_defects: 0.0,
        mean_correction_weight: 0.0,
        decoder_failure_rate: 0.0,
        runtime_s,
        base_seed: 0,
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = write_spec(dir.path(), "bad.spec", "colour = blue\n");
    assert_eq!(qtb(&["sweep", "--spec", bad.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    let guided = write_spec(dir.path(), "g.spec", "mode = pauli\ndecoders = mwpm, guided-mwpm\ndistances = 3\ngrid.start = 0.05\ngrid.stop = 0.05\ntrials = 10\n");
    assert_eq!(qtb(&["sweep", "--spec", guided.to_str().unwrap(), "--out", out, "--strict"]).status.code(), Some(4));
    let lenient = qtb(&["sweep", "--spec", guided.to_str().unwrap(), "--out", out, "--stable"]);
    assert_eq!(lenient.status.code(), Some(0));
    assert!(dir.path().join("sweep_pauli_skipped.csv").is_file());

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "# qtb schema 1 table sweep_records\nmode,decoder,distance,variable,x,trials,failures,ler,ci_low,ci_high,mean_defects,mean_correction_weight,decoder_failure_rate,runtime_s,base_seed\n").unwrap();
    let spec = write_spec(dir.path(), "p.spec", "mode = pauli\n");
    let code = qtb(&["pareto", "--spec", spec.to_str().unwrap(), "--input", empty.to_str().unwrap(), "--out", out]).status.code();
    assert_eq!(code, Some(3));

    let layout = qtb(&["layout", "--distance", "3"]);
    assert!(layout.status.success());
    let dump: serde_json::Value = serde_json::from_slice(&layout.stdout).unwrap();
    assert_eq!(dump["n_data"], 9);
    assert_eq!(qtb(&["layout", "--distance", "4"]).status.code(), Some(2));
}

#[test]
fn cli_seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.spec", "mode = pauli\ndecoders = mwpm\ndistances = 3\ngrid.start = 0.1\ngrid.stop = 0.1\ntrials = 50\nseed = 1\n");
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let out = dir.path().join("o");
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qtb"));
        cmd.args(["sweep", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--stable"]).args(extra);
        cmd.env_remove("QTB_SEED");
        if let Some(s) = env {
            cmd.env("QTB_SEED", s);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success());
        let t = RawTable::load(Path::new(String::from_utf8(o.stdout).unwrap().trim())).unwrap();
        col(&t, &t.rows[0], "base_seed").to_string()
    };
    assert_eq!(seed_of(&[], None), "1");
    assert_eq!(seed_of(&[], Some("2")), "2");
    assert_eq!(seed_of(&["--seed", "3"], Some("2")), "3");
}

#[test]
fn pareto_command_labels_frontier() {
    let dir = tempfile::tempdir().unwrap();
    let mut recs = Vec::new();
    // Reference (runtime, LER) per decoder at d = 5, σ = 0.20.
    for (name, runtime, ler) in [("uf", 1.332, 0.2303), ("mwpm", 1.341, 0.2273), ("guided-mwpm", 1.396, 0.3730), ("bp", 7.640, 0.6107)] {
        recs.push(record(name, runtime, ler));
    }
    let input = dir.path().join("t1.json");
    records_table(&recs).write(&input, Format::Json).unwrap();
    let spec = write_spec(dir.path(), "p.spec", "mode = gkp\npareto.distance = 5\nreference = 0.20\n");
    let out = run_ok(&["pareto", "--spec", spec.to_str().unwrap(), "--input", input.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let t = RawTable::load(&out).unwrap();
    let frontier: Vec<&str> = t.rows.iter().filter(|r| col(&t, r, "pareto") == "true").map(|r| col(&t, r, "decoder")).collect();
    assert_eq!(frontier, vec!["uf", "mwpm"]);
}
