//! Tabular artifacts: CSV and JSON emission with bit-stable floats, record
//! parsing, shared-grid joins and the Pareto table.
//!
//! Floats are written with 17 significant digits (shortest form of `%.17g`),
//! which parses back to the same bits. Undefined values are the bare token
//! `NaN` in both formats. CSV files open with a `#` schema comment line.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::SweepPointRecord;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Guesses the format from a file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// `%.17g` with trailing zeros removed; `NaN`, `inf` and `-inf` for non-finite values.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if !(-4..17).contains(&exp) {
        let frac = digits[1..].trim_end_matches('0');
        out.push_str(&digits[..1]);
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
        let _ = write!(out, "e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
        return out;
    }
    let body = if exp >= 0 {
        let cut = exp as usize + 1;
        format!("{}.{}", &digits[..cut], &digits[cut..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    out.push_str(body.trim_end_matches('0').trim_end_matches('.'));
    out
}

pub fn parse_float(s: &str) -> Result<f64> {
    match s.trim() {
        "NaN" | "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| Error::Parse(format!("`{s}` is not a number"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Float(f64),
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        Cell::Float(v.unwrap_or(f64::NAN))
    }

    fn text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format_float(*f),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Str(s) => serde_json::to_string(s).expect("strings serialize"),
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format_float(*f),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Cell {
        Cell::Str(s)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Cell {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Cell {
        Cell::Str(v.to_string())
    }
}

/// A named table ready to be written.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells");
        format!("# qtb schema {SCHEMA_VERSION} table {}\n{body}", self.name)
    }

    fn render_json(&self) -> String {
        let mut out = String::from("[");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
            for (j, (h, c)) in self.header.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: {}", serde_json::to_string(h).expect("strings serialize"), c.json());
            }
            out.push('}');
        }
        out.push_str(if self.rows.is_empty() { "]\n" } else { "\n]\n" });
        out
    }

    /// Writes the table, creating parent directories as needed.
    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, self.render(format))?;
        Ok(())
    }
}

/// Parsed table with every cell kept as text.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn parse(text: &str, format: Format) -> Result<Self> {
        match format {
            Format::Csv => Self::parse_csv(text),
            Format::Json => Self::parse_json(text),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, Format::from_path(path))
    }

    fn parse_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(RawTable { header, rows })
    }

    fn parse_json(text: &str) -> Result<Self> {
        let values: Vec<serde_json::Map<String, serde_json::Value>> = serde_json::from_str(&nan_to_null(text))?;
        let header: Vec<String> = values.first().map(|m| m.keys().cloned().collect()).unwrap_or_default();
        let mut rows = Vec::with_capacity(values.len());
        for m in values {
            let row = header
                .iter()
                .map(|h| match m.get(h) {
                    Some(serde_json::Value::String(s)) => Ok(s.clone()),
                    Some(serde_json::Value::Null) => Ok("NaN".to_string()),
                    Some(serde_json::Value::Number(n)) => Ok(match n.as_u64() {
                        Some(u) => u.to_string(),
                        None => format_float(n.as_f64().expect("finite JSON number")),
                    }),
                    Some(serde_json::Value::Bool(b)) => Ok(b.to_string()),
                    other => Err(Error::Parse(format!("column `{h}`: unexpected value {other:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(RawTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column `{name}`")))
    }
}

/// Replaces bare `NaN` tokens outside string literals with `null`.
fn nan_to_null(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_str = false;
    let mut escaped = false;
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if in_str {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
        } else if c == '"' {
            in_str = true;
        } else if rest.starts_with("NaN") {
            out.push_str("null");
            rest = &rest[3..];
            continue;
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    out
}

pub const RECORD_HEADER: [&str; 15] = [
    "mode",
    "decoder",
    "distance",
    "variable",
    "x",
    "trials",
    "failures",
    "ler",
    "ci_low",
    "ci_high",
    "mean_defects",
    "mean_correction_weight",
    "decoder_failure_rate",
    "runtime_s",
    "base_seed",
];

pub fn records_table(records: &[SweepPointRecord]) -> Table {
    let mut t = Table::new("sweep_records", &RECORD_HEADER);
    for r in records {
        t.push(vec![
            r.mode.as_str().into(),
            r.decoder.as_str().into(),
            r.distance.into(),
            r.variable.as_str().into(),
            r.x.into(),
            r.trials.into(),
            r.failures.into(),
            r.ler.into(),
            r.ci_low.into(),
            r.ci_high.into(),
            r.mean_defects.into(),
            r.mean_correction_weight.into(),
            r.decoder_failure_rate.into(),
            r.runtime_s.into(),
            r.base_seed.into(),
        ]);
    }
    t
}

pub fn records_from_raw(raw: &RawTable) -> Result<Vec<SweepPointRecord>> {
    let idx: Vec<usize> = RECORD_HEADER.iter().map(|h| raw.column(h)).collect::<Result<_>>()?;
    let int = |s: &str| s.trim().parse::<u64>().map_err(|_| Error::Parse(format!("`{s}` is not an integer")));
    raw.rows
        .iter()
        .map(|row| {
            let c = |i: usize| row.get(idx[i]).map(String::as_str).unwrap_or("");
            let rec = SweepPointRecord {
                mode: c(0).to_string(),
                decoder: c(1).to_string(),
                distance: int(c(2))? as usize,
                variable: c(3).to_string(),
                x: parse_float(c(4))?,
                trials: int(c(5))?,
                failures: int(c(6))?,
                ler: parse_float(c(7))?,
                ci_low: parse_float(c(8))?,
                ci_high: parse_float(c(9))?,
                mean_defects: parse_float(c(10))?,
                mean_correction_weight: parse_float(c(11))?,
                decoder_failure_rate: parse_float(c(12))?,
                runtime_s: parse_float(c(13))?,
                base_seed: int(c(14))?,
            };
            if rec.failures > rec.trials {
                return Err(Error::Parse(format!("{} failures out of {} trials", rec.failures, rec.trials)));
            }
            Ok(rec)
        })
        .collect()
}

/// Writes sweep records; an empty record set is an error.
pub fn emit_records(records: &[SweepPointRecord], path: &Path, format: Format) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyData("no records to write".into()));
    }
    records_table(records).write(path, format)
}

pub fn load_records(path: &Path) -> Result<Vec<SweepPointRecord>> {
    let recs = records_from_raw(&RawTable::load(path)?)?;
    if recs.is_empty() {
        return Err(Error::EmptyData(format!("{} holds no records", path.display())));
    }
    Ok(recs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub decoder: String,
    pub runtime_s: f64,
    pub ler: f64,
    pub pareto: bool,
}

/// Labels each `(decoder, runtime, ler)` entry: Pareto unless another entry is
/// no worse on both axes and strictly better on one.
pub fn pareto_report(entries: &[(String, f64, f64)]) -> Result<Vec<ParetoRow>> {
    if entries.is_empty() {
        return Err(Error::EmptyData("no decoders for the Pareto table".into()));
    }
    Ok(entries
        .iter()
        .map(|(name, t, l)| {
            let dominated = entries.iter().any(|(_, t2, l2)| t2 <= t && l2 <= l && (t2 < t || l2 < l));
            ParetoRow { decoder: name.clone(), runtime_s: *t, ler: *l, pareto: !dominated }
        })
        .collect())
}

/// Pareto inputs from sweep records at one distance: total sweep runtime per
/// decoder against its LER at `reference_x`.
pub fn pareto_inputs(records: &[SweepPointRecord], distance: usize, reference_x: f64) -> Result<Vec<(String, f64, f64)>> {
    let mut order: Vec<String> = Vec::new();
    let mut runtime: HashMap<String, f64> = HashMap::new();
    let mut ler: HashMap<String, f64> = HashMap::new();
    for r in records.iter().filter(|r| r.distance == distance) {
        if !order.contains(&r.decoder) {
            order.push(r.decoder.clone());
        }
        *runtime.entry(r.decoder.clone()).or_default() += r.runtime_s;
        if (r.x - reference_x).abs() < 1e-9 {
            ler.insert(r.decoder.clone(), r.ler);
        }
    }
    if order.is_empty() {
        return Err(Error::EmptyData(format!("no records at d={distance}")));
    }
    order
        .into_iter()
        .map(|d| match ler.get(&d) {
            Some(&l) => Ok((d.clone(), runtime[&d], l)),
            None => Err(Error::GridMismatch(format!("{d} has no point at reference x = {reference_x}"))),
        })
        .collect()
}

/// Tables reduced to their common `(distance, x)` keys, row-aligned.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedGrid {
    pub tables: Vec<Vec<SweepPointRecord>>,
    /// Rows dropped from each input table.
    pub dropped: Vec<usize>,
}

fn grid_key(r: &SweepPointRecord) -> (usize, u64) {
    (r.distance, r.x.to_bits())
}

/// Inner join on exact `(distance, x)`. Each table must hold one row per key.
pub fn merge_shared_grid(tables: &[Vec<SweepPointRecord>]) -> Result<MergedGrid> {
    if tables.len() < 2 {
        return Err(Error::InvalidParameter("merging needs at least two tables".into()));
    }
    let mut indexed = Vec::with_capacity(tables.len());
    for (ti, t) in tables.iter().enumerate() {
        let mut map = BTreeMap::new();
        for (i, r) in t.iter().enumerate() {
            if map.insert(grid_key(r), i).is_some() {
                return Err(Error::GridMismatch(format!(
                    "table {ti} repeats d={} x={}",
                    r.distance,
                    format_float(r.x)
                )));
            }
        }
        indexed.push(map);
    }
    let shared: Vec<(usize, u64)> = tables[0]
        .iter()
        .map(grid_key)
        .filter(|k| indexed[1..].iter().all(|m| m.contains_key(k)))
        .collect();
    if shared.is_empty() {
        return Err(Error::EmptyData("tables share no (distance, x) points".into()));
    }
    let dropped: Vec<usize> = tables.iter().map(|t| t.len() - shared.len()).collect();
    if dropped.iter().any(|&d| d > 0) {
        warn!("shared-grid merge dropped rows per table: {dropped:?}");
    }
    let merged = tables
        .iter()
        .zip(&indexed)
        .map(|(t, m)| shared.iter().map(|k| t[m[k]].clone()).collect())
        .collect();
    Ok(MergedGrid { tables: merged, dropped })
}
