//! Syndrome decoders behind a common interface.
//!
//! X and Z errors are decoded independently: X errors from the Z-check
//! outcomes against `h_z`, Z errors from the X-check outcomes against `h_x`.
//! Diagnostics sum both halves. Loss flags are not consulted by any decoder
//! here.

pub mod blossom;
pub mod bp;
pub mod graph;
pub mod mwpm;
pub mod uf;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::lattice::{CodeLayout, ErrorState, Syndrome};

pub use bp::BpDecoder;
pub use mwpm::MwpmDecoder;
pub use uf::UnionFindDecoder;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub correction: ErrorState,
    /// Lit syndrome bits consumed, both halves.
    pub defect_count: usize,
    /// Hamming weight of the correction, both halves.
    pub correction_weight: usize,
    /// The decoder could not produce a correction matching the syndrome.
    pub failed: bool,
}

impl DecodeResult {
    pub(crate) fn from_halves(n: usize, syndrome: &Syndrome, c_x: BitVec, c_z: BitVec, failed: bool) -> Self {
        let correction_weight = c_x.weight() + c_z.weight();
        DecodeResult {
            correction: ErrorState { e_x: c_x, e_z: c_z, erased: BitVec::zeros(n) },
            defect_count: syndrome.defect_count(),
            correction_weight,
            failed,
        }
    }
}

pub trait Decoder: Send + Sync {
    fn kind(&self) -> DecoderKind;

    fn decode(&self, syndrome: &Syndrome) -> Result<DecodeResult>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DecoderKind {
    #[serde(rename = "mwpm")]
    Mwpm,
    #[serde(rename = "uf")]
    UnionFind,
    #[serde(rename = "bp")]
    Bp,
    #[serde(rename = "guided-mwpm")]
    GuidedMwpm,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [DecoderKind::Mwpm, DecoderKind::UnionFind, DecoderKind::Bp, DecoderKind::GuidedMwpm];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Mwpm => "mwpm",
            DecoderKind::UnionFind => "uf",
            DecoderKind::Bp => "bp",
            DecoderKind::GuidedMwpm => "guided-mwpm",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::UnknownDecoder(s.to_string()))
    }
}

/// Edge identity in a check graph: a pair of checks, or a check and the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKey {
    Pair(usize, usize),
    Boundary(usize),
}

impl EdgeKey {
    pub fn pair(a: usize, b: usize) -> Self {
        EdgeKey::Pair(a.min(b), a.max(b))
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeKey::Pair(a, b) => write!(f, "{a}-{b}"),
            EdgeKey::Boundary(a) => write!(f, "{a}-B"),
        }
    }
}

impl FromStr for EdgeKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::GuideTable(format!("malformed edge key `{s}`"));
        let (a, b) = s.split_once('-').ok_or_else(bad)?;
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        match b.trim() {
            "B" | "b" => Ok(EdgeKey::Boundary(a)),
            other => Ok(EdgeKey::pair(a, other.parse().map_err(|_| bad())?)),
        }
    }
}

/// Per-edge weight multipliers for the guided matcher. Keys index checks within
/// each half's check list and apply to both halves; missing edges default to 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GuideTable {
    multipliers: BTreeMap<EdgeKey, f64>,
}

impl GuideTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: EdgeKey, multiplier: f64) -> Result<()> {
        if !(multiplier > 0.0 && multiplier.is_finite()) {
            return Err(Error::GuideTable(format!("multiplier {multiplier} for edge {key} must be positive")));
        }
        self.multipliers.insert(key, multiplier);
        Ok(())
    }

    pub fn multiplier(&self, key: EdgeKey) -> f64 {
        self.multipliers.get(&key).copied().unwrap_or(1.0)
    }

    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, f64> = serde_json::from_str(text)?;
        let mut table = GuideTable::new();
        for (k, v) in raw {
            table.insert(k.parse()?, v)?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::GuideTable(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<String, f64> = self.multipliers.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        serde_json::to_string_pretty(&raw).expect("string-keyed map serializes")
    }
}

/// Decoder settings resolved once per sweep.
#[derive(Clone, Debug)]
pub struct DecoderSettings {
    /// Per-qubit flip probability assumed by BP.
    pub bp_prior: f64,
    pub bp_max_iters: usize,
    /// Decimation restarts BP may take when it does not converge.
    pub bp_decimation_rounds: usize,
    pub guide: Option<GuideTable>,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        DecoderSettings { bp_prior: 0.05, bp_max_iters: 50, bp_decimation_rounds: 1, guide: None }
    }
}

/// Instantiates a decoder for `layout`. The guided matcher needs `settings.guide`.
pub fn build_decoder(kind: DecoderKind, layout: &CodeLayout, settings: &DecoderSettings) -> Result<Box<dyn Decoder>> {
    Ok(match kind {
        DecoderKind::Mwpm => Box::new(MwpmDecoder::new(layout)),
        DecoderKind::GuidedMwpm => {
            let guide = settings
                .guide
                .clone()
                .ok_or_else(|| Error::GuideTable("guided-mwpm needs a guide table".into()))?;
            Box::new(MwpmDecoder::guided(layout, guide))
        }
        DecoderKind::UnionFind => Box::new(UnionFindDecoder::new(layout)),
        DecoderKind::Bp => Box::new(BpDecoder::with_decimation(
            layout,
            settings.bp_prior,
            settings.bp_max_iters,
            settings.bp_decimation_rounds,
        )?),
    })
}

pub fn decode_mwpm(layout: &CodeLayout, syndrome: &Syndrome) -> Result<DecodeResult> {
    MwpmDecoder::new(layout).decode(syndrome)
}

pub fn decode_guided_mwpm(layout: &CodeLayout, syndrome: &Syndrome, guide: &GuideTable) -> Result<DecodeResult> {
    MwpmDecoder::guided(layout, guide.clone()).decode(syndrome)
}

pub fn decode_uf(layout: &CodeLayout, syndrome: &Syndrome) -> Result<DecodeResult> {
    UnionFindDecoder::new(layout).decode(syndrome)
}

pub fn decode_bp(layout: &CodeLayout, syndrome: &Syndrome, prior: f64, max_iters: usize) -> Result<DecodeResult> {
    BpDecoder::new(layout, prior, max_iters)?.decode(syndrome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoder_names_round_trip() {
        for k in DecoderKind::ALL {
            assert_eq!(k.name().parse::<DecoderKind>().unwrap(), k);
        }
        assert!(matches!("neural".parse::<DecoderKind>(), Err(Error::UnknownDecoder(_))));
    }

    #[test]
    fn edge_keys() {
        assert_eq!("3-1".parse::<EdgeKey>().unwrap(), EdgeKey::Pair(1, 3));
        assert_eq!("4-B".parse::<EdgeKey>().unwrap(), EdgeKey::Boundary(4));
        assert!("x-1".parse::<EdgeKey>().is_err());
        assert!("7".parse::<EdgeKey>().is_err());
    }

    #[test]
    fn guide_table_json() {
        let t = GuideTable::from_json(r#"{"0-1": 2.0, "2-B": 0.5}"#).unwrap();
        assert_eq!(t.multiplier(EdgeKey::pair(1, 0)), 2.0);
        assert_eq!(t.multiplier(EdgeKey::Boundary(2)), 0.5);
        assert_eq!(t.multiplier(EdgeKey::Boundary(0)), 1.0);
        assert_eq!(GuideTable::from_json(&t.to_json()).unwrap(), t);
        assert!(GuideTable::from_json(r#"{"0-1": 0.0}"#).is_err());
        assert!(GuideTable::from_json(r#"{"0-1": -1.0}"#).is_err());
    }
}
