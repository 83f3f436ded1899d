//! Spec files: `key = value` lines, `#` comments, relative paths resolved
//! against the spec file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qtb_core::decoders::DecoderKind;
use qtb_core::harness::{Grid, GridVariable, NoiseComponent, SweepSpec};
use qtb_core::noise::{load_loss_map, NoiseConfig, NoiseMode};
use qtb_core::{Error, Result};

const KEYS: &[&str] = &[
    "mode",
    "decoders",
    "distances",
    "grid.variable",
    "grid.start",
    "grid.stop",
    "grid.step",
    "trials",
    "seed",
    "threads",
    "noise.profile",
    "noise.p",
    "noise.sigma",
    "noise.p_gate",
    "noise.p_meas",
    "noise.p_idle",
    "noise.p_loss",
    "loss_map",
    "guide_table",
    "bp.max_iters",
    "bp.decimation_rounds",
    "resamples",
    "reference",
    "pareto.distance",
    "ablation.component",
    "ablation.levels",
    "effect.pairs",
    "fidelity.threads",
    "input",
];

/// Ablation levels used when a spec names none.
pub const DEFAULT_ABLATION_LEVELS: [f64; 4] = [0.0, 0.0025, 0.005, 0.01];

#[derive(Clone, Debug, Default)]
pub struct SpecFile {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl SpecFile {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", n + 1)));
            }
            if values.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        Ok(SpecFile { values, base_dir: base_dir.to_path_buf() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read spec {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`"))))
            .transpose()
    }

    pub fn number<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|p| self.base_dir.join(p))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{s}`"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    pub fn mode(&self) -> Result<NoiseMode> {
        NoiseMode::parse(self.get("mode").unwrap_or("gkp"))
    }

    pub fn decoders(&self) -> Result<Vec<DecoderKind>> {
        match self.get("decoders") {
            None => Ok(DecoderKind::ALL.to_vec()),
            Some(v) => v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect(),
        }
    }

    pub fn noise(&self) -> Result<NoiseConfig> {
        let mode = self.mode()?;
        let profile = self.get("noise.profile").unwrap_or(match mode {
            NoiseMode::Gkp => "paper-default",
            NoiseMode::Pauli => "clean",
        });
        let mut cfg = match (mode, profile) {
            (NoiseMode::Gkp, "paper-default") => NoiseConfig::locked_profile(0.2),
            (NoiseMode::Gkp, "clean") => NoiseConfig::gkp(0.2),
            (NoiseMode::Pauli, "clean") => NoiseConfig::pauli(0.01),
            (_, other) => return Err(Error::Config(format!("noise profile `{other}` does not apply to {}", mode.as_str()))),
        };
        cfg.p = self.number("noise.p", cfg.p)?;
        cfg.sigma = self.number("noise.sigma", cfg.sigma)?;
        cfg.p_gate = self.number("noise.p_gate", cfg.p_gate)?;
        cfg.p_meas = self.number("noise.p_meas", cfg.p_meas)?;
        cfg.p_idle = self.number("noise.p_idle", cfg.p_idle)?;
        cfg.p_loss = self.number("noise.p_loss", cfg.p_loss)?;
        if let Some(path) = self.path("loss_map") {
            cfg.loss_map = Some(load_loss_map(&path).map_err(|e| Error::Config(format!("loss map: {e}")))?);
        }
        Ok(cfg)
    }

    pub fn grid(&self, mode: NoiseMode) -> Result<Grid> {
        let variable = match self.get("grid.variable") {
            Some(v) => v.parse()?,
            None => GridVariable::default_for(mode),
        };
        let (start, stop, step) = match variable {
            GridVariable::Sigma => (0.05, 0.35, 0.05),
            GridVariable::P => (0.01, 0.1, 0.01),
        };
        Ok(Grid {
            variable,
            start: self.number("grid.start", start)?,
            stop: self.number("grid.stop", stop)?,
            step: self.number("grid.step", step)?,
        })
    }

    /// The sweep this spec describes, before command-specific adjustments.
    pub fn sweep(&self) -> Result<SweepSpec> {
        let noise = self.noise()?;
        let grid = self.grid(noise.mode)?;
        let distances = self.list("distances")?.unwrap_or_else(|| vec![3, 5, 7]);
        let mut spec = SweepSpec::new(noise, self.decoders()?, distances, grid, self.number("trials", 3000)?);
        spec.base_seed = self.number("seed", 0)?;
        spec.threads = self.number("threads", 0)?;
        spec.guide_table = self.path("guide_table");
        spec.bp_max_iters = self.number("bp.max_iters", spec.bp_max_iters)?;
        spec.bp_decimation_rounds = self.number("bp.decimation_rounds", spec.bp_decimation_rounds)?;
        Ok(spec)
    }

    pub fn resamples(&self) -> Result<usize> {
        self.number("resamples", 2000)
    }

    pub fn ablation_components(&self) -> Result<Vec<NoiseComponent>> {
        match self.get("ablation.component") {
            None | Some("all") => Ok(NoiseComponent::ALL.to_vec()),
            Some(v) => v.split(',').map(str::trim).map(str::parse).collect(),
        }
    }

    pub fn ablation_levels(&self) -> Result<Vec<f64>> {
        Ok(self.list("ablation.levels")?.unwrap_or_else(|| DEFAULT_ABLATION_LEVELS.to_vec()))
    }

    /// Decoder pairs for effect sizes, written `a:b, c:d`.
    pub fn effect_pairs(&self) -> Result<Option<Vec<(String, String)>>> {
        let Some(v) = self.get("effect.pairs") else { return Ok(None) };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|p| {
                let (a, b) = p.split_once(':').ok_or_else(|| Error::Config(format!("effect pair `{p}` needs `a:b`")))?;
                let a: DecoderKind = a.trim().parse()?;
                let b: DecoderKind = b.trim().parse()?;
                Ok((a.to_string(), b.to_string()))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}
