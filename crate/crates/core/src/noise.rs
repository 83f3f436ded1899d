//! Pauli and native-GKP noise samplers.
//!
//! GKP channel order within a trial: displacement digitization, gate flips,
//! idle flips, loss replacement, then the measurement mask. Each channel has
//! its own [`Lane`] so draws in one channel never shift another.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::lattice::{CodeLayout, ErrorState, Syndrome};
use crate::rng::{Lane, SeedContext};

/// GKP lattice spacing, √π.
pub fn gkp_lattice() -> f64 {
    PI.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Pauli,
    Gkp,
}

impl NoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::Pauli => "pauli",
            NoiseMode::Gkp => "gkp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pauli" => Ok(NoiseMode::Pauli),
            "gkp" => Ok(NoiseMode::Gkp),
            other => Err(Error::Config(format!("unknown noise mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    pub p: f64,
    pub sigma: f64,
    pub p_gate: f64,
    pub p_meas: f64,
    pub p_idle: f64,
    pub p_loss: f64,
    pub loss_map: Option<Vec<f64>>,
}

impl NoiseConfig {
    pub fn pauli(p: f64) -> Self {
        NoiseConfig {
            mode: NoiseMode::Pauli,
            p,
            sigma: 0.0,
            p_gate: 0.0,
            p_meas: 0.0,
            p_idle: 0.0,
            p_loss: 0.0,
            loss_map: None,
        }
    }

    /// Native GKP with every auxiliary channel off.
    pub fn gkp(sigma: f64) -> Self {
        NoiseConfig { mode: NoiseMode::Gkp, sigma, ..NoiseConfig::pauli(0.0) }
    }

    /// The locked GKP profile: gate 0.005, measurement 0.01, idle 0.005, loss 0.005.
    pub fn locked_profile(sigma: f64) -> Self {
        NoiseConfig { p_gate: 0.005, p_meas: 0.01, p_idle: 0.005, p_loss: 0.005, ..NoiseConfig::gkp(sigma) }
    }

    pub fn validate(&self, n_data: usize) -> Result<()> {
        let probs = [
            ("p", self.p),
            ("p_gate", self.p_gate),
            ("p_meas", self.p_meas),
            ("p_idle", self.p_idle),
            ("p_loss", self.p_loss),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not a probability")));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {} must be finite and >= 0", self.sigma)));
        }
        if let Some(map) = &self.loss_map {
            if map.len() != n_data {
                return Err(Error::LengthMismatch { what: "loss_map", got: map.len(), expected: n_data });
            }
            if let Some(bad) = map.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidParameter(format!("loss_map entry {bad} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn loss_probability(&self, q: usize) -> f64 {
        self.loss_map.as_ref().map_or(self.p_loss, |m| m[q])
    }

    /// Per-qubit flip probability BP assumes: `p` in Pauli mode, the analytic
    /// digitization probability in GKP mode. Clamped into (0, 1/2).
    pub fn bp_prior(&self) -> f64 {
        let raw = match self.mode {
            NoiseMode::Pauli => self.p,
            NoiseMode::Gkp => gkp_flip_probability(self.sigma),
        };
        raw.clamp(BP_PRIOR_FLOOR, 0.5 - BP_PRIOR_FLOOR)
    }
}

const BP_PRIOR_FLOOR: f64 = 1e-6;

/// Reads a JSON array of per-qubit loss probabilities.
pub fn load_loss_map(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Parity of the nearest GKP lattice index; halfway cases round away from zero.
#[inline]
pub fn gkp_digitize(delta: f64) -> bool {
    let n = (delta / gkp_lattice()).round();
    n.abs() % 2.0 == 1.0
}

/// Probability that an `N(0, σ²)` displacement lands in an odd rounding bin.
pub fn gkp_flip_probability(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let scale = gkp_lattice() / (sigma * std::f64::consts::SQRT_2);
    let mut total = 0.0;
    let mut n = 1.0f64;
    loop {
        // Mass of [(n - 1/2)λ, (n + 1/2)λ] on one side, doubled for symmetry.
        let lo = statrs::function::erf::erfc((n - 0.5) * scale);
        let hi = statrs::function::erf::erfc((n + 0.5) * scale);
        let term = lo - hi;
        total += term;
        if lo < 1e-300 || (term < 1e-18 && n > 1.0) {
            break;
        }
        n += 2.0;
    }
    total
}

pub fn sample_pauli(layout: &CodeLayout, cfg: &NoiseConfig, ctx: &SeedContext) -> ErrorState {
    let n = layout.n_data;
    let mut err = ErrorState::zeros(n);
    fill_bernoulli(&mut err.e_x, cfg.p, ctx, Lane::Q);
    fill_bernoulli(&mut err.e_z, cfg.p, ctx, Lane::P);
    err
}

/// Samples one GKP trial. The returned syndrome mask flips measured check
/// outcomes and is applied by the caller after extraction.
pub fn sample_gkp(layout: &CodeLayout, cfg: &NoiseConfig, ctx: &SeedContext) -> (ErrorState, Syndrome) {
    let n = layout.n_data;
    let mut err = ErrorState::zeros(n);

    if cfg.sigma > 0.0 {
        let mut q_stream = ctx.stream(Lane::Q);
        let mut p_stream = ctx.stream(Lane::P);
        for i in 0..n {
            if gkp_digitize(cfg.sigma * q_stream.standard_normal()) {
                err.e_x.flip(i);
            }
            if gkp_digitize(cfg.sigma * p_stream.standard_normal()) {
                err.e_z.flip(i);
            }
        }
    }

    for (lane, p) in [(Lane::Gate, cfg.p_gate), (Lane::Idle, cfg.p_idle)] {
        if p > 0.0 {
            let mut s = ctx.stream(lane);
            for i in 0..n {
                if s.bernoulli(p) {
                    err.e_x.flip(i);
                }
                if s.bernoulli(p) {
                    err.e_z.flip(i);
                }
            }
        }
    }

    if cfg.p_loss > 0.0 || cfg.loss_map.is_some() {
        let mut s = ctx.stream(Lane::Loss);
        for i in 0..n {
            if s.bernoulli(cfg.loss_probability(i)) {
                err.erased.set(i, true);
                err.e_x.set(i, s.bernoulli(0.5));
                err.e_z.set(i, s.bernoulli(0.5));
            }
        }
    }

    let mut mask = Syndrome::zeros(layout);
    if cfg.p_meas > 0.0 {
        let mut s = ctx.stream(Lane::Meas);
        fill_from_stream(&mut mask.s_z, cfg.p_meas, &mut s);
        fill_from_stream(&mut mask.s_x, cfg.p_meas, &mut s);
    }
    (err, mask)
}

fn fill_bernoulli(v: &mut BitVec, p: f64, ctx: &SeedContext, lane: Lane) {
    if p <= 0.0 {
        return;
    }
    let mut s = ctx.stream(lane);
    fill_from_stream(v, p, &mut s);
}

fn fill_from_stream(v: &mut BitVec, p: f64, s: &mut crate::rng::CounterStream) {
    for i in 0..v.len() {
        if s.bernoulli(p) {
            v.set(i, true);
        }
    }
}

/// Draws the trial's error (and syndrome mask, zero in Pauli mode).
pub fn sample(layout: &CodeLayout, cfg: &NoiseConfig, ctx: &SeedContext) -> (ErrorState, Syndrome) {
    match cfg.mode {
        NoiseMode::Pauli => (sample_pauli(layout, cfg, ctx), Syndrome::zeros(layout)),
        NoiseMode::Gkp => sample_gkp(layout, cfg, ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_code;

    #[test]
    fn digitize_lattice_points() {
        let l = gkp_lattice();
        assert!(!gkp_digitize(0.0));
        assert!(gkp_digitize(l));
        assert!(!gkp_digitize(2.0 * l));
        assert!(gkp_digitize(-l));
        assert!(gkp_digitize(3.0 * l));
        // Ties at half spacing round away from zero.
        assert!(gkp_digitize(0.5 * l));
        assert!(gkp_digitize(-0.5 * l));
        assert!(!gkp_digitize(0.49 * l));
    }

    #[test]
    fn degenerate_pauli() {
        let code = build_code(5).unwrap();
        let ctx = SeedContext::new(1, 5, 0, 0);
        let zero = sample_pauli(&code, &NoiseConfig::pauli(0.0), &ctx);
        assert_eq!(zero, ErrorState::zeros(25));
        let all = sample_pauli(&code, &NoiseConfig::pauli(1.0), &ctx);
        assert_eq!(all.e_x.weight(), 25);
        assert_eq!(all.e_z.weight(), 25);
        assert!(all.erased.is_zero());
    }

    #[test]
    fn degenerate_gkp() {
        let code = build_code(3).unwrap();
        let (err, mask) = sample_gkp(&code, &NoiseConfig::gkp(0.0), &SeedContext::new(3, 3, 1, 2));
        assert_eq!(err, ErrorState::zeros(9));
        assert!(mask.is_trivial());
    }

    #[test]
    fn full_loss_flags_everything() {
        let code = build_code(3).unwrap();
        let cfg = NoiseConfig { p_loss: 1.0, ..NoiseConfig::gkp(0.0) };
        let (err, _) = sample_gkp(&code, &cfg, &SeedContext::new(3, 3, 1, 2));
        assert_eq!(err.erased.weight(), 9);
    }

    #[test]
    fn validation() {
        assert!(NoiseConfig::pauli(1.5).validate(9).is_err());
        assert!(NoiseConfig::gkp(-0.1).validate(9).is_err());
        let cfg = NoiseConfig { loss_map: Some(vec![0.1; 8]), ..NoiseConfig::gkp(0.2) };
        assert!(cfg.validate(9).is_err());
        assert!(NoiseConfig::locked_profile(0.2).validate(9).is_ok());
    }

    #[test]
    fn flip_probability_limits() {
        assert_eq!(gkp_flip_probability(0.0), 0.0);
        // Very wide displacements make the parity a fair coin.
        assert!((gkp_flip_probability(20.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mode_names() {
        assert_eq!(NoiseMode::parse("GKP").unwrap(), NoiseMode::Gkp);
        assert!(NoiseMode::parse("bosonic").is_err());
    }
}
