//! Run configuration: one TOML document describing a whole experiment.
//!
//! Every field has a default, so a config file only states what it changes;
//! `fns print-default-config` emits the full document. Unknown keys are
//! rejected rather than ignored, which catches typos before they silently
//! run the wrong experiment.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fns_core::conv::ConvEngine;
use fns_core::data::DataKind;
use fns_core::schedule::RecurrenceMode;
use fns_core::SymbolKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Smallness level of the seeded data; the generators keep the weighted
    /// sup norm at or below eps/2.
    pub eps: f64,
    /// Truncation radius: modes with |xi| <= radius participate.
    pub radius: f64,
    /// Time horizon T of the solve.
    pub horizon: f64,
    /// Number of uniform grid steps on [0, T].
    pub steps: usize,
    /// Convergence tolerance on the distance between consecutive iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Convolution route; the direct route is the slow oracle.
    pub engine: ConvEngine,
    pub symbol: SymbolConfig,
    pub data: DataConfig,
    pub schedule: ScheduleConfig,
    /// Output directory for artifacts; `--out` overrides.
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolConfig {
    pub kind: SymbolKind,
    /// Constant in the symbol growth bound |M(xi)| <= bound_constant |xi|.
    pub bound_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub kind: DataKind,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Time past which the upgraded decay is claimed; must sit inside the
    /// computed horizon.
    pub rho: f64,
    /// Low-frequency cutoff of the decay hypothesis.
    pub k_minus1: f64,
    /// Number of upgrade stages past the base stage.
    pub depth: usize,
    pub recurrence: RecurrenceMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps: 1e-3,
            radius: 8.0,
            horizon: 1.0,
            steps: 32,
            tol: 1e-10,
            max_iter: 40,
            engine: ConvEngine::Fft,
            symbol: SymbolConfig::default(),
            data: DataConfig::default(),
            schedule: ScheduleConfig::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl Default for SymbolConfig {
    fn default() -> Self {
        SymbolConfig {
            kind: SymbolKind::WorstCaseScalar,
            bound_constant: 1.0,
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            kind: DataKind::RandomBall,
            seed: 42,
        }
    }
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            rho: 0.5,
            k_minus1: 1e-5,
            depth: 1,
            recurrence: RecurrenceMode::Corrected,
        }
    }
}

impl RunConfig {
    /// Structural sanity; solver- and schedule-specific preconditions (eps
    /// window, rho against the horizon, ladder feasibility) are checked by
    /// the commands that need them, with more specific messages.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 6] = [
            ("eps", self.eps),
            ("horizon", self.horizon),
            ("tol", self.tol),
            ("symbol.bound_constant", self.symbol.bound_constant),
            ("schedule.rho", self.schedule.rho),
            ("schedule.k_minus1", self.schedule.k_minus1),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive and finite, got {v}");
            }
        }
        if !(self.radius >= 1.0 && self.radius.is_finite()) {
            bail!(
                "radius must be at least 1 (the ball must contain a mode), got {}",
                self.radius
            );
        }
        if self.steps == 0 {
            bail!("steps must be at least 1");
        }
        if self.max_iter == 0 {
            bail!("max_iter must be at least 1");
        }
        if self.schedule.depth > 30 {
            bail!("schedule.depth = {} is beyond any representable ladder", self.schedule.depth);
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads, parses, and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg: RunConfig =
        toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_losslessly() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_documents_inherit_defaults() {
        let cfg: RunConfig = toml::from_str("eps = 0.01\n[symbol]\nkind = \"zero\"").unwrap();
        assert_eq!(cfg.eps, 0.01);
        assert_eq!(cfg.symbol.kind, SymbolKind::Zero);
        assert_eq!(cfg.radius, RunConfig::default().radius);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("epz = 0.01").is_err());
        assert!(toml::from_str::<RunConfig>("[data]\nseeed = 3").is_err());
    }

    #[test]
    fn nonpositive_parameters_are_rejected() {
        let mut cfg = RunConfig::default();
        cfg.eps = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.radius = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.steps = 0;
        assert!(cfg.validate().is_err());
    }
}
