//! The JSON run configuration. Unknown keys are rejected.

use std::path::Path;

use arithclass_core::config::{parse_vector, MapSpec, SequenceSpec};
use arithclass_core::lattice::{TargetVector, DEFAULT_NODE_BUDGET};
use arithclass_core::scalar::DEFAULT_SNAP_BITS;
use arithclass_core::{DecreasingSequence, PolynomialMap};
use serde::Deserialize;

use crate::error::CliError;

fn default_snap() -> u32 {
    DEFAULT_SNAP_BITS
}

fn default_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

fn default_mc() -> u64 {
    1_000_000
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub alpha: Option<Vec<String>>,
    #[serde(default = "default_snap")]
    pub snap_bits: u32,
    #[serde(default)]
    pub sequence: Option<SequenceSpec>,
    #[serde(default)]
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub cutoff: Option<u32>,
    /// Node budget of the branch-and-bound σ engine.
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_mc")]
    pub mc_samples: u64,
    /// Replaces the derived band widths; every listed level is live.
    #[serde(default)]
    pub levels: Option<Vec<LevelOverride>>,
    #[serde(default)]
    pub flow: Option<FlowSpec>,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
    #[serde(default)]
    pub bands: Option<BandsSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelOverride {
    pub k: u32,
    pub width: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsSpec {
    pub r: f64,
    #[serde(default)]
    pub cutoff: Option<u32>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default)]
    pub ctau: Option<CtauSpec>,
    #[serde(default)]
    pub km: Option<KmSpec>,
    #[serde(default)]
    pub shells: Option<ShellSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtauSpec {
    pub degrees: Vec<u32>,
    pub eps: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid_budget: u64,
}

fn default_grid() -> u64 {
    100_000
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmSpec {
    pub k_max: u32,
    pub calibrate_max: u32,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub r: f64,
    pub multipliers: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid_budget: u64,
    /// Accepted range of the log-log slope.
    pub slope_range: [f64; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub dims: Vec<usize>,
    pub k_max: u32,
    /// `[n, d, l]` for the ρ threshold check against the run's sequence.
    #[serde(default)]
    pub rho: Option<[u32; 3]>,
    #[serde(default = "default_rho_span")]
    pub rho_span: u32,
}

fn default_rho_span() -> u32 {
    64
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn alpha(&self) -> Result<TargetVector, CliError> {
        let tokens = self
            .alpha
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `alpha`".into()))?;
        Ok(parse_vector(tokens, self.snap_bits)?)
    }

    pub fn sequence(&self) -> Result<DecreasingSequence, CliError> {
        let spec = self
            .sequence
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `sequence`".into()))?;
        Ok(spec.build()?)
    }

    pub fn map(&self) -> Result<PolynomialMap, CliError> {
        let spec = self
            .map
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `map`".into()))?;
        Ok(spec.build(self.snap_bits)?)
    }

    pub fn cutoff(&self) -> Result<u32, CliError> {
        self.cutoff
            .ok_or_else(|| CliError::Config("missing `cutoff`".into()))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("missing `seed` (required for sampling commands)".into()))
    }
}
