use std::path::PathBuf;

use poisson_mixing::catalog::{FunctionSpec, IntegrandSpec, MeasureSpec, TransformSpec};
use poisson_mixing::{MixingSchedule, Region};
use serde::{Deserialize, Serialize};

/// A complete run description, read from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Default output path; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub transform: Option<TransformSpec>,
    #[serde(default)]
    pub mecke: Option<MeckeSection>,
    #[serde(default)]
    pub moments: Option<MomentsSection>,
    #[serde(default)]
    pub invariance: Option<InvarianceSection>,
    #[serde(default)]
    pub vanishing: Option<VanishingSection>,
    #[serde(default)]
    pub zero_type: Option<ZeroTypeSection>,
    #[serde(default)]
    pub mixing: Option<MixingSection>,
}

fn default_replicates() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeckeSection {
    pub integrands: Vec<IntegrandSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    pub checks: Vec<MomentCase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentCase {
    pub integrands: Vec<IntegrandSpec>,
    pub powers: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceSection {
    pub regions: Vec<Region>,
    #[serde(default)]
    pub safe_zone: Option<Region>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanishingSection {
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "three")]
    pub max_points: usize,
    #[serde(default = "three")]
    pub max_iterate: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Where the added points are drawn from; defaults to the window.
    #[serde(default)]
    pub points: Option<Region>,
}

fn default_draws() -> usize {
    1000
}

fn three() -> usize {
    3
}

fn default_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroTypeSection {
    pub g: FunctionSpec,
    pub h: FunctionSpec,
    pub n_max: usize,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSection {
    pub functions: Vec<FunctionSpec>,
    pub powers: Vec<usize>,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub schedule: Option<MixingSchedule>,
}
