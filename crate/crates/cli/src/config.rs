//! TOML run configuration. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tmqi::fusion::GrowthStrategy;
use tmqi::qkd::Eve;
use tmqi::qpg::QpgConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub modes: Option<ModesConfig>,
    pub decompose: Option<DecomposeConfig>,
    pub qpg: Option<QpgCommandConfig>,
    pub gates: Option<GatesConfig>,
    pub tomo: Option<TomoConfig>,
    pub qkd: Option<QkdConfig>,
    pub fuse: Option<FuseConfig>,
    pub cluster: Option<ClusterConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeDomain {
    #[default]
    Frequency,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub n_modes: usize,
    pub center: f64,
    pub width: f64,
    /// Defaults to the support of the highest order with a 25% margin.
    pub span: Option<f64>,
    pub n_points: usize,
    pub domain: ModeDomain,
    /// Export the MUB states of this dimension over `HG_0 .. HG_{d-1}`
    /// instead of the bare basis.
    pub mub_dim: Option<usize>,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self { n_modes: 4, center: 0.0, width: 1.0, span: None, n_points: 512, domain: ModeDomain::Frequency, mub_dim: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasematchKind {
    #[default]
    Engineered,
    Sinc,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub order: usize,
    pub sigma: f64,
    pub center: f64,
    pub n_points: usize,
    pub phasematch: PhasematchKind,
    /// Width of a non-engineered phasematching function; defaults to `sigma`.
    pub pm_width: Option<f64>,
    /// Orientation of a non-engineered phasematching ridge, degrees.
    pub pm_angle_deg: f64,
    pub truncation: Option<usize>,
    pub write_jsa: bool,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            order: 1,
            sigma: 1.0,
            center: 0.0,
            n_points: 256,
            phasematch: PhasematchKind::Engineered,
            pm_width: None,
            pm_angle_deg: 30.0,
            truncation: None,
            write_jsa: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpgCommandConfig {
    pub gate: QpgConfig,
    /// Red register input as `[re, im]` pairs.
    pub input: Option<Vec<[f64; 2]>>,
}

impl Default for QpgCommandConfig {
    fn default() -> Self {
        Self {
            gate: QpgConfig { target: vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]], theta_deg: Some(90.0), efficiency: None, residuals: None },
            input: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatesConfig {
    pub gates: Vec<String>,
    pub random_unitaries: usize,
    pub random_dim: usize,
}

impl Default for GatesConfig {
    fn default() -> Self {
        Self {
            gates: ["H", "X1", "X2", "Y1", "Y2", "Z", "phase(0.7853981633974483)"].map(String::from).to_vec(),
            random_unitaries: 0,
            random_dim: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TomoKind {
    #[default]
    Single,
    Biphoton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TomoState {
    #[default]
    RandomMixed,
    RandomPure,
    MaximallyMixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomoConfig {
    pub kind: TomoKind,
    pub dim: usize,
    /// Second photon's dimension for biphoton runs; defaults to `dim`.
    pub dim_b: Option<usize>,
    pub state: TomoState,
    /// Shots per setting; absent means exact rates.
    pub shots: Option<u64>,
    /// Mode pairs `[k, l]` for single-photon runs; defaults to all pairs.
    pub pairs: Option<Vec<[usize; 2]>>,
    /// Index tuples `[m, n, p, q]` for biphoton runs; defaults to all.
    pub blocks: Option<Vec<[usize; 4]>>,
}

impl Default for TomoConfig {
    fn default() -> Self {
        Self { kind: TomoKind::Single, dim: 3, dim_b: None, state: TomoState::RandomMixed, shots: None, pairs: None, blocks: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QkdConfig {
    pub d: usize,
    /// Defaults to 2 for `d = 2` and to all `d + 1` bases otherwise.
    pub n_bases: Option<usize>,
    pub rounds: u64,
    pub eve: Eve,
    pub log: bool,
}

impl Default for QkdConfig {
    fn default() -> Self {
        Self { d: 2, n_bases: None, rounds: 100_000, eve: Eve::None, log: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusePreset {
    #[default]
    SymmetricProduct,
    BellPairs,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuseConfig {
    pub preset: FusePreset,
    /// Qubit count and amplitudes for the custom preset; slot 0 is the
    /// most significant bit.
    pub n: Option<usize>,
    pub coeffs: Option<Vec<[f64; 2]>>,
    /// Slots default to `(0, 1)`, or `(1, 2)` for two Bell pairs.
    pub slot_a: Option<usize>,
    pub slot_b: Option<usize>,
    /// Also draw one sampled outcome from the seed.
    pub sample: bool,
}

impl Default for FuseConfig {
    fn default() -> Self {
        Self { preset: FusePreset::SymmetricProduct, n: None, coeffs: None, slot_a: None, slot_b: None, sample: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub target_n: usize,
    pub trials: usize,
    pub bell_supply: usize,
    pub strategy: GrowthStrategy,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { target_n: 3, trials: 1000, bell_supply: 100_000, strategy: GrowthStrategy::Recycle }
    }
}
