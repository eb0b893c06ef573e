//! Run configuration: a single TOML file, validated before any computation.

use std::path::{Path, PathBuf};

use rbdo_core::kriging::Trend;
use rbdo_core::probability::{Family, MarginalSpec};
use rbdo_core::rbdo::ReliabilityMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every engine derives its own stream from it.
    pub seed: u64,
    pub problem: ProblemConfig,
    /// Overrides of the problem's marginal table, matched by name.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variables: Vec<VariableConfig>,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub reliability: ReliabilityConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub rbdo: RbdoConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    Benchmark {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        std_dev: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
    },
    Hull {
        #[serde(default = "default_collapse_model")]
        collapse_model: String,
        #[serde(default = "default_overall_mode")]
        overall_mode: u32,
        #[serde(default = "default_interframe_mode")]
        interframe_mode: u32,
        /// Web slenderness constant; `inf` disables the constraint.
        #[serde(default = "default_web_limit")]
        web_limit: f64,
        /// Flange slenderness constant; `inf` disables the constraint.
        #[serde(default = "default_flange_limit")]
        flange_limit: f64,
        /// Design bounds are `initial * (1 ± bounds_fraction)` unless given.
        #[serde(default = "default_bounds_fraction")]
        bounds_fraction: f64,
    },
}

fn default_collapse_model() -> String {
    "placeholder".into()
}
fn default_overall_mode() -> u32 {
    2
}
fn default_interframe_mode() -> u32 {
    14
}
fn default_web_limit() -> f64 {
    1.1
}
fn default_flange_limit() -> f64 {
    0.5
}
fn default_bounds_fraction() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableConfig {
    pub name: String,
    pub family: Family,
    pub mean: f64,
    /// Standard deviation; exclusive with `cov`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_dev: Option<f64>,
    /// Coefficient of variation, `std_dev / |mean|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<f64>,
    /// Index of the design variable driving the mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_var: Option<usize>,
}

impl VariableConfig {
    pub fn marginal(&self) -> Result<MarginalSpec, CliError> {
        let std_dev = match (self.std_dev, self.cov, self.family) {
            (Some(_), Some(_), _) => {
                return Err(CliError::Config(format!("variable {}: give std_dev or cov, not both", self.name)))
            }
            (Some(s), None, _) => s,
            (None, Some(c), _) => c * self.mean.abs(),
            (None, None, Family::Deterministic) => 0.0,
            (None, None, _) => return Err(CliError::Config(format!("variable {}: missing std_dev or cov", self.name))),
        };
        Ok(MarginalSpec {
            family: self.family,
            mean: self.mean,
            std_dev,
            design_var: self.design_var,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReliabilityConfig {
    pub samples_per_level: usize,
    pub level_probability: f64,
    pub proposal_spread: f64,
    pub max_levels: usize,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        Self {
            samples_per_level: 10_000,
            level_probability: 0.1,
            proposal_spread: 1.0,
            max_levels: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineConfig {
    pub k: f64,
    pub candidates: usize,
    /// Points added per surrogate and round.
    pub clusters: usize,
    /// Target log10 spread of the bracketing probabilities.
    pub epsilon: f64,
    /// Maximum design size per limit state.
    pub budget: usize,
    pub max_rounds: usize,
    pub initial_doe: usize,
    /// Reliability level covered by the confidence box.
    pub box_beta: f64,
    pub trend: Trend,
    /// Points per axis of the exported contour grid.
    pub grid_points: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            k: 1.96,
            candidates: 10_000,
            clusters: 50,
            epsilon: 0.05,
            budget: 500,
            max_rounds: 50,
            initial_doe: 50,
            box_beta: 8.0,
            trend: Trend::Constant,
            grid_points: 101,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartDesign {
    /// Deterministic optimum of the mean-value problem.
    #[default]
    Ddo,
    /// The configured (or problem) initial design.
    Initial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbdoConfig {
    pub mode: ReliabilityMode,
    /// One target in system mode, one per limit state otherwise.
    pub beta_targets: Vec<f64>,
    /// Runs one system-mode optimization per target, each in its own
    /// subdirectory; overrides `beta_targets`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<f64>,
    pub start: StartDesign,
    pub max_iterations: usize,
    /// Samples per level of the verification runs on the true limit states.
    pub verify_samples: usize,
}

impl Default for RbdoConfig {
    fn default() -> Self {
        Self {
            mode: ReliabilityMode::System,
            beta_targets: vec![3.0],
            sweep: Vec::new(),
            start: StartDesign::Ddo,
            max_iterations: 50,
            verify_samples: 100_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// SHA-256 of the canonical form, output location excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        hex(&Sha256::digest(canonical.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let r = &self.reliability;
        if !(r.level_probability > 0.0 && r.level_probability < 1.0) {
            return bad(format!("reliability.level_probability must lie in (0, 1), got {}", r.level_probability));
        }
        let chains = r.samples_per_level as f64 * r.level_probability;
        if chains.fract() != 0.0 || chains < 2.0 {
            return bad("reliability.samples_per_level × level_probability must be an integer ≥ 2".into());
        }
        if !(r.proposal_spread > 0.0) || r.max_levels == 0 {
            return bad("reliability.proposal_spread must be positive and max_levels at least 1".into());
        }
        let f = &self.refine;
        if !(f.k > 0.0) {
            return bad(format!("refine.k must be positive, got {}", f.k));
        }
        if f.epsilon.is_nan() || f.epsilon < 0.0 {
            return bad("refine.epsilon must be nonnegative".into());
        }
        if f.clusters == 0 || f.candidates < f.clusters {
            return bad("refine.clusters must be positive and not exceed refine.candidates".into());
        }
        if f.initial_doe < 2 {
            return bad("refine.initial_doe must be at least 2".into());
        }
        if !(f.box_beta > 0.0) {
            return bad("refine.box_beta must be positive".into());
        }
        if f.grid_points < 2 {
            return bad("refine.grid_points must be at least 2".into());
        }
        let b = &self.rbdo;
        if b.beta_targets.is_empty() || b.beta_targets.iter().chain(&b.sweep).any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("rbdo.beta_targets and rbdo.sweep must hold positive finite values".into());
        }
        if b.verify_samples < 20 {
            return bad("rbdo.verify_samples is too small".into());
        }
        if let ProblemConfig::Hull { bounds_fraction, .. } = &self.problem {
            if !(*bounds_fraction >= 0.0 && *bounds_fraction < 1.0) {
                return bad("problem.bounds_fraction must lie in [0, 1)".into());
            }
        }
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7

[problem]
kind = "benchmark"
name = "linear"
beta = 3.0

[refine]
epsilon = inf
"#;

    #[test]
    fn round_trip() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        let again = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.refine.epsilon, f64::INFINITY);
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn missing_field_is_named() {
        let err = RunConfig::from_toml("[problem]\nkind = \"benchmark\"\nname = \"linear\"\n").unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{SAMPLE}\n[reliability]\nsamples = 10\n");
        assert!(RunConfig::from_toml(&text).is_err());
        let text = SAMPLE.replace("beta = 3.0", "beta = 3.0\nflavour = 1");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::from_toml(SAMPLE).unwrap();
        let mut b = a.clone();
        b.output.dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 8;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn hull_defaults() {
        let c = RunConfig::from_toml("seed = 1\n[problem]\nkind = \"hull\"\n").unwrap();
        match c.problem {
            ProblemConfig::Hull {
                overall_mode,
                interframe_mode,
                ref collapse_model,
                ..
            } => {
                assert_eq!((overall_mode, interframe_mode), (2, 14));
                assert_eq!(collapse_model, "placeholder");
            }
            _ => panic!(),
        }
    }

    #[test]
    fn invalid_values_rejected() {
        let text = SAMPLE.replace("epsilon = inf", "epsilon = -1.0");
        assert!(matches!(RunConfig::from_toml(&text), Err(CliError::Config(_))));
    }
}
