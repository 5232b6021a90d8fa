//! Experiment configuration: one JSON document per run.

use std::path::Path;

use cherry_core::cf::RotationTarget;
use cherry_core::{Mp, Real};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Depth of the continued fraction kept for named targets.
const TARGET_DEPTH: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapConfig,
    pub target: TargetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitConfig>,
    /// Used when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// Critical exponent; may be omitted when `lambda1` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    /// Defaults to -1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    pub flat_length: f64,
    pub precision_bits: u32,
    /// Ceiling for the precision ladder; defaults to 4096.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_precision_bits: Option<u32>,
    /// Critical value as a decimal string. When absent the map is tuned to
    /// the target first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    /// `(sqrt 5 - 1)/2`.
    Golden,
    /// `sqrt 2 - 1`.
    Silver,
    /// Prescribed leading quotients followed by all ones.
    Quotients { quotients: Vec<u64> },
    /// A decimal value, expanded to `depth` quotients.
    Value { value: String, depth: usize },
    /// `p/q`; accepted by the parser so that commands can reject it.
    Rational { p: u64, q: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub tol: f64,
    /// Length of the independent re-estimate of the rotation number after
    /// tuning; 0 skips it.
    #[serde(default)]
    pub verify_iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub tau0: f64,
    /// Defaults to `1/lambda1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub epsilon_cut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub n0: usize,
    /// Overrides `K = max(θ_{n0-2}, θ_{n0-1})`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Last index of the synthetic recurrence.
    pub n_last: usize,
    /// `(θ_{n0-2}, θ_{n0-1})` for the synthetic recurrence.
    pub seeds: [f64; 2],
    /// Replace the synthetic sequence by `θ_n = q_{n+1}`, which must fail.
    #[serde(default)]
    pub adversarial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    /// Times at which `gamma_hat` is reported, increasing.
    pub t_grid: Vec<f64>,
    pub n0: usize,
    /// Cap on the number of returns simulated.
    #[serde(default = "default_n_cap")]
    pub n_cap: usize,
}

fn default_n_cap() -> usize {
    10_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    /// Length of the forward critical orbit compared with the rotation.
    pub n: usize,
    /// Returns in the exported flow segment.
    pub segment_n: usize,
    /// Orbit length for the `∫τ dμ` estimate; 0 skips it.
    #[serde(default)]
    pub tau_mu_n: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config {
                path,
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), CliError> {
        let m = &self.map;
        if m.ell.is_none() && m.lambda1.is_none() {
            return Err(CliError::config("map", "one of `ell` or `lambda1` is required"));
        }
        if let Some(g) = &self.gamma {
            if g.t_grid.is_empty() {
                return Err(CliError::config("gamma.t_grid", "empty time grid"));
            }
            if g.t_grid.windows(2).any(|w| !(w[1] > w[0])) || !(g.t_grid[0] > 0.0) {
                return Err(CliError::config("gamma.t_grid", "times must be positive and increasing"));
            }
        }
        if let Some(t) = &self.tune {
            if !(t.tol > 0.0 && t.tol < 1.0) {
                return Err(CliError::config("tune.tol", "must lie in (0,1)"));
            }
        }
        Ok(())
    }

    /// `(lambda1, lambda2)` with the defaults filled in.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = &self.map;
        let l2 = m.lambda2.unwrap_or(-1.0);
        let l1 = m.lambda1.unwrap_or_else(|| m.ell.unwrap_or(1.0) * -l2);
        (l1, l2)
    }

    pub fn max_precision(&self) -> u32 {
        self.map.max_precision_bits.unwrap_or(4096).max(self.map.precision_bits)
    }

    /// Deepest quotient index any configured block needs.
    fn target_depth(&self) -> usize {
        let from_bounds = self.bounds.as_ref().map(|b| b.n_last + 2).unwrap_or(0);
        TARGET_DEPTH.max(from_bounds)
    }

    pub fn build_target(&self) -> Result<RotationTarget<Mp>, CliError> {
        let prec = self.map.precision_bits.max(256);
        let depth = self.target_depth();
        let t = match &self.target {
            TargetConfig::Golden => RotationTarget::golden_mean(prec, depth),
            TargetConfig::Silver => RotationTarget::silver_mean(prec, depth),
            TargetConfig::Quotients { quotients } => RotationTarget::from_quotients(quotients, prec, depth)?,
            TargetConfig::Value { value, depth } => {
                let v = Mp::parse(value, prec).ok_or_else(|| CliError::config("target.value", "not a decimal number"))?;
                RotationTarget::from_value(v, *depth)?
            }
            TargetConfig::Rational { p, q } => RotationTarget::rational(*p, *q, prec)?,
        };
        Ok(t)
    }
}
