//! JSON run configuration shared by every subcommand.

use serde::Deserialize;
use thiserror::Error;

use crate::graph_oracle::DEFAULT_CAP;
use crate::harness::{ExperimentConfig, ExperimentKind};
use crate::theory::DEFAULT_MARGIN;
use crate::weights::{SampleMode, WeightModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SizeSpec {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Range { min: f64, max: f64, points: usize },
    List(Vec<f64>),
}

impl GridSpec {
    /// Evenly spaced grid including both ends, or the explicit list.
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let grid = match *self {
            GridSpec::List(ref v) => v.clone(),
            GridSpec::Range { min, max, points } => {
                if points == 0 {
                    return Err(invalid("lambda.points", "must be at least 1"));
                }
                if !(min <= max) {
                    return Err(invalid("lambda", format!("min {min} exceeds max {max}")));
                }
                if points == 1 {
                    vec![min]
                } else {
                    let step = (max - min) / (points - 1) as f64;
                    (0..points)
                        .map(|i| {
                            if i + 1 == points {
                                max
                            } else {
                                min + step * i as f64
                            }
                        })
                        .collect()
                }
            }
        };
        if grid.is_empty() {
            return Err(invalid("lambda", "grid is empty"));
        }
        if let Some(bad) = grid.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(invalid(
                "lambda",
                format!("value {bad} is not a positive number"),
            ));
        }
        Ok(grid)
    }
}

fn default_replicates() -> usize {
    200
}
fn default_tolerance() -> f64 {
    3.0
}
fn default_margin() -> f64 {
    DEFAULT_MARGIN
}
fn default_mode() -> SampleMode {
    SampleMode::Quantile
}
fn default_cap() -> usize {
    DEFAULT_CAP
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: WeightModel,
    #[serde(default)]
    pub n: Option<SizeSpec>,
    pub lambda: GridSpec,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default = "default_mode")]
    pub weight_mode: SampleMode,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub cross_pairs: Vec<(usize, usize)>,
    #[serde(default = "default_cap")]
    pub graph_cap: usize,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        if !(cfg.margin >= 0.0) {
            return Err(invalid("margin", "must be non-negative"));
        }
        if !(cfg.tolerance > 0.0) {
            return Err(invalid("tolerance", "must be positive"));
        }
        cfg.lambda.values()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Vec<f64> {
        // Validated in from_json.
        self.lambda.values().unwrap_or_default()
    }

    pub fn sizes(&self) -> Result<Vec<usize>, ConfigError> {
        let sizes = match &self.n {
            None => return Err(invalid("n", "missing")),
            Some(SizeSpec::One(n)) => vec![*n],
            Some(SizeSpec::Many(v)) => v.clone(),
        };
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(invalid("n", "sizes must be positive"));
        }
        Ok(sizes)
    }

    pub fn single_size(&self) -> Result<usize, ConfigError> {
        match self.sizes()?.as_slice() {
            [n] => Ok(*n),
            _ => Err(invalid("n", "this command takes a single size")),
        }
    }

    /// Experiment settings for `kind`; fails if the config names another kind.
    pub fn experiment(&self, kind: ExperimentKind) -> Result<ExperimentConfig, ConfigError> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(invalid(
                    "kind",
                    format!("config says {k:?} but command runs {kind:?}"),
                ));
            }
        }
        self.settings(kind)
    }

    /// Experiment settings without checking the `kind` field.
    pub fn settings(&self, kind: ExperimentKind) -> Result<ExperimentConfig, ConfigError> {
        Ok(ExperimentConfig {
            model: self.model.clone(),
            n: self.sizes()?,
            lambdas: self.grid(),
            replicates: self.replicates,
            seed: self.seed,
            kind,
            tolerance: self.tolerance,
            weight_mode: self.weight_mode,
            margin: self.margin,
            cross_pairs: self.cross_pairs.clone(),
            graph_cap: self.graph_cap,
        })
    }
}
