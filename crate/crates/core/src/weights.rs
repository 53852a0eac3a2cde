//! Vertex-weight laws and the moment functionals built on them.
//!
//! Every expectation here is a finite sum, so all theory values downstream
//! are exact up to floating-point rounding. Empirical laws are summed
//! pairwise.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::pairwise_sum;
use crate::rng::{rng_for, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightsError {
    #[error("weights must be strictly positive and finite, got {0}")]
    NonPositiveWeight(f64),
    #[error("atom probability {0} is outside (0, 1]")]
    BadProbability(f64),
    #[error("discrete probabilities sum to {0}, expected 1")]
    ProbabilitiesDoNotSumToOne(f64),
    #[error("weight law has no atoms or weights")]
    Empty,
    #[error("moment order {0} is not supported (only 0, 1, 2)")]
    UnsupportedOrder(u32),
    #[error("phi index p={0} must be 0 or 1")]
    UnsupportedPhiIndex(u32),
    #[error("evaluation time {0} must be finite and non-negative")]
    NegativeTime(f64),
    #[error("vector length n must be at least 1")]
    ZeroLength,
    #[error("quantile construction needs a constant or discrete law")]
    QuantileOfEmpirical,
}

/// Distribution of a vertex weight `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", try_from = "RawModel")]
pub enum WeightModel {
    Constant { c: f64 },
    Discrete { atoms: Vec<(f64, f64)> },
    Empirical { weights: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawModel {
    Constant { c: f64 },
    Discrete { atoms: Vec<(f64, f64)> },
    Empirical { weights: Vec<f64> },
}

impl TryFrom<RawModel> for WeightModel {
    type Error = WeightsError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        match raw {
            RawModel::Constant { c } => WeightModel::constant(c),
            RawModel::Discrete { atoms } => WeightModel::discrete(atoms),
            RawModel::Empirical { weights } => WeightModel::empirical(weights),
        }
    }
}

fn check_weight(w: f64) -> Result<(), WeightsError> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(WeightsError::NonPositiveWeight(w))
    }
}

fn check_time(t: f64) -> Result<(), WeightsError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(WeightsError::NegativeTime(t))
    }
}

impl WeightModel {
    pub fn constant(c: f64) -> Result<Self, WeightsError> {
        check_weight(c)?;
        Ok(WeightModel::Constant { c })
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self, WeightsError> {
        if atoms.is_empty() {
            return Err(WeightsError::Empty);
        }
        for &(w, p) in &atoms {
            check_weight(w)?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(WeightsError::BadProbability(p));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(WeightsError::ProbabilitiesDoNotSumToOne(total));
        }
        Ok(WeightModel::Discrete { atoms })
    }

    pub fn empirical(weights: Vec<f64>) -> Result<Self, WeightsError> {
        if weights.is_empty() {
            return Err(WeightsError::Empty);
        }
        for &w in &weights {
            check_weight(w)?;
        }
        Ok(WeightModel::Empirical { weights })
    }

    /// `E[f(W)]` as an exact finite sum.
    pub(crate) fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self {
            WeightModel::Constant { c } => f(*c),
            WeightModel::Discrete { atoms } => atoms.iter().map(|&(w, p)| p * f(w)).sum(),
            WeightModel::Empirical { weights } => {
                let terms: Vec<f64> = weights.iter().map(|&w| f(w)).collect();
                pairwise_sum(&terms) / weights.len() as f64
            }
        }
    }

    /// `E[W^k]`.
    pub fn moment(&self, k: u32) -> Result<f64, WeightsError> {
        self.mixed_moment(k, 0.0)
    }

    pub fn max_weight(&self) -> f64 {
        match self {
            WeightModel::Constant { c } => *c,
            WeightModel::Discrete { atoms } => atoms.iter().map(|a| a.0).fold(0.0, f64::max),
            WeightModel::Empirical { weights } => weights.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `E[W^k e^{-W t}]` for `k` in `{0, 1, 2}`.
    pub fn mixed_moment(&self, k: u32, t: f64) -> Result<f64, WeightsError> {
        if k > 2 {
            return Err(WeightsError::UnsupportedOrder(k));
        }
        check_time(t)?;
        Ok(self.expect(|w| w.powi(k as i32) * (-w * t).exp()))
    }

    /// `phi_p(t) = E[W^p (1 - e^{-W t})]`.
    ///
    /// Evaluated with `expm1` so that small `t` keeps full relative precision.
    pub fn phi(&self, p: u32, t: f64) -> Result<f64, WeightsError> {
        if p > 1 {
            return Err(WeightsError::UnsupportedPhiIndex(p));
        }
        check_time(t)?;
        Ok(self.expect(|w| -w.powi(p as i32) * (-w * t).exp_m1()))
    }

    /// Derivative of [`phi`](Self::phi) in `t`: `E[W^{p+1} e^{-W t}]`.
    pub fn phi_prime(&self, p: u32, t: f64) -> Result<f64, WeightsError> {
        if p > 1 {
            return Err(WeightsError::UnsupportedPhiIndex(p));
        }
        self.mixed_moment(p + 1, t)
    }

    /// Inverse CDF at `u` in (0, 1) for constant and discrete laws.
    fn quantile(&self, u: f64) -> Result<f64, WeightsError> {
        match self {
            WeightModel::Constant { c } => Ok(*c),
            WeightModel::Discrete { atoms } => {
                let mut sorted = atoms.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                Ok(discrete_quantile(&sorted, u))
            }
            WeightModel::Empirical { .. } => Err(WeightsError::QuantileOfEmpirical),
        }
    }
}

// `sorted` is ascending in weight. The last atom absorbs any shortfall from
// probabilities that sum to 1 only within rounding.
fn discrete_quantile(sorted: &[(f64, f64)], u: f64) -> f64 {
    let mut cum = 0.0;
    for &(w, p) in sorted {
        cum += p;
        if u <= cum {
            return w;
        }
    }
    sorted[sorted.len() - 1].0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Iid,
    Quantile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Provenance {
    Iid { seed: u64 },
    Quantile,
    Explicit,
}

/// A concrete weight vector `w = (w_1, ..., w_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    provenance: Provenance,
}

impl WeightVector {
    pub fn explicit(weights: Vec<f64>) -> Result<Self, WeightsError> {
        if weights.is_empty() {
            return Err(WeightsError::ZeroLength);
        }
        for &w in &weights {
            check_weight(w)?;
        }
        Ok(Self {
            weights,
            provenance: Provenance::Explicit,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// The law of a uniformly chosen vertex, `W_n`.
    pub fn to_model(&self) -> WeightModel {
        WeightModel::Empirical {
            weights: self.weights.clone(),
        }
    }
}

/// Draws a weight vector of length `n` from `model`.
///
/// Quantile mode is deterministic and ignores `seed`: entry `j` is the
/// inverse CDF at the midpoint `(j - 1/2)/n`.
pub fn sample_weight_vector(
    model: &WeightModel,
    n: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<WeightVector, WeightsError> {
    if n == 0 {
        return Err(WeightsError::ZeroLength);
    }
    let weights = match mode {
        SampleMode::Quantile => {
            if let WeightModel::Empirical { .. } = model {
                return Err(WeightsError::QuantileOfEmpirical);
            }
            (1..=n)
                .map(|j| model.quantile((j as f64 - 0.5) / n as f64))
                .collect::<Result<Vec<_>, _>>()?
        }
        SampleMode::Iid => {
            let mut rng = rng_for(seed, Domain::Weights, 0);
            match model {
                WeightModel::Constant { c } => vec![*c; n],
                WeightModel::Discrete { atoms } => {
                    let mut sorted = atoms.clone();
                    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                    (0..n)
                        .map(|_| discrete_quantile(&sorted, rng.random::<f64>()))
                        .collect()
                }
                WeightModel::Empirical { weights } => (0..n)
                    .map(|_| weights[rng.random_range(0..weights.len())])
                    .collect(),
            }
        }
    };
    let provenance = match mode {
        SampleMode::Iid => Provenance::Iid { seed },
        SampleMode::Quantile => Provenance::Quantile,
    };
    Ok(WeightVector {
        weights,
        provenance,
    })
}

/// Finite-n view of the weighted-empirical-process conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AssumptionDiagnostics {
    pub second_moment: f64,
    pub max_weight_sq_over_n: f64,
    pub warning: bool,
}

/// Heuristic cut-off for `max_j w_j^2 / n`; the underlying condition is
/// asymptotic, so exceeding it only raises a warning.
pub const MAX_WEIGHT_WARNING: f64 = 0.01;

pub fn assumption_diagnostics(v: &WeightVector) -> AssumptionDiagnostics {
    let n = v.n() as f64;
    let squares: Vec<f64> = v.weights.iter().map(|w| w * w).collect();
    let max_sq = squares.iter().copied().fold(0.0, f64::max);
    let max_weight_sq_over_n = max_sq / n;
    AssumptionDiagnostics {
        second_moment: pairwise_sum(&squares) / n,
        max_weight_sq_over_n,
        warning: max_weight_sq_over_n > MAX_WEIGHT_WARNING,
    }
}
