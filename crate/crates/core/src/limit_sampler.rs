//! Draws from the Gaussian limit objects: the pair `(Psi_0, Psi_1)` on a
//! finite time set, the limit process `X` on a lambda grid, and the
//! Brownian time-change representation available for Erdős–Rényi.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{cholesky_psd, Cholesky, LinalgError, SymMatrix};
use crate::rng::{rng_for, Domain};
use crate::theory::{er_closed_forms, psi_cov, x_cov, SupercriticalCurves, TheoryError};
use crate::weights::WeightModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("time {0} must be finite and non-negative")]
    InvalidTime(f64),
    #[error("time {0} appears more than once")]
    DuplicateTime(f64),
    #[error("v(lambda) decreases between lambda = {prev} and lambda = {next}")]
    NonMonotoneClock { prev: f64, next: f64 },
}

/// Times closer than this are treated as one evaluation point of `Psi`.
pub const TIME_DEDUP_TOL: f64 = 1e-14;

/// Joint draws of `(Psi_0(t_1), Psi_1(t_1), Psi_0(t_2), ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiSamples {
    pub times: Vec<f64>,
    pub draws: Vec<Vec<f64>>,
}

impl PsiSamples {
    pub fn psi(&self, draw: usize, p: usize, time_index: usize) -> f64 {
        self.draws[draw][2 * time_index + p]
    }
}

fn psi_covariance(model: &WeightModel, times: &[f64]) -> Result<SymMatrix, LimitError> {
    let m = times.len();
    let mut cov = SymMatrix::zeros(2 * m);
    for i in 0..m {
        for j in 0..m {
            for p in 0..2 {
                for q in 0..2 {
                    let v = psi_cov(model, p as u32, q as u32, times[i], times[j])?;
                    cov.set(2 * i + p, 2 * j + q, v);
                }
            }
        }
    }
    Ok(cov)
}

fn gaussian_draws(chol: &Cholesky, count: usize, seed: u64, domain: Domain) -> Vec<Vec<f64>> {
    let dim = chol.dim();
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, domain, k as u64);
            let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let mut out = vec![0.0; dim];
            chol.mul_vec(&z, &mut out);
            out
        })
        .collect()
}

/// `count` independent joint draws of `(Psi_0, Psi_1)` at distinct `times`.
pub fn sample_psi_pair(
    model: &WeightModel,
    times: &[f64],
    count: usize,
    seed: u64,
) -> Result<PsiSamples, LimitError> {
    for (i, &t) in times.iter().enumerate() {
        if !(t.is_finite() && t >= 0.0) {
            return Err(LimitError::InvalidTime(t));
        }
        if times[..i].contains(&t) {
            return Err(LimitError::DuplicateTime(t));
        }
    }
    let cov = psi_covariance(model, times)?;
    let chol = cholesky_psd(&cov)?;
    Ok(PsiSamples {
        times: times.to_vec(),
        draws: gaussian_draws(&chol, count, seed, Domain::Limit),
    })
}

/// One draw of the limit process on a lambda grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitPathSample {
    pub draw: usize,
    pub lambdas: Vec<f64>,
    /// Size coordinate.
    pub x0: Vec<f64>,
    /// Volume coordinate; absent for the Brownian representation.
    pub x1: Option<Vec<f64>>,
}

/// Draws `X(lambda) = (Psi_0(tau) + c Psi_1(tau), Psi_1(tau) / beta)` with
/// `tau = lambda theta(lambda)`, treating the taus as an unordered set.
pub fn sample_x_path(
    curves: &SupercriticalCurves,
    count: usize,
    seed: u64,
) -> Result<Vec<LimitPathSample>, LimitError> {
    let table = x_cov(curves)?;
    let mut unique: Vec<f64> = Vec::new();
    let slot: Vec<usize> = table
        .times()
        .iter()
        .map(|&tau| {
            match unique
                .iter()
                .position(|&u| (u - tau).abs() <= TIME_DEDUP_TOL)
            {
                Some(k) => k,
                None => {
                    unique.push(tau);
                    unique.len() - 1
                }
            }
        })
        .collect();
    let cov = psi_covariance(curves.model(), &unique)?;
    let chol = cholesky_psd(&cov)?;
    let psi = gaussian_draws(&chol, count, seed, Domain::Limit);
    let lambdas = curves.lambdas();
    Ok(psi
        .into_iter()
        .enumerate()
        .map(|(draw, v)| {
            let (mut x0, mut x1) = (
                Vec::with_capacity(slot.len()),
                Vec::with_capacity(slot.len()),
            );
            for (i, &k) in slot.iter().enumerate() {
                let (p0, p1) = (v[2 * k], v[2 * k + 1]);
                x0.push(p0 + table.size_coef()[i] * p1);
                x1.push(table.inv_beta()[i] * p1);
            }
            LimitPathSample {
                draw,
                lambdas: lambdas.clone(),
                x0,
                x1: Some(x1),
            }
        })
        .collect())
}

/// Draws `B(v(lambda)) / u(lambda)` on an Erdős–Rényi grid (`lambda > 1`).
pub fn er_brownian_path(
    grid: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<LimitPathSample>, LimitError> {
    let forms = grid
        .iter()
        .map(|&l| er_closed_forms(l))
        .collect::<Result<Vec<_>, _>>()?;
    for w in forms.windows(2) {
        if w[1].v < w[0].v {
            return Err(LimitError::NonMonotoneClock {
                prev: w[0].lambda,
                next: w[1].lambda,
            });
        }
    }
    Ok((0..count)
        .into_par_iter()
        .map(|draw| {
            let mut rng = rng_for(seed, Domain::Brownian, draw as u64);
            let mut b = 0.0;
            let mut clock = 0.0;
            let x0 = forms
                .iter()
                .map(|f| {
                    let z: f64 = rng.sample(StandardNormal);
                    b += z * (f.v - clock).sqrt();
                    clock = f.v;
                    b / f.u
                })
                .collect();
            LimitPathSample {
                draw,
                lambdas: grid.to_vec(),
                x0,
                x1: None,
            }
        })
        .collect())
}

/// `Cov(B(v_1)/u_1, B(v_2)/u_2) = min(v_1, v_2) / (u_1 u_2)`.
pub fn er_brownian_cov(lambda1: f64, lambda2: f64) -> Result<f64, LimitError> {
    let (a, b) = (er_closed_forms(lambda1)?, er_closed_forms(lambda2)?);
    Ok(a.v.min(b.v) / (a.u * b.u))
}
