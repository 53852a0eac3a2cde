//! Deterministic supercritical curves and the limit covariance.
//!
//! For a weight law `W` and edge intensity `lambda`:
//!
//! * `theta(lambda)` is the positive root of `f(t) = phi_1(lambda t) - t`,
//! * `rho(lambda) = phi_0(lambda theta)`,
//! * `beta(lambda) = -f'(theta) = 1 - lambda E[W^2 e^{-W lambda theta}]`.
//!
//! Passing an empirical law gives the finite-n versions used for centering.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{cholesky_psd, LinalgError, SymMatrix};
use crate::numeric::bisect;
use crate::weights::{WeightModel, WeightsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("lambda = {lambda} must be finite and positive")]
    InvalidLambda { lambda: f64 },
    #[error("lambda = {lambda} is not above the supercritical threshold {threshold} (lambda_crit = {lambda_crit})")]
    NotSupercritical {
        lambda: f64,
        lambda_crit: f64,
        threshold: f64,
    },
    #[error("root bracket for lambda = {lambda} did not shrink below {tol:e} in {steps} bisection steps")]
    NoConvergence { lambda: f64, tol: f64, steps: usize },
    #[error("lambda grid is empty")]
    EmptyGrid,
}

/// Absolute tolerance on `theta`.
pub const ROOT_TOL: f64 = 1e-12;
pub const MAX_BISECTION_STEPS: usize = 200;
/// Default relative margin above `lambda_crit` for grids that divide by `beta`.
pub const DEFAULT_MARGIN: f64 = 1e-3;

fn check_lambda(lambda: f64) -> Result<(), TheoryError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(TheoryError::InvalidLambda { lambda })
    }
}

/// `1 / E[W^2]`.
pub fn lambda_crit(model: &WeightModel) -> Result<f64, TheoryError> {
    Ok(1.0 / model.moment(2)?)
}

fn is_supercritical(model: &WeightModel, lambda: f64) -> Result<bool, TheoryError> {
    Ok(lambda * model.moment(2)? > 1.0)
}

/// Positive root of `phi_1(lambda t) = t`, or 0 when `lambda <= lambda_crit`.
///
/// `f(t) = phi_1(lambda t) - t` is strictly concave with `f(0) = 0`. Above
/// criticality `f'(0) > 0` and `f(E[W]) < 0`, so the maximizer `t*` is found
/// by bisecting the decreasing `f'` on `[0, E[W]]` and the root by bisecting
/// `f` on `[t*, E[W]]`.
pub fn theta(model: &WeightModel, lambda: f64) -> Result<f64, TheoryError> {
    check_lambda(lambda)?;
    if !is_supercritical(model, lambda)? {
        return Ok(0.0);
    }
    let mean = model.moment(1)?;
    let slope = |t: f64| lambda * model.expect(|w| w * w * (-w * lambda * t).exp()) - 1.0;
    let f = |t: f64| model.expect(|w| -w * (-w * lambda * t).exp_m1()) - t;

    let peak = bisect(slope, 0.0, mean, MAX_BISECTION_STEPS);
    let t_star = peak.lo;
    let root = bisect(f, t_star, mean, MAX_BISECTION_STEPS);
    if root.width() > ROOT_TOL {
        return Err(TheoryError::NoConvergence {
            lambda,
            tol: ROOT_TOL,
            steps: peak.steps + root.steps,
        });
    }
    Ok(root.lo)
}

/// `phi_0(lambda theta(lambda))`.
pub fn rho(model: &WeightModel, lambda: f64) -> Result<f64, TheoryError> {
    let th = theta(model, lambda)?;
    Ok(model.phi(0, lambda * th)?)
}

fn beta_at(model: &WeightModel, lambda: f64, theta: f64) -> Result<f64, TheoryError> {
    Ok(1.0 - lambda * model.mixed_moment(2, lambda * theta)?)
}

/// `1 - lambda E[W^2 e^{-W lambda theta}]`; only defined above criticality.
pub fn beta(model: &WeightModel, lambda: f64) -> Result<f64, TheoryError> {
    check_lambda(lambda)?;
    if !is_supercritical(model, lambda)? {
        let lc = lambda_crit(model)?;
        return Err(TheoryError::NotSupercritical {
            lambda,
            lambda_crit: lc,
            threshold: lc,
        });
    }
    let th = theta(model, lambda)?;
    beta_at(model, lambda, th)
}

/// `E[Psi_p(s) Psi_q(t)] = E[W^{p+q} (e^{-W max(s,t)} - e^{-W (s+t)})]`.
///
/// Computed as `E[W^{p+q} e^{-W max} (1 - e^{-W min})]`, which is exactly
/// symmetric and exactly zero when either time is zero.
pub fn psi_cov(model: &WeightModel, p: u32, q: u32, s: f64, t: f64) -> Result<f64, TheoryError> {
    if p > 1 || q > 1 {
        return Err(WeightsError::UnsupportedPhiIndex(p.max(q)).into());
    }
    for x in [s, t] {
        if !(x.is_finite() && x >= 0.0) {
            return Err(WeightsError::NegativeTime(x).into());
        }
    }
    let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
    let k = (p + q) as i32;
    Ok(model.expect(|w| -w.powi(k) * (-w * hi).exp() * (-w * lo).exp_m1()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub theta: f64,
    pub rho: f64,
    pub beta: f64,
}

/// `(lambda, theta, rho, beta)` tabulated over a strictly supercritical grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SupercriticalCurves {
    model: WeightModel,
    lambda_crit: f64,
    points: Vec<CurvePoint>,
}

impl SupercriticalCurves {
    /// Every grid value must exceed `lambda_crit * (1 + margin)`.
    pub fn tabulate(model: &WeightModel, grid: &[f64], margin: f64) -> Result<Self, TheoryError> {
        if grid.is_empty() {
            return Err(TheoryError::EmptyGrid);
        }
        let lc = lambda_crit(model)?;
        let threshold = lc * (1.0 + margin);
        for &lambda in grid {
            check_lambda(lambda)?;
            if lambda <= threshold || !is_supercritical(model, lambda)? {
                return Err(TheoryError::NotSupercritical {
                    lambda,
                    lambda_crit: lc,
                    threshold,
                });
            }
        }
        let points = grid
            .par_iter()
            .map(|&lambda| {
                let th = theta(model, lambda)?;
                Ok(CurvePoint {
                    lambda,
                    theta: th,
                    rho: model.phi(0, lambda * th)?,
                    beta: beta_at(model, lambda, th)?,
                })
            })
            .collect::<Result<Vec<_>, TheoryError>>()?;
        Ok(Self {
            model: model.clone(),
            lambda_crit: lc,
            points,
        })
    }

    pub fn model(&self) -> &WeightModel {
        &self.model
    }

    pub fn lambda_crit(&self) -> f64 {
        self.lambda_crit
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }
}

/// Covariance of the limit process `X(lambda) = (X_0, X_1)` on a grid.
///
/// With `tau = lambda theta`, `X_0 = Psi_0(tau) + c Psi_1(tau)` where
/// `c = lambda phi_0'(tau) / beta`, and `X_1 = Psi_1(tau) / beta`. The matrix
/// is ordered `(X_0(l_1), X_1(l_1), X_0(l_2), ...)`.
#[derive(Clone, Debug)]
pub struct LimitCovariance {
    lambdas: Vec<f64>,
    times: Vec<f64>,
    size_coef: Vec<f64>,
    inv_beta: Vec<f64>,
    matrix: SymMatrix,
    jitter: f64,
}

impl LimitCovariance {
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Psi evaluation times `lambda theta(lambda)`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Coefficient of `Psi_1` in `X_0`.
    pub fn size_coef(&self) -> &[f64] {
        &self.size_coef
    }

    /// Coefficient of `Psi_1` in `X_1`.
    pub fn inv_beta(&self) -> &[f64] {
        &self.inv_beta
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    /// Jitter needed to factorize the matrix (0 when none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `Cov(X_a(lambda_i), X_b(lambda_j))`, `a, b` in {0, 1}.
    pub fn cov(&self, i: usize, a: usize, j: usize, b: usize) -> f64 {
        self.matrix.get(2 * i + a, 2 * j + b)
    }

    pub fn var_l(&self, i: usize) -> f64 {
        self.cov(i, 0, i, 0)
    }

    pub fn var_v(&self, i: usize) -> f64 {
        self.cov(i, 1, i, 1)
    }

    pub fn cov_lv(&self, i: usize) -> f64 {
        self.cov(i, 0, i, 1)
    }
}

/// Builds the `2m x 2m` covariance of `X` by bilinearity from [`psi_cov`]
/// and checks that it factorizes.
pub fn x_cov(curves: &SupercriticalCurves) -> Result<LimitCovariance, TheoryError> {
    let model = curves.model();
    let m = curves.points().len();
    let mut times = Vec::with_capacity(m);
    let mut size_coef = Vec::with_capacity(m);
    let mut inv_beta = Vec::with_capacity(m);
    for pt in curves.points() {
        if pt.beta <= 0.0 {
            return Err(TheoryError::NotSupercritical {
                lambda: pt.lambda,
                lambda_crit: curves.lambda_crit(),
                threshold: curves.lambda_crit(),
            });
        }
        let tau = pt.lambda * pt.theta;
        times.push(tau);
        size_coef.push(pt.lambda * model.phi_prime(0, tau)? / pt.beta);
        inv_beta.push(1.0 / pt.beta);
    }
    // Coefficients of (Psi_0, Psi_1) for each coordinate.
    let coef = |i: usize, a: usize| -> [f64; 2] {
        if a == 0 {
            [1.0, size_coef[i]]
        } else {
            [0.0, inv_beta[i]]
        }
    };
    let mut matrix = SymMatrix::zeros(2 * m);
    for i in 0..m {
        for j in 0..=i {
            let mut k = [[0.0; 2]; 2];
            for (p, row) in k.iter_mut().enumerate() {
                for (q, cell) in row.iter_mut().enumerate() {
                    *cell = psi_cov(model, p as u32, q as u32, times[i], times[j])?;
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    let (ci, cj) = (coef(i, a), coef(j, b));
                    let mut v = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            v += ci[p] * cj[q] * k[p][q];
                        }
                    }
                    matrix.set(2 * i + a, 2 * j + b, v);
                    matrix.set(2 * j + b, 2 * i + a, v);
                }
            }
        }
    }
    // Both (i,a,j,b) and (j,b,i,a) go through the same expression up to the
    // order of the p,q sum; symmetrize to make the check exact.
    for r in 0..2 * m {
        for c in 0..r {
            let v = 0.5 * (matrix.get(r, c) + matrix.get(c, r));
            matrix.set(r, c, v);
            matrix.set(c, r, v);
        }
    }
    let chol = cholesky_psd(&matrix)?;
    Ok(LimitCovariance {
        lambdas: curves.lambdas(),
        times,
        size_coef,
        inv_beta,
        matrix,
        jitter: chol.jitter(),
    })
}

/// Erdős–Rényi closed forms at `lambda > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErClosedForms {
    pub lambda: f64,
    /// Solution in (0,1) of `1 - e^{-lambda x} = x`.
    pub rho: f64,
    /// `rho (1 - rho) / (1 - lambda (1 - rho))^2`.
    pub sigma2: f64,
    /// `1/(1 - rho) - lambda`.
    pub u: f64,
    /// `rho / (1 - rho)`.
    pub v: f64,
}

/// Solves the ER fixed point on its own bracket: `g(x) = 1 - e^{-lambda x} - x`
/// peaks at `ln(lambda)/lambda` and `g(1) < 0`.
pub fn er_closed_forms(lambda: f64) -> Result<ErClosedForms, TheoryError> {
    check_lambda(lambda)?;
    if lambda <= 1.0 {
        return Err(TheoryError::NotSupercritical {
            lambda,
            lambda_crit: 1.0,
            threshold: 1.0,
        });
    }
    let g = |x: f64| -(-lambda * x).exp_m1() - x;
    let peak = lambda.ln() / lambda;
    let b = bisect(g, peak, 1.0, MAX_BISECTION_STEPS);
    if b.width() > ROOT_TOL {
        return Err(TheoryError::NoConvergence {
            lambda,
            tol: ROOT_TOL,
            steps: b.steps,
        });
    }
    let rho = b.lo;
    let q = 1.0 - rho;
    let denom = 1.0 - lambda * q;
    Ok(ErClosedForms {
        lambda,
        rho,
        sigma2: rho * q / (denom * denom),
        u: 1.0 / q - lambda,
        v: rho / q,
    })
}
