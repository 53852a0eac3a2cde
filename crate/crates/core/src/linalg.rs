//! Dense symmetric matrices and a semidefinite Cholesky factorization with
//! diagonal jitter escalation. Matrices here are at most a few hundred rows.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("matrix is not positive semidefinite even with jitter {jitter:e}")]
    NotPsd { jitter: f64 },
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(LinalgError::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
            m.data[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    /// Exact symmetry check; every builder in this crate fills `(i,j)` and
    /// `(j,i)` from the same expression.
    pub fn check_symmetric(&self) -> Result<(), LinalgError> {
        for i in 0..self.dim {
            for j in 0..i {
                if self.get(i, j) != self.get(j, i) {
                    return Err(LinalgError::NotSymmetric(i, j));
                }
            }
        }
        Ok(())
    }
}

/// Lower-triangular factor `L` with `L L^T = A + jitter * max_diag * I`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
    jitter: f64,
}

/// Pivots below this fraction of the largest diagonal entry are treated as
/// exact zeros (rank deficiency), provided they are not meaningfully negative.
pub const ZERO_PIVOT_TOL: f64 = 1e-12;
pub const JITTER_START: f64 = 1e-12;
pub const JITTER_MAX: f64 = 1e-6;

impl Cholesky {
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// `out = L z`.
    pub fn mul_vec(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let row = &self.lower[i * self.dim..i * self.dim + i + 1];
            *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }
}

fn try_factor(a: &SymMatrix, shift: f64, scale: f64) -> Option<Vec<f64>> {
    let n = a.dim;
    let mut l = vec![0.0; n * n];
    let tol = ZERO_PIVOT_TOL * scale;
    for j in 0..n {
        let mut pivot = a.get(j, j) + shift;
        for k in 0..j {
            pivot -= l[j * n + k] * l[j * n + k];
        }
        if pivot < -tol {
            return None;
        }
        if pivot <= tol {
            // Rank-deficient direction. For a PSD matrix the Schur residuals
            // in this column obey |r_ij| <= sqrt(pivot_j * pivot_i).
            let bound = (tol * (scale + shift)).sqrt();
            for i in (j + 1)..n {
                let mut r = a.get(i, j);
                for k in 0..j {
                    r -= l[i * n + k] * l[j * n + k];
                }
                if r.abs() > bound {
                    return None;
                }
            }
            continue;
        }
        let d = pivot.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut r = a.get(i, j);
            for k in 0..j {
                r -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = r / d;
        }
    }
    Some(l)
}

/// Factorizes a symmetric PSD matrix.
///
/// Tries the bare matrix first, then adds `eps * max_diag` to the diagonal
/// with `eps` running 1e-12, 1e-11, ..., 1e-6 before giving up.
pub fn cholesky_psd(a: &SymMatrix) -> Result<Cholesky, LinalgError> {
    a.check_symmetric()?;
    let scale = a.max_diagonal();
    if scale == 0.0 {
        return Ok(Cholesky {
            dim: a.dim,
            lower: vec![0.0; a.dim * a.dim],
            jitter: 0.0,
        });
    }
    if let Some(lower) = try_factor(a, 0.0, scale) {
        return Ok(Cholesky {
            dim: a.dim,
            lower,
            jitter: 0.0,
        });
    }
    let mut eps = JITTER_START;
    while eps <= JITTER_MAX * (1.0 + 1e-9) {
        if let Some(lower) = try_factor(a, eps * scale, scale) {
            return Ok(Cholesky {
                dim: a.dim,
                lower,
                jitter: eps,
            });
        }
        eps *= 10.0;
    }
    Err(LinalgError::NotPsd { jitter: JITTER_MAX })
}
