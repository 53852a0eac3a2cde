//! Simultaneous breadth-first walk.
//!
//! One draw of clocks `xi_j ~ Exp(w_j)` encodes the giant for every `lambda`
//! at once: the walk `H(t) = X_{n,1}(lambda t) - t` jumps by `w_j / n` at
//! time `xi_j / lambda` and drifts down with slope -1 in between. Its longest
//! excursion above the running infimum has length `V_n / n`, and the number
//! of jumps inside it is `L_n`.

use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::rng::rng_from;
use crate::theory::SupercriticalCurves;
use crate::weights::WeightVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("lambda = {0} must be finite and positive")]
    InvalidLambda(f64),
    #[error("clock {0} must be finite and positive")]
    InvalidClock(f64),
    #[error("expected {expected} clocks, got {got}")]
    ClockCount { expected: usize, got: usize },
    #[error("sweep grid does not match the centering curves' grid")]
    GridMismatch,
}

/// One realization of the clocks, reusable across every `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkRealization {
    weights: WeightVector,
    clocks: Vec<f64>,
    order: Vec<usize>,
    sorted_clocks: Vec<f64>,
    /// `weight_prefix[k]` is the sum of the first `k` weights in clock order.
    weight_prefix: Vec<f64>,
}

/// Draws `xi_j = E_j / w_j` with `E_j` standard exponential.
pub fn sample_clocks(w: &WeightVector, seed: u64) -> WalkRealization {
    let mut rng = rng_from(seed);
    let clocks = w
        .weights()
        .iter()
        .map(|&wj| {
            let e: f64 = Exp1.sample(&mut rng);
            // Exp1 can return exactly 0 with negligible probability.
            e.max(f64::MIN_POSITIVE) / wj
        })
        .collect();
    WalkRealization::build(w.clone(), clocks)
}

impl WalkRealization {
    /// Builds a realization from explicit clocks, for deterministic tests.
    pub fn from_clocks(w: &WeightVector, clocks: Vec<f64>) -> Result<Self, WalkError> {
        if clocks.len() != w.n() {
            return Err(WalkError::ClockCount {
                expected: w.n(),
                got: clocks.len(),
            });
        }
        if let Some(&bad) = clocks.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(WalkError::InvalidClock(bad));
        }
        Ok(Self::build(w.clone(), clocks))
    }

    fn build(weights: WeightVector, clocks: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..clocks.len()).collect();
        order.sort_by(|&a, &b| clocks[a].total_cmp(&clocks[b]).then(a.cmp(&b)));
        let sorted_clocks: Vec<f64> = order.iter().map(|&j| clocks[j]).collect();
        let mut weight_prefix = Vec::with_capacity(clocks.len() + 1);
        let mut acc = CompensatedSum::new();
        weight_prefix.push(0.0);
        for &j in &order {
            acc.add(weights.weights()[j]);
            weight_prefix.push(acc.value());
        }
        Self {
            weights,
            clocks,
            order,
            sorted_clocks,
            weight_prefix,
        }
    }

    pub fn n(&self) -> usize {
        self.clocks.len()
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Clocks indexed by vertex.
    pub fn clocks(&self) -> &[f64] {
        &self.clocks
    }

    /// Vertex indices in ascending clock order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted_clocks(&self) -> &[f64] {
        &self.sorted_clocks
    }

    /// `(1/n) sum_j w_j`, the total jump mass of the walk.
    pub fn total_mass(&self) -> f64 {
        self.weight_prefix[self.n()] / self.n() as f64
    }

    /// All excursions of `H(., lambda)` above its running infimum, in time order.
    pub fn excursions(&self, lambda: f64) -> Result<Vec<Excursion>, WalkError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(WalkError::InvalidLambda(lambda));
        }
        let n = self.n();
        let nf = n as f64;
        let mut out = Vec::new();
        let mut k = 0;
        while k < n {
            let start = k;
            let g = self.sorted_clocks[start] / lambda;
            // H(g-), the running infimum the excursion must return to.
            let level = self.weight_prefix[start] / nf - g;
            let tol = 1e-12 * (1.0 + level.abs());
            k += 1;
            while k < n {
                let mass = (self.weight_prefix[k] - self.weight_prefix[start]) / nf;
                // H(tau_k-) - level: height still left when the next jump arrives.
                let gap = g + mass - self.sorted_clocks[k] / lambda;
                if gap > tol {
                    k += 1;
                } else {
                    break;
                }
            }
            let volume = self.weight_prefix[k] - self.weight_prefix[start];
            out.push(Excursion {
                g,
                d: g + volume / nf,
                level,
                first: start,
                end: k,
                volume,
            });
        }
        Ok(out)
    }

    /// First longest excursion of `H(., lambda)`.
    pub fn longest_excursion(&self, lambda: f64) -> Result<ExcursionResult, WalkError> {
        let excursions = self.excursions(lambda)?;
        let mut best = &excursions[0];
        for e in &excursions[1..] {
            if e.volume > best.volume {
                best = e;
            }
        }
        let count = best.vertex_count();
        Ok(ExcursionResult {
            g: best.g,
            d: best.d,
            volume: best.d - best.g,
            count_fraction: count as f64 / self.n() as f64,
            vertex_count: count,
            total_volume: best.volume,
        })
    }

    /// `H(t, lambda) = X_{n,1}(lambda t) - t`, evaluated exactly.
    pub fn walk_value(&self, lambda: f64, t: f64) -> f64 {
        let x = lambda * t;
        let k = self.sorted_clocks.partition_point(|&c| c <= x);
        self.weight_prefix[k] / self.n() as f64 - t
    }

    /// `X_{n,0}(s)`: fraction of clocks at or before `s`.
    pub fn count_process(&self, s: f64) -> f64 {
        self.sorted_clocks.partition_point(|&c| c <= s) as f64 / self.n() as f64
    }
}

/// One excursion interval `(g, d)` together with the jumps it contains,
/// `first..end` in clock order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Excursion {
    pub g: f64,
    pub d: f64,
    /// Running infimum at `g-`; the walk returns to it at `d`.
    pub level: f64,
    pub first: usize,
    pub end: usize,
    /// Sum of the weights whose jumps lie in `[g, d]`.
    pub volume: f64,
}

impl Excursion {
    pub fn vertex_count(&self) -> usize {
        self.end - self.first
    }

    pub fn length(&self) -> f64 {
        self.d - self.g
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExcursionResult {
    pub g: f64,
    pub d: f64,
    /// `d - g`, i.e. `V / n`.
    pub volume: f64,
    /// `L / n`.
    pub count_fraction: f64,
    pub vertex_count: usize,
    /// `V`.
    pub total_volume: f64,
}

/// Giant statistics along a grid, all from one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct GiantPath {
    pub lambdas: Vec<f64>,
    pub results: Vec<ExcursionResult>,
    /// `(L - rho_n n) / sqrt(n)`.
    pub fluc_l: Vec<f64>,
    /// `(V - theta_n n) / sqrt(n)`.
    pub fluc_v: Vec<f64>,
    /// Finite-n centering curves used for the fluctuations.
    pub theta_n: Vec<f64>,
    pub rho_n: Vec<f64>,
    /// `(1/n) sum_j w_j`; every excursion is at most this long.
    pub total_mass: f64,
}

/// Evaluates the giant at every grid point of `curves_n`, centering with those
/// (finite-n) curves.
pub fn sweep(r: &WalkRealization, curves_n: &SupercriticalCurves) -> Result<GiantPath, WalkError> {
    sweep_grid(r, &curves_n.lambdas(), curves_n)
}

/// [`sweep`] with an explicit grid, which must equal the curves' grid.
pub fn sweep_grid(
    r: &WalkRealization,
    grid: &[f64],
    curves_n: &SupercriticalCurves,
) -> Result<GiantPath, WalkError> {
    if grid != curves_n.lambdas().as_slice() {
        return Err(WalkError::GridMismatch);
    }
    let n = r.n() as f64;
    let sqrt_n = n.sqrt();
    let mut results = Vec::with_capacity(grid.len());
    let mut fluc_l = Vec::with_capacity(grid.len());
    let mut fluc_v = Vec::with_capacity(grid.len());
    for (pt, &lambda) in curves_n.points().iter().zip(grid) {
        let e = r.longest_excursion(lambda)?;
        fluc_l.push((e.vertex_count as f64 - pt.rho * n) / sqrt_n);
        fluc_v.push((e.total_volume - pt.theta * n) / sqrt_n);
        results.push(e);
    }
    Ok(GiantPath {
        lambdas: grid.to_vec(),
        results,
        fluc_l,
        fluc_v,
        theta_n: curves_n.points().iter().map(|p| p.theta).collect(),
        rho_n: curves_n.points().iter().map(|p| p.rho).collect(),
        total_mass: r.total_mass(),
    })
}
