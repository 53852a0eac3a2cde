//! Small numerical kernels shared by the theory and simulation code.

/// Pairwise (cascade) summation. Rounding error grows as O(log n) ulps
/// instead of O(n) for a left fold.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Running Neumaier-compensated sum, used for prefix sums where a tree
/// reduction is not available.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Outcome of [`bisect`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]` where `f(lo) > 0 >= f(hi)`.
///
/// Keeps halving until the midpoint is no longer representable strictly
/// inside the bracket or `max_steps` is reached; the caller decides whether
/// the final width meets its tolerance.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, max_steps: usize) -> Bracket
where
    F: Fn(f64) -> f64,
{
    let mut steps = 0;
    while steps < max_steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    Bracket { lo, hi, steps }
}
