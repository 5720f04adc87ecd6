//! Regularizers and their proximal maps: ℓ1 (optionally leaving the last
//! coordinate free), the ℓ1−ℓ2 difference, and indicators of the
//! nonnegative orthant and the probability simplex.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::problem::ProxTerm;

/// `P ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroTerm;

impl ProxTerm for ZeroTerm {
    fn value(&self, _x: &Array1<f64>) -> f64 {
        0.0
    }

    fn prox(&self, y: &Array1<f64>, _nu: f64) -> Array1<f64> {
        y.clone()
    }

    fn lower_bound(&self) -> f64 {
        0.0
    }
}

/// `λ‖x‖₁`, or `λ‖x̃‖₁` with `x = (x̃, x₀)` when `skip_last` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Term {
    lambda: f64,
    skip_last: bool,
}

impl L1Term {
    pub fn new(lambda: f64, skip_last: bool) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ℓ1 weight must be positive, got {lambda}"
            )));
        }
        Ok(Self { lambda, skip_last })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn skip_last(&self) -> bool {
        self.skip_last
    }

    fn penalized<'a>(&self, x: &'a Array1<f64>) -> impl Iterator<Item = &'a f64> {
        let k = if self.skip_last {
            x.len().saturating_sub(1)
        } else {
            x.len()
        };
        x.iter().take(k)
    }
}

impl ProxTerm for L1Term {
    fn value(&self, x: &Array1<f64>) -> f64 {
        self.lambda * self.penalized(x).map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, y: &Array1<f64>, nu: f64) -> Array1<f64> {
        prox_l1(y, nu, self)
    }

    fn lower_bound(&self) -> f64 {
        0.0
    }
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Componentwise soft-thresholding by `νλ`; the last coordinate passes
/// through unchanged when the term skips it.
pub fn prox_l1(y: &Array1<f64>, nu: f64, term: &L1Term) -> Array1<f64> {
    let t = nu * term.lambda;
    let n = y.len();
    Array1::from_iter(y.iter().enumerate().map(|(i, &v)| {
        if term.skip_last && i + 1 == n {
            v
        } else {
            soft_threshold(v, t)
        }
    }))
}

/// `λ(‖x‖₁ − ‖x‖)`, a nonnegative difference-of-convex penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1MinusL2Term {
    lambda: f64,
}

impl L1MinusL2Term {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ℓ1−ℓ2 weight must be positive, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl ProxTerm for L1MinusL2Term {
    fn value(&self, x: &Array1<f64>) -> f64 {
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        // ‖x‖₁ ≥ ‖x‖ holds exactly; rounding can flip the sign of a zero gap.
        (self.lambda * (l1 - norm(x))).max(0.0)
    }

    fn prox(&self, y: &Array1<f64>, nu: f64) -> Array1<f64> {
        prox_l1_minus_l2(y, nu, self)
    }

    fn lower_bound(&self) -> f64 {
        0.0
    }
}

/// A global minimizer of `λ(‖x‖₁ − ‖x‖) + ‖x − y‖² / (2ν)`.
///
/// With `a = νλ`:
/// * `‖y‖∞ > a`: the unique minimizer is `z (‖z‖ + a) / ‖z‖` where `z` is
///   `y` soft-thresholded by `a`.
/// * `0 < ‖y‖∞ ≤ a`: minimizers are 1-sparse, keeping one largest-magnitude
///   entry of `y`. Ties go to the earliest index.
/// * `y = 0`: the minimizer is `0`.
pub fn prox_l1_minus_l2(y: &Array1<f64>, nu: f64, term: &L1MinusL2Term) -> Array1<f64> {
    let a = nu * term.lambda;
    let (imax, ymax) = y.iter().enumerate().fold(
        (0, 0.0_f64),
        |(bi, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) },
    );
    if ymax == 0.0 {
        return Array1::zeros(y.len());
    }
    if ymax > a {
        let z = y.mapv(|v| soft_threshold(v, a));
        let nz = norm(&z);
        if nz > 0.0 {
            return z * ((nz + a) / nz);
        }
    }
    let mut x = Array1::zeros(y.len());
    x[imax] = y[imax];
    x
}

/// Indicator of `{x : x ≥ 0}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonnegIndicator;

impl ProxTerm for NonnegIndicator {
    fn value(&self, x: &Array1<f64>) -> f64 {
        if x.iter().all(|&v| v >= 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, y: &Array1<f64>, _nu: f64) -> Array1<f64> {
        project_nonneg(y)
    }

    fn lower_bound(&self) -> f64 {
        0.0
    }
}

pub fn project_nonneg(y: &Array1<f64>) -> Array1<f64> {
    y.mapv(|v| v.max(0.0))
}

/// Indicator of the probability simplex `{x : Σxᵢ = 1, x ≥ 0}`.
///
/// Membership allows `|Σxᵢ − 1| ≤ tol` so that projected points, which sum
/// to one only up to rounding, stay in the domain.
#[derive(Debug, Clone, Copy)]
pub struct SimplexIndicator {
    pub tol: f64,
}

impl Default for SimplexIndicator {
    fn default() -> Self {
        Self { tol: 1e-9 }
    }
}

impl ProxTerm for SimplexIndicator {
    fn value(&self, x: &Array1<f64>) -> f64 {
        let feasible = x.iter().all(|&v| v >= 0.0) && (x.sum() - 1.0).abs() <= self.tol;
        if feasible {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, y: &Array1<f64>, _nu: f64) -> Array1<f64> {
        project_simplex(y)
    }

    fn lower_bound(&self) -> f64 {
        0.0
    }
}

/// Euclidean projection onto the probability simplex by sorting and
/// thresholding.
pub fn project_simplex(y: &Array1<f64>) -> Array1<f64> {
    let n = y.len();
    assert!(n >= 1, "simplex projection needs at least one coordinate");
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    y.mapv(|v| (v - theta).max(0.0))
}

/// Brute-force proximal maps for checking the closed forms on tiny inputs.
pub mod oracle {
    use super::*;

    pub const MAX_DIM: usize = 3;

    /// `value(z) + ‖z − y‖² / (2ν)`.
    pub fn prox_objective(value: &dyn Fn(&Array1<f64>) -> f64, y: &Array1<f64>, nu: f64, z: &Array1<f64>) -> f64 {
        let v = value(z);
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        v + crate::linalg::dist(z, y).powi(2) / (2.0 * nu)
    }

    /// Regular grid with `per_axis` points per coordinate on `[lo, hi]ⁿ`.
    pub fn box_grid(n: usize, lo: f64, hi: f64, per_axis: usize) -> Vec<Array1<f64>> {
        assert!(per_axis >= 2);
        let step = (hi - lo) / (per_axis - 1) as f64;
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                Array1::from_shape_fn(n, |_| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    lo + step * k as f64
                })
            })
            .collect()
    }

    /// Best grid point for the prox objective, then polished by a pattern
    /// search over all `{−1, 0, 1}ⁿ` directions with a halving step, until the
    /// step drops below `1e-6`.
    pub fn prox_oracle(
        value: &dyn Fn(&Array1<f64>) -> f64,
        y: &Array1<f64>,
        nu: f64,
        grid: &[Array1<f64>],
    ) -> Result<Array1<f64>> {
        let n = y.len();
        if n > MAX_DIM {
            return Err(Error::InvalidConfig(format!("oracle supports n ≤ {MAX_DIM}, got {n}")));
        }
        if grid.is_empty() {
            return Err(Error::InvalidConfig("oracle grid is empty".into()));
        }
        if let Some(p) = grid.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p.len(),
            });
        }
        let obj = |z: &Array1<f64>| prox_objective(value, y, nu, z);
        let mut best = grid[0].clone();
        let mut best_val = obj(&best);
        for p in &grid[1..] {
            let v = obj(p);
            if v < best_val {
                best_val = v;
                best = p.clone();
            }
        }

        let directions: Vec<Array1<f64>> = box_grid(n, -1.0, 1.0, 3)
            .into_iter()
            .filter(|d| d.iter().any(|&v| v != 0.0))
            .collect();
        let mut step = grid_spacing(grid).max(1e-3);
        while step >= 1e-6 {
            let mut improved = false;
            for d in &directions {
                let trial = &best + &(d * step);
                let v = obj(&trial);
                if v < best_val {
                    best_val = v;
                    best = trial;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok(best)
    }

    fn grid_spacing(grid: &[Array1<f64>]) -> f64 {
        let n = grid[0].len();
        (0..n)
            .map(|i| {
                let mut coords: Vec<f64> = grid.iter().map(|p| p[i]).collect();
                coords.sort_by(f64::total_cmp);
                coords.dedup();
                coords.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, |acc: f64, s| if s.is_finite() { acc.max(s) } else { acc })
    }

    /// Exact projection onto the simplex by enumerating supports: on a
    /// support `S`, the projection is `yᵢ − θ` with `θ = (Σ_S yᵢ − 1)/|S|`;
    /// keep the feasible candidate nearest to `y`.
    pub fn simplex_by_enumeration(y: &Array1<f64>) -> Array1<f64> {
        let n = y.len();
        assert!(n <= 16);
        let mut best: Option<(f64, Array1<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let theta = (support.iter().map(|&i| y[i]).sum::<f64>() - 1.0) / support.len() as f64;
            let mut x = Array1::zeros(n);
            let mut feasible = true;
            for &i in &support {
                x[i] = y[i] - theta;
                if x[i] < 0.0 {
                    feasible = false;
                }
            }
            if !feasible {
                continue;
            }
            let d = crate::linalg::dist(&x, y);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, x));
            }
        }
        best.expect("the vertex supports are always feasible").1
    }
}
