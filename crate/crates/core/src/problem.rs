//! The composite model `F = f + P`: a smooth term with Lipschitz gradient
//! plus a regularizer whose proximal map is cheap.
//!
//! `+∞` is represented by `f64::INFINITY`; a point lies in `dom P` exactly
//! when `P(x)` is finite.

use std::sync::Arc;

use ndarray::Array1;

use crate::error::{check_dim, Error, Result};
use crate::linalg::norm;

/// Smooth part `f` of the objective.
pub trait SmoothTerm: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Array1<f64>) -> f64;
    fn gradient(&self, x: &Array1<f64>) -> Array1<f64>;
    /// Lipschitz constant of the gradient.
    fn lipschitz_bound(&self) -> f64;
}

/// Prox-capable part `P` of the objective.
pub trait ProxTerm: Send + Sync {
    /// `P(x)`, or `+∞` outside the domain.
    fn value(&self, x: &Array1<f64>) -> f64;
    /// One element of `argmin_u P(u) + ‖u − y‖² / (2ν)`.
    fn prox(&self, y: &Array1<f64>, nu: f64) -> Array1<f64>;
    /// A constant with `P(x) ≥ lower_bound()` everywhere.
    fn lower_bound(&self) -> f64;
}

/// `minimize f(x) + P(x)` over `x ∈ Rⁿ`.
#[derive(Clone)]
pub struct CompositeProblem {
    smooth: Arc<dyn SmoothTerm>,
    prox: Arc<dyn ProxTerm>,
    dim: usize,
}

impl std::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim)
            .field("lipschitz_bound", &self.smooth.lipschitz_bound())
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(smooth: Arc<dyn SmoothTerm>, prox: Arc<dyn ProxTerm>) -> Result<Self> {
        let dim = smooth.dim();
        if dim == 0 {
            return Err(Error::InvalidData("problem dimension must be positive".into()));
        }
        Ok(Self { smooth, prox, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smooth(&self) -> &dyn SmoothTerm {
        self.smooth.as_ref()
    }

    pub fn prox(&self) -> &dyn ProxTerm {
        self.prox.as_ref()
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.smooth.lipschitz_bound()
    }

    /// `F(x) = f(x) + P(x)`; `+∞` iff `x ∉ dom P`.
    pub fn objective_value(&self, x: &Array1<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.objective_unchecked(x))
    }

    pub(crate) fn objective_unchecked(&self, x: &Array1<f64>) -> f64 {
        let p = self.prox.value(x);
        if p == f64::INFINITY {
            return f64::INFINITY;
        }
        self.smooth.value(x) + p
    }

    /// `μ·‖x − Prox_{P/μ}(x − ∇f(x)/μ)‖`, zero exactly at fixed points of the
    /// prox-gradient map.
    pub fn stationarity_residual(&self, x: &Array1<f64>, mu: f64) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        if !(mu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "residual scale must be positive, got {mu}"
            )));
        }
        Ok(self.residual_unchecked(x, &self.smooth.gradient(x), mu))
    }

    pub(crate) fn residual_unchecked(&self, x: &Array1<f64>, grad: &Array1<f64>, mu: f64) -> f64 {
        let target = x - &(grad / mu);
        let u = self.prox.prox(&target, 1.0 / mu);
        mu * crate::linalg::dist(x, &u)
    }
}

/// Relative disagreement between `term.gradient(x)` and a central
/// finite-difference estimate with step `1e-6·(1 + ‖x‖)`.
pub fn gradient_check(term: &dyn SmoothTerm, x: &Array1<f64>) -> f64 {
    let h = 1e-6 * (1.0 + norm(x));
    let g = term.gradient(x);
    let mut probe = x.clone();
    let mut fd = Array1::zeros(x.len());
    for i in 0..x.len() {
        let xi = probe[i];
        probe[i] = xi + h;
        let fp = term.value(&probe);
        probe[i] = xi - h;
        let fm = term.value(&probe);
        probe[i] = xi;
        fd[i] = (fp - fm) / (2.0 * h);
    }
    crate::linalg::dist(&g, &fd) / norm(&fd).max(1.0)
}
