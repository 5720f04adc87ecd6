//! PGels and its baselines.
//!
//! * [`run_pgels`]: extrapolation plus non-monotone line search. With `δ = 0`
//!   it is the non-monotone proximal gradient method (NPG); with `δ = 0` and
//!   `μₖ⁰ ≡ μ_max` it never shrinks and behaves as plain PG.
//! * [`run_fista`]: fixed step `1/L_f` with the PG, FISTA or restarted FISTA
//!   extrapolation rule.
//! * [`run_pdcae`]: proximal DCA with extrapolation for the ℓ1−ℓ2 penalty.

mod fista;
mod pdcae;
mod pgels;
mod trace;

use std::time::{Duration, Instant};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::LineSearchParams;
use crate::problem::{CompositeProblem, ProxTerm};

pub use fista::{run_fista, FistaVariant, DEFAULT_RESTART_INTERVAL};
pub use pdcae::{l2_subgradient, run_pdcae};
pub use pgels::{run_pgels, INNER_LOOP_CAP};
pub use trace::{IterationRecord, RunTrace, Termination, TraceMeta};

/// Stopping rules; the first one to fire ends the run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Budget {
    pub max_iterations: Option<usize>,
    pub max_time: Option<Duration>,
    pub max_prox_evals: Option<u64>,
    /// Stop once the stationarity residual (scaled by `L_f`) drops to this.
    pub residual_tol: Option<f64>,
}

impl Budget {
    pub fn iterations(n: usize) -> Self {
        Self {
            max_iterations: Some(n),
            ..Self::default()
        }
    }

    pub fn prox_evals(n: u64) -> Self {
        Self {
            max_prox_evals: Some(n),
            ..Self::default()
        }
    }

    pub fn time(limit: Duration) -> Self {
        Self {
            max_time: Some(limit),
            ..Self::default()
        }
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = Some(tol);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations.is_none() && self.max_time.is_none() && self.max_prox_evals.is_none() {
            return Err(Error::InvalidConfig(
                "budget needs an iteration, time or prox-evaluation limit".into(),
            ));
        }
        if let Some(tol) = self.residual_tol {
            if !(tol >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "residual tolerance must be nonnegative, got {tol}"
                )));
            }
        }
        Ok(())
    }
}

/// Rule for the initial extrapolation weight `βₖ⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSchedule {
    Zero,
    Nesterov,
    /// Nesterov weights with `t` reset on the restart interval or when the
    /// step points uphill.
    NesterovRestart,
    Constant(f64),
}

/// Rule for the initial step parameter `μₖ⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mu0Schedule {
    /// The same value, clipped into `[μ_min, μ_max]`, at every iteration.
    Constant(f64),
    /// `μ_max` at every iteration.
    Max,
    /// `initial` at `k = 0`, then the clipped curvature estimate.
    Spectral { initial: f64 },
}

/// Constants for [`run_pgels`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub line_search: LineSearchParams,
    /// Non-monotone window `N`.
    pub window: usize,
    pub beta_schedule: BetaSchedule,
    pub mu0_schedule: Mu0Schedule,
    pub restart_interval: Option<usize>,
}

impl SolverConfig {
    /// The experiment setup: standard line-search constants, `N = 2`,
    /// Nesterov `βₖ⁰` and spectral `μₖ⁰` starting from 1.
    pub fn standard(lipschitz: f64, delta: f64) -> Self {
        Self {
            line_search: LineSearchParams::standard(lipschitz, delta),
            window: 2,
            beta_schedule: BetaSchedule::Nesterov,
            mu0_schedule: Mu0Schedule::Spectral { initial: 1.0 },
            restart_interval: None,
        }
    }

    /// NPG: the same setup with `δ = 0`.
    pub fn npg(lipschitz: f64) -> Self {
        Self::standard(lipschitz, 0.0)
    }

    pub fn validate(&self, lipschitz: f64) -> Result<()> {
        self.line_search.validate(lipschitz)?;
        if self.restart_interval == Some(0) {
            return Err(Error::InvalidConfig("restart interval must be at least 1".into()));
        }
        if let BetaSchedule::Constant(b) = self.beta_schedule {
            if !(b >= 0.0) {
                return Err(Error::InvalidConfig(format!("constant β must be nonnegative, got {b}")));
            }
        }
        match self.mu0_schedule {
            Mu0Schedule::Constant(m) | Mu0Schedule::Spectral { initial: m } if !(m > 0.0) => {
                Err(Error::InvalidConfig(format!("initial μ must be positive, got {m}")))
            }
            _ => Ok(()),
        }
    }
}

/// `(t_{k−1}, t_k)` of the Nesterov recurrence, starting at `(1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NesterovState {
    pub t_prev: f64,
    pub t_curr: f64,
}

impl Default for NesterovState {
    fn default() -> Self {
        Self {
            t_prev: 1.0,
            t_curr: 1.0,
        }
    }
}

impl NesterovState {
    /// `(t_{k−1} − 1)/t_k`.
    pub fn beta(&self) -> f64 {
        (self.t_prev - 1.0) / self.t_curr
    }

    /// `t_{k+1} = (1 + √(1 + 4t_k²))/2`.
    pub fn advance(&mut self) {
        let next = (1.0 + (1.0 + 4.0 * self.t_curr * self.t_curr).sqrt()) / 2.0;
        self.t_prev = self.t_curr;
        self.t_curr = next;
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Current weight and the advanced state.
pub fn nesterov_beta(state: NesterovState) -> (f64, NesterovState) {
    let mut next = state;
    next.advance();
    (state.beta(), next)
}

/// `argmin_x ⟨∇f(y), x − y⟩ + (μ/2)‖x − y‖² + P(x)`, i.e.
/// `Prox_{P/μ}(y − ∇f(y)/μ)`.
pub fn prox_grad_step(y: &Array1<f64>, grad_y: &Array1<f64>, mu: f64, prox: &dyn ProxTerm) -> Array1<f64> {
    let target = y - &(grad_y / mu);
    prox.prox(&target, 1.0 / mu)
}

/// Clipped curvature estimate
/// `min(max(max(⟨Δy, Δg⟩/‖Δy‖², μ̄ₖ₋₁/2), μ_min), μ_max)`.
///
/// Falls back to `μ̄ₖ₋₁` when `Δy = 0`.
pub fn spectral_mu0(
    y_k: &Array1<f64>,
    y_prev: &Array1<f64>,
    g_k: &Array1<f64>,
    g_prev: &Array1<f64>,
    mu_bar_prev: f64,
    bounds: (f64, f64),
) -> f64 {
    let (mu_min, mu_max) = bounds;
    let mut dyy = 0.0;
    let mut dyg = 0.0;
    for i in 0..y_k.len() {
        let dy = y_k[i] - y_prev[i];
        dyy += dy * dy;
        dyg += dy * (g_k[i] - g_prev[i]);
    }
    if dyy == 0.0 {
        return mu_bar_prev;
    }
    (dyg / dyy).max(0.5 * mu_bar_prev).max(mu_min).min(mu_max)
}

/// Wall clock plus prox-evaluation counter, checked against a [`Budget`].
pub(crate) struct Meter {
    start: Instant,
    pub prox_evals: u64,
}

impl Meter {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
            prox_evals: 0,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// The limit that has been reached after `iterations` outer steps, if any.
    pub fn exhausted(&self, budget: &Budget, iterations: usize) -> Option<Termination> {
        if budget.max_iterations.is_some_and(|m| iterations >= m) {
            return Some(Termination::MaxIterations);
        }
        if budget.max_prox_evals.is_some_and(|m| self.prox_evals >= m) {
            return Some(Termination::MaxProxEvals);
        }
        if budget.max_time.is_some_and(|m| self.start.elapsed() >= m) {
            return Some(Termination::MaxTime);
        }
        None
    }
}

/// Validates `x⁰` and returns `F(x⁰)`.
pub(crate) fn initial_objective(problem: &CompositeProblem, x0: &Array1<f64>) -> Result<f64> {
    let f0 = problem.objective_value(x0)?;
    if !f0.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    Ok(f0)
}

/// Residual test at `x`, scaled by `L_f`.
pub(crate) fn residual_met(problem: &CompositeProblem, x: &Array1<f64>, budget: &Budget) -> bool {
    match budget.residual_tol {
        Some(tol) => {
            let lf = problem.lipschitz_bound();
            let mu = if lf > 0.0 { lf } else { 1.0 };
            problem.residual_unchecked(x, &problem.smooth().gradient(x), mu) <= tol
        }
        None => false,
    }
}

#[inline]
pub(crate) fn extrapolate(x: &Array1<f64>, x_prev: &Array1<f64>, beta: f64) -> Array1<f64> {
    if beta == 0.0 {
        x.clone()
    } else {
        x + &((x - x_prev) * beta)
    }
}

/// `⟨y − x⁺, x⁺ − x⟩ > 0`: the last step moved against the extrapolation.
pub(crate) fn gradient_restart(y: &Array1<f64>, x_new: &Array1<f64>, x: &Array1<f64>) -> bool {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += (y[i] - x_new[i]) * (x_new[i] - x[i]);
    }
    s > 0.0
}
