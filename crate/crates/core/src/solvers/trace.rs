use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::linesearch::LineSearchParams;

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxIterations,
    MaxTime,
    MaxProxEvals,
    ResidualTol,
    /// A trial step that the theory guarantees to be acceptable missed the
    /// exact test by rounding error only; the iterate has converged to
    /// working precision.
    Stagnated,
}

/// State after accepting `xᵏ`.
///
/// For `k ≥ 1`, `mu_bar`/`beta_bar` are the accepted `μ̄ₖ₋₁`/`β̄ₖ₋₁` that
/// produced `xᵏ`, `mu0`/`beta0` the initial guesses of that outer step and
/// `inner` its number of trial steps. Record 0 describes `x⁰` with
/// `μ̄₋₁ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub f_value: f64,
    /// `H_δ(xᵏ, xᵏ⁻¹, μ̄ₖ₋₁)`.
    pub h_value: f64,
    /// Seconds since the start of the run.
    pub time: f64,
    /// Cumulative prox-gradient evaluations.
    pub prox_evals: u64,
    pub inner: usize,
    /// `‖xᵏ − xᵏ⁻¹‖`.
    pub step_norm: f64,
    pub mu_bar: f64,
    pub beta_bar: f64,
    pub mu0: f64,
    pub beta0: f64,
}

/// Constants a trace is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Present for line-search runs.
    pub line_search: Option<LineSearchParams>,
    pub window: usize,
    pub lipschitz: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: String,
    pub meta: TraceMeta,
    pub records: Vec<IterationRecord>,
    pub x_final: Array1<f64>,
    pub termination: Termination,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn initial_objective(&self) -> f64 {
        self.records[0].f_value
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().expect("trace has x⁰").f_value
    }

    pub fn min_objective(&self) -> f64 {
        self.records.iter().map(|r| r.f_value).fold(f64::INFINITY, f64::min)
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f_value).collect()
    }

    pub fn total_prox_evals(&self) -> u64 {
        self.records.last().map_or(0, |r| r.prox_evals)
    }
}
