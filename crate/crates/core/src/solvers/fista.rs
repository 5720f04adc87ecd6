use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::trace::{IterationRecord, RunTrace, Termination, TraceMeta};
use super::{
    extrapolate, gradient_restart, initial_objective, prox_grad_step, residual_met, Budget, Meter, NesterovState,
};
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::problem::CompositeProblem;

/// Restart interval used for restarted FISTA in the experiments.
pub const DEFAULT_RESTART_INTERVAL: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FistaVariant {
    /// `βₖ ≡ 0`.
    Pg,
    Fista,
    /// FISTA with `t` reset every `ΔK` iterations and whenever
    /// `⟨yᵏ − xᵏ⁺¹, xᵏ⁺¹ − xᵏ⟩ > 0`.
    Refista,
}

impl FistaVariant {
    pub fn name(self) -> &'static str {
        match self {
            FistaVariant::Pg => "pg",
            FistaVariant::Fista => "fista",
            FistaVariant::Refista => "refista",
        }
    }
}

/// Fixed-step (`1/L_f`) proximal gradient iterations with the selected
/// extrapolation rule.
pub fn run_fista(
    problem: &CompositeProblem,
    variant: FistaVariant,
    restart_interval: usize,
    x0: &Array1<f64>,
    budget: &Budget,
) -> Result<RunTrace> {
    let lipschitz = problem.lipschitz_bound();
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "fixed-step methods need L_f > 0, got {lipschitz}"
        )));
    }
    if restart_interval == 0 {
        return Err(Error::InvalidConfig("restart interval must be at least 1".into()));
    }
    budget.validate()?;
    let f0 = initial_objective(problem, x0)?;
    let trace = fixed_step_loop(
        problem,
        lipschitz,
        variant,
        restart_interval,
        x0,
        f0,
        budget,
        |y, _x| problem.smooth().gradient(y),
        |u| problem.objective_unchecked(u),
        problem.prox(),
    );
    Ok(RunTrace {
        algorithm: variant.name().into(),
        ..trace
    })
}

/// Shared loop for the fixed-step methods. `grad` receives `(yᵏ, xᵏ)` so the
/// DC variant can subtract a subgradient taken at `xᵏ`.
#[allow(clippy::too_many_arguments)]
pub(super) fn fixed_step_loop(
    problem: &CompositeProblem,
    lipschitz: f64,
    variant: FistaVariant,
    restart_interval: usize,
    x0: &Array1<f64>,
    f0: f64,
    budget: &Budget,
    grad: impl Fn(&Array1<f64>, &Array1<f64>) -> Array1<f64>,
    objective: impl Fn(&Array1<f64>) -> f64,
    prox: &dyn crate::problem::ProxTerm,
) -> RunTrace {
    let mut meter = Meter::start();
    let mut records = vec![IterationRecord {
        k: 0,
        f_value: f0,
        h_value: f0,
        time: 0.0,
        prox_evals: 0,
        inner: 0,
        step_norm: 0.0,
        mu_bar: lipschitz,
        beta_bar: 0.0,
        mu0: lipschitz,
        beta0: 0.0,
    }];
    let mut x = x0.clone();
    let mut x_prev = x0.clone();
    let mut nesterov = NesterovState::default();
    let mut k = 0;

    let termination = loop {
        if residual_met(problem, &x, budget) {
            break Termination::ResidualTol;
        }
        if let Some(reason) = meter.exhausted(budget, k) {
            break reason;
        }
        let beta = match variant {
            FistaVariant::Pg => 0.0,
            FistaVariant::Fista | FistaVariant::Refista => nesterov.beta(),
        };
        let y = extrapolate(&x, &x_prev, beta);
        let g = grad(&y, &x);
        let u = prox_grad_step(&y, &g, lipschitz, prox);
        meter.prox_evals += 1;

        nesterov.advance();
        if variant == FistaVariant::Refista && ((k > 0 && k % restart_interval == 0) || gradient_restart(&y, &u, &x)) {
            nesterov.reset();
        }

        let f_u = objective(&u);
        let step = dist(&u, &x);
        k += 1;
        records.push(IterationRecord {
            k,
            f_value: f_u,
            h_value: f_u,
            time: meter.elapsed(),
            prox_evals: meter.prox_evals,
            inner: 1,
            step_norm: step,
            mu_bar: lipschitz,
            beta_bar: beta,
            mu0: lipschitz,
            beta0: beta,
        });
        x_prev = std::mem::replace(&mut x, u);
    };

    RunTrace {
        algorithm: String::new(),
        meta: TraceMeta {
            line_search: None,
            window: 0,
            lipschitz,
        },
        records,
        x_final: x,
        termination,
    }
}
