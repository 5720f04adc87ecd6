use ndarray::Array1;

use super::trace::{IterationRecord, RunTrace, Termination, TraceMeta};
use super::{
    extrapolate, gradient_restart, initial_objective, prox_grad_step, residual_met, spectral_mu0, BetaSchedule, Budget,
    Meter, Mu0Schedule, NesterovState, SolverConfig,
};
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::linesearch::{potential_from_step, shrink_params, sufficient_decrease, PotentialEntry, PotentialHistory};
use crate::problem::CompositeProblem;

/// Trial steps allowed per outer iteration before the run is aborted.
pub const INNER_LOOP_CAP: usize = 100;

/// Relative size of an acceptance miss attributed to rounding when the
/// trial step is provably acceptable.
const ROUNDING_SLACK: f64 = 1e-12;

/// Proximal gradient with extrapolation and non-monotone line search.
///
/// Each outer step extrapolates `y = xᵏ + β(xᵏ − xᵏ⁻¹)`, takes the
/// prox-gradient step with parameter `μ`, and accepts the candidate `u` once
/// `H_δ(u, xᵏ, μ) − max_{[k−N]₊ ≤ i ≤ k} H_δ(xⁱ, xⁱ⁻¹, μ̄ᵢ₋₁) ≤ −(c/2)‖u − xᵏ‖²`;
/// otherwise `μ` grows by `τ` (capped at `μ_max`) and `β` shrinks by `η`.
/// The run ends with [`Termination::Stagnated`] once a provably acceptable
/// trial step fails the exact test by rounding error only.
pub fn run_pgels(
    problem: &CompositeProblem,
    config: &SolverConfig,
    x0: &Array1<f64>,
    budget: &Budget,
) -> Result<RunTrace> {
    let lipschitz = problem.lipschitz_bound();
    config.validate(lipschitz)?;
    budget.validate()?;
    let f0 = initial_objective(problem, x0)?;

    let ls = config.line_search;
    let delta = ls.delta;
    let mut meter = Meter::start();
    let mut history = PotentialHistory::seeded(config.window, f0, delta);
    let mut records = vec![IterationRecord {
        k: 0,
        f_value: f0,
        h_value: f0,
        time: 0.0,
        prox_evals: 0,
        inner: 0,
        step_norm: 0.0,
        mu_bar: 1.0,
        beta_bar: 0.0,
        mu0: 1.0,
        beta0: 0.0,
    }];

    let mut x = x0.clone();
    let mut x_prev = x0.clone();
    let mut mu_bar_prev = 1.0;
    let mut nesterov = NesterovState::default();
    let mut last_point: Option<(Array1<f64>, Array1<f64>)> = None;
    let mut k = 0;

    let termination = loop {
        if residual_met(problem, &x, budget) {
            break Termination::ResidualTol;
        }
        if let Some(reason) = meter.exhausted(budget, k) {
            break reason;
        }

        let beta0 = match config.beta_schedule {
            BetaSchedule::Zero => 0.0,
            BetaSchedule::Nesterov | BetaSchedule::NesterovRestart => nesterov.beta(),
            BetaSchedule::Constant(b) => b,
        }
        .min(ls.beta_cap());

        let mut beta = beta0;
        let mut y = extrapolate(&x, &x_prev, beta);
        let mut grad = problem.smooth().gradient(&y);

        let mu0 = match (config.mu0_schedule, &last_point) {
            (Mu0Schedule::Max, _) => ls.mu_max,
            (Mu0Schedule::Constant(m), _) | (Mu0Schedule::Spectral { initial: m }, None) => ls.clamp_mu(m),
            (Mu0Schedule::Spectral { .. }, Some((y_prev, g_prev))) => {
                spectral_mu0(&y, y_prev, &grad, g_prev, mu_bar_prev, (ls.mu_min, ls.mu_max))
            }
        };
        let mut mu = mu0;

        let (window_max, _) = history.max().expect("history is seeded");
        let mut inner = 0;
        let accepted = loop {
            inner += 1;
            if inner > INNER_LOOP_CAP {
                return Err(Error::LineSearchFailure {
                    iteration: k,
                    cap: INNER_LOOP_CAP,
                });
            }
            let u = prox_grad_step(&y, &grad, mu, problem.prox());
            meter.prox_evals += 1;
            let f_u = problem.objective_unchecked(&u);
            let step = dist(&u, &x);
            let h_u = potential_from_step(f_u, step, mu, delta);
            if sufficient_decrease(h_u, window_max, step, ls.c) {
                break Some((u, f_u, step));
            }
            let guaranteed = mu >= ls.mu_max && beta <= ls.descent_threshold(lipschitz, mu, mu_bar_prev);
            let miss = h_u - window_max + 0.5 * ls.c * step * step;
            if guaranteed && miss <= ROUNDING_SLACK * (window_max.abs() + 1.0) {
                break None;
            }
            let (next_mu, next_beta) = shrink_params(mu, beta, &ls);
            mu = next_mu;
            if next_beta != beta {
                beta = next_beta;
                y = extrapolate(&x, &x_prev, beta);
                grad = problem.smooth().gradient(&y);
            }
        };
        let Some((u, f_u, step)) = accepted else {
            break Termination::Stagnated;
        };

        nesterov.advance();
        if config.beta_schedule == BetaSchedule::NesterovRestart {
            let periodic = config.restart_interval.is_some_and(|dk| k > 0 && k % dk == 0);
            if periodic || gradient_restart(&y, &u, &x) {
                nesterov.reset();
            }
        }

        let entry = PotentialEntry::new(f_u, step, mu, beta, delta);
        k += 1;
        history.push(k, entry);
        records.push(IterationRecord {
            k,
            f_value: f_u,
            h_value: entry.h_value,
            time: meter.elapsed(),
            prox_evals: meter.prox_evals,
            inner,
            step_norm: step,
            mu_bar: mu,
            beta_bar: beta,
            mu0,
            beta0,
        });
        x_prev = std::mem::replace(&mut x, u);
        mu_bar_prev = mu;
        last_point = Some((y, grad));
    };

    Ok(RunTrace {
        algorithm: if delta == 0.0 { "npg".into() } else { "pgels".into() },
        meta: TraceMeta {
            line_search: Some(ls),
            window: config.window,
            lipschitz,
        },
        records,
        x_final: x,
        termination,
    })
}
