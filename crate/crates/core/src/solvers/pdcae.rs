use std::sync::Arc;

use ndarray::Array1;

use super::fista::fixed_step_loop;
use super::trace::RunTrace;
use super::{initial_objective, Budget, FistaVariant};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::problem::{CompositeProblem, ProxTerm, SmoothTerm};
use crate::prox::{L1MinusL2Term, L1Term};

/// `λ x/‖x‖`, or `0` at the origin.
pub fn l2_subgradient(x: &Array1<f64>, lambda: f64) -> Array1<f64> {
    let nx = norm(x);
    if nx == 0.0 {
        Array1::zeros(x.len())
    } else {
        x * (lambda / nx)
    }
}

/// Proximal DCA with extrapolation for `f + λ(‖·‖₁ − ‖·‖)`:
/// `ξᵏ ∈ λ∂‖xᵏ‖`, `yᵏ = xᵏ + βₖ(xᵏ − xᵏ⁻¹)`, then an ℓ1 prox step from `yᵏ`
/// along `∇f(yᵏ) − ξᵏ` with step `1/L_f`.
///
/// `variant` picks the `βₖ` rule; the experiments use restarted FISTA
/// weights.
pub fn run_pdcae(
    smooth: Arc<dyn SmoothTerm>,
    term: L1MinusL2Term,
    variant: FistaVariant,
    restart_interval: usize,
    x0: &Array1<f64>,
    budget: &Budget,
) -> Result<RunTrace> {
    let lipschitz = smooth.lipschitz_bound();
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidConfig(format!("pDCAe needs L_f > 0, got {lipschitz}")));
    }
    if restart_interval == 0 {
        return Err(Error::InvalidConfig("restart interval must be at least 1".into()));
    }
    budget.validate()?;
    let problem = CompositeProblem::new(smooth, Arc::new(term))?;
    let f0 = initial_objective(&problem, x0)?;
    let l1 = L1Term::new(term.lambda(), false)?;
    let lambda = term.lambda();
    let trace = fixed_step_loop(
        &problem,
        lipschitz,
        variant,
        restart_interval,
        x0,
        f0,
        budget,
        |y, x| problem.smooth().gradient(y) - l2_subgradient(x, lambda),
        |u| problem.smooth().value(u) + term.value(u),
        &l1 as &dyn ProxTerm,
    );
    Ok(RunTrace {
        algorithm: "pdcae".into(),
        ..trace
    })
}
