//! Post-hoc checks of a [`RunTrace`] against the convergence guarantees of
//! the line search, and empirical rate fits of objective gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::sufficient_decrease;
use crate::solvers::{RunTrace, INNER_LOOP_CAP};

/// Absolute slack for the potential-value inequalities.
pub const THEORY_SLACK: f64 = 1e-10;

/// Minimum run length for the diminishing-steps comparison.
pub const MIN_ITERS_FOR_STEP_DECAY: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub k: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct TraceReport {
    pub violations: Vec<Violation>,
    /// `None` when the run is too short for the comparison.
    pub steps_diminish: Option<bool>,
}

impl TraceReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty() && self.steps_diminish != Some(false)
    }

    fn flag(&mut self, check: &'static str, k: usize, detail: String) {
        self.violations.push(Violation { check, k, detail });
    }
}

/// Runs every applicable check.
pub fn check_trace(trace: &RunTrace) -> TraceReport {
    let mut report = TraceReport::default();
    check_clock(trace, &mut report);
    check_global_bound(trace, &mut report);
    if trace.meta.line_search.is_some() {
        check_line_search(trace, &mut report);
        check_monitor(trace, &mut report);
        check_sufficient_descent(trace, &mut report);
    }
    report.steps_diminish = steps_diminish(trace);
    report
}

fn check_clock(trace: &RunTrace, report: &mut TraceReport) {
    let r = &trace.records;
    if r[0].time != 0.0 || r[0].prox_evals != 0 {
        report.flag("clock", 0, "T(0) must be 0".into());
    }
    for w in r.windows(2) {
        if w[1].time < w[0].time || w[1].prox_evals < w[0].prox_evals {
            report.flag("clock", w[1].k, "T(k) decreased".into());
        }
    }
}

/// `H_δ(xᵏ, xᵏ⁻¹, μ̄ₖ₋₁) ≤ F(x⁰)` for line-search runs; `F(x_final) ≤ F(x⁰)`
/// for every run.
fn check_global_bound(trace: &RunTrace, report: &mut TraceReport) {
    let f0 = trace.initial_objective();
    if trace.meta.line_search.is_some() {
        for r in &trace.records[1..] {
            if r.h_value > f0 + THEORY_SLACK {
                report.flag("global-bound", r.k, format!("H = {} exceeds F(x0) = {f0}", r.h_value));
            }
        }
    }
    let last = trace.final_objective();
    if last > f0 + THEORY_SLACK {
        report.flag(
            "final-objective",
            trace.iterations(),
            format!("F = {last} exceeds F(x0) = {f0}"),
        );
    }
}

fn window_max(trace: &RunTrace, k: usize) -> f64 {
    let lo = k.saturating_sub(trace.meta.window);
    trace.records[lo..=k]
        .iter()
        .map(|r| r.h_value)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Recomputes the acceptance test for every step and checks the inner-loop
/// bound and the parameter ranges.
fn check_line_search(trace: &RunTrace, report: &mut TraceReport) {
    let ls = trace.meta.line_search.expect("line-search run");
    let lf = trace.meta.lipschitz;
    for k in 1..trace.records.len() {
        let r = &trace.records[k];
        let prev = &trace.records[k - 1];
        if !sufficient_decrease(r.h_value, window_max(trace, k - 1), r.step_norm, ls.c) {
            report.flag("acceptance", k, format!("H = {} fails the decrease test", r.h_value));
        }
        let bound = ls.inner_loop_bound(lf, prev.mu_bar, r.beta0);
        if r.inner > bound || r.inner > INNER_LOOP_CAP {
            report.flag("inner-bound", k, format!("{} trial steps, bound {bound}", r.inner));
        }
        if !(r.mu_bar >= ls.mu_min && r.mu_bar <= ls.mu_max) {
            report.flag("mu-range", k, format!("μ̄ = {}", r.mu_bar));
        }
        if !(r.beta0 >= 0.0 && r.beta0 <= ls.beta_cap()) {
            report.flag("beta-range", k, format!("β⁰ = {}", r.beta0));
        }
        if r.beta_bar > r.beta0 {
            report.flag("beta-range", k, format!("β̄ = {} above β⁰ = {}", r.beta_bar, r.beta0));
        }
    }
}

/// `H_δ(x^{ℓ(k)}, ·, ·)` is non-increasing in `k`.
fn check_monitor(trace: &RunTrace, report: &mut TraceReport) {
    let mut prev = window_max(trace, 0);
    for k in 1..trace.records.len() {
        let m = window_max(trace, k);
        if m > prev + THEORY_SLACK {
            report.flag("monitor", k, format!("window max rose from {prev} to {m}"));
        }
        prev = m;
    }
}

/// Where `μ̄ₖ > L_f` and `β̄ₖ ≤ √(δ(μ̄ₖ − L_f)μ̄ₖ₋₁ / (4(μ̄ₖ + L_f)²))`, the
/// accepted step must satisfy
/// `H_δ(xᵏ⁺¹) − H_δ(xᵏ) ≤ −((1 − δ)μ̄ₖ − L_f)/4 · ‖xᵏ⁺¹ − xᵏ‖²`.
fn check_sufficient_descent(trace: &RunTrace, report: &mut TraceReport) {
    let ls = trace.meta.line_search.expect("line-search run");
    let lf = trace.meta.lipschitz;
    let delta = ls.delta;
    for k in 1..trace.records.len() {
        let r = &trace.records[k];
        let prev = &trace.records[k - 1];
        let mu = r.mu_bar;
        if mu <= lf {
            continue;
        }
        if r.beta_bar > ls.descent_threshold(lf, mu, prev.mu_bar) {
            continue;
        }
        let lhs = r.h_value - prev.h_value;
        let rhs = -((1.0 - delta) * mu - lf) / 4.0 * r.step_norm * r.step_norm;
        let slack = THEORY_SLACK * (1.0 + prev.h_value.abs());
        if lhs > rhs + slack {
            report.flag("sufficient-descent", k, format!("ΔH = {lhs} > {rhs}"));
        }
    }
}

/// Mean step over the last decile below the mean over the first decile, for
/// runs of at least [`MIN_ITERS_FOR_STEP_DECAY`] iterations.
pub fn steps_diminish(trace: &RunTrace) -> Option<bool> {
    let steps: Vec<f64> = trace.records[1..].iter().map(|r| r.step_norm).collect();
    if steps.len() < MIN_ITERS_FOR_STEP_DECAY {
        return None;
    }
    let d = steps.len() / 10;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some(mean(&steps[steps.len() - d..]) < mean(&steps[..d]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    /// `gapₖ ≈ C ρᵏ`.
    Geometric,
    /// `gapₖ ≈ C k^p`.
    Power,
}

/// Least-squares fit of one rate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: RateModel,
    /// `ρ` for the geometric model, the exponent `p` for the power model.
    pub parameter: f64,
    /// Coefficient of determination of the log-linear fit.
    pub quality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub best: ModelFit,
    pub geometric: ModelFit,
    pub power: ModelFit,
}

/// Fits `log gap` against `k` (geometric) and against `log k` (power) over
/// the second half of the sequence and keeps the better fit.
///
/// `gaps[i]` is taken as the gap at iteration `k = i + 1`.
pub fn fit_rate(gaps: &[f64]) -> Result<RateFit> {
    if gaps.len() < 10 {
        return Err(Error::InvalidData(format!("need at least 10 gaps, got {}", gaps.len())));
    }
    if let Some(g) = gaps.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(Error::InvalidData(format!(
            "gaps must be positive and finite, found {g}"
        )));
    }
    let start = gaps.len() / 2;
    let ks: Vec<f64> = (start..gaps.len()).map(|i| (i + 1) as f64).collect();
    let logs: Vec<f64> = gaps[start..].iter().map(|g| g.ln()).collect();

    let (slope, quality) = linear_fit(&ks, &logs);
    let geometric = ModelFit {
        model: RateModel::Geometric,
        parameter: slope.exp(),
        quality,
    };
    let log_ks: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let (slope, quality) = linear_fit(&log_ks, &logs);
    let power = ModelFit {
        model: RateModel::Power,
        parameter: slope,
        quality,
    };

    let best = if power.quality > geometric.quality {
        power
    } else {
        geometric
    };
    Ok(RateFit { best, geometric, power })
}

/// Slope and R² of the least-squares line through `(x, y)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    (slope, r2)
}

/// `F(xᵏ) − f_star` for `k ≥ 1`, stopping before the first gap at or below
/// `floor`.
pub fn gap_sequence(trace: &RunTrace, f_star: f64, floor: f64) -> Vec<f64> {
    trace.records[1..]
        .iter()
        .map(|r| r.f_value - f_star)
        .take_while(|&g| g > floor)
        .collect()
}
