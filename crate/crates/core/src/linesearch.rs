//! Potential function `H_δ(u, v, μ) = F(u) + (δμ/4)‖u − v‖²`, the sliding
//! window of past potential values, and the non-monotone acceptance test.

use std::collections::VecDeque;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dist;

/// One stored value `H_δ(xⁱ, xⁱ⁻¹, μ̄ᵢ₋₁)` with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEntry {
    pub h_value: f64,
    pub f_value: f64,
    pub mu_bar: f64,
    pub beta_bar: f64,
    pub step_norm: f64,
}

impl PotentialEntry {
    pub fn new(f_value: f64, step_norm: f64, mu_bar: f64, beta_bar: f64, delta: f64) -> Self {
        Self {
            h_value: potential_from_step(f_value, step_norm, mu_bar, delta),
            f_value,
            mu_bar,
            beta_bar,
            step_norm,
        }
    }
}

/// `f_value + (δμ/4)‖u − v‖²`.
pub fn potential_value(f_value: f64, u: &Array1<f64>, v: &Array1<f64>, mu: f64, delta: f64) -> f64 {
    potential_from_step(f_value, dist(u, v), mu, delta)
}

/// Same as [`potential_value`] given `‖u − v‖` directly.
#[inline]
pub fn potential_from_step(f_value: f64, step_norm: f64, mu: f64, delta: f64) -> f64 {
    f_value + (delta * mu / 4.0) * (step_norm * step_norm)
}

/// The non-monotone test: `h_candidate − window_max ≤ −(c/2)·step²`.
///
/// Exact comparison, no slack.
#[inline]
pub fn sufficient_decrease(h_candidate: f64, window_max: f64, step_norm: f64, c: f64) -> bool {
    h_candidate - window_max <= -(c / 2.0) * (step_norm * step_norm)
}

/// Potential values for iterations `[k − N]₊ ..= k`.
#[derive(Debug, Clone)]
pub struct PotentialHistory {
    window: usize,
    entries: VecDeque<(usize, PotentialEntry)>,
}

impl PotentialHistory {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            entries: VecDeque::with_capacity(window + 1),
        }
    }

    /// Starts the history at `k = 0` with `x⁻¹ = x⁰` and `μ̄₋₁ = 1`, so the
    /// single entry equals `F(x⁰)`.
    pub fn seeded(window: usize, f_x0: f64, delta: f64) -> Self {
        let mut h = Self::new(window);
        h.push(0, PotentialEntry::new(f_x0, 0.0, 1.0, 0.0, delta));
        h
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Index of the newest entry.
    pub fn latest(&self) -> Option<usize> {
        self.entries.back().map(|(k, _)| *k)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends the entry for iteration `k` and drops indices below `k − N`.
    ///
    /// Panics if `k` does not directly follow the newest index.
    pub fn push(&mut self, k: usize, entry: PotentialEntry) {
        if let Some(last) = self.latest() {
            assert_eq!(k, last + 1, "potential history must be filled in order");
        }
        self.entries.push_back((k, entry));
        while self.entries.len() > self.window + 1 {
            self.entries.pop_front();
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &(usize, PotentialEntry)> {
        self.entries.iter()
    }

    /// `(max H_δ, ℓ(k))` over the window; ties go to the most recent index.
    pub fn max(&self) -> Option<(f64, usize)> {
        self.entries.iter().fold(None, |best, &(i, e)| match best {
            Some((v, _)) if e.h_value < v => best,
            _ => Some((e.h_value, i)),
        })
    }
}

/// `(max, ℓ(k))` for the window ending at `k`.
pub fn history_max(history: &PotentialHistory, k: usize) -> Result<(f64, usize)> {
    match history.latest() {
        Some(last) if last == k => Ok(history.max().expect("non-empty")),
        Some(last) => Err(Error::InvalidConfig(format!(
            "history ends at {last}, asked for window at {k}"
        ))),
        None => Err(Error::InvalidConfig("potential history is empty".into())),
    }
}

/// Constants of the line search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    pub c: f64,
    pub tau: f64,
    pub eta: f64,
    pub delta: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub beta_max: f64,
}

impl LineSearchParams {
    /// The experiment settings: `c = 1e-4`, `τ = 2`, `η = 0.8`,
    /// `β_max = 10`, `μ_min = 1e-6`, `μ_max = (L_f + 2c)/(1 − δ)`.
    pub fn standard(lipschitz: f64, delta: f64) -> Self {
        let c = 1e-4;
        Self {
            c,
            tau: 2.0,
            eta: 0.8,
            delta,
            mu_min: 1e-6,
            mu_max: Self::min_mu_max(lipschitz, c, delta),
            beta_max: 10.0,
        }
    }

    /// Smallest admissible `μ_max`, `(L_f + 2c)/(1 − δ)`.
    pub fn min_mu_max(lipschitz: f64, c: f64, delta: f64) -> f64 {
        (lipschitz + 2.0 * c) / (1.0 - delta)
    }

    pub fn validate(&self, lipschitz: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.c > 0.0) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if !(self.tau > 1.0) {
            return bad(format!("τ must exceed 1, got {}", self.tau));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("η must lie in (0, 1), got {}", self.eta));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return bad(format!("δ must lie in [0, 1), got {}", self.delta));
        }
        if !(self.beta_max >= 0.0) {
            return bad(format!("β_max must be nonnegative, got {}", self.beta_max));
        }
        let floor = Self::min_mu_max(lipschitz, self.c, self.delta);
        if !(self.mu_min > 0.0 && self.mu_min <= floor && floor <= self.mu_max && self.mu_max.is_finite()) {
            return bad(format!(
                "need μ_max ≥ (L_f + 2c)/(1 − δ) ≥ μ_min > 0, got μ_min = {}, (L_f + 2c)/(1 − δ) = {floor}, μ_max = {}",
                self.mu_min, self.mu_max
            ));
        }
        Ok(())
    }

    pub fn clamp_mu(&self, mu: f64) -> f64 {
        mu.max(self.mu_min).min(self.mu_max)
    }

    /// Largest admissible initial extrapolation weight `δ·β_max`.
    pub fn beta_cap(&self) -> f64 {
        self.delta * self.beta_max
    }

    /// Upper bound on the inner iterations of one outer step: `max(n, n̂) + 1`
    /// where `n` bounds the steps until `μ` saturates at `μ_max` and `n̂` the
    /// steps until `β` falls below the sufficient-descent threshold
    /// `√(δ(μ_max − L_f)μ̄ₖ₋₁ / (4(μ_max + L_f)²))`.
    pub fn inner_loop_bound(&self, lipschitz: f64, mu_bar_prev: f64, beta0: f64) -> usize {
        let n_mu = self.mu_saturation_bound();
        let threshold = self.descent_threshold(lipschitz, self.mu_max, mu_bar_prev);
        let n_beta = if self.delta == 0.0 || beta0 <= threshold {
            n_mu
        } else {
            ((self.beta_cap().ln() - threshold.ln()) / -self.eta.ln() + 1.0).floor() as usize
        };
        n_mu.max(n_beta) + 1
    }

    /// `√(δ(μ − L_f)μ̄ₖ₋₁ / (4(μ + L_f)²))`: for `μ > L_f` and `β` at most this
    /// value the trial step is guaranteed to pass the acceptance test.
    pub fn descent_threshold(&self, lipschitz: f64, mu: f64, mu_bar_prev: f64) -> f64 {
        if mu <= lipschitz {
            return 0.0;
        }
        (self.delta * (mu - lipschitz) * mu_bar_prev / (4.0 * (mu + lipschitz).powi(2))).sqrt()
    }

    /// `⌊(log μ_max − log μ_min)/log τ + 1⌋`.
    pub fn mu_saturation_bound(&self) -> usize {
        ((self.mu_max.ln() - self.mu_min.ln()) / self.tau.ln() + 1.0).floor() as usize
    }
}

/// Evaluates the acceptance test for candidate `u` at iteration `k`, whose
/// window ends at `history.latest()`.
pub fn accept_step(
    candidate_f: f64,
    u: &Array1<f64>,
    x_k: &Array1<f64>,
    mu_k: f64,
    history: &PotentialHistory,
    params: &LineSearchParams,
) -> Result<bool> {
    let (window_max, _) = history
        .max()
        .ok_or_else(|| Error::InvalidConfig("potential history is empty".into()))?;
    let step = dist(u, x_k);
    let h = potential_from_step(candidate_f, step, mu_k, params.delta);
    Ok(sufficient_decrease(h, window_max, step, params.c))
}

/// `μ ← min(τμ, μ_max)`, `β ← ηβ`.
pub fn shrink_params(mu: f64, beta: f64, params: &LineSearchParams) -> (f64, f64) {
    ((params.tau * mu).min(params.mu_max), params.eta * beta)
}
