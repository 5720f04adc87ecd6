use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{IterationRecord, RunTrace};

pub const DEFAULT_GRID_POINTS: usize = 200;

/// What `T(k)` measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    /// Seconds of wall time.
    WallTime,
    /// Cumulative prox-gradient evaluations; reproducible.
    ProxEvals,
}

impl Clock {
    pub fn read(self, r: &IterationRecord) -> f64 {
        match self {
            Clock::WallTime => r.time,
            Clock::ProxEvals => r.prox_evals as f64,
        }
    }
}

/// `E(t)` averaged over trials on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionCurve {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    /// Standard error of the mean over trials; 0 for a single trial.
    pub stderr: Vec<f64>,
    pub trials: usize,
}

/// `points` uniform values on `[0, t_max]`, both ends included.
pub fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && t_max > 0.0);
    (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect()
}

/// Smallest objective value seen by any of the runs of one trial.
///
/// Taking the minimum over whole traces rather than final iterates keeps
/// `e(k) ≥ 0` for non-monotone methods.
pub fn trial_f_min<'a>(traces: impl IntoIterator<Item = &'a RunTrace>) -> f64 {
    traces
        .into_iter()
        .map(RunTrace::min_objective)
        .fold(f64::INFINITY, f64::min)
}

/// `e(k) = (F(xᵏ) − F_min)/(F(x⁰) − F_min)`.
pub fn normalized_errors(trace: &RunTrace, f_min: f64) -> Result<Vec<f64>> {
    let f0 = trace.initial_objective();
    let denom = f0 - f_min;
    if !(denom > 0.0) {
        return Err(Error::DegenerateBenchmark(format!(
            "F(x0) = {f0} is not above F_min = {f_min}"
        )));
    }
    Ok(trace.records.iter().map(|r| (r.f_value - f_min) / denom).collect())
}

/// `E(t) = min{e(k) : T(k) ≤ t}` at each grid point.
pub fn staircase(trace: &RunTrace, errors: &[f64], grid: &[f64], clock: Clock) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut best = f64::INFINITY;
    let mut k = 0;
    for &t in grid {
        while k < trace.records.len() && clock.read(&trace.records[k]) <= t {
            best = best.min(errors[k]);
            k += 1;
        }
        out.push(best);
    }
    out
}

/// Per-algorithm `E(t)` averaged over trials.
///
/// `trials[i][a]` is the run of algorithm `a` on trial `i`; every trial must
/// list the algorithms in the same order and all runs of a trial must start
/// from the same `F(x⁰)`.
pub fn evolution_metric(trials: &[Vec<RunTrace>], grid: &[f64], clock: Clock) -> Result<Vec<EvolutionCurve>> {
    let algos = trials.first().map_or(0, Vec::len);
    if trials.iter().any(|t| t.len() != algos) {
        return Err(Error::InvalidData("every trial needs one run per algorithm".into()));
    }
    let mut sums = vec![vec![0.0; grid.len()]; algos];
    let mut sq = vec![vec![0.0; grid.len()]; algos];
    for runs in trials {
        let f0 = runs[0].initial_objective();
        if runs.iter().any(|r| r.initial_objective().to_bits() != f0.to_bits()) {
            return Err(Error::InvalidData(
                "runs of one trial start from different points".into(),
            ));
        }
        let f_min = trial_f_min(runs);
        for (a, run) in runs.iter().enumerate() {
            let e = normalized_errors(run, f_min)?;
            for (i, v) in staircase(run, &e, grid, clock).into_iter().enumerate() {
                sums[a][i] += v;
                sq[a][i] += v * v;
            }
        }
    }
    let n = trials.len();
    Ok((0..algos)
        .map(|a| {
            let mean: Vec<f64> = sums[a].iter().map(|s| s / n as f64).collect();
            let stderr = mean
                .iter()
                .zip(&sq[a])
                .map(|(m, q)| {
                    if n < 2 {
                        0.0
                    } else {
                        let var = ((q - n as f64 * m * m) / (n - 1) as f64).max(0.0);
                        (var / n as f64).sqrt()
                    }
                })
                .collect();
            EvolutionCurve {
                grid: grid.to_vec(),
                mean,
                stderr,
                trials: n,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{Termination, TraceMeta};
    use ndarray::Array1;

    fn toy(fs: &[f64], evals: &[u64]) -> RunTrace {
        let records = fs
            .iter()
            .zip(evals)
            .enumerate()
            .map(|(k, (&f, &p))| IterationRecord {
                k,
                f_value: f,
                h_value: f,
                time: p as f64 * 0.5,
                prox_evals: p,
                inner: 1,
                step_norm: 0.0,
                mu_bar: 1.0,
                beta_bar: 0.0,
                mu0: 1.0,
                beta0: 0.0,
            })
            .collect();
        RunTrace {
            algorithm: "toy".into(),
            meta: TraceMeta {
                line_search: None,
                window: 0,
                lipschitz: 1.0,
            },
            records,
            x_final: Array1::zeros(1),
            termination: Termination::MaxIterations,
        }
    }

    #[test]
    fn hand_built_staircase() {
        // F_min = 2 (reached by b). Denominator 10 − 2 = 8.
        let a = toy(&[10.0, 6.0, 7.0, 4.0], &[0, 1, 2, 3]);
        let b = toy(&[10.0, 9.0, 2.0], &[0, 2, 4]);
        let grid = [0.0, 1.0, 2.0, 3.0, 4.0];
        let curves = evolution_metric(&[vec![a, b]], &grid, Clock::ProxEvals).unwrap();
        assert_eq!(curves[0].mean, vec![1.0, 0.5, 0.5, 0.25, 0.25]);
        assert_eq!(curves[1].mean, vec![1.0, 1.0, 0.875, 0.875, 0.0]);
        assert_eq!(curves[0].stderr, vec![0.0; 5]);
    }

    #[test]
    fn wall_clock_uses_recorded_seconds() {
        let a = toy(&[10.0, 6.0, 2.0], &[0, 1, 2]);
        let grid = [0.0, 0.5, 1.0];
        let curve = &evolution_metric(&[vec![a]], &grid, Clock::WallTime).unwrap()[0];
        assert_eq!(curve.mean, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn averages_over_trials() {
        let t1 = vec![toy(&[4.0, 2.0], &[0, 1])];
        let t2 = vec![toy(&[4.0, 3.0, 0.0], &[0, 1, 2])];
        let curve = &evolution_metric(&[t1, t2], &[0.0, 1.0, 2.0], Clock::ProxEvals).unwrap()[0];
        assert_eq!(curve.mean, vec![1.0, 0.375, 0.0]);
        assert!((curve.stderr[1] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn degenerate_start_rejected() {
        let a = toy(&[1.0, 1.0], &[0, 1]);
        assert!(matches!(
            evolution_metric(&[vec![a]], &[0.0, 1.0], Clock::ProxEvals),
            Err(Error::DegenerateBenchmark(_))
        ));
    }

    #[test]
    fn grid_endpoints() {
        let g = time_grid(2.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[199], 2.0);
    }
}
