use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::evolution::{evolution_metric, time_grid, Clock, EvolutionCurve};
use super::instance::{build_instance, Family, Instance, InstanceSpec};
use crate::error::{Error, Result};
use crate::linalg::{map_collect, Execution};
use crate::solvers::{
    run_fista, run_pdcae, run_pgels, Budget, FistaVariant, RunTrace, SolverConfig, Termination,
    DEFAULT_RESTART_INTERVAL,
};

pub const CSV_HEADER: &str = "family,j,lambda,algo,trial_count,t,E_mean,E_stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pgels,
    Npg,
    Pg,
    Fista,
    Refista,
    Pdcae,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Pgels,
        Algorithm::Npg,
        Algorithm::Pg,
        Algorithm::Fista,
        Algorithm::Refista,
        Algorithm::Pdcae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pgels => "pgels",
            Algorithm::Npg => "npg",
            Algorithm::Pg => "pg",
            Algorithm::Fista => "fista",
            Algorithm::Refista => "refista",
            Algorithm::Pdcae => "pdcae",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

/// Runs one algorithm from the origin of `instance`. `delta` applies to
/// PGels only.
pub fn run_algorithm(algorithm: Algorithm, instance: &Instance, delta: f64, budget: &Budget) -> Result<RunTrace> {
    let problem = &instance.problem;
    let x0 = instance.origin();
    let lf = problem.lipschitz_bound();
    match algorithm {
        Algorithm::Pgels => run_pgels(problem, &SolverConfig::standard(lf, delta), &x0, budget),
        Algorithm::Npg => run_pgels(problem, &SolverConfig::npg(lf), &x0, budget),
        Algorithm::Pg => run_fista(problem, FistaVariant::Pg, DEFAULT_RESTART_INTERVAL, &x0, budget),
        Algorithm::Fista => run_fista(problem, FistaVariant::Fista, DEFAULT_RESTART_INTERVAL, &x0, budget),
        Algorithm::Refista => run_fista(problem, FistaVariant::Refista, DEFAULT_RESTART_INTERVAL, &x0, budget),
        Algorithm::Pdcae => {
            let term = instance.l1l2.ok_or_else(|| {
                Error::InvalidConfig(format!("pdcae needs the ℓ1−ℓ2 family, not {}", instance.spec.family))
            })?;
            run_pdcae(
                instance.smooth.clone(),
                term,
                FistaVariant::Refista,
                DEFAULT_RESTART_INTERVAL,
                &x0,
                budget,
            )
        }
    }
}

/// Per-run budget of a suite, which also fixes the clock for `E(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "limit")]
pub enum BenchBudget {
    /// Seconds of wall time per run.
    WallTime(f64),
    /// Prox-gradient evaluations per run; fully deterministic.
    ProxEvals(u64),
}

impl BenchBudget {
    fn solver_budget(self) -> Budget {
        match self {
            BenchBudget::WallTime(s) => Budget::time(Duration::from_secs_f64(s)),
            BenchBudget::ProxEvals(n) => Budget::prox_evals(n),
        }
    }

    fn clock(self) -> Clock {
        match self {
            BenchBudget::WallTime(_) => Clock::WallTime,
            BenchBudget::ProxEvals(_) => Clock::ProxEvals,
        }
    }

    fn horizon(self) -> f64 {
        match self {
            BenchBudget::WallTime(s) => s,
            BenchBudget::ProxEvals(n) => n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub family: Family,
    pub js: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// Overrides the `(100j, 1000j, 20j)` size rule for every cell.
    pub shape: Option<(usize, usize, usize)>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    /// Trial `i` uses seed `seed + i`.
    pub seed: u64,
    pub delta: f64,
    pub budget: BenchBudget,
    pub grid_points: usize,
    pub execution: Execution,
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.js.is_empty() || self.lambdas.is_empty() || self.algorithms.is_empty() {
            return bad("suite needs at least one j, λ and algorithm".into());
        }
        if self.trials == 0 {
            return bad("suite needs at least one trial".into());
        }
        if self.grid_points < 2 {
            return bad("time grid needs at least two points".into());
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return bad(format!("δ must lie in [0, 1), got {}", self.delta));
        }
        match self.budget {
            BenchBudget::WallTime(s) if !(s > 0.0 && s.is_finite()) => return bad(format!("bad time limit {s}")),
            BenchBudget::ProxEvals(0) => return bad("evaluation budget must be positive".into()),
            _ => {}
        }
        if self.family != Family::LsL1L2 && self.algorithms.contains(&Algorithm::Pdcae) {
            return bad(format!("pdcae is only defined for ls-l1l2, not {}", self.family));
        }
        Ok(())
    }

    fn instance_spec(&self, j: usize, lambda: f64, trial: usize) -> Result<InstanceSpec> {
        let spec = InstanceSpec::new(self.family, j, lambda, self.seed.wrapping_add(trial as u64))?;
        match self.shape {
            Some((m, n, s)) => spec.with_shape(m, n, s),
            None => Ok(spec),
        }
    }
}

/// Summary of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub trial: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub termination: Option<Termination>,
    pub error: Option<String>,
    pub iterations: usize,
    pub prox_evals: u64,
    pub final_objective: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub j: usize,
    pub lambda: f64,
    pub dims: (usize, usize, usize),
    /// One curve per configured algorithm, `None` if no trial completed.
    pub curves: Vec<(Algorithm, Option<EvolutionCurve>)>,
    pub runs: Vec<RunOutcome>,
    /// Set when any run failed or a trial was degenerate; such trials are
    /// left out of the curves.
    pub flagged: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub config: SuiteConfig,
    pub grid: Vec<f64>,
    pub cells: Vec<CellResult>,
}

struct TrialRuns {
    trial: usize,
    seed: u64,
    runs: Vec<(Algorithm, Result<RunTrace>)>,
    setup_error: Option<String>,
}

fn run_trial(config: &SuiteConfig, j: usize, lambda: f64, trial: usize) -> TrialRuns {
    let seed = config.seed.wrapping_add(trial as u64);
    let instance = config
        .instance_spec(j, lambda, trial)
        .and_then(|spec| build_instance(&spec, config.execution));
    let instance = match instance {
        Ok(i) => i,
        Err(e) => {
            return TrialRuns {
                trial,
                seed,
                runs: Vec::new(),
                setup_error: Some(e.to_string()),
            }
        }
    };
    let budget = config.budget.solver_budget();
    let runs = config
        .algorithms
        .iter()
        .map(|&a| (a, run_algorithm(a, &instance, config.delta, &budget)))
        .collect();
    TrialRuns {
        trial,
        seed,
        runs,
        setup_error: None,
    }
}

/// Runs every algorithm on every trial of every `(j, λ)` cell and averages
/// `E(t)` per cell. Trials execute concurrently when `config.execution`
/// allows; results are assembled in a fixed order.
pub fn run_benchmark(config: &SuiteConfig) -> Result<BenchmarkResult> {
    config.validate()?;
    let grid = time_grid(config.budget.horizon(), config.grid_points);
    let clock = config.budget.clock();

    let jobs: Vec<(usize, f64, usize)> = config
        .js
        .iter()
        .flat_map(|&j| config.lambdas.iter().map(move |&l| (j, l)))
        .flat_map(|(j, l)| (0..config.trials).map(move |t| (j, l, t)))
        .collect();
    let mut finished = map_collect(jobs, config.execution, |(j, l, t)| run_trial(config, j, l, t)).into_iter();

    let mut cells = Vec::new();
    for &j in &config.js {
        for &lambda in &config.lambdas {
            let trials: Vec<TrialRuns> = finished.by_ref().take(config.trials).collect();
            let dims = config
                .instance_spec(j, lambda, 0)
                .map(|s| s.dims())
                .unwrap_or((0, 0, 0));
            cells.push(assemble_cell(config, j, lambda, dims, trials, &grid, clock));
        }
    }
    Ok(BenchmarkResult {
        config: config.clone(),
        grid,
        cells,
    })
}

fn assemble_cell(
    config: &SuiteConfig,
    j: usize,
    lambda: f64,
    dims: (usize, usize, usize),
    trials: Vec<TrialRuns>,
    grid: &[f64],
    clock: Clock,
) -> CellResult {
    let mut runs = Vec::new();
    let mut notes = Vec::new();
    let mut flagged = false;
    let mut complete: Vec<Vec<RunTrace>> = Vec::new();

    for tr in trials {
        if let Some(err) = tr.setup_error {
            flagged = true;
            notes.push(format!("trial {}: instance generation failed: {err}", tr.trial));
            continue;
        }
        let mut ok = Vec::new();
        for (a, result) in tr.runs {
            let outcome = RunOutcome {
                trial: tr.trial,
                seed: tr.seed,
                algorithm: a,
                termination: None,
                error: None,
                iterations: 0,
                prox_evals: 0,
                final_objective: None,
            };
            match result {
                Ok(trace) => {
                    runs.push(RunOutcome {
                        termination: Some(trace.termination),
                        iterations: trace.iterations(),
                        prox_evals: trace.total_prox_evals(),
                        final_objective: Some(trace.final_objective()),
                        ..outcome
                    });
                    ok.push(trace);
                }
                Err(e) => {
                    runs.push(RunOutcome {
                        error: Some(e.to_string()),
                        ..outcome
                    });
                }
            }
        }
        if ok.len() != config.algorithms.len() {
            flagged = true;
            notes.push(format!("trial {}: excluded, a run failed", tr.trial));
            continue;
        }
        // Checked one trial at a time so a degenerate trial is dropped alone.
        match evolution_metric(std::slice::from_ref(&ok), grid, clock) {
            Ok(_) => complete.push(ok),
            Err(e) => {
                flagged = true;
                notes.push(format!("trial {}: excluded, {e}", tr.trial));
            }
        }
    }

    let curves: Vec<Option<EvolutionCurve>> = if complete.is_empty() {
        vec![None; config.algorithms.len()]
    } else {
        match evolution_metric(&complete, grid, clock) {
            Ok(c) => c.into_iter().map(Some).collect(),
            Err(e) => {
                flagged = true;
                notes.push(e.to_string());
                vec![None; config.algorithms.len()]
            }
        }
    };
    let curves = config.algorithms.iter().copied().zip(curves).collect();
    CellResult {
        j,
        lambda,
        dims,
        curves,
        runs,
        flagged,
        notes,
    }
}

fn sig9(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.8e}")
    }
}

/// One row per cell, algorithm and grid point.
pub fn write_csv(result: &BenchmarkResult, mut out: impl Write) -> Result<()> {
    let mut buf = String::new();
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    let family = result.config.family.name();
    for cell in &result.cells {
        for (algo, curve) in &cell.curves {
            for (i, &t) in result.grid.iter().enumerate() {
                let (count, mean, stderr) = match curve {
                    Some(c) => (c.trials, c.mean[i], c.stderr[i]),
                    None => (0, f64::NAN, f64::NAN),
                };
                buf.push_str(&format!(
                    "{family},{},{},{algo},{count},{},{},{}\n",
                    cell.j,
                    sig9(cell.lambda),
                    sig9(t),
                    sig9(mean),
                    sig9(stderr)
                ));
            }
        }
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    library: &'static str,
    version: &'static str,
    suite: &'a SuiteConfig,
    parameters: ManifestParameters,
    dims_rule: &'static str,
    grid_points: usize,
    csv_rows: usize,
    cells: Vec<ManifestCell<'a>>,
}

#[derive(Serialize)]
struct ManifestParameters {
    c: f64,
    tau: f64,
    eta: f64,
    window: usize,
    beta_max: f64,
    mu_min: f64,
    mu0_initial: f64,
    mu_max_rule: &'static str,
    restart_interval: usize,
    start: &'static str,
}

#[derive(Serialize)]
struct ManifestCell<'a> {
    j: usize,
    lambda: f64,
    m: usize,
    n: usize,
    s: usize,
    flagged: bool,
    notes: &'a [String],
    runs: &'a [RunOutcome],
}

/// Writes the run manifest (TOML): configuration, fixed solver constants,
/// seeds and per-run termination reasons.
pub fn write_manifest(result: &BenchmarkResult, path: &Path) -> Result<()> {
    let probe = crate::linesearch::LineSearchParams::standard(1.0, 0.0);
    let manifest = Manifest {
        library: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        suite: &result.config,
        parameters: ManifestParameters {
            c: probe.c,
            tau: probe.tau,
            eta: probe.eta,
            window: 2,
            beta_max: probe.beta_max,
            mu_min: probe.mu_min,
            mu0_initial: 1.0,
            mu_max_rule: "(L_f + 2c) / (1 - delta)",
            restart_interval: DEFAULT_RESTART_INTERVAL,
            start: "origin",
        },
        dims_rule: "(m, n, s) = (100j, 1000j, 20j) unless suite.shape is set",
        grid_points: result.grid.len(),
        csv_rows: result.cells.iter().map(|c| c.curves.len()).sum::<usize>() * result.grid.len(),
        cells: result
            .cells
            .iter()
            .map(|c| ManifestCell {
                j: c.j,
                lambda: c.lambda,
                m: c.dims.0,
                n: c.dims.1,
                s: c.dims.2,
                flagged: c.flagged,
                notes: &c.notes,
                runs: &c.runs,
            })
            .collect(),
    };
    std::fs::write(path, toml::to_string(&manifest)?)?;
    Ok(())
}
