//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::Array1;
use pgels::diagnostics::{check_trace, fit_rate, gap_sequence, RateModel};
use pgels::experiments::{build_instance, gen_l12_instance, Family, Instance, InstanceSpec};
use pgels::linalg::{dist, Execution};
use pgels::linesearch::LineSearchParams;
use pgels::losses::LeastSquares;
use pgels::problem::{CompositeProblem, ProxTerm};
use pgels::prox::oracle::{box_grid, prox_objective, prox_oracle};
use pgels::prox::{
    project_nonneg, project_simplex, prox_l1, prox_l1_minus_l2, L1MinusL2Term, L1Term, NonnegIndicator,
    SimplexIndicator,
};
use pgels::solvers::{
    run_fista, run_pgels, Budget, FistaVariant, Mu0Schedule, RunTrace, SolverConfig, Termination, INNER_LOOP_CAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Operator name, its term, our result and the oracle grid.
type ProxCase<'a> = (&'static str, &'a dyn ProxTerm, Array1<f64>, &'a [Array1<f64>]);

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "prox operators match the brute-force oracle",
            limit: Some(secs(10)),
            run: prox_oracle_equivalence,
        },
        Criterion {
            id: 2,
            name: "line-search soundness on 50 seeded runs",
            limit: Some(secs(60)),
            run: line_search_soundness,
        },
        Criterion {
            id: 3,
            name: "global convergence diagnostics",
            limit: None,
            run: convergence_diagnostics,
        },
        Criterion {
            id: 4,
            name: "reduction identities",
            limit: None,
            run: reduction_identities,
        },
        Criterion {
            id: 5,
            name: "FISTA gap shrinks 50x from k=10 to k=100",
            limit: Some(secs(10)),
            run: fista_rate,
        },
        Criterion {
            id: 6,
            name: "NPG converges geometrically",
            limit: Some(secs(30)),
            run: npg_geometric_rate,
        },
        Criterion {
            id: 7,
            name: "PGels beats PG to e <= 0.01 on logistic (300,3000,60)",
            limit: Some(secs(300)),
            run: logistic_trend,
        },
        Criterion {
            id: 8,
            name: "bench run is byte-deterministic",
            limit: None,
            run: deterministic_csv,
        },
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());

    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_none_or(|f| f == c.id)) {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.1?}, limit {limit:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} [{}] {} ({elapsed:.2?}): {detail}", c.id, c.name);
        failed += result.is_err() as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn instance(family: Family, shape: (usize, usize, usize), lambda: f64, seed: u64) -> Instance {
    let spec = InstanceSpec::new(family, 1, lambda, seed)
        .unwrap()
        .with_shape(shape.0, shape.1, shape.2)
        .unwrap();
    build_instance(&spec, Execution::Sequential).unwrap()
}

// ---------------------------------------------------------------------------
// 1

fn prox_oracle_equivalence() -> Outcome {
    const CASES: usize = 200;
    const TOL: f64 = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in 1..=3usize {
        let per_axis = [0, 161, 41, 15][n];
        let simplex_grid: Vec<Array1<f64>> = box_grid(n, 0.0, 1.0, [0, 2, 21, 21][n])
            .into_iter()
            .filter(|p| (p.sum() - 1.0).abs() <= 1e-9)
            .collect();
        for case in 0..CASES {
            let y = Array1::from_shape_fn(n, |_| rng.random_range(-3.0..3.0));
            let nu = rng.random_range(0.1..2.0);
            let lambda = rng.random_range(0.1..2.0);
            let skip_last = n > 1 && rng.random_bool(0.3);
            let bound = y.iter().fold(0.0f64, |m: f64, v: &f64| m.max(v.abs())) + nu * lambda + 0.5;
            let grid = box_grid(n, -bound, bound, per_axis);

            let l1 = L1Term::new(lambda, skip_last).unwrap();
            let l12 = L1MinusL2Term::new(lambda).unwrap();
            let simplex = SimplexIndicator::default();
            let checks: [ProxCase; 4] = [
                ("prox_l1", &l1, prox_l1(&y, nu, &l1), &grid),
                ("prox_l1_minus_l2", &l12, prox_l1_minus_l2(&y, nu, &l12), &grid),
                ("project_nonneg", &NonnegIndicator, project_nonneg(&y), &grid),
                ("project_simplex", &simplex, project_simplex(&y), &simplex_grid),
            ];
            for (name, term, ours, grid) in checks {
                let value = |z: &Array1<f64>| term.value(z);
                let reference = prox_oracle(&value, &y, nu, grid).map_err(|e| e.to_string())?;
                let a = prox_objective(&value, &y, nu, &ours);
                let b = prox_objective(&value, &y, nu, &reference);
                let gap = (a - b).abs();
                worst = worst.max(gap);
                ensure(gap <= TOL, || {
                    format!("{name} n={n} case {case}: objective {a} vs oracle {b} (y={y}, ν={nu}, λ={lambda})")
                })?;
            }
        }
    }
    Ok(format!(
        "{} cases, worst objective gap {worst:.2e} (tol {TOL:.0e})",
        3 * CASES * 4
    ))
}

// ---------------------------------------------------------------------------
// 2, 3

/// Ten seeds each of five problem kinds.
fn mixed_runs() -> Vec<(String, RunTrace)> {
    let shape = (40, 160, 8);
    let budget = Budget::iterations(1000);
    let mut runs = Vec::new();
    for seed in 0..10u64 {
        let l12 = instance(Family::LsL1L2, shape, 0.05, seed);
        let cfg = SolverConfig::standard(l12.problem.lipschitz_bound(), 0.9);
        runs.push((
            format!("ls-l1l2 pgels seed {seed}"),
            run_pgels(&l12.problem, &cfg, &l12.origin(), &budget),
        ));

        let lasso = instance(Family::LsL1, shape, 0.05, seed);
        let cfg = SolverConfig::standard(lasso.problem.lipschitz_bound(), 0.5);
        runs.push((
            format!("ls-l1 pgels seed {seed}"),
            run_pgels(&lasso.problem, &cfg, &lasso.origin(), &budget),
        ));

        let logistic = instance(Family::LogisticL1, shape, 0.5, seed);
        let cfg = SolverConfig::standard(logistic.problem.lipschitz_bound(), 0.1);
        runs.push((
            format!("logistic pgels seed {seed}"),
            run_pgels(&logistic.problem, &cfg, &logistic.origin(), &budget),
        ));

        let spec = InstanceSpec::new(Family::LsL1, 1, 0.05, seed)
            .unwrap()
            .with_shape(shape.0, shape.1, shape.2)
            .unwrap();
        let (data, _) = gen_l12_instance(&spec).unwrap();
        let smooth = Arc::new(LeastSquares::new(data).unwrap());
        let nonneg = CompositeProblem::new(smooth.clone(), Arc::new(NonnegIndicator)).unwrap();
        let cfg = SolverConfig::standard(nonneg.lipschitz_bound(), 0.3);
        runs.push((
            format!("nonneg-ls pgels seed {seed}"),
            run_pgels(&nonneg, &cfg, &Array1::zeros(shape.1), &budget),
        ));

        let simplex = CompositeProblem::new(smooth, Arc::new(SimplexIndicator::default())).unwrap();
        let cfg = SolverConfig::npg(simplex.lipschitz_bound());
        let x0 = Array1::from_elem(shape.1, 1.0 / shape.1 as f64);
        runs.push((
            format!("simplex-ls npg seed {seed}"),
            run_pgels(&simplex, &cfg, &x0, &budget),
        ));
    }
    runs.into_iter()
        .map(|(name, r)| {
            let trace = r.unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, trace)
        })
        .collect()
}

fn line_search_soundness() -> Outcome {
    let runs = mixed_runs();
    let mut steps = 0;
    let mut max_inner = 0;
    for (name, trace) in &runs {
        let report = check_trace(trace);
        if let Some(v) = report
            .violations
            .iter()
            .find(|v| matches!(v.check, "acceptance" | "inner-bound" | "mu-range" | "beta-range"))
        {
            return Err(format!("{name}: {} at k={}: {}", v.check, v.k, v.detail));
        }
        max_inner = trace.records.iter().map(|r| r.inner).fold(max_inner, usize::max);
        steps += trace.iterations();
    }
    ensure(max_inner <= INNER_LOOP_CAP, || format!("{max_inner} trial steps"))?;
    Ok(format!(
        "{} runs, {steps} accepted steps re-checked, max inner {max_inner}",
        runs.len()
    ))
}

fn convergence_diagnostics() -> Outcome {
    let runs = mixed_runs();
    let mut long_runs = 0;
    for (name, trace) in &runs {
        let report = check_trace(trace);
        if let Some(v) = report.violations.iter().find(|v| {
            matches!(
                v.check,
                "monitor" | "global-bound" | "final-objective" | "sufficient-descent"
            )
        }) {
            return Err(format!("{name}: {} at k={}: {}", v.check, v.k, v.detail));
        }
        match report.steps_diminish {
            Some(true) => long_runs += 1,
            Some(false) => return Err(format!("{name}: final-decile steps not below first-decile steps")),
            None => {}
        }
    }
    ensure(long_runs > 0, || {
        "no run reached 500 iterations, step decay untested".into()
    })?;

    let lasso = instance(Family::LsL1, (50, 200, 10), 0.05, 11);
    let lf = lasso.problem.lipschitz_bound();
    let cfg = SolverConfig::standard(lf, 0.5);
    let trace = run_pgels(
        &lasso.problem,
        &cfg,
        &lasso.origin(),
        &Budget::iterations(5000).with_residual_tol(1e-6),
    )
    .map_err(|e| e.to_string())?;
    let residual = lasso
        .problem
        .stationarity_residual(&trace.x_final, lf)
        .map_err(|e| e.to_string())?;
    ensure(check_trace(&trace).is_ok(), || "lasso run violates an invariant".into())?;
    ensure(residual <= 1e-4, || {
        format!("lasso residual {residual:.3e} after {} iterations", trace.iterations())
    })?;
    Ok(format!(
        "{} runs clean, {long_runs} with >=500 iterations show decaying steps, lasso residual {residual:.2e} after {} iterations",
        runs.len(),
        trace.iterations()
    ))
}

// ---------------------------------------------------------------------------
// 4

/// Non-monotone proximal gradient without extrapolation, written out
/// directly: spectral `μ⁰`, doubling until
/// `F(u) − max_{[k−N]₊..k} F(xⁱ) ≤ −(c/2)‖u − xᵏ‖²`.
struct NpgReference {
    xs: Vec<Array1<f64>>,
    fs: Vec<f64>,
    inner: Vec<usize>,
    mus: Vec<f64>,
}

fn npg_reference(
    problem: &CompositeProblem,
    ls: &LineSearchParams,
    window: usize,
    x0: &Array1<f64>,
    iters: usize,
) -> NpgReference {
    let mut x = x0.clone();
    let mut fs = vec![problem.objective_value(x0).unwrap()];
    let mut out = NpgReference {
        xs: vec![x.clone()],
        fs: Vec::new(),
        inner: vec![0],
        mus: vec![1.0],
    };
    let mut prev: Option<(Array1<f64>, Array1<f64>)> = None;
    let mut mu_bar = 1.0;
    for _ in 0..iters {
        let g = problem.smooth().gradient(&x);
        let mut mu = match &prev {
            None => 1.0f64.clamp(ls.mu_min, ls.mu_max),
            Some((xp, gp)) => {
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..x.len() {
                    let dy = x[i] - xp[i];
                    den += dy * dy;
                    num += dy * (g[i] - gp[i]);
                }
                if den == 0.0 {
                    mu_bar
                } else {
                    (num / den).max(0.5 * mu_bar).clamp(ls.mu_min, ls.mu_max)
                }
            }
        };
        let lo = fs.len().saturating_sub(window + 1);
        let f_max = fs[lo..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut trials = 0;
        let (u, f_u) = loop {
            trials += 1;
            assert!(trials <= INNER_LOOP_CAP);
            let u = problem.prox().prox(&(&x - &(&g / mu)), 1.0 / mu);
            let f_u = problem.objective_value(&u).unwrap();
            let d = dist(&u, &x);
            if f_u - f_max <= -(ls.c / 2.0) * (d * d) {
                break (u, f_u);
            }
            mu = (ls.tau * mu).min(ls.mu_max);
        };
        fs.push(f_u);
        prev = Some((x, g));
        x = u;
        mu_bar = mu;
        out.xs.push(x.clone());
        out.inner.push(trials);
        out.mus.push(mu);
    }
    out.fs = fs;
    out
}

fn same_bits(a: &Array1<f64>, b: &Array1<f64>) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn reduction_identities() -> Outcome {
    const ITERS: usize = 40;
    let cases = [
        instance(Family::LsL1L2, (40, 160, 8), 0.05, 3),
        instance(Family::LsL1, (40, 160, 8), 0.05, 4),
        instance(Family::LogisticL1, (40, 160, 8), 0.5, 5),
    ];
    let mut shrinks = 0;
    for inst in &cases {
        let name = inst.spec.family;
        let p = &inst.problem;
        let lf = p.lipschitz_bound();
        let x0 = inst.origin();

        let cfg = SolverConfig::standard(lf, 0.0);
        let trace = run_pgels(p, &cfg, &x0, &Budget::iterations(ITERS)).map_err(|e| e.to_string())?;
        ensure(trace.termination == Termination::MaxIterations, || {
            format!("{name}: stopped early")
        })?;
        let reference = npg_reference(p, &cfg.line_search, cfg.window, &x0, ITERS);
        ensure(same_bits(&trace.x_final, &reference.xs[ITERS]), || {
            format!("{name}: final iterate differs from NPG")
        })?;
        for (k, r) in trace.records.iter().enumerate() {
            ensure(r.f_value.to_bits() == reference.fs[k].to_bits(), || {
                format!("{name}: F differs at k={k}")
            })?;
            ensure(k == 0 || r.inner == reference.inner[k], || {
                format!("{name}: inner count differs at k={k}")
            })?;
            ensure(k == 0 || r.mu_bar.to_bits() == reference.mus[k].to_bits(), || {
                format!("{name}: μ̄ differs at k={k}")
            })?;
            ensure(r.beta_bar == 0.0, || format!("{name}: nonzero β at k={k}"))?;
        }
        shrinks += reference.inner.iter().filter(|&&i| i > 1).count();

        // μ⁰ ≡ μ_max: every first trial is accepted and the run is plain PG
        // with step 1/μ_max.
        let mut cfg_max = cfg;
        cfg_max.mu0_schedule = Mu0Schedule::Max;
        let trace = run_pgels(p, &cfg_max, &x0, &Budget::iterations(ITERS)).map_err(|e| e.to_string())?;
        ensure(trace.termination == Termination::MaxIterations, || {
            format!("{name}: μ_max run stopped early")
        })?;
        ensure(trace.records[1..].iter().all(|r| r.inner == 1), || {
            format!("{name}: shrink step with μ⁰ = μ_max")
        })?;
        let mu = cfg.line_search.mu_max;
        let mut x = x0.clone();
        for k in 1..=ITERS {
            let g = p.smooth().gradient(&x);
            x = p.prox().prox(&(&x - &(&g / mu)), 1.0 / mu);
            let f = p.objective_value(&x).unwrap();
            ensure(trace.records[k].f_value.to_bits() == f.to_bits(), || {
                format!("{name}: PG differs at k={k}")
            })?;
        }
        ensure(same_bits(&trace.x_final, &x), || {
            format!("{name}: PG final iterate differs")
        })?;
    }
    ensure(shrinks > 0, || {
        "reference never shrank μ; identity untested on the line search".into()
    })?;
    Ok(format!(
        "{} instances x {ITERS} iterations bit-identical; {shrinks} NPG steps needed shrinking",
        cases.len()
    ))
}

// ---------------------------------------------------------------------------
// 5, 6

fn reference_minimum(problem: &CompositeProblem, x0: &Array1<f64>) -> f64 {
    let lf = problem.lipschitz_bound();
    let npg = run_pgels(problem, &SolverConfig::npg(lf), x0, &Budget::iterations(20000)).unwrap();
    let fista = run_fista(problem, FistaVariant::Refista, 200, x0, &Budget::iterations(20000)).unwrap();
    npg.min_objective().min(fista.min_objective())
}

fn fista_rate() -> Outcome {
    let lasso = instance(Family::LsL1, (50, 200, 10), 0.1, 21);
    let x0 = lasso.origin();
    let f_star = reference_minimum(&lasso.problem, &x0);
    let trace = run_fista(&lasso.problem, FistaVariant::Fista, 200, &x0, &Budget::iterations(100))
        .map_err(|e| e.to_string())?;
    let gap = |k: usize| trace.records[k].f_value - f_star;
    let ratio = gap(10) / gap(100);
    ensure(ratio >= 50.0, || format!("gap(10)/gap(100) = {ratio:.2}"))?;
    Ok(format!(
        "gap(10) = {:.3e}, gap(100) = {:.3e}, ratio {ratio:.1}",
        gap(10),
        gap(100)
    ))
}

fn npg_geometric_rate() -> Outcome {
    // Default j = 1 size; the smaller instances stop after too few steps
    // for a stable tail fit.
    let spec = InstanceSpec::new(Family::LsL1, 1, 0.1, 22).unwrap();
    let lasso = build_instance(&spec, Execution::Sequential).unwrap();
    let x0 = lasso.origin();
    let f_star = reference_minimum(&lasso.problem, &x0);
    let trace = run_pgels(
        &lasso.problem,
        &SolverConfig::npg(lasso.problem.lipschitz_bound()),
        &x0,
        &Budget::iterations(2000),
    )
    .map_err(|e| e.to_string())?;
    let gaps = gap_sequence(&trace, f_star, 1e-10 * (1.0 + f_star.abs()));
    let fit = fit_rate(&gaps).map_err(|e| e.to_string())?;
    let g = fit.geometric;
    ensure(fit.best.model == RateModel::Geometric, || {
        format!("power model fits better: {fit:?}")
    })?;
    ensure(g.parameter < 1.0 && g.quality >= 0.95, || {
        format!("ρ = {}, R² = {}", g.parameter, g.quality)
    })?;
    Ok(format!(
        "{} gaps, ρ = {:.4}, R² = {:.4}",
        gaps.len(),
        g.parameter,
        g.quality
    ))
}

// ---------------------------------------------------------------------------
// 7

/// Prox evaluations until `e(k) ≤ target`, if reached.
fn evals_to_reach(trace: &RunTrace, f0: f64, f_min: f64, target: f64) -> Option<u64> {
    trace
        .records
        .iter()
        .find(|r| (r.f_value - f_min) / (f0 - f_min) <= target)
        .map(|r| r.prox_evals)
}

fn logistic_trend() -> Outcome {
    let budget = Budget::prox_evals(2000);
    // Evaluations to reach the target for (PGels, PG) per trial.
    type TrialEvals = Result<(Option<u64>, Option<u64>), String>;
    let results: Vec<TrialEvals> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..10u64)
            .map(|seed| {
                let budget = &budget;
                s.spawn(move || {
                    let spec = InstanceSpec::new(Family::LogisticL1, 3, 1.0, seed).map_err(|e| e.to_string())?;
                    let inst = build_instance(&spec, Execution::Sequential).map_err(|e| e.to_string())?;
                    let lf = inst.problem.lipschitz_bound();
                    let x0 = inst.origin();
                    let pgels = run_pgels(&inst.problem, &SolverConfig::standard(lf, 0.1), &x0, budget)
                        .map_err(|e| e.to_string())?;
                    let pg = run_fista(&inst.problem, FistaVariant::Pg, 200, &x0, budget).map_err(|e| e.to_string())?;
                    let f0 = pgels.initial_objective();
                    let f_min = pgels.min_objective().min(pg.min_objective());
                    Ok((
                        evals_to_reach(&pgels, f0, f_min, 0.01),
                        evals_to_reach(&pg, f0, f_min, 0.01),
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("trial panicked".into())))
            .collect()
    });
    let mut wins = 0;
    let mut detail = Vec::new();
    for r in results {
        let (ours, pg) = r?;
        let win = match (ours, pg) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            _ => false,
        };
        wins += win as usize;
        let show = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
        detail.push(format!("{}/{}", show(ours), show(pg)));
    }
    let summary = format!("{wins}/10 trials (evals pgels/pg: {})", detail.join(" "));
    ensure(wins >= 8, || summary.clone())?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// 8

fn deterministic_csv() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, extra: &[&str]| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_bench"))
            .args([
                "run",
                "--family",
                "ls-l1l2",
                "--j",
                "1",
                "--lambda",
                "0.05,0.1",
                "--shape",
                "30,120,6",
                "--algos",
                "pgels,npg,pg,fista,refista,pdcae",
                "--trials",
                "3",
                "--iters",
                "400",
                "--seed",
                "17",
            ])
            .args(extra)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let a = run("a.csv", &[])?;
    let b = run("b.csv", &[])?;
    let c = run("c.csv", &["--sequential"])?;
    ensure(a == b, || "two runs with the same seed differ".into())?;
    ensure(a == c, || "sequential and parallel runs differ".into())?;
    let rows = a.iter().filter(|&&b| b == b'\n').count();
    Ok(format!(
        "{rows} lines identical across two parallel runs and one sequential run"
    ))
}
