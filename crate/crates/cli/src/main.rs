use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pgels::diagnostics::{check_trace, fit_rate, gap_sequence};
use pgels::experiments::{
    build_instance, run_algorithm, run_benchmark, write_csv, write_manifest, Algorithm, BenchBudget, Family,
    InstanceSpec, SuiteConfig, DEFAULT_GRID_POINTS,
};
use pgels::linalg::Execution;
use pgels::solvers::Budget;

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Benchmarks for proximal gradient methods with extrapolation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark suite and write the averaged E(t) curves as CSV.
    Run(RunArgs),
    /// Run every algorithm on small instances and check the runtime invariants.
    Check(CheckArgs),
    /// Fit geometric and power-law rate models to one run's objective gaps.
    Rate(RateArgs),
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value = "ls-l1l2")]
    family: Family,
    /// Override the default size `(100j, 1000j, 20j)` as `m,n,s`.
    #[arg(long, value_parser = parse_shape)]
    shape: Option<(usize, usize, usize)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sequential execution instead of the rayon thread pool.
    #[arg(long)]
    sequential: bool,
}

impl InstanceArgs {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Size multipliers, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    j: Vec<usize>,
    /// Regularization weights, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "pgels,npg,pg,fista,refista")]
    algos: Vec<Algorithm>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Wall-time budget per run in seconds.
    #[arg(long, conflicts_with = "iters", required_unless_present = "iters")]
    tmax: Option<f64>,
    /// Prox-gradient evaluation budget per run; makes the output deterministic.
    #[arg(long)]
    iters: Option<u64>,
    /// PGels δ; defaults to 0.1 for logistic-l1 and 0.9 otherwise.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// CSV destination; the manifest goes to `<out>.manifest.toml`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1500)]
    iters: u64,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "npg")]
    algo: Algorithm,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long)]
    delta: Option<f64>,
    /// Iterations of the measured run; the reference value uses ten times more.
    #[arg(long, default_value_t = 300)]
    iters: usize,
    /// Gaps at or below this value are dropped before fitting.
    #[arg(long, default_value_t = 1e-12)]
    floor: f64,
}

fn parse_shape(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [m, n, s] => Ok((m, n, s)),
        _ => Err(format!("expected m,n,s, got {s:?}")),
    }
}

fn default_delta(family: Family) -> f64 {
    match family {
        Family::LogisticL1 => 0.1,
        _ => 0.9,
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.toml");
    PathBuf::from(name)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let budget = match (args.tmax, args.iters) {
        (Some(t), None) => BenchBudget::WallTime(t),
        (None, Some(n)) => BenchBudget::ProxEvals(n),
        _ => bail!("give exactly one of --tmax and --iters"),
    };
    let config = SuiteConfig {
        family: args.instance.family,
        js: args.j,
        lambdas: args.lambda,
        shape: args.instance.shape,
        algorithms: args.algos,
        trials: args.trials,
        seed: args.instance.seed,
        delta: args.delta.unwrap_or_else(|| default_delta(args.instance.family)),
        budget,
        grid_points: args.grid_points,
        execution: args.instance.execution(),
    };
    let result = run_benchmark(&config)?;

    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    write_csv(&result, &mut out)?;
    out.flush()?;
    let manifest = manifest_path(&args.out);
    write_manifest(&result, &manifest)?;

    let mut flagged = false;
    for cell in &result.cells {
        for note in &cell.notes {
            eprintln!("j={} λ={}: {note}", cell.j, cell.lambda);
        }
        flagged |= cell.flagged;
    }
    println!("wrote {} and {}", args.out.display(), manifest.display());
    Ok(if flagged { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn check(args: CheckArgs) -> Result<ExitCode> {
    let cases = [
        (Family::LsL1L2, (30, 120, 6), 0.05),
        (Family::LsL1, (30, 120, 6), 0.05),
        (Family::LogisticL1, (40, 160, 8), 0.5),
    ];
    let mut failures = 0;
    let mut runs = 0;
    for (family, (m, n, s), lambda) in cases {
        let algos: Vec<Algorithm> = Algorithm::ALL
            .into_iter()
            .filter(|&a| a != Algorithm::Pdcae || family == Family::LsL1L2)
            .collect();
        for trial in 0..args.trials as u64 {
            let spec = InstanceSpec::new(family, 1, lambda, args.seed + trial)?.with_shape(m, n, s)?;
            let instance = build_instance(&spec, Execution::Parallel)?;
            for &algo in &algos {
                runs += 1;
                let trace = match run_algorithm(algo, &instance, default_delta(family), &Budget::prox_evals(args.iters))
                {
                    Ok(t) => t,
                    Err(e) => {
                        failures += 1;
                        println!("FAIL {family} seed={} {algo}: {e}", spec.seed);
                        continue;
                    }
                };
                let report = check_trace(&trace);
                if !report.is_ok() {
                    failures += 1;
                    println!("FAIL {family} seed={} {algo}", spec.seed);
                    for v in report.violations.iter().take(5) {
                        println!("  {} at k={}: {}", v.check, v.k, v.detail);
                    }
                    if report.steps_diminish == Some(false) {
                        println!("  step lengths do not diminish");
                    }
                }
            }
        }
    }
    println!("{} of {runs} runs passed every invariant", runs - failures);
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn rate(args: RateArgs) -> Result<ExitCode> {
    let mut spec = InstanceSpec::new(args.instance.family, args.j, args.lambda, args.instance.seed)?;
    if let Some((m, n, s)) = args.instance.shape {
        spec = spec.with_shape(m, n, s)?;
    }
    let instance = build_instance(&spec, args.instance.execution())?;
    let delta = args.delta.unwrap_or_else(|| default_delta(args.instance.family));

    let reference = run_algorithm(args.algo, &instance, delta, &Budget::iterations(10 * args.iters))?;
    let trace = run_algorithm(args.algo, &instance, delta, &Budget::iterations(args.iters))?;
    let f_star = reference.min_objective().min(trace.min_objective());
    let gaps = gap_sequence(&trace, f_star, args.floor);
    let fit = fit_rate(&gaps).context("not enough gaps above the floor; lower --floor or --iters")?;

    println!(
        "algo {} on {} (m, n, s) = {:?}, λ = {}",
        args.algo,
        spec.family,
        spec.dims(),
        spec.lambda
    );
    println!("F* ≈ {f_star:.12e} from {} iterations", reference.iterations());
    println!("fitted {} gaps", gaps.len());
    for m in [fit.geometric, fit.power] {
        println!(
            "{:<9} parameter {:>12.6} R² {:.6}",
            format!("{:?}", m.model).to_lowercase(),
            m.parameter,
            m.quality
        );
    }
    println!("best: {}", format!("{:?}", fit.best.model).to_lowercase());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Check(a) => check(a),
        Command::Rate(a) => rate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
