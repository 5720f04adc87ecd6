use pgels::experiments::{
    build_instance, run_algorithm, run_benchmark, time_grid, write_csv, write_manifest, Algorithm, BenchBudget, Clock,
    Family, InstanceSpec, SuiteConfig,
};
use pgels::linalg::Execution;
use pgels::solvers::Budget;

fn suite(execution: Execution) -> SuiteConfig {
    SuiteConfig {
        family: Family::LogisticL1,
        js: vec![1],
        lambdas: vec![0.5, 1.0],
        shape: Some((30, 120, 6)),
        algorithms: vec![Algorithm::Pgels, Algorithm::Npg, Algorithm::Pg, Algorithm::Refista],
        trials: 3,
        seed: 9,
        delta: 0.1,
        budget: BenchBudget::ProxEvals(250),
        grid_points: 50,
        execution,
    }
}

#[test]
fn evolution_curve_matches_a_direct_computation() {
    let config = suite(Execution::Sequential);
    let result = run_benchmark(&config).unwrap();
    let grid = time_grid(250.0, 50);
    let cell = &result.cells[1];
    assert_eq!(cell.lambda, 1.0);

    // E(t) = mean over trials of min{e(k) : T(k) ≤ t}, F_min over all runs of the trial.
    let mut sums = vec![vec![0.0; grid.len()]; config.algorithms.len()];
    for trial in 0..3u64 {
        let spec = InstanceSpec::new(Family::LogisticL1, 1, 1.0, 9 + trial)
            .unwrap()
            .with_shape(30, 120, 6)
            .unwrap();
        let inst = build_instance(&spec, Execution::Sequential).unwrap();
        let traces: Vec<_> = config
            .algorithms
            .iter()
            .map(|&a| run_algorithm(a, &inst, 0.1, &Budget::prox_evals(250)).unwrap())
            .collect();
        let f0 = traces[0].records[0].f_value;
        let f_min = traces
            .iter()
            .flat_map(|t| t.records.iter().map(|r| r.f_value))
            .fold(f64::INFINITY, f64::min);
        for (a, t) in traces.iter().enumerate() {
            for (i, &g) in grid.iter().enumerate() {
                let e = t
                    .records
                    .iter()
                    .filter(|r| Clock::ProxEvals.read(r) <= g)
                    .map(|r| (r.f_value - f_min) / (f0 - f_min))
                    .fold(f64::INFINITY, f64::min);
                sums[a][i] += e / 3.0;
            }
        }
    }
    for (a, (_, curve)) in cell.curves.iter().enumerate() {
        let curve = curve.as_ref().unwrap();
        for i in 0..grid.len() {
            assert!((curve.mean[i] - sums[a][i]).abs() < 1e-12, "algo {a} t = {}", grid[i]);
        }
    }
}

#[test]
fn parallel_and_sequential_suites_agree_bitwise() {
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_csv(&run_benchmark(&suite(Execution::Sequential)).unwrap(), &mut a).unwrap();
    write_csv(&run_benchmark(&suite(Execution::Parallel)).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn manifest_records_configuration_and_outcomes() {
    let result = run_benchmark(&suite(Execution::Parallel)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.manifest.toml");
    write_manifest(&result, &path).unwrap();
    let table: toml::Table = std::fs::read_to_string(&path).unwrap().parse().unwrap();

    assert_eq!(table["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
    assert_eq!(table["suite"]["seed"].as_integer(), Some(9));
    assert_eq!(table["suite"]["family"].as_str(), Some("logistic-l1"));
    assert_eq!(table["csv_rows"].as_integer(), Some(2 * 4 * 50));
    let cells = table["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    let runs = cells[0]["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3 * 4);
    assert!(runs.iter().all(|r| r["termination"].as_str().is_some()));
}
