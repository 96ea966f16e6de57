use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use tensor_rbf::collocation::{gen_cube, Distribution, Point, PointSet};
use tensor_rbf::harness::{
    compute_relative_error, expand_table_config, read_table_csv, run_experiment, run_table,
    write_table_csv, Compression, ExperimentConfig, TABLE_HEADER,
};
use tensor_rbf::krylov::Termination;
use tensor_rbf::rbf::{assemble_a, sample_exact, MqKernel};
use tensor_rbf::{Shape3, Tensor3};

fn config(text: &str) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.apply_text(text).unwrap();
    c
}

#[test]
fn identical_configs_give_identical_records() {
    for solver in ["glsqr", "ggmres"] {
        let cfg = config(&format!("dims = 5\nsolver = {solver}\nhistory = true\n"));
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.relative_error.to_bits(), b.relative_error.to_bits());
        assert_eq!(a.report.solution, b.report.solution);
        assert_eq!(a.report.lambda_history, b.report.lambda_history);
        assert_eq!(a.report.residual_history, b.report.residual_history);
        assert_eq!(a.error_history, b.error_history);
        assert_eq!(a.error_history.len(), a.report.outer_iterations);
        assert_eq!(a.error_history.last().unwrap().1, a.relative_error);
    }
}

#[test]
fn all_boundary_instance_matches_direct_solve() {
    // Every point of the 3^3 grid is a Dirichlet point, so H = A and the
    // computed U must reproduce the samples.
    let grid = gen_cube(Shape3::cube(3).unwrap(), Distribution::Uniform, 0).unwrap();
    let pts: Vec<Point> = grid
        .points()
        .iter()
        .map(|p| Point::boundary(p.pos, p.normal.unwrap_or([1.0, 0.0, 0.0])))
        .collect();
    let set = PointSet::new(grid.shape(), pts).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("boundary.pts");
    set.save(&path).unwrap();

    let base = format!(
        "domain = file:{}\nmu = fixed:0\nmaxit = 27\nrestart = 27\n",
        path.display()
    );
    let cfg0 = config(&base);
    let k = MqKernel::new(cfg0.epsilon).unwrap();
    let a = assemble_a(&set, &k);
    let exact = sample_exact(&set, &cfg0.exact_solution());
    let am = DMatrix::from_row_slice(27, 27, a.flat());
    let y = am
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(exact.as_slice()))
        .unwrap();
    let u = Tensor3::from_vec(set.shape(), (am * y).as_slice().to_vec()).unwrap();
    assert!(compute_relative_error(&u, &exact).unwrap() <= 1e-8);

    for solver in ["glsqr", "ggmres"] {
        let rec = run_experiment(&config(&format!("{base}solver = {solver}\n"))).unwrap();
        assert!(
            rec.relative_error <= 1e-8,
            "{solver}: {}",
            rec.relative_error
        );
    }
}

#[test]
fn table_csv_round_trips_bitwise() {
    let text = "dist = uniform, random, halton\ndims = 3, 4\nsolver = ggmres, glsqr\nmaxit = 20\n";
    let cfgs = expand_table_config(text, &ExperimentConfig::default()).unwrap();
    let results = run_table(&cfgs).unwrap();
    assert_eq!(results.len(), 12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    write_table_csv(&path, results.iter().map(|(r, _)| r)).unwrap();
    let back = read_table_csv(&path).unwrap();
    assert_eq!(back.len(), 12);
    for ((row, rec), parsed) in results.iter().zip(&back) {
        assert_eq!(row, parsed);
        let rec = rec.as_ref().unwrap();
        assert_eq!(
            parsed.relative_error.unwrap().to_bits(),
            rec.relative_error.to_bits()
        );
        assert_eq!(parsed.iterations, Some(rec.report.outer_iterations));
        assert_eq!(
            parsed.mu_final.map(f64::to_bits),
            rec.mu_final().map(f64::to_bits)
        );
    }
    let header = std::fs::read_to_string(&path).unwrap();
    assert_eq!(header.lines().next().unwrap(), TABLE_HEADER.join(","));
}

#[test]
fn failed_runs_become_error_rows() {
    let good = config("dims = 3\nmaxit = 5\n");
    let bad = config("domain = file:/nonexistent/points.pts\n");
    let results = run_table(&[good, bad]).unwrap();
    assert!(results[0].0.error.is_empty());
    assert!(results[0].1.is_some());
    assert!(!results[1].0.error.is_empty());
    assert!(results[1].0.relative_error.is_none());
    assert!(results[1].1.is_none());
    assert!(run_table(&[]).is_err());
}

#[test]
fn errors_carry_the_configuration() {
    let err = run_experiment(&config("domain = file:/nonexistent/points.pts\n")).unwrap_err();
    let text = err.to_string();
    assert!(
        text.contains("domain = file:/nonexistent/points.pts"),
        "{text}"
    );
    assert!(text.contains("solver = glsqr"));
}

#[test]
fn reported_iteration_is_first_small_relative_change() {
    for text in [
        "dims = 6\nsolver = glsqr\n",
        "dims = 6\nsolver = ggmres\n",
        "dims = 5\ndist = halton\n",
    ] {
        let cfg = config(text);
        let rec = run_experiment(&cfg).unwrap();
        let hist = &rec.report.relchange_history;
        assert_eq!(hist.len(), rec.report.outer_iterations);
        match rec.report.termination {
            Termination::RelChange => {
                let first = hist.iter().position(|&c| c <= cfg.tau).unwrap() + 1;
                assert_eq!(first, rec.report.outer_iterations);
            }
            Termination::MaxIter => {
                assert_eq!(rec.report.outer_iterations, cfg.maxit);
                assert!(hist.iter().all(|&c| c > cfg.tau));
            }
            _ => assert!(hist.iter().all(|&c| c > cfg.tau)),
        }
    }
}

#[test]
fn report_lists_resolved_and_defaulted_keys() {
    let rec = run_experiment(&config("dims = 4\nsolver = ggmres\n")).unwrap();
    let report = rec.to_report();
    let defaulted = report
        .lines()
        .find(|l| l.starts_with("defaulted = "))
        .unwrap();
    assert!(defaulted.contains("epsilon"));
    assert!(!defaulted.contains("solver"));
    let mut again = ExperimentConfig::default();
    let mut cfg_text = String::new();
    for line in report.lines().skip(1) {
        if line.starts_with("defaulted") {
            break;
        }
        let _ = writeln!(cfg_text, "{line}");
    }
    again.apply_text(&cfg_text).unwrap();
    assert_eq!(again.to_kv(), rec.config.to_kv());
    assert!(report.contains("relative_error = "));
}

#[test]
fn hierarchical_and_dense_solutions_agree() {
    let dense = config("domain = cube\ndist = random\ndims = 10\n");
    let mut hier = dense.clone();
    hier.set("compress", "hmatrix").unwrap();
    assert_eq!(hier.compress, Compression::HMatrix);
    let d = run_experiment(&dense).unwrap();
    let h = run_experiment(&hier).unwrap();
    let a = assemble_a(
        &dense.points().unwrap(),
        &MqKernel::new(dense.epsilon).unwrap(),
    );
    let ud = a.apply(&d.report.solution).unwrap();
    let uh = a.apply(&h.report.solution).unwrap();
    let rel = compute_relative_error(&uh, &ud).unwrap();
    let rely = compute_relative_error(&h.report.solution, &d.report.solution).unwrap();
    println!("dense/hierarchical difference: U {rel:.3e}, Y {rely:.3e}, iters {} vs {}, errors {:.3e} vs {:.3e}",
        d.report.outer_iterations, h.report.outer_iterations, d.relative_error, h.relative_error);
    assert!(rel <= 1e-4, "{rel}");
    assert!(h.compression.is_some() && h.compression_a.is_some());
}
