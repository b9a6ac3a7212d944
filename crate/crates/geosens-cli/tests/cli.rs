//! End-to-end checks of the binary: flags, exit codes, output schema and
//! byte-level reproducibility.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_geosens")
}

fn tmp_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("geosens-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(name: &str, contents: &str) -> PathBuf {
    let path = tmp_dir().join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn csv_rows(stdout: &[u8]) -> Vec<Vec<String>> {
    String::from_utf8_lossy(stdout)
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("missing column {name}"))
}

#[test]
fn help_prints_usage() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("usage: geosens"));
}

#[test]
fn missing_seed_is_a_config_error() {
    let out = run(&["example1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_flag_is_a_config_error() {
    let out = run(&["example1", "--seeds", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_path_exits_three() {
    let cfg = write_config("unwritable.conf", "seed = 3\nmodel = sum\nbootstrap_reps = 0\nn = 50\n");
    let out = run(&[
        "custom",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        "/nonexistent-dir/geosens.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let cfg = write_config(
        "repro.conf",
        "seed = 99\nn = 80\nnw = 60\nmu1_grid = -3,-1\nbootstrap_reps = 100\nbootstrap_mode = incomplete:300\nmode = incomplete:400\n",
    );
    let a = run(&["example2", "--config", cfg.to_str().unwrap()]);
    let b = run(&["example2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout, "reruns must be byte-identical");

    // A different seed must actually change the estimates.
    let c = run(&["example2", "--config", cfg.to_str().unwrap(), "--seed", "100"]);
    assert_ne!(a.stdout, c.stdout, "the seed flag must override the config");
}

#[test]
fn example1_reports_closed_forms_and_summary() {
    let cfg = write_config(
        "ex1.conf",
        "seed = 5\nn = 120\np_grid = 0.3,0.5,0.7\nbootstrap_reps = 100\nbootstrap_mode = incomplete:300\n",
    );
    let out = run(&["example1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 1 + 3 + 1, "header, three sweep rows, one summary");
    let b_true = column(&rows, "b_true");
    let kind = column(&rows, "row_kind");
    let p_col = column(&rows, "sweep_value");
    let mid = rows.iter().find(|r| r[p_col] == "0.5").unwrap();
    let value: f64 = mid[b_true].parse().unwrap();
    assert!((value - 0.10912).abs() < 5e-5, "closed form at p = 0.5, got {value}");
    assert_eq!(rows.last().unwrap()[kind], "msd_summary");
    // Bootstrap interval is ordered and bracketed the estimate columns exist.
    let lo = column(&rows, "ci_low");
    let hi = column(&rows, "ci_high");
    let (l, h): (f64, f64) = (mid[lo].parse().unwrap(), mid[hi].parse().unwrap());
    assert!(l <= h);
}

#[test]
fn example2_far_mean_is_dominated_by_the_second_input() {
    // At mu1 = -5 the angle responds linearly to X2 and only quadratically
    // to X1, so the second input carries the sensitivity.
    let cfg = write_config(
        "ex2.conf",
        "seed = 8\nn = 150\nmu1_grid = -5\nbootstrap_reps = 0\nmode = incomplete:2000\n",
    );
    let out = run(&["example2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 3, "header plus one row per frozen set");
    let nu = column(&rows, "nu");
    let b = column(&rows, "b_hat");
    let b1: f64 = rows.iter().find(|r| r[nu] == "1").unwrap()[b].parse().unwrap();
    let b2: f64 = rows.iter().find(|r| r[nu] == "2").unwrap()[b].parse().unwrap();
    assert!(b2 > b1 + 0.3, "expected the second input to dominate: B1 = {b1}, B2 = {b2}");
}

#[test]
fn example3_quadrant_index_degenerates_and_inputs_differ() {
    let cfg = write_config(
        "ex3.conf",
        "seed = 12\nn = 150\nmu1_grid = 1.0\nbootstrap_reps = 100\nbootstrap_mode = incomplete:400\nmode = incomplete:2000\n",
    );
    let out = run(&["example3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 3);
    let flag = column(&rows, "degenerate_cvm");
    let cvm = column(&rows, "cvm_hat");
    for row in &rows[1..] {
        assert_eq!(row[flag], "1", "quadrant index must degenerate on the surface");
        assert_eq!(row[cvm], "0", "degenerate quadrant index reports zero");
    }
    // The two inputs separate by more than twice the bootstrap SE.
    let nu = column(&rows, "nu");
    let b = column(&rows, "b_hat");
    let lo = column(&rows, "ci_low");
    let hi = column(&rows, "ci_high");
    let get = |tag: &str| {
        let row = rows.iter().find(|r| r[nu] == tag).unwrap();
        let width: f64 =
            row[hi].parse::<f64>().unwrap() - row[lo].parse::<f64>().unwrap();
        (row[b].parse::<f64>().unwrap(), width / (2.0 * 1.96))
    };
    let (b1, se1) = get("1");
    let (b2, se2) = get("2");
    assert!(
        (b1 - b2).abs() > 2.0 * se1.max(se2),
        "asymmetry not resolved: B1 = {b1} (se {se1:.4}), B2 = {b2} (se {se2:.4})"
    );
}

#[test]
fn stiffness_rows_follow_the_grid_order() {
    let cfg = write_config(
        "stiff.conf",
        "seed = 21\nn = 60\nnw = 60\nlambda_grid = 0.01,1\ncase = gamma\nbootstrap_reps = 0\nmode = incomplete:300\n",
    );
    let out = run(&["stiffness", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 1 + 2 * 2 * 2, "4 cells x 2 frozen sets");
    let case = column(&rows, "case");
    let l_mu = column(&rows, "sweep_value");
    let l_k = column(&rows, "sweep2_value");
    assert!(rows[1..].iter().all(|r| r[case] == "gamma"));
    // Grid order: lambda_mu outer, lambda_k inner, nu innermost.
    let seq: Vec<(String, String)> =
        rows[1..].iter().map(|r| (r[l_mu].clone(), r[l_k].clone())).collect();
    assert_eq!(seq[0], seq[1], "both frozen sets of one cell are adjacent");
    assert_eq!(seq[0].0, "0.01");
    assert_eq!(seq[7].0, "1");
}

#[test]
fn stiffness_uniform_case_spot_value() {
    // Reference uniform-case value at (lambda_mu, lambda_k) = (0.001, 0.001)
    // for the second input: 0.109.
    let cfg = write_config(
        "stiff_uniform.conf",
        "seed = 61\nn = 500\nlambda_grid = 0.001\ncase = uniform\nbootstrap_reps = 0\nmode = incomplete:2000\n",
    );
    let out = run(&["stiffness", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out.stdout);
    let nu = column(&rows, "nu");
    let b = column(&rows, "b_hat");
    let b2: f64 = rows.iter().find(|r| r[nu] == "2").unwrap()[b].parse().unwrap();
    assert!((b2 - 0.109).abs() <= 0.08, "uniform case B2 = {b2}, reference 0.109");
}

#[test]
fn json_format_mirrors_the_rows() {
    let cfg = write_config(
        "json.conf",
        "seed = 31\nmodel = sum\nn = 60\nbootstrap_reps = 0\nformat = json\n",
    );
    let out = run(&["custom", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.trim_start().starts_with('['));
    assert!(text.contains("\"experiment\":\"custom\""));
    assert!(text.contains("\"b_true\":null"));
    assert!(text.contains("\"seed\":31"), "rows must echo the seed");
    assert!(text.trim_end().ends_with(']'));
}

#[test]
fn timing_flag_fills_the_elapsed_column() {
    let cfg = write_config("timing.conf", "seed = 41\nmodel = sum\nn = 400\nnw = 400\nbootstrap_reps = 0\n");
    let without = run(&["custom", "--config", cfg.to_str().unwrap()]);
    let with = run(&["custom", "--config", cfg.to_str().unwrap(), "--timing"]);
    let rows_without = csv_rows(&without.stdout);
    let rows_with = csv_rows(&with.stdout);
    let col = column(&rows_without, "elapsed_ms");
    assert_eq!(rows_without[1][col], "0", "elapsed is zeroed by default for reproducibility");
    // All other columns agree between the two runs.
    for (a, b) in rows_without[1].iter().zip(rows_with[1].iter()).take(col) {
        assert_eq!(a, b);
    }
}
