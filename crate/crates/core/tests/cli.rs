//! End-to-end checks of the `infmax` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn infmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infmax"))
        .args(args)
        .output()
        .expect("spawn infmax")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

/// Copy of a bundled scenario with a short run and no oracle pass.
fn short_scenario(dir: &Path, name: &str, n_iterations: usize) -> PathBuf {
    let text = fs::read_to_string(scenario(name)).unwrap();
    let text: String = text
        .lines()
        .map(|line| {
            if line.starts_with("n_iterations") {
                format!("n_iterations = {n_iterations}")
            } else if line.starts_with("oracle_samples") {
                "oracle_samples = 0".to_string()
            } else {
                line.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_is_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_scenario(dir.path(), "full_obs.toml", 5);
    let traces: Vec<String> = ["a", "b"]
        .iter()
        .map(|sub| {
            let out_dir = dir.path().join(sub);
            let out = infmax(&[
                "run",
                "--config",
                config.to_str().unwrap(),
                "--out-dir",
                out_dir.to_str().unwrap(),
            ]);
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
            assert!(out_dir.join("summary.txt").exists());
            fs::read_to_string(out_dir.join("trace.csv")).unwrap()
        })
        .collect();
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[0].lines().count(), 6);
    assert!(traces[0].starts_with("k,theta,c_plus,c_minus,grad,abs_error"));
}

#[test]
fn seed_override_changes_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_scenario(dir.path(), "full_obs.toml", 3);
    let trace = |seed: &str| {
        let out_dir = dir.path().join(seed);
        let out = infmax(&[
            "run",
            config.to_str().unwrap(),
            "--seed",
            seed,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        fs::read_to_string(out_dir.join("trace.csv")).unwrap()
    };
    assert_ne!(trace("1"), trace("2"));
}

#[test]
fn zero_iterations_give_a_header_only_trace() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_scenario(dir.path(), "partial_obs.toml", 0);
    let out_dir = dir.path().join("out");
    let out = infmax(&[
        "run",
        config.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1);
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("final_theta = 1.2"), "{summary}");
}

#[test]
fn unknown_config_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = fs::read_to_string(scenario("full_obs.toml"))
        .unwrap()
        .replace("[spsa]", "[spsa]\nstep = 3");
    fs::write(&path, text).unwrap();
    let out = infmax(&[
        "run",
        path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
}

#[test]
fn invalid_parameter_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = fs::read_to_string(scenario("full_obs.toml"))
        .unwrap()
        .replace("theta0 = [1.2]", "theta0 = [3.0]");
    fs::write(&path, text).unwrap();
    let out = infmax(&[
        "run",
        path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_nonzero() {
    let out = infmax(&["run", "/nonexistent/scenario.toml"]);
    assert!(!out.status.success());
}

#[test]
fn oracle_and_estimate_agree_on_a_chain() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("chain.txt");
    fs::write(&graph, "3\n0 1 w\n1 2 w\n").unwrap();
    let g = graph.to_str().unwrap();

    let out = infmax(&["oracle", "--graph", g, "--node", "0", "--samples", "20000"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let oracle: f64 = text
        .lines()
        .next()
        .unwrap()
        .trim_start_matches("influence = ")
        .parse()
        .unwrap();
    // 1 + P(E1 <= 1.5) + P(E1 + E2 <= 1.5) for unit exponentials
    let exact = 1.0 + (1.0 - (-1.5f64).exp()) + (1.0 - (-1.5f64).exp() * 2.5);
    assert!((oracle - exact).abs() < 0.03, "{oracle} vs {exact}");

    let out = infmax(&["estimate", "--graph", g]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "node,influence");
    assert_eq!(rows.len(), 4);
    // node 2 reaches only itself; its estimate is a positive sketch of 1
    let last: f64 = rows[3].split(',').nth(1).unwrap().parse().unwrap();
    assert!(last > 0.0);
}
