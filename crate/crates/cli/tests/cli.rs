//! End-to-end tests of the command-line interface: exit codes, file
//! formats and the determinism contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deeplq"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("deeplq-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn solve_benchmark_writes_gains() {
    let dir = tempdir("solve");
    let out = dir.join("gains.json");
    let output = run(bin()
        .arg("solve")
        .arg(fixture("benchmark.json"))
        .args(["--n", "100", "--horizon", "50", "-o"])
        .arg(&out));
    assert!(output.status.success(), "{output:?}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["schema"], "deeplq-gains/1");
    assert_eq!(doc["stages"].as_array().unwrap().len(), 50);
    assert_eq!(doc["alpha"], 0.01);
    // First-step gain matches the library.
    let sol = deeplq::riccati::solve_finite(&deeplq::reference::scalar_benchmark(), 0.01, 50)
        .unwrap();
    let theta = doc["stages"][0]["theta"][0][0].as_f64().unwrap();
    assert!((theta - sol.stages[0].theta[(0, 0)]).abs() < 1e-15);
    // Manifest written alongside.
    assert!(dir.join("gains.json.manifest.json").exists());
}

#[test]
fn solve_failure_prints_report_and_exits_2() {
    let dir = tempdir("solve-fail");
    let out = dir.join("gains.json");
    let output = run(bin()
        .arg("solve")
        .arg(fixture("finite_only.json"))
        .args(["--infinite", "--horizon", "10", "-o"])
        .arg(&out));
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("deeplq-check/1"), "missing report: {stdout}");
    assert!(stdout.contains("A3"));
}

#[test]
fn solve_zero_cost_gives_zero_gains() {
    let dir = tempdir("solve-zero");
    let out = dir.join("gains.json");
    let output = run(bin()
        .arg("solve")
        .arg(fixture("zero_cost.json"))
        .args(["-o"])
        .arg(&out));
    assert!(output.status.success(), "{output:?}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for stage in doc["stages"].as_array().unwrap() {
        assert_eq!(stage["theta"][0][0], 0.0);
        assert_eq!(stage["theta_bar"][0][0], 0.0);
    }
}

#[test]
fn solve_social_matches_weight_free_gains() {
    let dir = tempdir("solve-social");
    let out = dir.join("gains.json");
    let output = run(bin()
        .arg("solve")
        .arg(fixture("social.json"))
        .args(["--social", "-o"])
        .arg(&out));
    assert!(output.status.success(), "{output:?}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["kind"], "social");
}

#[test]
fn check_reports_the_counterexample_split() {
    let dir = tempdir("check");
    for (file, a2, a3) in [
        ("benchmark.json", true, true),
        ("finite_only.json", true, false),
        ("infinite_only.json", false, true),
    ] {
        let out = dir.join(format!("{file}.check.json"));
        let output = run(bin().arg("check").arg(fixture(file)).arg("-o").arg(&out));
        assert!(output.status.success(), "{file}: {output:?}");
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let entries = doc["report"]["entries"].as_array().unwrap();
        let status = |id: &str| -> String {
            entries
                .iter()
                .find(|e| e["id"] == id)
                .map(|e| e["status"].as_str().unwrap().to_string())
                .unwrap()
        };
        assert_eq!(status("A2") == "holds", a2, "{file} A2: {}", status("A2"));
        assert_eq!(status("A3") == "holds", a3, "{file} A3: {}", status("A3"));
    }
}

#[test]
fn check_social_model() {
    let dir = tempdir("check-social");
    let out = dir.join("check.json");
    let output = run(bin().arg("check").arg(fixture("social.json")).arg("-o").arg(&out));
    assert!(output.status.success(), "{output:?}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let entries = doc["report"]["entries"].as_array().unwrap();
    let a5 = entries.iter().find(|e| e["id"] == "A5").unwrap();
    assert_eq!(a5["status"], "holds");
}

#[test]
fn gap_csv_has_stable_header_and_lyapunov_only_rows() {
    let dir = tempdir("gap");
    let out = dir.join("gap.csv");
    let output = run(bin()
        .arg("gap")
        .arg(fixture("benchmark.json"))
        .args(["--sweep-n", "20,50", "--strategy", "both", "-o"])
        .arg(&out));
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,strategy,t0,gap_lyapunov,gap_mc,mc_stderr,n_times_gap,status"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4); // 2 n × 2 strategies × 1 t0
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[4], "", "mc column empty without --mc: {row}");
        assert_eq!(cells.last().unwrap(), &"ok");
    }
}

#[test]
fn gap_zero_for_deterministic_noise() {
    let dir = tempdir("gap-det");
    let out = dir.join("gap.csv");
    let output = run(bin()
        .arg("gap")
        .arg(fixture("benchmark_deterministic.json"))
        .args(["--sweep-n", "20,100", "--strategy", "sapde", "-o"])
        .arg(&out));
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(&out).unwrap();
    for row in text.lines().skip(1) {
        let gap: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(gap.abs() < 1e-12, "{row}");
    }
}

#[test]
fn simulate_is_reproducible_and_exact_for_zero_profile() {
    let dir = tempdir("sim");
    let out1 = dir.join("a.json");
    let out2 = dir.join("b.json");
    for out in [&out1, &out2] {
        let output = run(bin()
            .arg("simulate")
            .arg(fixture("zero_cost.json"))
            .args(["--n", "4", "--reps", "1", "--seed", "7", "--profile", "zero", "-o"])
            .arg(out));
        assert!(output.status.success(), "{output:?}");
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same seed must give identical bytes");
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(doc["mean_cost"][0][0], 0.0);
}

/// Fixed seed, 1 vs 8 worker threads: result files must be byte-identical
/// (manifests carry the timestamps and are excluded).
#[test]
fn outputs_are_thread_count_invariant() {
    let dir = tempdir("threads");
    let sim1 = dir.join("sim1.json");
    let sim8 = dir.join("sim8.json");
    for (out, threads) in [(&sim1, "1"), (&sim8, "8")] {
        let output = run(bin()
            .arg("simulate")
            .arg(fixture("benchmark.json"))
            .args([
                "--n", "20", "--reps", "2000", "--seed", "3", "--profile", "sapde",
                "--threads", threads, "-o",
            ])
            .arg(out));
        assert!(output.status.success(), "{output:?}");
    }
    assert_eq!(
        std::fs::read(&sim1).unwrap(),
        std::fs::read(&sim8).unwrap()
    );

    let gap1 = dir.join("gap1.csv");
    let gap8 = dir.join("gap8.csv");
    for (out, threads) in [(&gap1, "1"), (&gap8, "8")] {
        let output = run(bin()
            .arg("gap")
            .arg(fixture("benchmark.json"))
            .args([
                "--sweep-n", "20,50", "--strategy", "both", "--mc", "2000", "--seed", "5",
                "--threads", threads, "-o",
            ])
            .arg(out));
        assert!(output.status.success(), "{output:?}");
    }
    assert_eq!(
        std::fs::read(&gap1).unwrap(),
        std::fs::read(&gap8).unwrap()
    );
}

#[test]
fn trajectory_dump_has_documented_columns() {
    let dir = tempdir("traj");
    let out = dir.join("sim.json");
    let traj = dir.join("traj.csv");
    let output = run(bin()
        .arg("simulate")
        .arg(fixture("benchmark.json"))
        .args(["--n", "3", "--reps", "2", "--seed", "1", "--profile", "spne", "-o"])
        .arg(&out)
        .arg("--trajectories")
        .arg(&traj));
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(&traj).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "rep,t,player,x0,u0");
    // 2 reps × (T+1 = 51 state rows) × 3 players.
    assert_eq!(lines.count(), 2 * 51 * 3);
}

#[test]
fn parse_errors_exit_1() {
    let dir = tempdir("parse");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"schema\": \"deeplq-model/1\"").unwrap();
    let output = run(bin().arg("solve").arg(&bad));
    assert_eq!(output.status.code(), Some(1));

    let output = run(bin().arg("solve").arg(dir.join("missing.json")));
    assert_eq!(output.status.code(), Some(1));

    let output = run(bin()
        .arg("gap")
        .arg(fixture("benchmark.json"))
        .args(["--sweep-n", "10", "--strategy", "bogus"]));
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unstable_simulation_exits_3() {
    // Costless unstable plant: the zero profile lets states double each
    // step past the exclusion threshold in every replication.
    let dir = tempdir("unstable");
    let out = dir.join("sim.json");
    let output = run(bin()
        .arg("simulate")
        .arg(fixture("unstable.json"))
        .args(["--n", "4", "--reps", "10", "--seed", "2", "--profile", "zero", "-o"])
        .arg(&out));
    assert_eq!(output.status.code(), Some(3), "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unstable"), "{stderr}");
}

#[test]
fn stationary_solve_uses_the_algebraic_equations() {
    let dir = tempdir("solve-stationary");
    let out = dir.join("gains.json");
    let output = run(bin()
        .arg("solve")
        .arg(fixture("benchmark_stationary.json"))
        .args(["--n", "100", "-o"])
        .arg(&out));
    assert!(output.status.success(), "{output:?}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["discount"], 0.9);
    assert!(doc["residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(doc["stages"].as_array().unwrap().len(), 1);
}
