//! End-to-end tests of the `crac` binary: exit codes, emitted files, and
//! output schemas.

use std::net::TcpListener;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

fn crac() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crac"));
    cmd.env_remove("CRAC_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    crac().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn help_and_version_exit_zero_usage_errors_exit_one() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["simulate", "--no-such-flag"])), 1);
    assert_eq!(code(&run(&["simulate", "--eta", "bananas"])), 1);
    assert_eq!(code(&run(&["simulate", "--trials", "0"])), 1);
    assert_eq!(
        code(&run(&["simulate", "--phi-mode", "uniform", "--phi", "0.2"])),
        1
    );
    assert_eq!(
        code(&run(&["optimize", "--axes", "orthogonal", "--axis-a", "0"])),
        1
    );
}

#[test]
fn simulate_emits_files_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&[
        "simulate",
        "--trials",
        "2000",
        "--seed",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let summary = stdout_json(&out);
    assert_eq!(summary["pass"], serde_json::Value::Bool(true));
    assert_eq!(summary["sampled"]["classical_bits_used"], 2000);
    assert!(summary["bounds"]["within_bounds"].as_bool().unwrap());

    let csv = std::fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,x_a,x_b,phi_rad,beta,o_a,o_b,g_a,g_b"
    );
    assert_eq!(lines.count(), 2000);

    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("stats.json")).unwrap())
            .unwrap();
    assert!(stats["exact"].is_object() && stats["sampled"].is_object());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["trials.csv", "stats.json", "manifest.json"]);
}

#[test]
fn simulate_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "simulate",
            "--trials",
            "500",
            "--seed",
            seed,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        std::fs::read_to_string(out_dir.join("trials.csv")).unwrap()
    };
    let first = args("a", "11");
    let second = args("b", "11");
    let third = args("c", "12");
    assert_eq!(first, second, "same seed, same transcript");
    assert_ne!(first, third, "different seed, different transcript");
}

#[test]
fn seed_precedence_is_flag_config_env_default() {
    let dir = tempfile::tempdir().unwrap();
    let summary_seed = |cmd: &mut Command| -> i64 {
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["config"]["seed"].as_i64().unwrap()
    };

    // Default.
    let seed = summary_seed(crac().args(["simulate", "--trials", "10"]));
    assert_eq!(seed, 7);

    // Environment beats default.
    let seed = summary_seed(
        crac()
            .args(["simulate", "--trials", "10"])
            .env("CRAC_SEED", "41"),
    );
    assert_eq!(seed, 41);

    // Config file beats environment.
    let cfg_path = dir.path().join("cfg.json");
    let base = run(&["simulate", "--trials", "10", "--seed", "23"]);
    let base_json = stdout_json(&base);
    std::fs::write(&cfg_path, base_json["config"].to_string()).unwrap();
    let seed = summary_seed(
        crac()
            .args(["simulate", "--config", cfg_path.to_str().unwrap()])
            .env("CRAC_SEED", "41"),
    );
    assert_eq!(seed, 23);

    // Flag beats everything.
    let seed = summary_seed(
        crac()
            .args([
                "simulate",
                "--config",
                cfg_path.to_str().unwrap(),
                "--seed",
                "99",
            ])
            .env("CRAC_SEED", "41"),
    );
    assert_eq!(seed, 99);
}

#[test]
fn pi_fraction_angles_match_plain_radians() {
    let fraction = run(&["simulate", "--trials", "50", "--eta", "pi/3"]);
    let plain = run(&["simulate", "--trials", "50", "--eta", "1.0471975511965976"]);
    assert_eq!(code(&fraction), 0);
    assert_eq!(fraction.stdout, plain.stdout);
}

#[test]
fn verify_passes_and_self_test_trips_the_detector() {
    let out = run(&["verify", "--ic-samples", "100", "--grid", "8"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert!(report["bias_closed_form"]["pass"].as_bool().unwrap());
    assert!(report["entropy_bound"]["pass"].as_bool().unwrap());
    assert!(report["information_causality"]["all_within"].as_bool().unwrap());

    let tripped = run(&[
        "verify",
        "--ic-samples",
        "100",
        "--grid",
        "8",
        "--self-test",
        "negate-xi",
    ]);
    assert_eq!(code(&tripped), 2, "a corrupted bound must be detected");
    let report = stdout_json(&tripped);
    assert_eq!(report["pass"], serde_json::Value::Bool(false));
}

#[test]
fn sweep_prints_or_writes_the_grid() {
    let out = run(&["sweep", "--eta-steps", "4", "--delta-steps", "3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "eta,delta,xi_a,xi_b,xi_sq_sum,i_a,i_b,i_total"
    );
    assert_eq!(lines.count(), 12);

    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = run(&[
        "sweep",
        "--eta-steps",
        "4",
        "--delta-steps",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
        "--parallel",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv, text, "sharded file output equals serial stdout output");
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn optimize_reports_the_balanced_point() {
    let out = run(&["optimize", "--axes", "orthogonal"]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    let eta = report["eta_star"].as_f64().unwrap();
    let delta = report["delta_star"].as_f64().unwrap();
    let value = report["value"].as_f64().unwrap();
    assert!((eta - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
    assert!((delta - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
    assert!((value - 0.5).abs() < 1e-9);
    assert_eq!(report["point"], "(0.785398, 0.785398, 0.500000)");
}

#[test]
fn ozawa_swap_reads_exactly_and_identity_disturbs_nothing() {
    let out = run(&["ozawa", "--unitary", "swap"]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert!(report["epsilon_max"].as_f64().unwrap() < 1e-12);

    let out = run(&["ozawa", "--unitary", "identity"]);
    let report = stdout_json(&out);
    assert!(report["disturbance_max"].as_f64().unwrap() < 1e-12);

    let out = run(&["ozawa", "--unitary", "pcc", "--eta", "pi/4"]);
    let report = stdout_json(&out);
    assert!(report["epsilon_max"].as_f64().unwrap() > 1e-3);
    assert!(report["disturbance_max"].as_f64().unwrap() > 1e-3);
}

#[test]
fn cases_subcommand_reproduces_all_three_studies() {
    let out = run(&["cases"]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert_eq!(report["cases"].as_array().unwrap().len(), 3);
}

#[test]
fn netsim_loopback_replays_in_process_run() {
    let out = run(&["netsim", "loopback", "--trials", "300", "--seed", "9"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["transcript_identical"], serde_json::Value::Bool(true));
    assert_eq!(report["budget_ok"], serde_json::Value::Bool(true));
    assert_eq!(report["bob_stats_match"], serde_json::Value::Bool(true));

    let out = run(&[
        "netsim", "loopback", "--trials", "300", "--seed", "9", "--ablate-beta",
    ]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["transcript_identical"], serde_json::Value::Null);
    assert_eq!(report["audit"]["classical_bits_observed"], 0);
}

#[test]
fn netsim_two_processes_talk_over_tcp() {
    // Reserve a port, free it, hand it to the child; the bind happens fast
    // enough that Bob's retry loop below covers the gap.
    let port = {
        let probe = TcpListener::bind("127.0.0.1:0").unwrap();
        probe.local_addr().unwrap().port()
    };
    let addr = format!("127.0.0.1:{port}");
    let alice = crac()
        .args([
            "netsim", "alice", "--listen", &addr, "--trials", "200", "--seed", "3",
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();

    let mut bob_out = None;
    for _ in 0..100 {
        let out = run(&[
            "netsim", "bob", "--connect", &addr, "--trials", "200", "--seed", "3",
        ]);
        if code(&out) != 3 {
            bob_out = Some(out);
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    let bob_out = bob_out.expect("Bob never reached Alice");
    let alice_out = alice.wait_with_output().unwrap();

    assert_eq!(
        alice_out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&alice_out.stderr)
    );
    assert_eq!(
        bob_out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&bob_out.stderr)
    );
    let alice_report = stdout_json(&alice_out);
    let bob_report = stdout_json(&bob_out);
    assert_eq!(alice_report["trials"], 200);
    assert_eq!(alice_report["classical_bits_sent"], 200);
    assert_eq!(bob_report["budget_ok"], serde_json::Value::Bool(true));
    assert_eq!(bob_report["audit"]["classical_bits_observed"], 200);
}

#[test]
fn violation_exit_code_distinguishes_transport_failures() {
    // Nothing listening: connect fails → transport exit code.
    let out = run(&["netsim", "bob", "--connect", "127.0.0.1:1", "--trials", "5"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn config_file_round_trips_through_simulate(){
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let first = run(&[
        "simulate", "--trials", "40", "--seed", "8", "--eta", "0.9", "--phi", "2pi/5",
    ]);
    assert_eq!(code(&first), 0);
    let summary = stdout_json(&first);
    std::fs::write(&cfg_path, summary["config"].to_string()).unwrap();

    let replay = run(&["simulate", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(code(&replay), 0);
    assert_eq!(first.stdout, replay.stdout, "config file reproduces the run");
}
