mod common;

use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use squat_runtime::load_session_log;

/// Output directory of one default training run, shared by the tests.
fn trained() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        let out = run(&["--out", dir.to_str().unwrap(), "train"]);
        assert_eq!(code(&out), 0);
        dir
    })
}

fn psi_override() -> String {
    format!("runtime.psi=\"{}\"", trained().join("psi.ecn").display())
}

/// Distinct ports for each serving test.
fn ports(base: u16) -> Vec<String> {
    [
        format!("runtime.ports.command={base}"),
        format!("runtime.ports.stream={}", base + 1),
        format!("runtime.ports.bridge={}", base + 2),
    ]
    .into_iter()
    .flat_map(|s| ["--set".to_string(), s])
    .collect()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    let out = run(&["--config", missing.to_str().unwrap(), "train"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("absent.toml"));
    assert_eq!(code(&run(&["fly"])), 2);
    assert_eq!(code(&run(&["simulate", "--condition", "sideways"])), 2);
}

#[test]
fn bad_overrides_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = run(&["--out", o, "--set", "subject.colour=3", "simulate"]);
    assert_eq!(code(&out), 3);
    let out = run(&["--out", o, "--set", "runtime.safety.tau_max=40", "simulate"]);
    assert_eq!(code(&out), 3);
    let out = run(&["--out", o, "--set", "nonsense", "simulate"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 7\n[simulate]\ncycles = 3\ncondition = \"zero\"\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let o = out_dir.to_str().unwrap();
    let c = cfg.to_str().unwrap();
    let out = run(&[
        "--config",
        c,
        "--out",
        o,
        "--set",
        "simulate.cycles=1",
        "simulate",
    ]);
    assert_eq!(code(&out), 0);
    let m = json(&out_dir.join("manifest.json"));
    assert_eq!(m["subcommand"], "simulate");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["simulate"]["cycles"], 1);
    assert_eq!(m["config"]["simulate"]["condition"], "zero");
    assert_eq!(m["overrides"][0], "simulate.cycles=1");
    assert!(m["versions"]["squat-core"].is_string());
    assert_eq!(m["outputs"]["results"]["ticks"], 400);

    let out = run(&["--config", c, "--seed", "9", "--out", o, "simulate"]);
    assert_eq!(code(&out), 0);
    let m = json(&out_dir.join("manifest.json"));
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config"]["train"]["seed"], 9);
}

#[test]
fn training_meets_the_data_term_and_repeats() {
    let dir = trained();
    for f in [
        "psi.ecn",
        "loss.csv",
        "gains.toml",
        "gain_search.csv",
        "manifest.json",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let report = json(&dir.join("train_report.json"));
    assert!(report["validation_data_term"].as_f64().unwrap() < 0.01);
    let loss = std::fs::read_to_string(dir.join("loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,train_loss,val_loss,val_data,best_val\n"));
    assert_eq!(
        loss.lines().count() - 1,
        report["epochs"].as_u64().unwrap() as usize
    );

    let again = tempfile::tempdir().unwrap();
    let out = run(&["--out", again.path().to_str().unwrap(), "train"]);
    assert_eq!(code(&out), 0);
    let second = json(&again.path().join("train_report.json"));
    assert_eq!(report["psi_crc32"], second["psi_crc32"]);
    assert_eq!(
        std::fs::read(dir.join("psi.ecn")).unwrap(),
        std::fs::read(again.path().join("psi.ecn")).unwrap()
    );
}

#[test]
fn seeds_change_the_network() {
    let quick = [
        "--set",
        "gains.search=false",
        "--set",
        "train.max_epochs=2",
        "--set",
        "dataset.cycles=1",
    ];
    let mut sums = Vec::new();
    for seed in ["1", "1", "2"] {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec!["--out", dir.path().to_str().unwrap(), "--seed", seed];
        args.extend(quick);
        args.push("train");
        assert_eq!(code(&run(&args)), 0);
        let r = json(&dir.path().join("train_report.json"));
        sums.push(r["psi_crc32"].as_str().unwrap().to_string());
    }
    assert_eq!(sums[0], sums[1]);
    assert_ne!(sums[0], sums[2]);
}

#[test]
fn assist_lowers_effort() {
    let psi = trained().join("psi.ecn");
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero");
    let assist = dir.path().join("assist");
    let out = run(&[
        "--out",
        zero.to_str().unwrap(),
        "simulate",
        "--condition",
        "zero",
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "--out",
        assist.to_str().unwrap(),
        "simulate",
        "--psi",
        psi.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let z = json(&zero.join("effort.json"));
    let a = json(&assist.join("effort.json"));
    assert!(a["effort_metric"].as_f64() < z["effort_metric"].as_f64());
    assert!(a["human_rms"].as_f64() < z["human_rms"].as_f64());

    let mut r = csv::Reader::from_path(zero.join("rollout.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    let exo: Vec<usize> = (0..headers.len())
        .filter(|i| headers[*i].ends_with("_exo_tau"))
        .collect();
    assert_eq!(exo.len(), 4);
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        for i in &exo {
            assert_eq!(rec[*i].parse::<f64>().unwrap(), 0.0);
        }
        rows += 1;
    }
    assert_eq!(rows, 800);
}

#[test]
fn simulate_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["--out", o, "simulate", "--cycles", "0"])), 3);
    assert_eq!(code(&run(&["--out", o, "simulate"])), 2);
    let out = run(&["--out", o, "simulate", "--psi", "/nonexistent/psi.ecn"]);
    assert_eq!(code(&out), 4);
    let junk = dir.path().join("junk.ecn");
    std::fs::write(&junk, b"not a network").unwrap();
    let out = run(&["--out", o, "simulate", "--psi", junk.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}

#[test]
fn serve_refuses_a_bad_network() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "--out".to_string(),
        dir.path().to_str().unwrap().into(),
        "--set".into(),
        "runtime.psi=\"/nonexistent/psi.ecn\"".into(),
    ];
    args.extend(ports(46100));
    args.extend(["serve".into(), "--duration".into(), "1".into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&args);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("psi.ecn"));
}

#[test]
fn serve_names_a_busy_port() {
    let _hold = std::net::UdpSocket::bind("127.0.0.1:46110").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let psi = psi_override();
    let mut args = vec![
        "--out".to_string(),
        dir.path().to_str().unwrap().into(),
        "--set".into(),
        psi,
    ];
    args.extend(ports(46110));
    args.extend(["serve".into(), "--duration".into(), "1".into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&args);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("46110"), "{}", stderr(&out));
}

fn serve_log(dir: &Path, base: u16, seconds: &str) -> PathBuf {
    let mut args = vec![
        "--out".to_string(),
        dir.to_str().unwrap().into(),
        "--set".into(),
        psi_override(),
        "--set".into(),
        "runtime.scale=0.8".into(),
    ];
    args.extend(ports(base));
    args.extend(["serve".into(), "--duration".into(), seconds.into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(code(&run(&args)), 0);
    dir.join("session.csv")
}

#[test]
fn serve_then_replay_reproduces_commands() {
    let dir = tempfile::tempdir().unwrap();
    let live = dir.path().join("live");
    let log = serve_log(&live, 46120, "2");
    let recorded = load_session_log(&log).unwrap();
    assert_eq!(recorded.len(), 200);
    let m = json(&live.join("manifest.json"));
    assert_eq!(m["outputs"]["results"]["ticks"], 200);

    let again = dir.path().join("again");
    let out = run(&[
        "--out",
        again.to_str().unwrap(),
        "--set",
        &psi_override(),
        "replay",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let m = json(&again.join("manifest.json"));
    assert_eq!(m["outputs"]["results"]["mismatched_ticks"], 0);
    let replayed = load_session_log(again.join("session.csv")).unwrap();
    assert_eq!(replayed.len(), recorded.len());
    for (a, b) in recorded.iter().zip(&replayed) {
        assert_eq!(a.torque.map(f64::to_bits), b.torque.map(f64::to_bits));
        assert_eq!(a.mode, b.mode);
    }
}

#[test]
fn replay_reports_broken_logs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("out");
    let psi = psi_override();
    let log = dir.path().join("log.csv");
    write_log(&squat_log(100.0, 75.0, 1), &log);
    let text = std::fs::read_to_string(&log).unwrap();
    let cut: String = text.lines().take(7).collect::<Vec<_>>().join("\n");
    let cut = &cut[..cut.len() - 9];
    std::fs::write(&log, cut).unwrap();
    let args = ["--out", o.to_str().unwrap(), "--set", &psi, "replay"];
    let mut a = args.to_vec();
    a.push(log.to_str().unwrap());
    let out = run(&a);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));

    std::fs::write(&log, "").unwrap();
    let out = run(&a);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("empty"), "{}", stderr(&out));
}

#[test]
#[cfg(unix)]
fn serve_stops_cleanly_on_interrupt() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = squat();
    cmd.args([
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        &psi_override(),
    ]);
    cmd.args(ports(46130));
    cmd.arg("serve");
    let mut child = cmd.spawn().unwrap();
    std::thread::sleep(Duration::from_millis(1500));
    let status = std::process::Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    let start = Instant::now();
    let status = loop {
        if let Some(s) = child.try_wait().unwrap() {
            break s;
        }
        assert!(start.elapsed() < Duration::from_secs(5), "no shutdown");
        std::thread::sleep(Duration::from_millis(20));
    };
    assert!(status.success());
    let log = load_session_log(dir.path().join("session.csv")).unwrap();
    assert!(log.len() > 50);
    let events = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(events.contains("session_end"));
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn analyze_reproduces_the_fixture_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "analyze",
        fixture("subjects.toml").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(
        csv.contains("2,1.84,98.3,115.0,112.6 [2.1],110.7 [3.7],4.303,4.571 [-6.2],3.382 [21.4]")
    );
    assert!(csv.contains("79.1*,79.4*,86.1*"));
    assert!(csv.contains("mean_sd,1.728 (0.127),86.45 (16.62),124.5 (14.4),120.4 (16.9),124.5 (14.3),4.186 (0.680),4.071 (0.702),3.504 (0.140)"));
    let r = json(&dir.path().join("analysis.json"));
    assert!((r["nmr_change_assistance"].as_f64().unwrap() - 9.98).abs() <= 0.05);
    assert!((r["hr_change_no_exo"].as_f64().unwrap() - 3.45).abs() <= 0.05);
}

#[test]
fn analyze_rejects_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("empty.toml");
    std::fs::write(&m, "").unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "analyze",
        m.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "analyze",
        dir.path().join("absent.toml").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn synthetic_study_orders_the_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synthetic_study(dir.path(), 6, 11);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--out",
        out_dir.to_str().unwrap(),
        "analyze",
        manifest.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let r = json(&out_dir.join("analysis.json"));
    let nmr = |k: &str| r[k][0].as_f64().unwrap();
    assert!(nmr("nmr_assistance") < nmr("nmr_no_exo"));
    assert!(nmr("nmr_assistance") < nmr("nmr_zero_torque"));
    assert!(r["nmr_change_assistance"].as_f64().unwrap() > 5.0);
}

#[test]
fn analyze_pools_kinematics_by_condition() {
    let dir = tempfile::tempdir().unwrap();
    write_log(&squat_log(120.0, 95.0, 4), &dir.path().join("deep_a.csv"));
    write_log(&squat_log(120.0, 95.0, 6), &dir.path().join("deep_b.csv"));
    write_log(&squat_log(100.0, 75.0, 3), &dir.path().join("shallow.csv"));
    let manifest = dir.path().join("kin.toml");
    std::fs::write(
        &manifest,
        "[[kinematics]]\ncondition = \"no_exo\"\nlogs = [\"deep_a.csv\", \"deep_b.csv\"]\n\
         [[kinematics]]\ncondition = \"assistance\"\nlogs = [\"shallow.csv\"]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--out",
        out_dir.to_str().unwrap(),
        "analyze",
        manifest.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let r = json(&out_dir.join("analysis.json"));
    assert_eq!(r["no_exo_cycles"], 10);
    assert_eq!(r["assistance_cycles"], 3);
    let near = |k: &str, v: f64| (r[k].as_f64().unwrap() - v).abs() <= 0.5;
    assert!(near("no_exo_peak_knee_deg", 120.0));
    assert!(near("no_exo_peak_hip_deg", 95.0));
    assert!(near("assistance_peak_knee_deg", 100.0));
    assert!(near("assistance_peak_hip_deg", 75.0));
    let curves = std::fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    assert!(curves.starts_with("phase_pct,no_exo_knee_mean_deg,"));
    assert_eq!(curves.lines().count(), 102);
}
