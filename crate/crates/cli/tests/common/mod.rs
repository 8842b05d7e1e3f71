#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use squat_core::dynamics::{
    anthropometric_scale, generate_reference, SquatDepth, DEFAULT_PERIOD, HIP, KNEE,
};
use squat_runtime::{write_session_log, ControlMode, LogRecord};

pub fn squat() -> Command {
    Command::new(env!("CARGO_BIN_EXE_squat"))
}

pub fn run(args: &[&str]) -> Output {
    let out = squat().args(args).output().expect("spawn squat");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Session log of `cycles` squats at 100 Hz following the reference
/// trajectory for the given peaks in degrees.
pub fn squat_log(knee_deg: f64, hip_deg: f64, cycles: usize) -> Vec<LogRecord> {
    let body = anthropometric_scale(1.73, 86.0).unwrap();
    let r = generate_reference(
        SquatDepth::from_degrees(knee_deg, hip_deg),
        DEFAULT_PERIOD,
        401,
        &body,
    )
    .unwrap();
    let ticks = (DEFAULT_PERIOD * 100.0) as usize * cycles;
    (0..=ticks)
        .map(|i| {
            let q = r.sample_at_time(i as f64 * 0.01).q;
            LogRecord {
                t_ms: i as u64 * 10,
                mode: ControlMode::ZeroTorque,
                seq: i as u32,
                angles: [q[HIP], q[HIP], q[KNEE], q[KNEE]],
                velocities: None,
                torque: [0.0; 4],
                scale: 1.0,
                missed_deadlines: 0,
            }
        })
        .collect()
}

pub fn write_log(records: &[LogRecord], path: &Path) {
    write_session_log(records, std::fs::File::create(path).unwrap()).unwrap();
}

/// Breath-by-breath recording at a steady oxygen uptake, ml/min.
pub fn breath_csv(rng: &mut ChaCha8Rng, vo2: f64, hr: f64, duration_s: f64) -> String {
    let mut s = String::from("t_s,VO2_ml_min,VCO2_ml_min,HR_bpm\n");
    let mut t = 0.0;
    while t <= duration_s {
        let v = vo2 * (1.0 + rng.random_range(-0.05..0.05));
        let h = hr + rng.random_range(-2.0..2.0);
        writeln!(s, "{t:.2},{v:.1},{:.1},{h:.1}", 0.85 * v).unwrap();
        t += rng.random_range(2.0..4.0);
    }
    s
}

/// Manifest of `n` subjects whose recordings cost less under assistance.
pub fn synthetic_study(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = String::new();
    for id in 1..=n {
        let mass = rng.random_range(60.0..100.0);
        let rest = 3.5 * mass;
        let zt = rest + 14.0 * mass * rng.random_range(0.9..1.1);
        let levels = [
            ("rest", rest, 70.0, 300.0),
            ("zt", zt, 120.0, 360.0),
            ("ne", zt * 0.97, 118.0, 360.0),
            ("as", zt * 0.88, 114.0, 360.0),
        ];
        for (tag, vo2, hr, dur) in levels {
            let text = breath_csv(&mut rng, vo2, hr, dur);
            std::fs::write(dir.join(format!("s{id}_{tag}.csv")), text).unwrap();
        }
        writeln!(
            manifest,
            "[[subject]]\nid = {id}\nheight = 1.75\nmass = {mass}\n\
             resting_file = \"s{id}_rest.csv\"\n\
             zero_torque = {{ file = \"s{id}_zt.csv\" }}\n\
             no_exo = {{ file = \"s{id}_ne.csv\" }}\n\
             assistance = {{ file = \"s{id}_as.csv\" }}\n"
        )
        .unwrap();
    }
    let path = dir.join("study.toml");
    std::fs::write(&path, manifest).unwrap();
    path
}
