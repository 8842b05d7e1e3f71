//! The five subcommands. Each writes into the output directory and returns
//! what it wrote for the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};

use log::{info, warn};
use squat_core::analysis::{
    peak_flexion, resample_cycles, segment_cycles, summarize, write_curves_csv, write_summary_csv,
    Condition as TableCondition, CycleStats, SubjectsManifest,
};
use squat_core::cpn::{
    motion_match_reward, optimize_gains, rollout, PdGains, RolloutConfig, RolloutLog,
};
use squat_core::dynamics::{
    anthropometric_scale, generate_reference, scale_reference_time, SquatDepth, DEFAULT_PERIOD,
};
use squat_core::ecn::{
    generate_dataset, load_params, params_checksum, save_params, train_with_progress,
};
use squat_core::muscle::MuscleSet;
use squat_runtime::{
    load_session_log, run_session, Controller, ReplaySource, SampleSource, SessionOptions,
    SessionPaths, SimulatedSubject, SourceConfig,
};
use squat_telemetry::{serve as serve_telemetry, Counters};

use crate::config::{CliConfig, Condition, GainsFile};
use crate::error::{CliError, Result};
use crate::manifest::Outputs;

const REFERENCE_SAMPLES: usize = 401;
/// Session log sampling rate, Hz.
const LOG_RATE_HZ: f64 = 100.0;

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(
        path,
    )?)))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn train(cfg: &CliConfig, out: &Path) -> Result<Outputs> {
    let mut o = Outputs::default();
    let body = anthropometric_scale(cfg.subject.height, cfg.subject.mass)?;
    let base = generate_reference(
        SquatDepth::default(),
        DEFAULT_PERIOD,
        REFERENCE_SAMPLES,
        &body,
    )?;

    let mut gains = cfg.gains.gains();
    if cfg.gains.search {
        let refs = cfg
            .dataset
            .scales
            .iter()
            .map(|s| scale_reference_time(&base, *s))
            .collect::<squat_core::Result<Vec<_>>>()?;
        let search = optimize_gains(&gains, &refs, &body, &cfg.gains.search_config(cfg.seed))?;
        info!(
            "gain search: reward {:.4} after {} evaluations ({} diverged)",
            search.best_reward, search.evaluations, search.diverged
        );
        let path = out.join("gain_search.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["generation", "best_reward"])?;
        for (g, r) in search.trace.iter().enumerate() {
            w.write_record([g.to_string(), r.to_string()])?;
        }
        w.flush()?;
        o.file("gain_search", path);
        o.result("gain_search_reward", search.best_reward);
        o.result("gain_search_evaluations", search.evaluations);
        gains = search.best;
    }
    let gains_path = out.join("gains.toml");
    let gf = GainsFile {
        kp: gains.kp,
        kd: gains.kd,
    };
    std::fs::write(
        &gains_path,
        toml::to_string(&gf).map_err(|e| CliError::Io(e.to_string()))?,
    )?;
    o.file("gains", gains_path);

    let data = generate_dataset(&base, &gains, &body, &cfg.dataset.dataset_config(cfg.seed))?;
    info!("dataset: {} samples", data.len());
    let report = train_with_progress(&data, &cfg.train, |e| {
        if e.epoch % 10 == 0 {
            info!(
                "epoch {:4}: train {:.5} val {:.5} data {:.5}",
                e.epoch, e.train_loss, e.val_loss, e.val_data
            );
        }
    })?;
    let best = *report
        .history
        .iter()
        .find(|e| e.epoch == report.best_epoch)
        .ok_or_else(|| CliError::Numeric("training produced no epochs".into()))?;
    info!(
        "trained {} epochs, best {} with validation data term {:.5}",
        report.history.len(),
        report.best_epoch,
        best.val_data
    );

    let psi_path = out.join("psi.ecn");
    save_params(&report.params, &psi_path)?;
    let checksum = params_checksum(&report.params);
    o.file("psi", psi_path);

    let loss_path = out.join("loss.csv");
    let mut w = csv_writer(&loss_path)?;
    w.write_record(["epoch", "train_loss", "val_loss", "val_data", "best_val"])?;
    for e in &report.history {
        w.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            e.val_loss.to_string(),
            e.val_data.to_string(),
            e.best_val.to_string(),
        ])?;
    }
    w.flush()?;
    o.file("loss", loss_path);

    o.result("dataset_samples", data.len());
    o.result("epochs", report.history.len());
    o.result("best_epoch", report.best_epoch);
    o.result("stopped_early", report.stopped_early);
    o.result("validation_data_term", best.val_data);
    o.result("psi_crc32", format!("{checksum:08x}"));
    o.result("kp", gains.kp);
    o.result("kd", gains.kd);
    write_json(&out.join("train_report.json"), &o.results)?;
    o.file("report", out.join("train_report.json"));
    Ok(o)
}

fn simulate_gains(cfg: &CliConfig) -> Result<PdGains<f64>> {
    match &cfg.simulate.gains_file {
        None => Ok(cfg.gains.gains()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let g: GainsFile = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Ok(PdGains { kp: g.kp, kd: g.kd })
        }
    }
}

fn write_rollout_csv(log: &RolloutLog<f64>, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["t_s".to_string(), "phase".into()];
    for group in ["q", "qdot", "human_tau"] {
        for j in ["ankle", "knee", "hip"] {
            header.push(format!("{j}_{group}"));
        }
    }
    for j in squat_core::ecn::JOINT_NAMES {
        header.push(format!("{j}_exo_tau"));
    }
    w.write_record(&header)?;
    for r in &log.records {
        let mut row = vec![r.t.to_string(), r.phase.to_string()];
        for v in r.q.iter().chain(&r.qdot).chain(&r.human).chain(&r.exo) {
            row.push(v.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(cfg: &CliConfig, out: &Path) -> Result<Outputs> {
    let s = &cfg.simulate;
    let mut o = Outputs::default();
    let body = anthropometric_scale(cfg.subject.height, cfg.subject.mass)?;
    let reference = generate_reference(
        SquatDepth::default(),
        DEFAULT_PERIOD,
        REFERENCE_SAMPLES,
        &body,
    )?;
    let gains = simulate_gains(cfg)?;
    let rc = RolloutConfig {
        cycles: s.cycles,
        tau_max: s.tau_max,
        assist_scale: s.scale,
    };
    rc.validate()?;
    let psi = match s.condition {
        Condition::Zero => None,
        Condition::Assist => {
            let path = s.psi.as_ref().ok_or_else(|| {
                CliError::Usage("assist needs a network: --psi or simulate.psi".into())
            })?;
            Some(load_params(path)?.cast::<f64>())
        }
    };
    let log = rollout(&body, &gains, &reference, psi.as_ref(), &rc)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let muscles = MuscleSet::lumped(&body)?;
    let effort = log.muscle_effort(&muscles)?;
    let reward = motion_match_reward(&log, &reference)?;
    let rms = log.human_rms();
    info!(
        "{:?}: human torque RMS {rms:.3} N·m, effort {effort:.5}, reward {reward:.4}",
        s.condition
    );

    let path = out.join("rollout.csv");
    write_rollout_csv(&log, &path)?;
    o.file("rollout", path);
    o.result("condition", s.condition);
    o.result("ticks", log.records.len());
    o.result("human_rms", rms);
    o.result("effort_metric", effort);
    o.result("reward", reward);
    let report = out.join("effort.json");
    write_json(&report, &o.results)?;
    o.file("report", report);
    Ok(o)
}

fn load_controller(cfg: &CliConfig) -> Result<Controller> {
    let psi = load_params(&cfg.runtime.psi)
        .map_err(|e| CliError::Io(format!("network {}: {e}", cfg.runtime.psi.display())))?;
    Ok(Controller::new(psi, cfg.runtime.safety)?)
}

/// Flag raised by Ctrl-C; the handler is installed once per process.
fn interrupt_flag() -> Arc<AtomicBool> {
    static FLAG: OnceLock<Arc<AtomicBool>> = OnceLock::new();
    let flag = FLAG.get_or_init(|| {
        let f = Arc::new(AtomicBool::new(false));
        let h = f.clone();
        if let Err(e) = ctrlc::set_handler(move || h.store(true, Ordering::SeqCst)) {
            warn!("no interrupt handler: {e}");
        }
        f
    });
    flag.store(false, Ordering::SeqCst);
    flag.clone()
}

pub fn serve(cfg: &CliConfig, out: &Path) -> Result<Outputs> {
    let rt = &cfg.runtime;
    let controller = load_controller(cfg)?;
    let mut source: Box<dyn SampleSource> = match &rt.source {
        SourceConfig::Simulation {
            height,
            mass,
            kp,
            kd,
        } => Box::new(SimulatedSubject::new(
            *height,
            *mass,
            PdGains { kp: *kp, kd: *kd },
        )?),
        SourceConfig::Replay { path } => Box::new(ReplaySource::new(load_session_log(path)?)),
    };
    let mut telemetry = serve_telemetry(&rt.telemetry())?;
    info!(
        "commands on {}, bridge on {}",
        telemetry.command_addr,
        telemetry
            .bridge_addr
            .map_or("(disabled)".to_string(), |a| a.to_string())
    );
    let opts = SessionOptions {
        initial_scale: rt.scale,
        duration_ms: rt.duration_ms(),
        offsets: rt.offsets,
        paced: true,
        stop: Some(interrupt_flag()),
        ..SessionOptions::default()
    };
    let paths = SessionPaths::in_dir(out);
    let summary = run_session(
        &controller,
        source.as_mut(),
        Some(&mut telemetry),
        &opts,
        &paths,
    )?;
    let counters = telemetry.counters();
    let mut o = Outputs::default();
    o.file("session_log", paths.log);
    o.file("events", paths.events);
    o.result("ticks", summary.ticks);
    o.result("missed_deadlines", summary.missed_deadlines);
    o.result("max_interval_ms", summary.max_interval_ms);
    o.result("final_mode", summary.final_mode.name());
    o.result("commands", summary.commands);
    o.result("faults", summary.faults);
    o.result("malformed_packets", Counters::get(&counters.malformed));
    o.result("published_packets", Counters::get(&counters.published));
    telemetry.shutdown();
    info!(
        "{} ticks, {} missed deadlines, ended in {}",
        summary.ticks,
        summary.missed_deadlines,
        summary.final_mode.name()
    );
    Ok(o)
}

pub fn replay(cfg: &CliConfig, log: &Path, out: &Path) -> Result<Outputs> {
    let controller = load_controller(cfg)?;
    let records = load_session_log(log)?;
    let mut source = ReplaySource::new(records.clone());
    let opts = SessionOptions {
        paced: false,
        ..SessionOptions::default()
    };
    let paths = SessionPaths::in_dir(out);
    let summary = run_session(&controller, &mut source, None, &opts, &paths)?;
    let regenerated = load_session_log(&paths.log)?;
    let mismatched = records
        .iter()
        .zip(&regenerated)
        .filter(|(a, b)| a.torque != b.torque)
        .count();
    info!(
        "replayed {} ticks; {} differ from the recorded commands",
        summary.ticks, mismatched
    );
    let mut o = Outputs::default();
    o.file("session_log", paths.log);
    o.file("events", paths.events);
    o.result("ticks", summary.ticks);
    o.result("mismatched_ticks", mismatched);
    Ok(o)
}

pub fn analyze(manifest_path: &Path, out: &Path) -> Result<Outputs> {
    let manifest = SubjectsManifest::load(manifest_path)?;
    if manifest.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no subjects and no kinematics",
            manifest_path.display()
        )));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut o = Outputs::default();

    if !manifest.subjects.is_empty() {
        let records = manifest.records(base)?;
        let summary = summarize(&records)?;
        let path = out.join("summary.csv");
        let mut buf = Vec::new();
        write_summary_csv(&summary, &mut buf)?;
        std::fs::write(&path, &buf)?;
        std::io::stdout().write_all(&buf)?;
        o.file("summary", path);
        for c in TableCondition::ALL {
            let s = summary.condition(c);
            if let Some(st) = s.nmr {
                o.result(&format!("nmr_{}", c.key()), [st.mean, st.sd]);
            }
            if let Some(st) = s.hr {
                o.result(&format!("hr_{}", c.key()), [st.mean, st.sd]);
            }
            if let Some(v) = s.nmr_change {
                o.result(&format!("nmr_change_{}", c.key()), v);
            }
            if let Some(v) = s.hr_change {
                o.result(&format!("hr_change_{}", c.key()), v);
            }
        }
    }

    if !manifest.kinematics.is_empty() {
        let mut curves: Vec<(String, CycleStats<f64>)> = Vec::new();
        for k in &manifest.kinematics {
            let (mut knee, mut hip) = (Vec::new(), Vec::new());
            for p in &k.logs {
                let log = load_session_log(base.join(p))?;
                let knee_trace: Vec<f64> = log.iter().map(|r| r.angles[2]).collect();
                let hip_trace: Vec<f64> = log.iter().map(|r| r.angles[0]).collect();
                let b = segment_cycles(&knee_trace, LOG_RATE_HZ);
                if b.is_empty() {
                    warn!("{}: no complete squat cycles", p.display());
                    continue;
                }
                knee.extend(resample_cycles(&knee_trace, &b)?.cycles);
                hip.extend(resample_cycles(&hip_trace, &b)?.cycles);
            }
            if knee.is_empty() {
                return Err(CliError::Numeric(format!(
                    "condition {}: no complete squat cycles",
                    k.condition
                )));
            }
            let n = knee.len();
            let knee = CycleStats::from_cycles(knee)?;
            let hip = CycleStats::from_cycles(hip)?;
            o.result(&format!("{}_cycles", k.condition), n);
            o.result(
                &format!("{}_peak_knee_deg", k.condition),
                peak_flexion(&knee),
            );
            o.result(&format!("{}_peak_hip_deg", k.condition), peak_flexion(&hip));
            curves.push((format!("{}_knee", k.condition), knee));
            curves.push((format!("{}_hip", k.condition), hip));
        }
        let path = out.join("curves.csv");
        let named: Vec<(&str, &CycleStats<f64>)> =
            curves.iter().map(|(n, c)| (n.as_str(), c)).collect();
        write_curves_csv(&named, BufWriter::new(File::create(&path)?))?;
        o.file("curves", path);
    }
    write_json(&out.join("analysis.json"), &o.results)?;
    o.file("report", out.join("analysis.json"));
    Ok(o)
}
