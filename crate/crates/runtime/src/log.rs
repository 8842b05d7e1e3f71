//! Session log and event CSV files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::thread::JoinHandle;

use crossbeam_channel::{bounded, Sender};
use squat_core::ecn::JOINT_NAMES;
use squat_telemetry::ControlMode;

use crate::error::{Error, Result};

const FIELDS: usize = 3 + 12 + 2;

/// One control tick as logged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub t_ms: u64,
    pub mode: ControlMode,
    pub seq: u32,
    /// rad, after offset correction
    pub angles: [f64; 4],
    /// rad/s; `None` until the central difference has two past samples
    pub velocities: Option<[f64; 4]>,
    /// N·m
    pub torque: [f64; 4],
    pub scale: f64,
    pub missed_deadlines: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub t_ms: u64,
    pub event: String,
    pub detail: String,
}

pub fn log_header() -> Vec<String> {
    let mut h = vec!["t_ms".to_string(), "mode".into(), "seq".into()];
    for suffix in ["angle", "velocity", "torque"] {
        h.extend(JOINT_NAMES.iter().map(|j| format!("{j}_{suffix}")));
    }
    h.push("scale".into());
    h.push("missed_deadline_count".into());
    h
}

pub const EVENT_HEADER: [&str; 3] = ["t_ms", "event", "detail"];

impl LogRecord {
    fn fields(&self) -> Vec<String> {
        let mut f = Vec::with_capacity(FIELDS);
        f.push(self.t_ms.to_string());
        f.push(self.mode.name().to_string());
        f.push(self.seq.to_string());
        f.extend(self.angles.iter().map(|v| v.to_string()));
        match self.velocities {
            Some(v) => f.extend(v.iter().map(|v| v.to_string())),
            None => f.extend(std::iter::repeat_n(String::new(), 4)),
        }
        f.extend(self.torque.iter().map(|v| v.to_string()));
        f.push(self.scale.to_string());
        f.push(self.missed_deadlines.to_string());
        f
    }

    fn from_fields(r: &csv::StringRecord, line: u64) -> Result<Self> {
        let bad = |reason: String| Error::Log { line, reason };
        if r.len() != FIELDS {
            return Err(bad(format!("{} fields, expected {FIELDS}", r.len())));
        }
        let num = |i: usize| -> Result<f64> {
            r[i].parse::<f64>()
                .map_err(|_| bad(format!("column {} is not a number: {:?}", i + 1, &r[i])))
        };
        let int = |i: usize| -> Result<u64> {
            r[i].parse::<u64>()
                .map_err(|_| bad(format!("column {} is not an integer: {:?}", i + 1, &r[i])))
        };
        let mode = ControlMode::from_name(&r[1])
            .ok_or_else(|| bad(format!("unknown mode {:?}", &r[1])))?;
        let quad = |start: usize| -> Result<[f64; 4]> {
            Ok([
                num(start)?,
                num(start + 1)?,
                num(start + 2)?,
                num(start + 3)?,
            ])
        };
        let velocities = if (7..11).all(|i| r[i].is_empty()) {
            None
        } else {
            Some(quad(7)?)
        };
        Ok(Self {
            t_ms: int(0)?,
            mode,
            seq: u32::try_from(int(2)?).map_err(|_| bad("seq out of range".into()))?,
            angles: quad(3)?,
            velocities,
            torque: quad(11)?,
            scale: num(15)?,
            missed_deadlines: u32::try_from(int(16)?)
                .map_err(|_| bad("missed_deadline_count out of range".into()))?,
        })
    }
}

/// Parses a session log. Line numbers in errors are 1-based file lines.
pub fn read_session_log<R: Read>(input: R) -> Result<Vec<LogRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => {
            return Err(Error::Log {
                line: 1,
                reason: "empty file".into(),
            })
        }
        Some(h) => h?,
    };
    if header.iter().ne(log_header().iter().map(String::as_str)) {
        return Err(Error::Log {
            line: 1,
            reason: "header does not match the session log layout".into(),
        });
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        out.push(LogRecord::from_fields(&row, line)?);
    }
    if out.is_empty() {
        return Err(Error::Log {
            line: 2,
            reason: "no records".into(),
        });
    }
    Ok(out)
}

pub fn load_session_log(path: impl AsRef<Path>) -> Result<Vec<LogRecord>> {
    read_session_log(File::open(path)?)
}

pub fn write_session_log<W: Write>(records: &[LogRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(log_header())?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events<R: Read>(input: R) -> Result<Vec<EventRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let t_ms = row[0].parse().map_err(|_| Error::Log {
            line,
            reason: "bad t_ms".into(),
        })?;
        out.push(EventRecord {
            t_ms,
            event: row[1].to_string(),
            detail: row[2].to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionPaths {
    pub log: PathBuf,
    pub events: PathBuf,
}

impl SessionPaths {
    /// `session.csv` and `events.csv` inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            log: dir.join("session.csv"),
            events: dir.join("events.csv"),
        }
    }
}

enum Msg {
    Tick(LogRecord),
    Event(EventRecord),
}

/// Buffered writer on its own thread.
pub struct SessionWriter {
    tx: Option<Sender<Msg>>,
    handle: Option<JoinHandle<Result<()>>>,
}

impl SessionWriter {
    pub fn create(paths: &SessionPaths) -> Result<Self> {
        let mut log = csv::Writer::from_writer(BufWriter::new(File::create(&paths.log)?));
        let mut events = csv::Writer::from_writer(BufWriter::new(File::create(&paths.events)?));
        log.write_record(log_header())?;
        events.write_record(EVENT_HEADER)?;
        let (tx, rx) = bounded::<Msg>(4096);
        let handle = std::thread::spawn(move || -> Result<()> {
            for m in rx {
                match m {
                    Msg::Tick(r) => log.write_record(r.fields())?,
                    Msg::Event(e) => {
                        events.write_record([e.t_ms.to_string(), e.event, e.detail])?
                    }
                }
            }
            log.flush()?;
            events.flush()?;
            Ok(())
        });
        Ok(Self {
            tx: Some(tx),
            handle: Some(handle),
        })
    }

    fn send(&self, m: Msg) -> Result<()> {
        match &self.tx {
            Some(tx) if tx.send(m).is_ok() => Ok(()),
            _ => Err(Error::Writer("writer thread exited".into())),
        }
    }

    pub fn tick(&self, r: LogRecord) -> Result<()> {
        self.send(Msg::Tick(r))
    }

    pub fn event(&self, t_ms: u64, event: &str, detail: impl Into<String>) -> Result<()> {
        self.send(Msg::Event(EventRecord {
            t_ms,
            event: event.to_string(),
            detail: detail.into(),
        }))
    }

    /// Flushes both files and reports the writer's first error.
    pub fn finish(mut self) -> Result<()> {
        self.close()
    }

    fn close(&mut self) -> Result<()> {
        self.tx.take();
        match self.handle.take() {
            Some(h) => h
                .join()
                .map_err(|_| Error::Writer("writer thread panicked".into()))?,
            None => Ok(()),
        }
    }
}

impl Drop for SessionWriter {
    fn drop(&mut self) {
        let _ = self.close();
    }
}
