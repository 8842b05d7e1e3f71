//! `ECN1` parameter files and dataset CSV interchange.
//!
//! Layout: `b"ECN1"`, `u32` layer count, `(rows, cols)` per layer as `u32`,
//! then per layer the row-major `f32` weights followed by the biases, then
//! the CRC-32 of all float bytes. Everything little-endian.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::loss::TrainingSample;
use super::mlp::{Layer, MlpParams};
use super::state::JOINT_NAMES;
use crate::error::{invalid, Error, Result};
use crate::num::Real;

pub const MAGIC: &[u8; 3] = b"ECN";
pub const VERSION: u8 = b'1';
const MAX_LAYERS: u32 = 64;
const MAX_WIDTH: u32 = 1 << 16;

fn format_err(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Format {
        field,
        reason: reason.into(),
    }
}

/// Serializes at `f32` precision.
pub fn encode_params<T: Real>(psi: &MlpParams<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * psi.layers.len() + 4 * psi.num_params() + 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(psi.layers.len() as u32).to_le_bytes());
    for l in &psi.layers {
        let (rows, cols) = l.w.dim();
        out.extend_from_slice(&(rows as u32).to_le_bytes());
        out.extend_from_slice(&(cols as u32).to_le_bytes());
    }
    let start = out.len();
    for l in &psi.layers {
        for v in l.w.iter().chain(l.b.iter()) {
            out.extend_from_slice(&(v.f64() as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_params(bytes: &[u8]) -> Result<MlpParams<f32>> {
    if bytes.len() < 8 {
        return Err(format_err(
            "length",
            format!("{} bytes is shorter than the header", bytes.len()),
        ));
    }
    if &bytes[0..3] != MAGIC {
        return Err(format_err("magic", format!("{:?}", &bytes[0..4])));
    }
    if bytes[3] != VERSION {
        return Err(format_err("version", format!("{:?}", bytes[3] as char)));
    }
    let count = read_u32(bytes, 4);
    if count == 0 || count > MAX_LAYERS {
        return Err(format_err("layer count", count.to_string()));
    }
    let header = 8 + 8 * count as usize;
    if bytes.len() < header {
        return Err(format_err(
            "length",
            format!("{} bytes, header needs {header}", bytes.len()),
        ));
    }
    let mut shapes = Vec::with_capacity(count as usize);
    let mut floats = 0usize;
    for i in 0..count as usize {
        let rows = read_u32(bytes, 8 + 8 * i);
        let cols = read_u32(bytes, 12 + 8 * i);
        if rows == 0 || cols == 0 || rows > MAX_WIDTH || cols > MAX_WIDTH {
            return Err(format_err("shape", format!("layer {i}: {rows}x{cols}")));
        }
        if let Some(&(prev_rows, _)) = shapes.last() {
            if cols != prev_rows {
                return Err(format_err(
                    "shape",
                    format!("layer {i} takes {cols} inputs after {prev_rows} outputs"),
                ));
            }
        }
        shapes.push((rows, cols));
        floats += rows as usize * cols as usize + rows as usize;
    }
    let expected = header + 4 * floats + 4;
    if bytes.len() != expected {
        return Err(format_err(
            "length",
            format!("{} bytes, expected {expected}", bytes.len()),
        ));
    }
    let body = &bytes[header..expected - 4];
    let stored = read_u32(bytes, expected - 4);
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(format_err(
            "checksum",
            format!("stored {stored:08x}, computed {actual:08x}"),
        ));
    }
    let mut values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")));
    let mut layers = Vec::with_capacity(shapes.len());
    for (rows, cols) in shapes {
        let (rows, cols) = (rows as usize, cols as usize);
        let w: Vec<f32> = values.by_ref().take(rows * cols).collect();
        let b: Vec<f32> = values.by_ref().take(rows).collect();
        layers.push(Layer {
            w: Array2::from_shape_vec((rows, cols), w).expect("sized above"),
            b: Array1::from(b),
        });
    }
    let psi = MlpParams { layers };
    if !psi.is_finite() {
        return Err(format_err("values", "non-finite parameter"));
    }
    Ok(psi)
}

pub fn save_params<T: Real>(psi: &MlpParams<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_params(psi))?;
    Ok(())
}

pub fn load_params(path: impl AsRef<Path>) -> Result<MlpParams<f32>> {
    decode_params(&std::fs::read(path)?)
}

/// CRC-32 of the serialized file without its trailing checksum, a compact
/// identity for manifests.
pub fn params_checksum<T: Real>(psi: &MlpParams<T>) -> u32 {
    let bytes = encode_params(psi);
    crc32fast::hash(&bytes[..bytes.len() - 4])
}

pub fn write_dataset_csv<W: Write>(data: &[TrainingSample<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = data.first().map_or(0, |s| s.s_e.len());
    let mut header: Vec<String> = (0..dim).map(|i| format!("s{i}")).collect();
    header.extend(JOINT_NAMES.iter().map(|j| format!("tau_{j}")));
    w.write_record(&header)?;
    for s in data {
        if s.s_e.len() != dim {
            return Err(invalid("dataset", "inconsistent input lengths"));
        }
        let row: Vec<String> = s
            .s_e
            .iter()
            .chain(&s.tau_d)
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<TrainingSample<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let cols = r.headers()?.len();
    if cols < 5 {
        return Err(invalid("dataset", format!("{cols} columns")));
    }
    let dim = cols - 4;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid("dataset", format!("row {}: {e}", line + 2)))?;
        out.push(TrainingSample {
            s_e: vals[..dim].to_vec(),
            tau_d: [vals[dim], vals[dim + 1], vals[dim + 2], vals[dim + 3]],
        });
    }
    Ok(out)
}
