//! Timestamped angle history with filtered central-difference velocities.

use squat_core::ecn::{JointSample, HISTORY};

/// Ring capacity: the network history plus the two samples a central
/// difference needs.
pub const CAPACITY: usize = HISTORY + 2;
/// Velocity low-pass cutoff, Hz.
pub const CUTOFF_HZ: f64 = 6.0;
/// Nominal sampling rate of the filter design, Hz.
pub const SAMPLE_HZ: f64 = 100.0;

/// Second-order Butterworth low-pass from the bilinear transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    x: [f64; 2],
    y: [f64; 2],
}

impl Biquad {
    pub fn butterworth(cutoff_hz: f64, sample_hz: f64) -> Self {
        let k = (std::f64::consts::PI * cutoff_hz / sample_hz).tan();
        let sqrt2 = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + sqrt2 * k + k * k);
        let b0 = k * k * norm;
        Self {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - sqrt2 * k + k * k) * norm],
            x: [0.0; 2],
            y: [0.0; 2],
        }
    }

    /// Sets the filter at steady state on `v`.
    pub fn reset(&mut self, v: f64) {
        self.x = [v; 2];
        self.y = [v; 2];
    }

    pub fn filter(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.b[1] * self.x[0] + self.b[2] * self.x[1]
            - self.a[0] * self.y[0]
            - self.a[1] * self.y[1];
        self.x = [x, self.x[0]];
        self.y = [y, self.y[0]];
        y
    }

    /// Gain at zero frequency.
    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / (1.0 + self.a[0] + self.a[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    t_ms: u64,
    angles: [f64; 4],
    /// Filtered velocity, rad/s; `None` for the first two samples.
    velocity: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("sample at {t_ms} ms does not follow {last_ms} ms")]
pub struct NonMonotonic {
    pub t_ms: u64,
    pub last_ms: u64,
}

/// The last [`CAPACITY`] angle samples (hipL, hipR, kneeL, kneeR) and their
/// velocities.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    entries: Vec<Entry>,
    filters: [Biquad; 4],
    primed: bool,
    velocities_seen: usize,
    rejected: u64,
}

impl Default for HistoryBuffer {
    fn default() -> Self {
        Self::new()
    }
}

impl HistoryBuffer {
    pub fn new() -> Self {
        Self {
            entries: Vec::with_capacity(CAPACITY + 1),
            filters: [Biquad::butterworth(CUTOFF_HZ, SAMPLE_HZ); 4],
            primed: false,
            velocities_seen: 0,
            rejected: 0,
        }
    }

    /// Appends a sample. Velocity is `(θ[k] - θ[k-2]) / (t[k] - t[k-2])`,
    /// low-passed; the filter starts at steady state on the first value.
    pub fn ingest(&mut self, angles: [f64; 4], t_ms: u64) -> Result<(), NonMonotonic> {
        if let Some(last) = self.entries.last() {
            if t_ms <= last.t_ms {
                self.rejected += 1;
                return Err(NonMonotonic {
                    t_ms,
                    last_ms: last.t_ms,
                });
            }
        }
        let n = self.entries.len();
        let velocity = (n >= 2).then(|| {
            let old = &self.entries[n - 2];
            let dt = (t_ms - old.t_ms) as f64 * 1e-3;
            std::array::from_fn(|j| {
                let raw = (angles[j] - old.angles[j]) / dt;
                if !self.primed {
                    self.filters[j].reset(raw);
                }
                self.filters[j].filter(raw)
            })
        });
        if velocity.is_some() {
            self.primed = true;
            self.velocities_seen += 1;
        }
        if n == CAPACITY {
            self.entries.remove(0);
        }
        self.entries.push(Entry {
            t_ms,
            angles,
            velocity,
        });
        Ok(())
    }

    /// Enough velocity samples for a full network history.
    pub fn is_ready(&self) -> bool {
        self.velocities_seen >= HISTORY
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_time(&self) -> Option<u64> {
        self.entries.last().map(|e| e.t_ms)
    }

    pub fn latest_angles(&self) -> Option<[f64; 4]> {
        self.entries.last().map(|e| e.angles)
    }

    /// Velocity of the newest sample, if available.
    pub fn latest_velocity(&self) -> Option<[f64; 4]> {
        self.entries.last().and_then(|e| e.velocity)
    }

    /// The newest [`HISTORY`] samples with velocities, oldest first;
    /// `None` until ready.
    pub fn samples(&self) -> Option<Vec<JointSample<f64>>> {
        if !self.is_ready() {
            return None;
        }
        let start = self.entries.len() - HISTORY;
        Some(
            self.entries[start..]
                .iter()
                .map(|e| JointSample {
                    angles: e.angles,
                    velocities: e.velocity.expect("ready entries carry velocities"),
                })
                .collect(),
        )
    }
}
