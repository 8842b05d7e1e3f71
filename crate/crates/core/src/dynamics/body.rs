//! Anthropometry of the reduced sagittal plant.

use crate::error::{invalid, Result};
use crate::num::Real;

/// One rigid segment of the chain.
///
/// `com` is measured along the segment from its lower (distal, for the
/// chain standing on pinned feet) joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub length: T,
    pub mass: T,
    pub com: T,
    /// Moment of inertia about the centre of mass, kg·m².
    pub inertia: T,
}

/// Soft one-sided joint limits, ordered (ankle, knee, hip) in flexion angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointStops<T> {
    pub lower: [T; 3],
    pub upper: [T; 3],
    /// N·m/rad
    pub stiffness: T,
    /// N·m·s/rad
    pub damping: T,
}

impl<T: Real> Default for JointStops<T> {
    fn default() -> Self {
        let deg = |d: f64| T::of(d.to_radians());
        Self {
            lower: [deg(-30.0), deg(0.0), deg(-20.0)],
            upper: [deg(45.0), deg(150.0), deg(120.0)],
            stiffness: T::of(200.0),
            damping: T::of(5.0),
        }
    }
}

/// Body parameters of the lumped, bilaterally symmetric three-link chain
/// (shank pair, thigh pair, head-arms-trunk).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams<T> {
    pub total_mass: T,
    pub height: T,
    pub shank: Segment<T>,
    pub thigh: Segment<T>,
    pub hat: Segment<T>,
    /// m/s², acting along -y. A negative value hangs the chain.
    pub gravity: T,
    pub stops: JointStops<T>,
}

/// Fractions used to scale segments from height and total mass.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Anthropometry {
    pub shank_mass: f64,
    pub thigh_mass: f64,
    pub hat_mass: f64,
    pub shank_length: f64,
    pub thigh_length: f64,
    pub hat_length: f64,
    /// Centre of mass position as a fraction of segment length from the lower joint.
    pub com: f64,
    /// Radius of gyration about the centre of mass as a fraction of segment length.
    pub gyration: f64,
}

impl Default for Anthropometry {
    fn default() -> Self {
        Self {
            shank_mass: 0.093,
            thigh_mass: 0.200,
            hat_mass: 0.678,
            shank_length: 0.246,
            thigh_length: 0.245,
            hat_length: 0.40,
            com: 0.43,
            gyration: 0.3,
        }
    }
}

pub const HEIGHT_RANGE: (f64, f64) = (1.0, 2.2);
pub const MASS_RANGE: (f64, f64) = (30.0, 200.0);

/// Scales the default fraction tables to a subject.
pub fn anthropometric_scale<T: Real>(height: T, mass: T) -> Result<BodyParams<T>> {
    anthropometric_scale_with(height, mass, &Anthropometry::default())
}

pub fn anthropometric_scale_with<T: Real>(
    height: T,
    mass: T,
    table: &Anthropometry,
) -> Result<BodyParams<T>> {
    let h = height.f64();
    let m = mass.f64();
    if !(HEIGHT_RANGE.0..=HEIGHT_RANGE.1).contains(&h) {
        return Err(invalid(
            "height",
            format!("{h} m outside [{}, {}]", HEIGHT_RANGE.0, HEIGHT_RANGE.1),
        ));
    }
    if !(MASS_RANGE.0..=MASS_RANGE.1).contains(&m) {
        return Err(invalid(
            "mass",
            format!("{m} kg outside [{}, {}]", MASS_RANGE.0, MASS_RANGE.1),
        ));
    }
    let segment = |mass_frac: f64, len_frac: f64| {
        let length = height * T::of(len_frac);
        let seg_mass = mass * T::of(mass_frac);
        let k = T::of(table.gyration) * length;
        Segment {
            length,
            mass: seg_mass,
            com: T::of(table.com) * length,
            inertia: seg_mass * k * k,
        }
    };
    let body = BodyParams {
        total_mass: mass,
        height,
        shank: segment(table.shank_mass, table.shank_length),
        thigh: segment(table.thigh_mass, table.thigh_length),
        hat: segment(table.hat_mass, table.hat_length),
        gravity: T::of(9.81),
        stops: JointStops::default(),
    };
    body.validate()?;
    Ok(body)
}

impl<T: Real> BodyParams<T> {
    /// Segments from the ground up.
    pub fn segments(&self) -> [Segment<T>; 3] {
        [self.shank, self.thigh, self.hat]
    }

    pub fn segment_mass(&self) -> T {
        self.shank.mass + self.thigh.mass + self.hat.mass
    }

    pub fn validate(&self) -> Result<()> {
        let names = ["shank", "thigh", "hat"];
        for (seg, name) in self.segments().iter().zip(names) {
            let ok = seg.length > T::zero()
                && seg.mass > T::zero()
                && seg.inertia > T::zero()
                && seg.com.is_finite();
            if !ok {
                return Err(invalid("segment", format!("{name}: {seg:?}")));
            }
        }
        if !(self.total_mass > T::zero()) {
            return Err(invalid("total_mass", "must be positive"));
        }
        // Feet are not part of the chain; their mass is the remainder.
        if self.segment_mass() > self.total_mass * T::of(1.0 + 1e-12) {
            return Err(invalid("total_mass", "segment masses exceed total"));
        }
        if !self.gravity.is_finite() {
            return Err(invalid("gravity", "non-finite"));
        }
        Ok(())
    }

    pub fn with_gravity(mut self, gravity: T) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn with_stops(mut self, stops: JointStops<T>) -> Self {
        self.stops = stops;
        self
    }
}
