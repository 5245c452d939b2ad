//! Bloch-equator geometry: directions, phase states, the quadrant partition
//! cut by the two measurement axes, and quadrant sampling.
//!
//! Encoding convention: the database bit for axis ŵ is
//! `x_w = 1 − Θ(φ̂·ŵ)` with the Heaviside step taking Θ(0) = 0, so boundary
//! angles (φ̂ ⟂ ŵ) belong to the x_w = 1 side. Because a dot product that is
//! exactly zero in real arithmetic rarely evaluates to exactly zero in
//! floating point (cos of the f64 nearest π/2 is ≈ 6.1e−17), dot products
//! within [`BOUNDARY_SNAP`] of zero are snapped to zero before the step.
//! The boundary therefore behaves as the mathematical convention dictates
//! for angles constructed from π fractions.

use num_complex::Complex64;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use crate::error::{CracError, Result};
use crate::qcore::PureState;

/// Dot products with |φ̂·ŵ| below this snap to exactly zero in the bit
/// encoding, restoring the real-arithmetic boundary semantics.
pub const BOUNDARY_SNAP: f64 = 1e-12;

/// Axis pairs closer than this (mod π) are rejected as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// An angle on the Bloch-sphere equator, normalised to [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquatorDirection {
    angle: f64,
}

impl EquatorDirection {
    /// Normalises into [0, 2π). The input must be finite.
    pub fn new(angle: f64) -> Self {
        assert!(angle.is_finite(), "equator angle must be finite");
        let mut a = angle.rem_euclid(TAU);
        // rem_euclid can round up to the modulus itself for tiny negatives.
        if a >= TAU {
            a -= TAU;
        }
        EquatorDirection { angle: a }
    }

    pub fn radians(self) -> f64 {
        self.angle
    }

    /// This direction rotated by `delta` radians.
    pub fn rotated(self, delta: f64) -> Self {
        EquatorDirection::new(self.angle + delta)
    }

    /// The antipodal direction.
    pub fn antipode(self) -> Self {
        EquatorDirection::new(self.angle + PI)
    }
}

impl Serialize for EquatorDirection {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.angle)
    }
}

impl<'de> Deserialize<'de> for EquatorDirection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = f64::deserialize(d)?;
        if !raw.is_finite() {
            return Err(D::Error::custom("equator angle must be finite"));
        }
        Ok(EquatorDirection::new(raw))
    }
}

/// (|0⟩ + e^{iφ}|1⟩)/√2 — the pure state with equatorial Bloch vector at
/// angle φ.
pub fn phase_state(phi: EquatorDirection) -> PureState {
    PureState::new(vec![
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::from_polar(FRAC_1_SQRT_2, phi.radians()),
    ])
    .expect("phase state is normalised by construction")
}

/// (|0⟩ − e^{iφ}|1⟩)/√2 — orthogonal to [`phase_state`] of the same angle;
/// its Bloch vector points at φ + π.
pub fn orthogonal_state(phi: EquatorDirection) -> PureState {
    PureState::new(vec![
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        -Complex64::from_polar(FRAC_1_SQRT_2, phi.radians()),
    ])
    .expect("orthogonal phase state is normalised by construction")
}

/// Heaviside step with Θ(0) = 0: 1 for z > 0, else 0.
pub fn heaviside(z: f64) -> u8 {
    if z > 0.0 {
        1
    } else {
        0
    }
}

/// The two-bit database value, one bit per measurement axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DatabaseBits {
    pub x_a: u8,
    pub x_b: u8,
}

impl DatabaseBits {
    pub fn new(x_a: u8, x_b: u8) -> Result<Self> {
        if x_a > 1 || x_b > 1 {
            return Err(CracError::contract("database bits must be 0 or 1"));
        }
        Ok(DatabaseBits { x_a, x_b })
    }

    /// Table index in the fixed order 00, 01, 10, 11.
    pub fn index(self) -> usize {
        (2 * self.x_a + self.x_b) as usize
    }

    pub fn from_index(idx: usize) -> Self {
        assert!(idx < 4);
        DatabaseBits {
            x_a: (idx >> 1) as u8,
            x_b: (idx & 1) as u8,
        }
    }

    pub fn complement(self) -> Self {
        DatabaseBits {
            x_a: 1 - self.x_a,
            x_b: 1 - self.x_b,
        }
    }

    /// The bit belonging to channel A (`true`) or B (`false`).
    pub fn bit_for(self, channel_a: bool) -> u8 {
        if channel_a {
            self.x_a
        } else {
            self.x_b
        }
    }
}

/// The two measurement axes cutting the equator into four quadrants.
/// Degenerate (parallel or antiparallel) axes are rejected: the partition
/// would collapse to two arcs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrantPartition {
    axis_a: EquatorDirection,
    axis_b: EquatorDirection,
}

impl QuadrantPartition {
    pub fn new(axis_a: EquatorDirection, axis_b: EquatorDirection) -> Result<Self> {
        let sep = (axis_a.radians() - axis_b.radians()).sin().abs();
        if sep < DEGENERACY_TOL {
            return Err(CracError::contract(format!(
                "axes {} and {} are parallel within {DEGENERACY_TOL}; quadrants degenerate",
                axis_a.radians(),
                axis_b.radians()
            )));
        }
        Ok(QuadrantPartition { axis_a, axis_b })
    }

    pub fn axis_a(&self) -> EquatorDirection {
        self.axis_a
    }

    pub fn axis_b(&self) -> EquatorDirection {
        self.axis_b
    }

    pub fn axis_for(&self, channel_a: bool) -> EquatorDirection {
        if channel_a {
            self.axis_a
        } else {
            self.axis_b
        }
    }
}

/// φ̂·ŵ with the boundary snap applied.
fn snapped_dot(phi: EquatorDirection, axis: EquatorDirection) -> f64 {
    let d = (phi.radians() - axis.radians()).cos();
    if d.abs() < BOUNDARY_SNAP {
        0.0
    } else {
        d
    }
}

/// The database value encoded by an equator angle: x_w = 1 − Θ(φ̂·ŵ).
pub fn database_bits(phi: EquatorDirection, part: &QuadrantPartition) -> DatabaseBits {
    DatabaseBits {
        x_a: 1 - heaviside(snapped_dot(phi, part.axis_a)),
        x_b: 1 - heaviside(snapped_dot(phi, part.axis_b)),
    }
}

/// One quadrant of the partition as a circular arc. The arc covers the
/// angles `normalize(t)` for t ∈ (start, end), with `start` in [0, 2π) and
/// `start < end < start + 2π` (the last arc wraps past 2π).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadrantArc {
    pub bits: DatabaseBits,
    pub start: f64,
    pub end: f64,
}

impl QuadrantArc {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> EquatorDirection {
        EquatorDirection::new(0.5 * (self.start + self.end))
    }
}

/// The four quadrant arcs, indexed by [`DatabaseBits::index`]. The quadrant
/// boundaries are the four angles where φ̂ ⟂ â or φ̂ ⟂ b̂; for a valid
/// partition they are distinct and each arc carries a distinct bit pattern.
pub fn quadrant_arcs(part: &QuadrantPartition) -> Result<[QuadrantArc; 4]> {
    let mut bounds = [
        EquatorDirection::new(part.axis_a.radians() + FRAC_PI_2).radians(),
        EquatorDirection::new(part.axis_a.radians() - FRAC_PI_2).radians(),
        EquatorDirection::new(part.axis_b.radians() + FRAC_PI_2).radians(),
        EquatorDirection::new(part.axis_b.radians() - FRAC_PI_2).radians(),
    ];
    bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut arcs: Vec<QuadrantArc> = Vec::with_capacity(4);
    for i in 0..4 {
        let start = bounds[i];
        let end = if i == 3 { bounds[0] + TAU } else { bounds[i + 1] };
        let probe = EquatorDirection::new(0.5 * (start + end));
        arcs.push(QuadrantArc {
            bits: database_bits(probe, part),
            start,
            end,
        });
    }
    let mut by_index: [Option<QuadrantArc>; 4] = [None; 4];
    for arc in arcs {
        let slot = &mut by_index[arc.bits.index()];
        if slot.is_some() {
            return Err(CracError::contract(
                "quadrant partition produced a repeated bit pattern; axes too close to degenerate",
            ));
        }
        *slot = Some(arc);
    }
    Ok([
        by_index[0].unwrap(),
        by_index[1].unwrap(),
        by_index[2].unwrap(),
        by_index[3].unwrap(),
    ])
}

/// Uniformly sample an angle in the quadrant carrying `bits`. Draws one
/// uniform variate per attempt; an attempt only fails when the sample lands
/// inside the snap band of a boundary, so retries are vanishingly rare.
pub fn sample_in_quadrant(
    bits: DatabaseBits,
    part: &QuadrantPartition,
    rng: &mut impl Rng,
) -> Result<EquatorDirection> {
    let arc = quadrant_arcs(part)?[bits.index()];
    for _attempt in 0..64 {
        let u: f64 = rng.gen();
        let phi = EquatorDirection::new(arc.start + u * arc.length());
        if database_bits(phi, part) == bits {
            return Ok(phi);
        }
    }
    Err(CracError::contract(
        "quadrant sampling failed 64 times in a row; arc inconsistent with encoding",
    ))
}
