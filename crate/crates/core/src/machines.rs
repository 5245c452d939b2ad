//! The probe interaction unitaries: identity, swap, and the economical
//! phase-covariant cloner (PCC).
//!
//! The cloner is defined on the encoded subspace by
//! U|00⟩ = |00⟩ and U|10⟩ = cos η|10⟩ + sin η|01⟩ (object first, probe
//! second). The remaining two columns are a completion choice, not physics:
//! we take U|01⟩ = cos η|01⟩ − sin η|10⟩ and U|11⟩ = |11⟩, which is
//! orthonormal, reduces to the identity at η = 0, and can never influence
//! protocol statistics because the probe always enters in |0⟩ (a test
//! perturbs the completion phase and observes identical statistics).

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::FRAC_PI_2;

use crate::error::{CracError, Result};
use crate::qcore::{OpLabel, UnitaryOp};

/// Cloner interaction angle η ∈ [0, π/2]. Values outside the principal
/// range only relabel outcomes and would make the absolute-value bias
/// formulas ambiguous, so they are rejected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClonerAngle {
    eta: f64,
}

impl ClonerAngle {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() || !(0.0..=FRAC_PI_2).contains(&eta) {
            return Err(CracError::contract(format!(
                "cloner angle {eta} outside [0, π/2]"
            )));
        }
        Ok(ClonerAngle { eta })
    }

    pub fn radians(self) -> f64 {
        self.eta
    }

    /// The symmetric cloner η = π/4.
    pub fn symmetric() -> Self {
        ClonerAngle {
            eta: std::f64::consts::FRAC_PI_4,
        }
    }
}

impl Serialize for ClonerAngle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.eta)
    }
}

impl<'de> Deserialize<'de> for ClonerAngle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = f64::deserialize(d)?;
        ClonerAngle::new(raw).map_err(|e| D::Error::custom(e.to_string()))
    }
}

const Z: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The 4×4 identity.
pub fn identity_op() -> UnitaryOp {
    let m = vec![
        ONE, Z, Z, Z, //
        Z, ONE, Z, Z, //
        Z, Z, ONE, Z, //
        Z, Z, Z, ONE,
    ];
    UnitaryOp::from_matrix(m, OpLabel::Identity).expect("identity is unitary")
}

/// The qubit swap: |o⟩|p⟩ ↦ |p⟩|o⟩.
pub fn swap_op() -> UnitaryOp {
    let m = vec![
        ONE, Z, Z, Z, //
        Z, Z, ONE, Z, //
        Z, ONE, Z, Z, //
        Z, Z, Z, ONE,
    ];
    UnitaryOp::from_matrix(m, OpLabel::Swap).expect("swap is unitary")
}

/// The economical phase-covariant cloner at interaction angle η.
pub fn pcc_op(angle: ClonerAngle) -> UnitaryOp {
    let (s, c) = angle.radians().sin_cos();
    let m = vec![
        ONE, Z, Z, Z, //
        Z, re(c), re(s), Z, //
        Z, re(-s), re(c), Z, //
        Z, Z, Z, ONE,
    ];
    UnitaryOp::from_matrix(m, OpLabel::Pcc(angle.radians())).expect("rotation block is unitary")
}
