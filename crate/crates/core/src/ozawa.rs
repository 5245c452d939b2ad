//! Root-mean-square noise and disturbance of a probe interaction, in the
//! Heisenberg picture.
//!
//! For an interaction U on object ⊗ probe and an equatorial spin
//! observable M, the meter observable transported back through U is
//! M^out = U†(I ⊗ M)U, while the untouched input observable is
//! A^in = M ⊗ I. The noise of reading M off the probe is
//! ε(ψ) = ⟨ψ⊗ξ|(M^out − A^in)²|ψ⊗ξ⟩^{1/2}; the disturbance of an object
//! observable B is the same functional with B^out = U†(B ⊗ I)U against
//! B^in = B ⊗ I. Both are evaluated as ‖D v‖ with D the Hermitian
//! difference operator.
//!
//! The symbol η is conventionally overloaded (cloner angle vs disturbance);
//! here the cloner angle is always [`crate::machines::ClonerAngle`] and the
//! disturbance is `disturbance_eta`, never mixed.

use num_complex::Complex64;

use crate::error::{CracError, Result};
use crate::geometry::EquatorDirection;
use crate::qcore::{identity, kron2, mat_adjoint, mat_mul, mat_vec, spin_axis_matrix, PureState, UnitaryOp};

/// An input observable and its Heisenberg-picture output partner, both
/// 4×4 Hermitian.
#[derive(Clone, Debug)]
pub struct HeisenbergPair {
    in_op: Vec<Complex64>,
    out_op: Vec<Complex64>,
}

impl HeisenbergPair {
    /// Meter pair for noise: in = M ⊗ I, out = U†(I ⊗ M)U.
    pub fn meter(u: &UnitaryOp, axis: EquatorDirection) -> Self {
        let m = spin_axis_matrix(axis.radians());
        let in_op = kron2(&m, &identity(2));
        let lifted = kron2(&identity(2), &m);
        let out_op = transport(u, &lifted);
        let pair = HeisenbergPair { in_op, out_op };
        debug_assert!(pair.hermitian_within(1e-12));
        pair
    }

    /// Object pair for disturbance: in = B ⊗ I, out = U†(B ⊗ I)U.
    pub fn object(u: &UnitaryOp, axis: EquatorDirection) -> Self {
        let b = spin_axis_matrix(axis.radians());
        let in_op = kron2(&b, &identity(2));
        let out_op = transport(u, &in_op);
        let pair = HeisenbergPair { in_op, out_op };
        debug_assert!(pair.hermitian_within(1e-12));
        pair
    }

    pub fn in_op(&self) -> &[Complex64] {
        &self.in_op
    }

    pub fn out_op(&self) -> &[Complex64] {
        &self.out_op
    }

    fn hermitian_within(&self, tol: f64) -> bool {
        let herm = |m: &[Complex64]| {
            let adj = mat_adjoint(4, m);
            m.iter()
                .zip(&adj)
                .all(|(x, y)| (x - y).norm() <= tol)
        };
        herm(&self.in_op) && herm(&self.out_op)
    }

    /// Root-mean-square difference ⟨v|(out − in)²|v⟩^{1/2} on a product
    /// state v = ψ ⊗ ξ.
    fn rms_difference(&self, psi: &PureState, probe: &PureState) -> Result<f64> {
        if psi.dim() != 2 || probe.dim() != 2 {
            return Err(CracError::contract(
                "object and probe states must each be a single qubit",
            ));
        }
        let v = psi.tensor(probe)?;
        let diff: Vec<Complex64> = self
            .out_op
            .iter()
            .zip(&self.in_op)
            .map(|(o, i)| o - i)
            .collect();
        let w = mat_vec(4, &diff, v.amplitudes());
        Ok(w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
    }

    /// ⟨v|op|v⟩ for a Hermitian 4×4 operator (real by hermiticity).
    fn product_expectation(op: &[Complex64], psi: &PureState, probe: &PureState) -> Result<f64> {
        let v = psi.tensor(probe)?;
        let w = mat_vec(4, op, v.amplitudes());
        let e: Complex64 = v
            .amplitudes()
            .iter()
            .zip(&w)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(e.re)
    }
}

fn transport(u: &UnitaryOp, op: &[Complex64]) -> Vec<Complex64> {
    let ud = mat_adjoint(4, u.data());
    mat_mul(4, &ud, &mat_mul(4, op, u.data()))
}

/// Noise of reading the axis observable off the probe after interaction u.
pub fn noise_epsilon(
    u: &UnitaryOp,
    psi: &PureState,
    axis_a: EquatorDirection,
    probe: &PureState,
) -> Result<f64> {
    HeisenbergPair::meter(u, axis_a).rms_difference(psi, probe)
}

/// Disturbance inflicted by u on the object's axis observable.
pub fn disturbance_eta(
    u: &UnitaryOp,
    psi: &PureState,
    axis_b: EquatorDirection,
    probe: &PureState,
) -> Result<f64> {
    HeisenbergPair::object(u, axis_b).rms_difference(psi, probe)
}

/// First moments ⟨M^out⟩ and ⟨A^in⟩ on ψ ⊗ probe — the unbiasedness pair
/// for the meter readout.
pub fn meter_first_moments(
    u: &UnitaryOp,
    psi: &PureState,
    axis_a: EquatorDirection,
    probe: &PureState,
) -> Result<(f64, f64)> {
    let pair = HeisenbergPair::meter(u, axis_a);
    Ok((
        HeisenbergPair::product_expectation(&pair.out_op, psi, probe)?,
        HeisenbergPair::product_expectation(&pair.in_op, psi, probe)?,
    ))
}
