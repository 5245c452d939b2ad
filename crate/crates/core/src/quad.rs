//! Adaptive Simpson quadrature for smooth one-dimensional integrands.

use crate::error::{CracError, Result};

const MAX_DEPTH: u32 = 48;

/// ∫_a^b f with relative tolerance `rel_tol` (taken against the magnitude
/// of the running estimate, floored at 1 to keep near-zero integrals from
/// demanding impossible precision). Fails explicitly instead of returning a
/// silently unconverged value.
pub fn adaptive_simpson(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() || b <= a {
        return Err(CracError::contract("quadrature needs finite b > a"));
    }
    let fa = f(a)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = simpson(a, b, fa, fm, fb);
    let tol = rel_tol * whole.abs().max(1.0);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    // Factor 15 from the Richardson error estimate of composite Simpson.
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(CracError::Quadrature(format!(
            "no convergence on [{a}, {b}] (residual {err:e})"
        )));
    }
    let half_tol = 0.5 * tol;
    Ok(recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, PI};

    #[test]
    fn integrates_trig_exactly_enough() {
        let mut f = |x: f64| Ok(x.sin());
        let v = adaptive_simpson(&mut f, 0.0, PI, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn integrates_exponential() {
        let mut f = |x: f64| Ok(x.exp());
        let v = adaptive_simpson(&mut f, 0.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, E - 1.0, epsilon = 1e-10);
    }

    #[test]
    fn propagates_integrand_errors() {
        let mut f = |_: f64| Err(CracError::contract("boom"));
        assert!(adaptive_simpson(&mut f, 0.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn rejects_empty_interval() {
        let mut f = |x: f64| Ok(x);
        assert!(adaptive_simpson(&mut f, 1.0, 1.0, 1e-9).is_err());
    }
}
