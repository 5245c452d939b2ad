//! Dense complex linear algebra for one- and two-qubit systems.
//!
//! Dimensions are fixed at 2 (single qubit) or 4 (object ⊗ probe); matrices
//! are row-major `Vec<Complex64>`. Every public constructor validates its
//! invariants (normalisation, hermiticity, unit trace, positivity,
//! unitarity), so a value of one of these types is always a legal state or
//! operator. Positivity is checked with the in-house Jacobi eigensolver,
//! which is also exposed through [`DensityMatrix::eigenvalues`].

use num_complex::Complex64;

use crate::error::{CracError, Result};

/// Tolerance for structural identities (norms, hermiticity, unitarity).
pub const STRUCT_TOL: f64 = 1e-12;
/// Eigenvalues of a density matrix may undershoot zero by at most this much.
pub const POSITIVITY_SLACK: f64 = 1e-10;

const C_ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const C_ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

// ---------------------------------------------------------------------------
// raw matrix helpers (row-major, square)
// ---------------------------------------------------------------------------

pub(crate) fn mat_mul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![C_ZERO; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == C_ZERO {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub(crate) fn mat_adjoint(n: usize, a: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![C_ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

pub(crate) fn mat_vec(n: usize, a: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![C_ZERO; n];
    for i in 0..n {
        for j in 0..n {
            out[i] += a[i * n + j] * v[j];
        }
    }
    out
}

/// Kronecker product of two 2×2 matrices, as a 4×4 matrix.
pub(crate) fn kron2(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.len(), 4);
    debug_assert_eq!(b.len(), 4);
    let mut out = vec![C_ZERO; 16];
    for ia in 0..2 {
        for ja in 0..2 {
            for ib in 0..2 {
                for jb in 0..2 {
                    out[(2 * ia + ib) * 4 + (2 * ja + jb)] = a[ia * 2 + ja] * b[ib * 2 + jb];
                }
            }
        }
    }
    out
}

pub(crate) fn identity(n: usize) -> Vec<Complex64> {
    let mut out = vec![C_ZERO; n * n];
    for i in 0..n {
        out[i * n + i] = C_ONE;
    }
    out
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn all_finite(data: &[Complex64]) -> bool {
    data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigenvalues of an `n`×`n` Hermitian matrix by cyclic complex Jacobi
/// rotations, sorted ascending. The input must already be Hermitian; only
/// n ∈ {2, 4} occur in this crate, so each sweep is a handful of 4×4
/// multiplies and cost is irrelevant.
pub(crate) fn hermitian_eigenvalues(n: usize, data: &[Complex64]) -> Vec<f64> {
    let mut m = data.to_vec();
    let off = |m: &[Complex64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for _sweep in 0..50 {
        if off(&m) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let h = m[p * n + q];
                if h.norm() <= 1e-18 * scale {
                    continue;
                }
                // Phase out the off-diagonal element, then rotate the real
                // symmetric remainder: tan 2θ = 2|h| / (m_pp − m_qq).
                let phi = h.arg();
                let theta = 0.5 * (2.0 * h.norm()).atan2(m[p * n + p].re - m[q * n + q].re);
                let (s, c) = theta.sin_cos();
                let ep = Complex64::from_polar(1.0, phi / 2.0);
                let em = ep.conj();
                let mut g = identity(n);
                g[p * n + p] = c * ep;
                g[p * n + q] = -s * ep;
                g[q * n + p] = s * em;
                g[q * n + q] = c * em;
                let gd = mat_adjoint(n, &g);
                m = mat_mul(n, &gd, &mat_mul(n, &m, &g));
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

// ---------------------------------------------------------------------------
// states
// ---------------------------------------------------------------------------

/// A normalised pure state of one qubit (dim 2) or two qubits (dim 4).
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    /// Validating constructor: dimension 2 or 4, finite entries, unit norm
    /// within [`STRUCT_TOL`].
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 2 && amps.len() != 4 {
            return Err(CracError::contract(format!(
                "pure state must have dimension 2 or 4, got {}",
                amps.len()
            )));
        }
        if !all_finite(&amps) {
            return Err(CracError::contract("pure state has non-finite amplitude"));
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STRUCT_TOL {
            return Err(CracError::contract(format!(
                "pure state norm {norm} differs from 1 by more than {STRUCT_TOL}"
            )));
        }
        Ok(PureState { amps })
    }

    /// Computational basis state `|idx⟩` of the given dimension.
    pub fn basis(dim: usize, idx: usize) -> Self {
        assert!(dim == 2 || dim == 4);
        assert!(idx < dim);
        let mut amps = vec![C_ZERO; dim];
        amps[idx] = C_ONE;
        PureState { amps }
    }

    /// The two-qubit singlet (|01⟩ − |10⟩)/√2.
    pub fn singlet() -> Self {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState {
            amps: vec![C_ZERO, r, -r, C_ZERO],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Tensor product of two single-qubit states, first ⊗ second.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        if self.dim() != 2 || other.dim() != 2 {
            return Err(CracError::contract(
                "tensor of pure states takes two single-qubit factors",
            ));
        }
        let mut amps = vec![C_ZERO; 4];
        for i in 0..2 {
            for j in 0..2 {
                amps[2 * i + j] = self.amps[i] * other.amps[j];
            }
        }
        Ok(PureState { amps })
    }

    /// |ψ⟩⟨ψ| as a density matrix.
    pub fn density(&self) -> DensityMatrix {
        let n = self.dim();
        let mut data = vec![C_ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix::new(n, data).expect("projector onto a normalised state is a valid density")
    }
}

/// A density matrix of dimension 2 or 4: Hermitian, unit trace, positive
/// semidefinite (eigenvalues ≥ −[`POSITIVITY_SLACK`]).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(CracError::contract(format!(
                "density matrix dimension must be 2 or 4, got {dim}"
            )));
        }
        if data.len() != dim * dim {
            return Err(CracError::contract(format!(
                "density matrix data length {} does not match dim {dim}",
                data.len()
            )));
        }
        if !all_finite(&data) {
            return Err(CracError::contract("density matrix has non-finite entry"));
        }
        let adj = mat_adjoint(dim, &data);
        let herm_dev = max_abs_diff(&data, &adj);
        if herm_dev > STRUCT_TOL {
            return Err(CracError::contract(format!(
                "density matrix is not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        let tr: Complex64 = (0..dim).map(|i| data[i * dim + i]).sum();
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(CracError::contract(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let eig = hermitian_eigenvalues(dim, &data);
        if eig[0] < -POSITIVITY_SLACK {
            return Err(CracError::contract(format!(
                "density matrix has negative eigenvalue {}",
                eig[0]
            )));
        }
        Ok(DensityMatrix { dim, data })
    }

    /// Maximally mixed state I/dim.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut data = vec![C_ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix::new(dim, data).expect("I/d is a valid density")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Real part of the trace (the imaginary part is zero by construction).
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i).re).sum()
    }

    /// tr ρ², equal to 1 exactly when the state is pure.
    pub fn purity(&self) -> f64 {
        let sq = mat_mul(self.dim, &self.data, &self.data);
        (0..self.dim).map(|i| sq[i * self.dim + i].re).sum()
    }

    /// Eigenvalues sorted ascending (Jacobi rotations).
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(self.dim, &self.data)
    }

    /// U ρ U† for a two-qubit unitary.
    pub fn evolve(&self, u: &UnitaryOp) -> Result<DensityMatrix> {
        if self.dim != 4 {
            return Err(CracError::contract(
                "evolve acts on the two-qubit object ⊗ probe state",
            ));
        }
        let ud = mat_adjoint(4, u.data());
        let out = mat_mul(4, u.data(), &mat_mul(4, &self.data, &ud));
        DensityMatrix::new(4, out)
    }

    /// Tensor product of two single-qubit densities, first ⊗ second.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dim != 2 || other.dim != 2 {
            return Err(CracError::contract(
                "tensor of densities takes two single-qubit factors",
            ));
        }
        DensityMatrix::new(4, kron2(&self.data, &other.data))
    }

    /// In-plane Bloch components (x, y) of a single-qubit state:
    /// ρ = (I + xσx + yσy + zσz)/2.
    pub fn bloch_equator(&self) -> Result<(f64, f64)> {
        if self.dim != 2 {
            return Err(CracError::contract("bloch_equator needs a single qubit"));
        }
        let off = self.entry(0, 1);
        Ok((2.0 * off.re, -2.0 * off.im))
    }
}

// ---------------------------------------------------------------------------
// operators
// ---------------------------------------------------------------------------

/// Provenance tag for a two-qubit unitary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpLabel {
    Identity,
    Swap,
    /// Partial cloner with interaction angle η.
    Pcc(f64),
    Custom,
}

/// A 4×4 unitary acting on object ⊗ probe.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOp {
    data: Vec<Complex64>,
    label: OpLabel,
}

impl UnitaryOp {
    /// Validating constructor: max |U†U − I| ≤ [`STRUCT_TOL`].
    pub fn from_matrix(data: Vec<Complex64>, label: OpLabel) -> Result<Self> {
        if data.len() != 16 {
            return Err(CracError::contract("unitary must be 4×4"));
        }
        if !all_finite(&data) {
            return Err(CracError::contract("unitary has non-finite entry"));
        }
        let prod = mat_mul(4, &mat_adjoint(4, &data), &data);
        if max_abs_diff(&prod, &identity(4)) > STRUCT_TOL {
            return Err(CracError::contract("matrix is not unitary within 1e-12"));
        }
        Ok(UnitaryOp { data, label })
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * 4 + j]
    }

    pub fn label(&self) -> OpLabel {
        self.label
    }

    /// U|ψ⟩ for a two-qubit pure state.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if state.dim() != 4 {
            return Err(CracError::contract("unitary applies to two-qubit states"));
        }
        PureState::new(mat_vec(4, &self.data, state.amplitudes()))
    }
}

/// Measurement outcome sign along an axis: ±1 eigenvalue of â·σ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Outcome bit under o = (1 − O)/2: Plus → 0, Minus → 1.
    pub fn bit(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// The spin operator â·σ for an equatorial axis â = (cos θ, sin θ, 0),
/// as a row-major 2×2 matrix: [[0, e^{−iθ}], [e^{iθ}, 0]].
pub fn spin_axis_matrix(theta: f64) -> Vec<Complex64> {
    vec![
        C_ZERO,
        Complex64::from_polar(1.0, -theta),
        Complex64::from_polar(1.0, theta),
        C_ZERO,
    ]
}

/// Rank-one projector (I ± â·σ)/2 onto the ±1 eigenstate of an equatorial
/// spin axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    data: Vec<Complex64>,
    axis: f64,
    sign: Sign,
}

impl Projector {
    pub fn equator(axis: f64, sign: Sign) -> Self {
        let half = Complex64::new(0.5, 0.0);
        let s = Complex64::new(0.5 * sign.value(), 0.0);
        let m = spin_axis_matrix(axis);
        Projector {
            data: vec![half + s * m[0], s * m[1], s * m[2], half + s * m[3]],
            axis,
            sign,
        }
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn axis(&self) -> f64 {
        self.axis
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// The projector onto the opposite outcome of the same axis.
    pub fn complement(&self) -> Projector {
        Projector::equator(self.axis, self.sign.flip())
    }
}

// ---------------------------------------------------------------------------
// measurement
// ---------------------------------------------------------------------------

/// Which subsystem of object ⊗ probe to keep when tracing out the other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of a two-qubit density matrix down to one qubit.
pub fn partial_trace(rho: &DensityMatrix, keep: Keep) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(CracError::contract("partial trace needs a two-qubit state"));
    }
    let mut data = vec![C_ZERO; 4];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = C_ZERO;
            for k in 0..2 {
                s += match keep {
                    Keep::First => rho.entry(2 * i + k, 2 * j + k),
                    Keep::Second => rho.entry(2 * k + i, 2 * k + j),
                };
            }
            data[i * 2 + j] = s;
        }
    }
    DensityMatrix::new(2, data)
}

/// Born probability tr(ρ Π) for a single-qubit state and projector.
/// Clamped to [0, 1]; values outside by more than [`POSITIVITY_SLACK`]
/// are a contract violation.
pub fn born_probability(rho: &DensityMatrix, proj: &Projector) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(CracError::contract("born_probability needs a single qubit"));
    }
    let prod = mat_mul(2, rho.data(), proj.data());
    let p = prod[0].re + prod[3].re;
    if !(-POSITIVITY_SLACK..=1.0 + POSITIVITY_SLACK).contains(&p) {
        return Err(CracError::contract(format!(
            "born probability {p} outside [0,1]"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Expectation value ⟨â·σ⟩ of an equatorial spin axis in a single-qubit
/// state, computed through the two Born probabilities.
pub fn expectation(rho: &DensityMatrix, axis: f64) -> Result<f64> {
    let p_plus = born_probability(rho, &Projector::equator(axis, Sign::Plus))?;
    let p_minus = born_probability(rho, &Projector::equator(axis, Sign::Minus))?;
    Ok(p_plus - p_minus)
}

/// Projective measurement of the second subsystem of a two-qubit state.
/// Returns the outcome probability and the normalised post-measurement
/// two-qubit state, or `None` for the state when the probability vanishes.
pub fn measure_second(
    rho: &DensityMatrix,
    proj: &Projector,
) -> Result<(f64, Option<DensityMatrix>)> {
    if rho.dim() != 4 {
        return Err(CracError::contract("measure_second needs two qubits"));
    }
    let big = kron2(&identity(2), proj.data());
    let sandwiched = mat_mul(4, &big, &mat_mul(4, rho.data(), &big));
    let p: f64 = (0..4).map(|i| sandwiched[i * 4 + i].re).sum();
    if !(-POSITIVITY_SLACK..=1.0 + POSITIVITY_SLACK).contains(&p) {
        return Err(CracError::contract(format!(
            "measurement probability {p} outside [0,1]"
        )));
    }
    let p = p.clamp(0.0, 1.0);
    if p < 1e-14 {
        return Ok((p, None));
    }
    // ΠρΠ is Hermitian exactly; the 1/p renormalisation amplifies the
    // matmul rounding in its anti-Hermitian part (unbounded as p → 0), so
    // keep only the Hermitian part before validating.
    let inv = 1.0 / p;
    let mut post = vec![C_ZERO; 16];
    for i in 0..4 {
        post[i * 4 + i] = Complex64::new(sandwiched[i * 4 + i].re * inv, 0.0);
        for j in (i + 1)..4 {
            let avg = (sandwiched[i * 4 + j] + sandwiched[j * 4 + i].conj()) * (0.5 * inv);
            post[i * 4 + j] = avg;
            post[j * 4 + i] = avg.conj();
        }
    }
    Ok((p, Some(DensityMatrix::new(4, post)?)))
}
