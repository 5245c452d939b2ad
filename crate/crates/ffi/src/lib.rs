//! C ABI over the cracsim core: an opaque config handle, plain `repr(C)`
//! report structs, and integer status codes.
//!
//! Conventions: every function that can fail returns [`CracStatus`]; on
//! anything but `Ok` the output struct is untouched and a message is stored
//! in a thread-local slot readable through [`crac_last_error`]. Handles from
//! `crac_config_new` must be released with `crac_config_free` exactly once.
//! No function keeps a reference past its return; the library has no global
//! state besides the per-thread error string.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cracsim::analysis::{bias_parameters, optimize_gain, GainObjective};
use cracsim::geometry::{phase_state, EquatorDirection, QuadrantPartition};
use cracsim::infotheory::{audit_bounds, BiasParameters};
use cracsim::machines::{identity_op, pcc_op, swap_op, ClonerAngle};
use cracsim::ozawa::{disturbance_eta, meter_first_moments, noise_epsilon};
use cracsim::protocol::{
    exact_statistics, run_trials, BitsPrior, ChannelStats, PhiMode, ProtocolConfig,
};
use cracsim::qcore::PureState;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CracStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was outside its documented domain.
    InvalidArgument = 2,
    /// The computation itself failed; see `crac_last_error`.
    ComputeFailed = 3,
}

/// Opaque protocol configuration handle.
pub struct CracConfig(ProtocolConfig);

/// Channel statistics and bound audit for one configuration.
///
/// `bounds_available` is 0 when the per-channel tables are not guaranteed
/// binary-symmetric (quadrant-uniform phase with a non-uniform prior); the
/// `xi_*` fields are NaN and `within_bounds` is 1 in that case.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CracReport {
    pub success_a: f64,
    pub success_b: f64,
    pub i_a: f64,
    pub i_b: f64,
    pub i_total: f64,
    pub xi_a: f64,
    pub xi_b: f64,
    pub xi_sq_sum: f64,
    pub bounds_available: i32,
    pub within_bounds: i32,
    /// Classical announcement bits consumed; trial count for sampled runs,
    /// zero for exact reports.
    pub classical_bits_used: u64,
}

/// Result of the balanced-design search.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CracOptimum {
    pub eta_star: f64,
    pub delta_star: f64,
    pub value: f64,
}

/// Root-mean-square noise and disturbance of one probe interaction,
/// maximised over an equatorial state grid plus the poles.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CracOzawaReport {
    pub epsilon_aligned: f64,
    pub epsilon_max: f64,
    pub disturbance_max: f64,
    pub meter_moment_gap_max: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

/// Copy the last error message of the calling thread into `buf` as a
/// NUL-terminated string (truncating to `cap`). Returns the full message
/// length in bytes, excluding the NUL; 0 means no error has been recorded.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (length query).
#[no_mangle]
pub unsafe extern "C" fn crac_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Crate version as a static NUL-terminated string; never freed by the
/// caller.
#[no_mangle]
pub extern "C" fn crac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Allocate a configuration with the built-in baseline settings.
#[no_mangle]
pub extern "C" fn crac_config_new() -> *mut CracConfig {
    Box::into_raw(Box::new(CracConfig(ProtocolConfig::baseline())))
}

/// Release a configuration handle. Null is a no-op.
///
/// # Safety
/// `cfg` must be null or a pointer from `crac_config_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crac_config_free(cfg: *mut CracConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn with_config<R>(
    cfg: *mut CracConfig,
    f: impl FnOnce(&mut ProtocolConfig) -> Result<R, CracStatus>,
) -> CracStatus {
    let Some(handle) = cfg.as_mut() else {
        set_error("config handle is null");
        return CracStatus::NullPointer;
    };
    match f(&mut handle.0) {
        Ok(_) => CracStatus::Ok,
        Err(status) => status,
    }
}

fn invalid(e: impl std::fmt::Display) -> CracStatus {
    set_error(e.to_string());
    CracStatus::InvalidArgument
}

/// Set both measurement axes (radians). Fails if the partition they induce
/// is degenerate.
///
/// # Safety
/// `cfg` must be a live handle from `crac_config_new`.
#[no_mangle]
pub unsafe extern "C" fn crac_config_set_axes(
    cfg: *mut CracConfig,
    axis_a: f64,
    axis_b: f64,
) -> CracStatus {
    with_config(cfg, |c| {
        if !axis_a.is_finite() || !axis_b.is_finite() {
            return Err(invalid("axes must be finite"));
        }
        let a = EquatorDirection::new(axis_a);
        let b = EquatorDirection::new(axis_b);
        QuadrantPartition::new(a, b).map_err(invalid)?;
        c.axis_a = a;
        c.axis_b = b;
        Ok(())
    })
}

/// Set the cloner angle in [0, pi/2].
///
/// # Safety
/// `cfg` must be a live handle from `crac_config_new`.
#[no_mangle]
pub unsafe extern "C" fn crac_config_set_eta(cfg: *mut CracConfig, eta: f64) -> CracStatus {
    with_config(cfg, |c| {
        c.cloner_eta = ClonerAngle::new(eta).map_err(invalid)?;
        Ok(())
    })
}

/// Encode with the fixed phase `phi` (radians) every trial.
///
/// # Safety
/// `cfg` must be a live handle from `crac_config_new`.
#[no_mangle]
pub unsafe extern "C" fn crac_config_set_phi_fixed(cfg: *mut CracConfig, phi: f64) -> CracStatus {
    with_config(cfg, |c| {
        if !phi.is_finite() {
            return Err(invalid("phi must be finite"));
        }
        c.phi_mode = PhiMode::Fixed {
            angle: EquatorDirection::new(phi),
        };
        Ok(())
    })
}

/// Sample the phase uniformly inside the drawn quadrant every trial.
///
/// # Safety
/// `cfg` must be a live handle from `crac_config_new`.
#[no_mangle]
pub unsafe extern "C" fn crac_config_set_phi_uniform(cfg: *mut CracConfig) -> CracStatus {
    with_config(cfg, |c| {
        c.phi_mode = PhiMode::UniformQuadrant;
        Ok(())
    })
}

/// Set the database prior (p00, p01, p10, p11); must sum to one.
///
/// # Safety
/// `cfg` must be a live handle from `crac_config_new`.
#[no_mangle]
pub unsafe extern "C" fn crac_config_set_prior(
    cfg: *mut CracConfig,
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
) -> CracStatus {
    with_config(cfg, |c| {
        let prior = BitsPrior([p00, p01, p10, p11]);
        prior.validate().map_err(invalid)?;
        c.bits_prior = prior;
        Ok(())
    })
}

/// Set the Monte Carlo trial count.
///
/// # Safety
/// `cfg` must be a live handle from `crac_config_new`.
#[no_mangle]
pub unsafe extern "C" fn crac_config_set_trials(cfg: *mut CracConfig, trials: u64) -> CracStatus {
    with_config(cfg, |c| {
        c.trials = trials;
        Ok(())
    })
}

/// Set the deterministic seed.
///
/// # Safety
/// `cfg` must be a live handle from `crac_config_new`.
#[no_mangle]
pub unsafe extern "C" fn crac_config_set_seed(cfg: *mut CracConfig, seed: u64) -> CracStatus {
    with_config(cfg, |c| {
        c.seed = seed;
        Ok(())
    })
}

fn bias_for(cfg: &ProtocolConfig, stats: &ChannelStats) -> Result<Option<BiasParameters>, String> {
    match cfg.phi_mode {
        PhiMode::Fixed { angle } => {
            let part = cfg.partition().map_err(|e| e.to_string())?;
            bias_parameters(&part, angle, cfg.cloner_eta)
                .map(Some)
                .map_err(|e| e.to_string())
        }
        PhiMode::UniformQuadrant if cfg.bits_prior == BitsPrior::uniform() => {
            let s_a = stats.joint_a.success_probability();
            let s_b = stats.joint_b.success_probability();
            BiasParameters::new((2.0 * s_a - 1.0).max(0.0), (2.0 * s_b - 1.0).max(0.0))
                .map(Some)
                .map_err(|e| e.to_string())
        }
        PhiMode::UniformQuadrant => Ok(None),
    }
}

fn fill_report(
    cfg: &ProtocolConfig,
    stats: &ChannelStats,
    exact: &ChannelStats,
    bits_used: u64,
) -> Result<CracReport, String> {
    let gain = stats.information();
    let exact_gain = exact.information();
    let (xi_a, xi_b, xi_sq_sum, available, within) = match bias_for(cfg, exact)? {
        Some(bias) => {
            let ledger = audit_bounds(&exact_gain, &bias, 1e-9);
            (
                bias.xi_a,
                bias.xi_b,
                bias.xi_sq_sum(),
                1,
                i32::from(ledger.within_bounds),
            )
        }
        None => (f64::NAN, f64::NAN, f64::NAN, 0, 1),
    };
    Ok(CracReport {
        success_a: stats.joint_a.success_probability(),
        success_b: stats.joint_b.success_probability(),
        i_a: gain.i_a,
        i_b: gain.i_b,
        i_total: gain.total,
        xi_a,
        xi_b,
        xi_sq_sum,
        bounds_available: available,
        within_bounds: within,
        classical_bits_used: bits_used,
    })
}

unsafe fn report_entry(
    cfg: *const CracConfig,
    out: *mut CracReport,
    compute: impl FnOnce(&ProtocolConfig) -> Result<CracReport, String>,
) -> CracStatus {
    let Some(handle) = cfg.as_ref() else {
        set_error("config handle is null");
        return CracStatus::NullPointer;
    };
    if out.is_null() {
        set_error("output pointer is null");
        return CracStatus::NullPointer;
    }
    let result = catch_unwind(AssertUnwindSafe(|| compute(&handle.0)));
    match result {
        Ok(Ok(report)) => {
            out.write(report);
            CracStatus::Ok
        }
        Ok(Err(msg)) => {
            set_error(msg);
            CracStatus::ComputeFailed
        }
        Err(_) => {
            set_error("internal panic");
            CracStatus::ComputeFailed
        }
    }
}

/// Exact (integrated, noise-free) statistics and bound audit.
///
/// # Safety
/// `cfg` must be a live handle; `out` must point to a writable report.
#[no_mangle]
pub unsafe extern "C" fn crac_exact_report(
    cfg: *const CracConfig,
    out: *mut CracReport,
) -> CracStatus {
    report_entry(cfg, out, |c| {
        let exact = exact_statistics(c).map_err(|e| e.to_string())?;
        fill_report(c, &exact, &exact, 0)
    })
}

/// Seeded Monte Carlo statistics; the bound audit is still evaluated on the
/// exact tables (the bounds are statements about the distribution, not the
/// sample).
///
/// # Safety
/// `cfg` must be a live handle; `out` must point to a writable report.
#[no_mangle]
pub unsafe extern "C" fn crac_sampled_report(
    cfg: *const CracConfig,
    out: *mut CracReport,
) -> CracStatus {
    report_entry(cfg, out, |c| {
        let (_, stats) = run_trials(c).map_err(|e| e.to_string())?;
        let exact = exact_statistics(c).map_err(|e| e.to_string())?;
        let bits = stats.classical_bits_used;
        fill_report(c, &stats, &exact, bits)
    })
}

/// Balanced design point for the axes `(axis_a, axis_b)`.
/// `objective` 0 maximises the squared-bias budget, 1 the total mutual
/// information.
///
/// # Safety
/// `out` must point to a writable `CracOptimum`.
#[no_mangle]
pub unsafe extern "C" fn crac_optimize(
    axis_a: f64,
    axis_b: f64,
    objective: i32,
    out: *mut CracOptimum,
) -> CracStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return CracStatus::NullPointer;
    }
    let obj = match objective {
        0 => GainObjective::XiSqSum,
        1 => GainObjective::MutualInfoTotal,
        other => {
            return invalid(format!("objective {other} is not 0 or 1"));
        }
    };
    if !axis_a.is_finite() || !axis_b.is_finite() {
        return invalid("axes must be finite");
    }
    let run = catch_unwind(|| -> Result<(f64, f64, f64), String> {
        let part = QuadrantPartition::new(
            EquatorDirection::new(axis_a),
            EquatorDirection::new(axis_b),
        )
        .map_err(|e| e.to_string())?;
        optimize_gain(&part, obj).map_err(|e| e.to_string())
    });
    match run {
        Ok(Ok((eta_star, delta_star, value))) => {
            out.write(CracOptimum {
                eta_star,
                delta_star,
                value,
            });
            CracStatus::Ok
        }
        Ok(Err(msg)) => {
            set_error(msg);
            CracStatus::ComputeFailed
        }
        Err(_) => {
            set_error("internal panic");
            CracStatus::ComputeFailed
        }
    }
}

/// Noise/disturbance report for a probe interaction: `unitary` 0 = swap,
/// 1 = identity, 2 = partial cloner with angle `eta` (ignored otherwise).
/// `axis` is the observable direction in radians.
///
/// # Safety
/// `out` must point to a writable `CracOzawaReport`.
#[no_mangle]
pub unsafe extern "C" fn crac_ozawa_report(
    unitary: i32,
    eta: f64,
    axis: f64,
    out: *mut CracOzawaReport,
) -> CracStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return CracStatus::NullPointer;
    }
    if !axis.is_finite() {
        return invalid("axis must be finite");
    }
    let op = match unitary {
        0 => swap_op(),
        1 => identity_op(),
        2 => match ClonerAngle::new(eta) {
            Ok(angle) => pcc_op(angle),
            Err(e) => return invalid(e),
        },
        other => return invalid(format!("unitary {other} is not 0, 1, or 2")),
    };
    let axis = EquatorDirection::new(axis);
    let run = catch_unwind(|| -> Result<CracOzawaReport, String> {
        let probe = PureState::basis(2, 0);
        let n = 64usize;
        let mut states: Vec<PureState> = (0..n)
            .map(|k| {
                phase_state(EquatorDirection::new(
                    std::f64::consts::TAU * k as f64 / n as f64,
                ))
            })
            .collect();
        states.push(PureState::basis(2, 0));
        states.push(PureState::basis(2, 1));
        let mut eps_max: f64 = 0.0;
        let mut dist_max: f64 = 0.0;
        let mut gap_max: f64 = 0.0;
        for psi in &states {
            eps_max = eps_max.max(noise_epsilon(&op, psi, axis, &probe).map_err(|e| e.to_string())?);
            dist_max =
                dist_max.max(disturbance_eta(&op, psi, axis, &probe).map_err(|e| e.to_string())?);
            let (m_out, a_in) =
                meter_first_moments(&op, psi, axis, &probe).map_err(|e| e.to_string())?;
            gap_max = gap_max.max((m_out - a_in).abs());
        }
        let aligned = phase_state(axis);
        Ok(CracOzawaReport {
            epsilon_aligned: noise_epsilon(&op, &aligned, axis, &probe).map_err(|e| e.to_string())?,
            epsilon_max: eps_max,
            disturbance_max: dist_max,
            meter_moment_gap_max: gap_max,
        })
    });
    match run {
        Ok(Ok(report)) => {
            out.write(report);
            CracStatus::Ok
        }
        Ok(Err(msg)) => {
            set_error(msg);
            CracStatus::ComputeFailed
        }
        Err(_) => {
            set_error("internal panic");
            CracStatus::ComputeFailed
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn fresh() -> *mut CracConfig {
        let cfg = crac_config_new();
        assert!(!cfg.is_null());
        cfg
    }

    #[test]
    fn version_is_nul_terminated_semver() {
        let ptr = crac_version();
        let text = unsafe { std::ffi::CStr::from_ptr(ptr) }.to_str().unwrap();
        assert_eq!(text, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn exact_report_matches_library() {
        let cfg = fresh();
        let mut report = std::mem::MaybeUninit::<CracReport>::uninit();
        let status = unsafe { crac_exact_report(cfg, report.as_mut_ptr()) };
        assert_eq!(status, CracStatus::Ok);
        let report = unsafe { report.assume_init() };

        let base = ProtocolConfig::baseline();
        let exact = exact_statistics(&base).unwrap();
        let gain = exact.information();
        assert!((report.i_total - gain.total).abs() < 1e-12);
        assert!((report.success_a - exact.joint_a.success_probability()).abs() < 1e-12);
        assert_eq!(report.bounds_available, 1);
        assert_eq!(report.within_bounds, 1);
        assert!(report.xi_sq_sum <= 1.0 + 1e-9);
        unsafe { crac_config_free(cfg) };
    }

    #[test]
    fn sampled_report_tracks_exact_within_mc_noise() {
        let cfg = fresh();
        unsafe {
            assert_eq!(crac_config_set_trials(cfg, 20_000), CracStatus::Ok);
            assert_eq!(crac_config_set_seed(cfg, 42), CracStatus::Ok);
        }
        let mut sampled = std::mem::MaybeUninit::<CracReport>::uninit();
        let mut exact = std::mem::MaybeUninit::<CracReport>::uninit();
        unsafe {
            assert_eq!(crac_sampled_report(cfg, sampled.as_mut_ptr()), CracStatus::Ok);
            assert_eq!(crac_exact_report(cfg, exact.as_mut_ptr()), CracStatus::Ok);
        }
        let (sampled, exact) = unsafe { (sampled.assume_init(), exact.assume_init()) };
        assert_eq!(sampled.classical_bits_used, 20_000);
        assert_eq!(exact.classical_bits_used, 0);
        // 4σ binomial noise at n = 2e4.
        let se = 4.0 * (0.25f64 / 20_000.0).sqrt();
        assert!((sampled.success_a - exact.success_a).abs() < se);
        assert!((sampled.success_b - exact.success_b).abs() < se);
        unsafe { crac_config_free(cfg) };
    }

    #[test]
    fn setters_validate_their_domains() {
        let cfg = fresh();
        unsafe {
            assert_eq!(crac_config_set_eta(cfg, -0.1), CracStatus::InvalidArgument);
            assert_eq!(crac_config_set_eta(cfg, FRAC_PI_4), CracStatus::Ok);
            assert_eq!(
                crac_config_set_axes(cfg, 0.0, 0.0),
                CracStatus::InvalidArgument
            );
            assert_eq!(crac_config_set_axes(cfg, 0.0, FRAC_PI_2), CracStatus::Ok);
            assert_eq!(
                crac_config_set_prior(cfg, 0.5, 0.5, 0.5, 0.5),
                CracStatus::InvalidArgument
            );
            assert_eq!(
                crac_config_set_prior(cfg, 0.25, 0.25, 0.25, 0.25),
                CracStatus::Ok
            );
            assert_eq!(crac_config_set_phi_fixed(cfg, f64::NAN), CracStatus::InvalidArgument);
            assert_eq!(crac_config_set_phi_uniform(cfg), CracStatus::Ok);
        }
        let mut n = vec![0u8; 128];
        let len = unsafe { crac_last_error(n.as_mut_ptr().cast(), n.len()) };
        assert!(len > 0, "an error message should be recorded");
        unsafe { crac_config_free(cfg) };
    }

    #[test]
    fn null_handles_are_rejected_not_dereferenced() {
        let mut report = std::mem::MaybeUninit::<CracReport>::uninit();
        let status = unsafe { crac_exact_report(std::ptr::null(), report.as_mut_ptr()) };
        assert_eq!(status, CracStatus::NullPointer);
        let cfg = fresh();
        let status = unsafe { crac_exact_report(cfg, std::ptr::null_mut()) };
        assert_eq!(status, CracStatus::NullPointer);
        unsafe {
            assert_eq!(crac_config_set_eta(std::ptr::null_mut(), 0.1), CracStatus::NullPointer);
            crac_config_free(std::ptr::null_mut());
            crac_config_free(cfg);
        }
    }

    #[test]
    fn optimize_reports_the_balanced_point() {
        let mut out = std::mem::MaybeUninit::<CracOptimum>::uninit();
        let status = unsafe { crac_optimize(0.0, FRAC_PI_2, 0, out.as_mut_ptr()) };
        assert_eq!(status, CracStatus::Ok);
        let opt = unsafe { out.assume_init() };
        assert!((opt.eta_star - FRAC_PI_4).abs() < 1e-6);
        assert!((opt.delta_star - FRAC_PI_4).abs() < 1e-6);
        assert!((opt.value - 0.5).abs() < 1e-9);
        let status = unsafe { crac_optimize(0.0, FRAC_PI_2, 7, out.as_mut_ptr()) };
        assert_eq!(status, CracStatus::InvalidArgument);
    }

    #[test]
    fn ozawa_swap_reaches_the_projective_couple() {
        let mut out = std::mem::MaybeUninit::<CracOzawaReport>::uninit();
        let status = unsafe { crac_ozawa_report(0, 0.0, 0.0, out.as_mut_ptr()) };
        assert_eq!(status, CracStatus::Ok);
        let swap = unsafe { out.assume_init() };
        assert!(swap.epsilon_aligned < 1e-9, "swap reads the axis exactly");
        let status = unsafe { crac_ozawa_report(1, 0.0, 0.0, out.as_mut_ptr()) };
        assert_eq!(status, CracStatus::Ok);
        let identity = unsafe { out.assume_init() };
        assert!(identity.disturbance_max < 1e-9, "identity disturbs nothing");
        let status = unsafe { crac_ozawa_report(9, 0.0, 0.0, out.as_mut_ptr()) };
        assert_eq!(status, CracStatus::InvalidArgument);
    }
}
