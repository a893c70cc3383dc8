//! C ABI over the `qploss` library.
//!
//! Every fallible function returns a [`QplStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`qpl_last_error_message`]. Objects cross the boundary as
//! opaque handles that the caller releases with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use qploss::lossmodel::{self, ResonatorParams};
use qploss::mbcore::{self, GapModel, Material};
use qploss::resfit::{self, ResonanceFit, SweepRecord};
use qploss::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QplStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Domain = 3,
    Precondition = 4,
    NoDip = 5,
    FixedPoint = 6,
    Config = 7,
    Parse = 8,
    Io = 9,
    Analysis = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QplGapModel {
    ConstantDelta0 = 0,
    TanhInterpolation = 1,
}

/// Superconducting film parameters.
pub struct QplMaterial(Material);

/// Result of a notch-resonance fit.
pub struct QplResonanceFit(ResonanceFit);

/// Plain values read from a [`QplResonanceFit`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QplFitValues {
    pub f_r_hz: f64,
    pub q_l: f64,
    pub q_c_abs: f64,
    pub phi0_rad: f64,
    pub q_i: f64,
    pub amplitude: f64,
    pub phase_offset_rad: f64,
    pub delay_s: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QplSurfaceImpedance {
    pub rs_ohm: f64,
    pub ls_henry: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QplStatus {
    match e {
        Error::Domain { .. } => QplStatus::Domain,
        Error::Precondition(_) => QplStatus::Precondition,
        Error::NoDip { .. } => QplStatus::NoDip,
        Error::FixedPoint { .. } => QplStatus::FixedPoint,
        Error::Config(_) => QplStatus::Config,
        Error::Parse { .. } => QplStatus::Parse,
        Error::Io { .. } => QplStatus::Io,
        Error::Analysis(_) => QplStatus::Analysis,
    }
}

struct Fail(QplStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QplStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QplStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QplStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QplStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn material<'a>(m: *const QplMaterial) -> Result<&'a Material, Fail> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("material"))
}

/// Message for the most recent failure on this thread; empty after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn qpl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qpl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a material. `name` is a NUL-terminated UTF-8 string; N0 is per
/// m³ per eV.
///
/// # Safety
/// `name` must be null or a valid C string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_material_new(
    name: *const c_char,
    tc_k: f64,
    n0_per_m3_ev: f64,
    sigma_n_s_per_m: f64,
    gap_model: QplGapModel,
    out: *mut *mut QplMaterial,
) -> QplStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Fail(QplStatus::InvalidString, "name is not UTF-8".into()))?;
        let gap = match gap_model {
            QplGapModel::ConstantDelta0 => GapModel::ConstantDelta0,
            QplGapModel::TanhInterpolation => GapModel::TanhInterpolation,
        };
        let m = Material::new(name, tc_k, n0_per_m3_ev, sigma_n_s_per_m, gap)?;
        write(out, Box::into_raw(Box::new(QplMaterial(m))))
    })
}

/// # Safety
/// `m` must be null or a handle from [`qpl_material_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qpl_material_free(m: *mut QplMaterial) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// σ1/σn at temperature `t_k` and frequency `f_hz`.
///
/// # Safety
/// `m` must be a live material handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_sigma1_ratio(m: *const QplMaterial, t_k: f64, f_hz: f64, out: *mut f64) -> QplStatus {
    guard(|| write(out, mbcore::sigma1_ratio(material(m)?, t_k, f_hz)?))
}

/// σ2/σn at temperature `t_k` and frequency `f_hz`.
///
/// # Safety
/// `m` must be a live material handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_sigma2_ratio(m: *const QplMaterial, t_k: f64, f_hz: f64, out: *mut f64) -> QplStatus {
    guard(|| write(out, mbcore::sigma2_ratio(material(m)?, t_k, f_hz)?))
}

/// Thermal quasiparticle density in µm⁻³.
///
/// # Safety
/// `m` must be a live material handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_nqp_thermal(m: *const QplMaterial, t_k: f64, out: *mut f64) -> QplStatus {
    guard(|| write(out, mbcore::nqp_thermal(material(m)?, t_k)?))
}

/// # Safety
/// `m` must be a live material handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_surface_impedance(
    m: *const QplMaterial,
    t_k: f64,
    f_hz: f64,
    out: *mut QplSurfaceImpedance,
) -> QplStatus {
    guard(|| {
        let zs = mbcore::surface_impedance(material(m)?, t_k, f_hz)?;
        write(
            out,
            QplSurfaceImpedance {
                rs_ohm: zs.rs_ohm,
                ls_henry: zs.ls_henry,
            },
        )
    })
}

unsafe fn resonator(m: *const QplMaterial, f_r_hz: f64, alpha: f64) -> Result<ResonatorParams, Fail> {
    Ok(ResonatorParams::new(f_r_hz, alpha, material(m)?.clone())?)
}

/// Quasiparticle loss of a resonator with kinetic-inductance fraction
/// `alpha`, from the thermal density.
///
/// # Safety
/// `m` must be a live material handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_delta_qp_theory(
    m: *const QplMaterial,
    f_r_hz: f64,
    alpha: f64,
    t_k: f64,
    out: *mut f64,
) -> QplStatus {
    guard(|| write(out, lossmodel::delta_qp_theory(&resonator(m, f_r_hz, alpha)?, t_k)?))
}

/// Quasiparticle density in µm⁻³ implied by a quasiparticle loss.
///
/// # Safety
/// `m` must be a live material handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_nqp_from_delta(
    m: *const QplMaterial,
    f_r_hz: f64,
    alpha: f64,
    t_k: f64,
    delta_qp: f64,
    out: *mut f64,
) -> QplStatus {
    guard(|| write(out, lossmodel::nqp_from_delta(delta_qp, &resonator(m, f_r_hz, alpha)?, t_k)?))
}

/// Photon number 2·Q_l²·P/(|Q_c|·ħ·ω²) at chip-plane power `p_dbm`.
#[no_mangle]
pub extern "C" fn qpl_photon_number(q_l: f64, q_c_abs: f64, f_r_hz: f64, p_dbm: f64) -> f64 {
    resfit::photon_number(q_l, q_c_abs, f_r_hz, p_dbm)
}

/// Fits the notch model to `n` samples of S21 given as separate real and
/// imaginary arrays.
///
/// # Safety
/// The three arrays must each hold `n` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_fit_resonance(
    freqs_hz: *const f64,
    s21_re: *const f64,
    s21_im: *const f64,
    n: usize,
    out: *mut *mut QplResonanceFit,
) -> QplStatus {
    guard(|| {
        if freqs_hz.is_null() || s21_re.is_null() || s21_im.is_null() {
            return Err(null("input array"));
        }
        let f = std::slice::from_raw_parts(freqs_hz, n).to_vec();
        let re = std::slice::from_raw_parts(s21_re, n);
        let im = std::slice::from_raw_parts(s21_im, n);
        let s21 = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        // temperature and power are not used by the fit
        let rec = SweepRecord::new(f, s21, 0.0, 0.0, "ffi")?;
        let fit = resfit::fit_resonance(&rec)?;
        write(out, Box::into_raw(Box::new(QplResonanceFit(fit))))
    })
}

/// # Safety
/// `fit` must be a live fit handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpl_fit_values(fit: *const QplResonanceFit, out: *mut QplFitValues) -> QplStatus {
    guard(|| {
        let fit = &fit.as_ref().ok_or_else(|| null("fit"))?.0;
        write(
            out,
            QplFitValues {
                f_r_hz: fit.f_r_hz,
                q_l: fit.q_l,
                q_c_abs: fit.q_c_abs,
                phi0_rad: fit.phi0_rad,
                q_i: fit.q_i,
                amplitude: fit.background.amplitude,
                phase_offset_rad: fit.background.phase_offset_rad,
                delay_s: fit.background.delay_s,
                residual_norm: fit.fit.residual_norm,
                iterations: fit.fit.iterations,
                converged: fit.fit.converged,
            },
        )
    })
}

/// # Safety
/// `fit` must be null or a handle from [`qpl_fit_resonance`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qpl_fit_free(fit: *mut QplResonanceFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}
