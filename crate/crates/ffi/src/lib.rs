//! C ABI over `abguard`.
//!
//! Every fallible function returns an [`AbgStatus`] and writes its result
//! through an out-pointer. On failure [`abg_last_error`] describes the most
//! recent error on the calling thread. Panics never cross the boundary; they
//! surface as `ABG_STATUS_INTERNAL`.
//!
//! Optional floating-point outputs are NaN when absent.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use abguard::sim::assign_bucket;
use abguard::srm::{
    sprt_step, Direction, ExpectedSplit, MonitorState, Outcome, SprtConfig, SrmSnapshot, Variant,
};
use abguard::stats::{chi_square_cdf, chi_square_critical, chi_square_quantile, chi_square_sf, DegreesOfFreedom};
use abguard::validate::{validate, BucketCounts, Method, ValidationConfig};
use abguard::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbgStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Shape = 3,
    Sequencing = 4,
    Spec = 5,
    Validation = 6,
    InvalidUtf8 = 7,
    Internal = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> AbgStatus {
    match err {
        Error::Domain(_) => AbgStatus::Domain,
        Error::Shape(_) => AbgStatus::Shape,
        Error::Sequencing(_) => AbgStatus::Sequencing,
        Error::Spec(_) => AbgStatus::Spec,
        _ => AbgStatus::Validation,
    }
}

fn guard(f: impl FnOnce() -> Result<(), AbgStatus>) -> AbgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AbgStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            AbgStatus::Internal
        }
    }
}

fn fail(err: Error) -> AbgStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null(name: &str) -> AbgStatus {
    set_error(format!("`{name}` is null"));
    AbgStatus::NullPointer
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `abg_*` call on the same thread.
#[no_mangle]
pub extern "C" fn abg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn abg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), AbgStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

fn dof(df: u32) -> Result<DegreesOfFreedom, AbgStatus> {
    DegreesOfFreedom::new(df).map_err(fail)
}

/// # Safety
/// `out` must be valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn abg_chi_square_cdf(x: f64, df: u32, out: *mut f64) -> AbgStatus {
    guard(|| write_out(out, chi_square_cdf(x, dof(df)?).map_err(fail)?))
}

/// # Safety
/// `out` must be valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn abg_chi_square_sf(x: f64, df: u32, out: *mut f64) -> AbgStatus {
    guard(|| write_out(out, chi_square_sf(x, dof(df)?).map_err(fail)?))
}

/// Lower-tail quantile: the `x` with `cdf(x) = p`.
///
/// # Safety
/// `out` must be valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn abg_chi_square_quantile(p: f64, df: u32, out: *mut f64) -> AbgStatus {
    guard(|| write_out(out, chi_square_quantile(p, dof(df)?).map_err(fail)?))
}

/// Upper-tail critical value: the `x` with `sf(x) = alpha`.
///
/// # Safety
/// `out` must be valid for writing one `double`.
#[no_mangle]
pub unsafe extern "C" fn abg_chi_square_critical(alpha: f64, df: u32, out: *mut f64) -> AbgStatus {
    guard(|| write_out(out, chi_square_critical(alpha, dof(df)?).map_err(fail)?))
}

unsafe fn utf8<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, AbgStatus> {
    if ptr.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        AbgStatus::InvalidUtf8
    })
}

/// Bucket of `user_id` on the plane keyed by `seed`.
///
/// # Safety
/// `user_id` and `seed` must be NUL-terminated strings; `out` must be valid
/// for writing one `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn abg_assign_bucket(
    user_id: *const c_char,
    seed: *const c_char,
    buckets: u32,
    out: *mut u32,
) -> AbgStatus {
    guard(|| {
        let user_id = utf8(user_id, "user_id")?;
        let seed = utf8(seed, "seed")?;
        write_out(out, assign_bucket(user_id, seed, buckets).map_err(fail)?)
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbgMethod {
    PsiK = 0,
    PearsonChi2 = 1,
    Ks = 2,
    Ad = 3,
}

impl From<AbgMethod> for Method {
    fn from(m: AbgMethod) -> Self {
        match m {
            AbgMethod::PsiK => Method::PsiK,
            AbgMethod::PearsonChi2 => Method::PearsonChi2,
            AbgMethod::Ks => Method::Ks,
            AbgMethod::Ad => Method::Ad,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbgValidation {
    pub statistic: f64,
    /// NaN when the test has no critical value or was not evaluated.
    pub threshold: f64,
    /// NaN when not evaluated.
    pub p_value: f64,
    pub alert: bool,
    /// False when the total is below the minimum sample size.
    pub evaluated: bool,
    pub conservative_for_discrete: bool,
    pub total: u64,
}

/// Uniformity test of `len` bucket counts. `k` is used by `ABG_METHOD_PSI_K` only.
///
/// # Safety
/// `counts` must point to `len` readable `uint64_t`; `out` must be valid for
/// writing one `AbgValidation`.
#[no_mangle]
pub unsafe extern "C" fn abg_validate_uniform(
    counts: *const u64,
    len: usize,
    method: AbgMethod,
    alpha: f64,
    k: u32,
    out: *mut AbgValidation,
) -> AbgStatus {
    guard(|| {
        if counts.is_null() {
            return Err(null("counts"));
        }
        let counts = BucketCounts::new(std::slice::from_raw_parts(counts, len).to_vec()).map_err(fail)?;
        let config = ValidationConfig::new(method.into(), alpha, k).map_err(fail)?;
        let r = validate(&counts, &config).map_err(fail)?;
        write_out(
            out,
            AbgValidation {
                statistic: r.statistic,
                threshold: r.threshold.unwrap_or(f64::NAN),
                p_value: r.p_value.unwrap_or(f64::NAN),
                alert: r.alert,
                evaluated: r.evaluated(),
                conservative_for_discrete: r.conservative_for_discrete,
                total: r.total,
            },
        )
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbgVariant {
    Gaussian = 0,
    Exact = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbgOutcome {
    Continue = 0,
    AlertHigh = 1,
    AlertLow = 2,
    AcceptNull = 3,
    NotEvaluated = 4,
    AlreadyFired = 5,
}

impl From<Outcome> for AbgOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Continue => AbgOutcome::Continue,
            Outcome::AlertHigh => AbgOutcome::AlertHigh,
            Outcome::AlertLow => AbgOutcome::AlertLow,
            Outcome::AcceptNull => AbgOutcome::AcceptNull,
            Outcome::NotEvaluated => AbgOutcome::NotEvaluated,
            Outcome::AlreadyFired => AbgOutcome::AlreadyFired,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbgDirection {
    None = 0,
    High = 1,
    Low = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbgDecision {
    pub day: u32,
    /// NaN when not evaluated.
    pub t_a: f64,
    pub t_b: f64,
    pub upper_threshold: f64,
    /// `-inf` when beta is 0.
    pub lower_threshold: f64,
    pub outcome: AbgOutcome,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbgMonitorState {
    pub fired: bool,
    pub has_first_alert_day: bool,
    pub first_alert_day: u32,
    pub direction: AbgDirection,
    pub has_last_day: bool,
    pub last_day: u32,
}

/// Sequential SRM monitor for one experiment.
pub struct AbgMonitor {
    split: ExpectedSplit,
    config: SprtConfig,
    state: MonitorState,
}

/// Create a monitor. `delta <= 0` selects the default tolerance.
///
/// # Safety
/// `out` must be valid for writing one pointer. The handle must be released
/// with [`abg_monitor_free`].
#[no_mangle]
pub unsafe extern "C" fn abg_monitor_new(
    r_t: f64,
    r_c: f64,
    variant: AbgVariant,
    alpha: f64,
    beta: f64,
    delta: f64,
    min_total: u64,
    out: *mut *mut AbgMonitor,
) -> AbgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let split = ExpectedSplit::new(r_t, r_c).map_err(fail)?;
        let variant = match variant {
            AbgVariant::Gaussian => Variant::Gaussian,
            AbgVariant::Exact => Variant::Exact,
        };
        let delta = (delta > 0.0).then_some(delta);
        let config = SprtConfig::new(variant, alpha, beta, delta)
            .map_err(fail)?
            .with_min_total(min_total);
        config.resolve_delta(&split).map_err(fail)?;
        let monitor = Box::new(AbgMonitor {
            split,
            config,
            state: MonitorState::default(),
        });
        out.write(Box::into_raw(monitor));
        Ok(())
    })
}

/// Fold one cumulative snapshot into the monitor. Days must strictly increase.
///
/// # Safety
/// `monitor` must come from [`abg_monitor_new`] and not be freed; `out` must
/// be valid for writing one `AbgDecision`.
#[no_mangle]
pub unsafe extern "C" fn abg_monitor_step(
    monitor: *mut AbgMonitor,
    day: u32,
    x_t: u64,
    x_c: u64,
    out: *mut AbgDecision,
) -> AbgStatus {
    guard(|| {
        let Some(m) = monitor.as_mut() else {
            return Err(null("monitor"));
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let snapshot = SrmSnapshot::new(day, x_t, x_c);
        let (next, d) = sprt_step(m.state, &snapshot, &m.split, &m.config).map_err(fail)?;
        m.state = next;
        write_out(
            out,
            AbgDecision {
                day: d.day,
                t_a: d.t_a.unwrap_or(f64::NAN),
                t_b: d.t_b.unwrap_or(f64::NAN),
                upper_threshold: d.upper_threshold,
                lower_threshold: d.lower_threshold,
                outcome: d.outcome.into(),
            },
        )
    })
}

/// # Safety
/// `monitor` must come from [`abg_monitor_new`] and not be freed; `out` must
/// be valid for writing one `AbgMonitorState`.
#[no_mangle]
pub unsafe extern "C" fn abg_monitor_state(
    monitor: *const AbgMonitor,
    out: *mut AbgMonitorState,
) -> AbgStatus {
    guard(|| {
        let Some(m) = monitor.as_ref() else {
            return Err(null("monitor"));
        };
        let s = m.state;
        write_out(
            out,
            AbgMonitorState {
                fired: s.fired,
                has_first_alert_day: s.first_alert_day.is_some(),
                first_alert_day: s.first_alert_day.unwrap_or(0),
                direction: match s.direction {
                    None => AbgDirection::None,
                    Some(Direction::High) => AbgDirection::High,
                    Some(Direction::Low) => AbgDirection::Low,
                },
                has_last_day: s.last_day.is_some(),
                last_day: s.last_day.unwrap_or(0),
            },
        )
    })
}

/// Release a monitor. Null is ignored.
///
/// # Safety
/// `monitor` must come from [`abg_monitor_new`] and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn abg_monitor_free(monitor: *mut AbgMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}
