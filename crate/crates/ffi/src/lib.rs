//! C ABI for the `sublinear` crate.
//!
//! Conventions:
//! - every function returns an [`SlStatus`]; results go through out-pointers
//! - on failure, [`sl_last_error`] returns a message for the calling thread
//! - objects are opaque handles, released with the matching `*_free`
//! - strings returned by the library are released with [`sl_string_free`]
//!
//! Test functions are passed as a C callback plus an opaque `user_data`
//! pointer, together with a Lipschitz constant and a bound (which may be
//! `INFINITY`). The callback is only invoked during the call that receives it.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sublinear::envelope::{EnvelopeConfig, EnvelopeReport, TimeSeries};
use sublinear::lln_sim::{self, MeanPolicy, NoiseSpec, SimConfig};
use sublinear::mle::{self, SampleSet};
use sublinear::{BoundedLipschitzFn, Error, GridSpec, MaximalDist, ScenarioFamily};

/// Status code returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    /// A test function returned a non-finite value.
    EvaluationFailed = 3,
    /// Not enough observations for the requested window configuration.
    InsufficientData = 4,
    /// Malformed input data (bad JSON, non-finite samples, ...).
    DataError = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Scalar test function: `f(x, user_data)`.
pub type SlScalarFn = Option<unsafe extern "C" fn(x: f64, user_data: *mut c_void) -> f64>;

/// Event predicate: nonzero means `x` belongs to the event.
pub type SlPredicate = Option<unsafe extern "C" fn(x: f64, user_data: *mut c_void) -> i32>;

/// Values for the `noise` argument of [`sl_second_moment_upper`] and
/// [`sl_rate_check_csv`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlNoise {
    None = 0,
    Uniform = 1,
    TwoPoint = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SlMaximalEval {
    pub value: f64,
    pub argmax: f64,
    pub error_bound: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SlMleResult {
    pub mu_lo_hat: f64,
    pub mu_hi_hat: f64,
    pub delta: f64,
    pub n: usize,
}

/// Opaque scenario family.
pub struct SlFamily(ScenarioFamily);

/// Opaque envelope report.
pub struct SlEnvelope(EnvelopeReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

static VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::Argument(_) | Error::Simulation { .. } => SlStatus::InvalidArgument,
        Error::Evaluation { .. } => SlStatus::EvaluationFailed,
        Error::Length { .. } => SlStatus::InsufficientData,
        _ => SlStatus::DataError,
    }
}

struct Fail(SlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard<F>(body: F) -> SlStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SlStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal error: {msg}"));
            SlStatus::Internal
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Raw user pointer carried into the closure; the caller guarantees it
/// stays valid and may be used from the calling thread for the call.
#[derive(Clone, Copy)]
struct UserData(*mut c_void);
unsafe impl Send for UserData {}
unsafe impl Sync for UserData {}

fn wrap_fn(
    f: SlScalarFn,
    user: *mut c_void,
    lipschitz: f64,
    bound: f64,
) -> Result<BoundedLipschitzFn, Fail> {
    let f = f.ok_or_else(|| null("function"))?;
    let user = UserData(user);
    let g = BoundedLipschitzFn::new(
        move |x| {
            let u = user;
            unsafe { f(x, u.0) }
        },
        lipschitz,
        bound,
    )?;
    Ok(g)
}

fn noise_spec(kind: i32, a: f64) -> Result<NoiseSpec, Fail> {
    Ok(match kind {
        k if k == SlNoise::None as i32 => NoiseSpec::None,
        k if k == SlNoise::Uniform as i32 => NoiseSpec::uniform(a)?,
        k if k == SlNoise::TwoPoint as i32 => NoiseSpec::two_point(a)?,
        k => {
            return Err(Fail(
                SlStatus::InvalidArgument,
                format!("unknown noise kind {k}"),
            ))
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a family from JSON: an array of `{"atoms": [[point, weight], ...]}`.
#[no_mangle]
pub unsafe extern "C" fn sl_family_from_json(
    json: *const c_char,
    out_family: *mut *mut SlFamily,
) -> SlStatus {
    guard(|| {
        let slot = out(out_family, "out_family")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(SlStatus::DataError, e.to_string()))?;
        let fam = ScenarioFamily::from_json(text)?;
        *slot = Box::into_raw(Box::new(SlFamily(fam)));
        Ok(())
    })
}

/// Family of Dirac measures at `points`.
#[no_mangle]
pub unsafe extern "C" fn sl_family_diracs(
    points: *const f64,
    len: usize,
    out_family: *mut *mut SlFamily,
) -> SlStatus {
    guard(|| {
        let slot = out(out_family, "out_family")?;
        let fam = ScenarioFamily::diracs(slice(points, len, "points")?)?;
        *slot = Box::into_raw(Box::new(SlFamily(fam)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sl_family_free(family: *mut SlFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

#[no_mangle]
pub unsafe extern "C" fn sl_family_len(family: *const SlFamily, out_len: *mut usize) -> SlStatus {
    guard(|| {
        let fam = family.as_ref().ok_or_else(|| null("family"))?;
        *out(out_len, "out_len")? = fam.0.len();
        Ok(())
    })
}

/// Upper expectation over the family; `out_index` (optional) receives the
/// index of the maximizing measure.
#[no_mangle]
pub unsafe extern "C" fn sl_family_expect(
    family: *const SlFamily,
    f: SlScalarFn,
    user_data: *mut c_void,
    lipschitz: f64,
    bound: f64,
    out_value: *mut f64,
    out_index: *mut usize,
) -> SlStatus {
    guard(|| {
        let fam = family.as_ref().ok_or_else(|| null("family"))?;
        let value = out(out_value, "out_value")?;
        let g = wrap_fn(f, user_data, lipschitz, bound)?;
        let r = fam.0.sublinear_expect(&g)?;
        *value = r.value;
        if let Some(i) = out_index.as_mut() {
            *i = r.argmax_index;
        }
        Ok(())
    })
}

/// Upper probability of the event described by `pred`.
#[no_mangle]
pub unsafe extern "C" fn sl_family_capacity(
    family: *const SlFamily,
    pred: SlPredicate,
    user_data: *mut c_void,
    out_value: *mut f64,
) -> SlStatus {
    guard(|| {
        let fam = family.as_ref().ok_or_else(|| null("family"))?;
        let value = out(out_value, "out_value")?;
        let pred = pred.ok_or_else(|| null("pred"))?;
        *value = fam.0.capacity(|x| unsafe { pred(x, user_data) != 0 });
        Ok(())
    })
}

/// E^[f(X)] for X maximal on `[mu_lo, mu_hi]`, by grid search with the
/// given step (plus local refinement when `refine` is nonzero).
#[no_mangle]
pub unsafe extern "C" fn sl_maximal_eval(
    mu_lo: f64,
    mu_hi: f64,
    f: SlScalarFn,
    user_data: *mut c_void,
    lipschitz: f64,
    bound: f64,
    step: f64,
    refine: i32,
    out_eval: *mut SlMaximalEval,
) -> SlStatus {
    guard(|| {
        let slot = out(out_eval, "out_eval")?;
        let d = MaximalDist::new(mu_lo, mu_hi)?;
        let mut g = GridSpec::new(step)?;
        g.refine = refine != 0;
        let r = d.eval_maximal(&wrap_fn(f, user_data, lipschitz, bound)?, &g)?;
        *slot = SlMaximalEval {
            value: r.value,
            argmax: r.argmax,
            error_bound: r.error_bound,
        };
        Ok(())
    })
}

/// Distance from `x` to `[mu_lo, mu_hi]`.
#[no_mangle]
pub unsafe extern "C" fn sl_interval_distance(
    mu_lo: f64,
    mu_hi: f64,
    x: f64,
    out_value: *mut f64,
) -> SlStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        if !x.is_finite() {
            return Err(Fail(
                SlStatus::InvalidArgument,
                format!("x = {x} is not finite"),
            ));
        }
        *slot = MaximalDist::new(mu_lo, mu_hi)?.interval_distance(x);
        Ok(())
    })
}

/// Sample minimum and maximum.
#[no_mangle]
pub unsafe extern "C" fn sl_mle_estimate(
    values: *const f64,
    len: usize,
    out_result: *mut SlMleResult,
) -> SlStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        let s = SampleSet::new(slice(values, len, "values")?.to_vec())?;
        let r = mle::mle_estimate(&s);
        *slot = SlMleResult {
            mu_lo_hat: r.mu_lo_hat,
            mu_hi_hat: r.mu_hi_hat,
            delta: r.delta,
            n: r.n,
        };
        Ok(())
    })
}

/// 1 if every sample lies in `[mu_lo, mu_hi]`, else 0.
#[no_mangle]
pub unsafe extern "C" fn sl_likelihood(
    values: *const f64,
    len: usize,
    mu_lo: f64,
    mu_hi: f64,
    out_value: *mut u8,
) -> SlStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let s = SampleSet::new(slice(values, len, "values")?.to_vec())?;
        *slot = mle::likelihood(&s, mu_lo, mu_hi)?;
        Ok(())
    })
}

/// Upper second moment E^[X_1^2] of the mean interval plus noise.
#[no_mangle]
pub unsafe extern "C" fn sl_second_moment_upper(
    mu_lo: f64,
    mu_hi: f64,
    noise: i32,
    half_width: f64,
    out_value: *mut f64,
) -> SlStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let d = MaximalDist::new(mu_lo, mu_hi)?;
        *slot = lln_sim::second_moment_upper(&d, &noise_spec(noise, half_width)?);
        Ok(())
    })
}

/// Convergence-rate table as CSV text (header line included), using constant
/// policies at both endpoints and the midpoint and the alternating policy.
/// Release the string with [`sl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sl_rate_check_csv(
    mu_lo: f64,
    mu_hi: f64,
    noise: i32,
    half_width: f64,
    n_max: usize,
    reps: usize,
    seed: u64,
    out_csv: *mut *mut c_char,
) -> SlStatus {
    guard(|| {
        let slot = out(out_csv, "out_csv")?;
        let d = MaximalDist::new(mu_lo, mu_hi)?;
        let noise = noise_spec(noise, half_width)?;
        let policies = [
            MeanPolicy::Constant(mu_lo),
            MeanPolicy::Constant(0.5 * (mu_lo + mu_hi)),
            MeanPolicy::Constant(mu_hi),
            MeanPolicy::Periodic(vec![mu_lo, mu_hi]),
        ];
        let cfg = SimConfig::new(n_max, reps, seed)?;
        let report =
            lln_sim::rate_check(&d, &policies, &noise, &cfg, &lln_sim::log_schedule(n_max))?;
        let mut text = String::from(lln_sim::SimReport::CSV_HEADER);
        text.push('\n');
        for row in report.to_csv_rows() {
            text.push_str(&row);
            text.push('\n');
        }
        *slot = CString::new(text)
            .map_err(|e| Fail(SlStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Rolling-window variance envelope at forecast index `t_index`; pass a
/// negative `t_index` to use the series length.
#[no_mangle]
pub unsafe extern "C" fn sl_envelope_compute(
    values: *const f64,
    len: usize,
    window: usize,
    num_windows: usize,
    demean: i32,
    t_index: i64,
    out_envelope: *mut *mut SlEnvelope,
) -> SlStatus {
    guard(|| {
        let slot = out(out_envelope, "out_envelope")?;
        let series = TimeSeries::new(slice(values, len, "values")?.to_vec(), None)?;
        let cfg = EnvelopeConfig::new(window, num_windows, demean != 0)?;
        let t = usize::try_from(t_index).ok();
        let report = EnvelopeReport::compute(&series, &cfg, t)?;
        *slot = Box::into_raw(Box::new(SlEnvelope(report)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sl_envelope_free(envelope: *mut SlEnvelope) {
    if !envelope.is_null() {
        drop(Box::from_raw(envelope));
    }
}

#[no_mangle]
pub unsafe extern "C" fn sl_envelope_bounds(
    envelope: *const SlEnvelope,
    out_sigma_lo_sq: *mut f64,
    out_sigma_hi_sq: *mut f64,
) -> SlStatus {
    guard(|| {
        let env = envelope.as_ref().ok_or_else(|| null("envelope"))?;
        *out(out_sigma_lo_sq, "out_sigma_lo_sq")? = env.0.sigma_lo_sq;
        *out(out_sigma_hi_sq, "out_sigma_hi_sq")? = env.0.sigma_hi_sq;
        Ok(())
    })
}

/// Number of windows in the report.
#[no_mangle]
pub unsafe extern "C" fn sl_envelope_len(
    envelope: *const SlEnvelope,
    out_len: *mut usize,
) -> SlStatus {
    guard(|| {
        let env = envelope.as_ref().ok_or_else(|| null("envelope"))?;
        *out(out_len, "out_len")? = env.0.per_window.len();
        Ok(())
    })
}

/// Lag `j` and local variance of the `i`-th window (0-based).
#[no_mangle]
pub unsafe extern "C" fn sl_envelope_window(
    envelope: *const SlEnvelope,
    i: usize,
    out_j: *mut usize,
    out_sigma_sq: *mut f64,
) -> SlStatus {
    guard(|| {
        let env = envelope.as_ref().ok_or_else(|| null("envelope"))?;
        let &(j, s) = env.0.per_window.get(i).ok_or_else(|| {
            Fail(
                SlStatus::InvalidArgument,
                format!("window {i} out of range (have {})", env.0.per_window.len()),
            )
        })?;
        *out(out_j, "out_j")? = j;
        *out(out_sigma_sq, "out_sigma_sq")? = s;
        Ok(())
    })
}
