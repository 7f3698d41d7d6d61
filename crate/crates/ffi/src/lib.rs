//! C ABI over the engagement-lab library.
//!
//! Every fallible call returns an [`ElStatus`]; on failure a message is kept
//! per thread and can be read with [`el_last_error_message`]. Objects are
//! handed out as opaque pointers and must be released with the matching
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use engagement_lab::gamma::{gamma_engagement, gamma_utility, t_star, GammaPoint};
use engagement_lab::population::{participation_threshold, population_metrics, Population};
use engagement_lab::sim::{simulate_batch, SimConfig};
use engagement_lab::tree::{optimize_branching, solve_tree, TreeConfig};
use engagement_lab::{ContentParams, Error, ModelPoint, ValueDist};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    NoFeasiblePoint = 3,
    Numerical = 4,
    TheoremViolation = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: ElStatus, msg: impl Into<String>) -> ElStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> ElStatus {
    let status = match &e {
        Error::InvalidParameter { .. } => ElStatus::InvalidArgument,
        Error::NoFeasiblePoint => ElStatus::NoFeasiblePoint,
        Error::TheoremViolation(_) => ElStatus::TheoremViolation,
        Error::Numerical(_) => ElStatus::Numerical,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), ElStatus>) -> ElStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ElStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(ElStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: engagement_lab::Result<T>) -> Result<T, ElStatus> {
    r.map_err(from_error)
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, ElStatus> {
    // SAFETY: callers pass either null or a pointer obtained from this library
    // (or a valid caller-owned value); null is rejected here.
    unsafe { p.as_ref() }.ok_or_else(|| fail(ElStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, ElStatus> {
    // SAFETY: as for `non_null`; the caller owns the pointed-to storage.
    unsafe { p.as_mut() }.ok_or_else(|| fail(ElStatus::NullPointer, format!("{what} is null")))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn el_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn el_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string has no interior nul"),
    };
    VERSION.as_ptr()
}

/// Opaque content point with its outside option.
pub struct ElModelPoint {
    inner: ModelPoint,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ElEvaluation {
    pub g_s: f64,
    pub g_t: f64,
    pub e_s: f64,
    pub e_t: f64,
    pub participates: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ElSimSummary {
    pub mean_t: f64,
    pub mean_s: f64,
    pub se_t: f64,
    pub se_s: f64,
    pub replications: u64,
    pub seed: u64,
}

/// Creates a point; release it with `el_model_point_free`.
#[no_mangle]
pub extern "C" fn el_model_point_new(p: f64, q: f64, v_bar: f64, w: f64, out: *mut *mut ElModelPoint) -> ElStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = check(ModelPoint::from_values(p, q, v_bar, w))?;
        *out = Box::into_raw(Box::new(ElModelPoint { inner }));
        Ok(())
    })
}

/// Releases a point. Null is ignored.
///
/// # Safety
/// `point` must come from `el_model_point_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn el_model_point_free(point: *mut ElModelPoint) {
    if !point.is_null() {
        drop(Box::from_raw(point));
    }
}

#[no_mangle]
pub extern "C" fn el_model_point_evaluate(point: *const ElModelPoint, out: *mut ElEvaluation) -> ElStatus {
    guard(|| {
        let pt = &non_null(point, "point")?.inner;
        *out_ptr(out, "out")? = ElEvaluation {
            g_s: pt.g_utility(),
            g_t: pt.g_engagement(),
            e_s: pt.expected_utility(),
            e_t: pt.expected_engagement(),
            participates: pt.participates(),
        };
        Ok(())
    })
}

/// Monte Carlo sessions with constant item value `v_bar`.
#[no_mangle]
pub extern "C" fn el_simulate(
    point: *const ElModelPoint,
    replications: u64,
    seed: u64,
    out: *mut ElSimSummary,
) -> ElStatus {
    guard(|| {
        let pt = non_null(point, "point")?.inner;
        let out = out_ptr(out, "out")?;
        let s = simulate_batch(&check(SimConfig::new(pt, replications, seed))?);
        *out = ElSimSummary {
            mean_t: s.mean_t,
            mean_s: s.mean_s,
            se_t: s.se_t,
            se_s: s.se_s,
            replications: s.replications,
            seed: s.seed,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ElGammaResult {
    /// Negative when the user never visits.
    pub t_star: i64,
    pub e_t: f64,
    pub e_s: f64,
}

#[no_mangle]
pub extern "C" fn el_gamma_evaluate(p: f64, gamma: f64, v_bar: f64, w: f64, out: *mut ElGammaResult) -> ElStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let pt = check(GammaPoint::new(p, gamma, v_bar, w))?;
        *out = ElGammaResult {
            t_star: t_star(&pt),
            e_t: gamma_engagement(&pt),
            e_s: gamma_utility(&pt),
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ElPopulationMetrics {
    pub w_star: f64,
    pub pr_use: f64,
    pub e_t_given_use: f64,
    pub e_t_total: f64,
    pub e_s_total: f64,
}

/// Population metrics for outside options uniform on `[a, b]`.
#[no_mangle]
pub extern "C" fn el_population_uniform(
    p: f64,
    q: f64,
    v_bar: f64,
    a: f64,
    b: f64,
    out: *mut ElPopulationMetrics,
) -> ElStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let params = check(ContentParams::new(p, q, v_bar))?;
        let m = check(population_metrics(&params, &check(Population::uniform(a, b))?))?;
        *out = ElPopulationMetrics {
            w_star: participation_threshold(&params),
            pr_use: m.pr_use,
            e_t_given_use: m.e_t_given_use,
            e_t_total: m.e_t_total,
            e_s_total: m.e_s_total,
        };
        Ok(())
    })
}

/// Opaque tree-feed configuration.
pub struct ElTreeConfig {
    inner: TreeConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ElTreeSolution {
    pub p_hat: f64,
    pub v_bar: f64,
    pub gamma_star: f64,
    /// `INFINITY` when system 2 never continues.
    pub tau_star: f64,
    pub e_s: f64,
    pub e_t: f64,
    pub participates: bool,
}

fn read_dist(values: *const f64, probs: *const f64, n: usize) -> Result<ValueDist, ElStatus> {
    if values.is_null() || probs.is_null() {
        return Err(fail(ElStatus::NullPointer, "value distribution arrays are null"));
    }
    if n == 0 {
        return Err(fail(ElStatus::InvalidArgument, "value distribution is empty"));
    }
    // SAFETY: both arrays are non-null and the caller guarantees `n` elements.
    let (v, pr) = unsafe { (std::slice::from_raw_parts(values, n), std::slice::from_raw_parts(probs, n)) };
    check(ValueDist::finite(v.iter().copied().zip(pr.iter().copied())))
}

/// `d` identical branches whose values take `values[i]` with probability
/// `probs[i]`. Release with `el_tree_config_free`.
///
/// # Safety
/// `values` and `probs` must point to `n` readable doubles each.
#[no_mangle]
pub unsafe extern "C" fn el_tree_config_new_iid(
    d: usize,
    p: f64,
    q: f64,
    values: *const f64,
    probs: *const f64,
    n: usize,
    w: f64,
    out: *mut *mut ElTreeConfig,
) -> ElStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let dist = read_dist(values, probs, n)?;
        let inner = check(TreeConfig::iid(d, p, q, dist, w))?;
        *out = Box::into_raw(Box::new(ElTreeConfig { inner }));
        Ok(())
    })
}

/// Releases a tree configuration. Null is ignored.
///
/// # Safety
/// `config` must come from `el_tree_config_new_iid` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn el_tree_config_free(config: *mut ElTreeConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

#[no_mangle]
pub extern "C" fn el_tree_solve(config: *const ElTreeConfig, out: *mut ElTreeSolution) -> ElStatus {
    guard(|| {
        let cfg = &non_null(config, "config")?.inner;
        let out = out_ptr(out, "out")?;
        let s = check(solve_tree(cfg))?;
        *out = ElTreeSolution {
            p_hat: s.p_hat,
            v_bar: s.v_bar,
            gamma_star: s.gamma_star,
            tau_star: s.tau_star,
            e_s: s.e_s,
            e_t: s.e_t,
            participates: s.participates,
        };
        Ok(())
    })
}

/// Utility- and engagement-maximizing widths over `d = 1..=d_max` for iid
/// branches; 0 means the user never visits.
///
/// # Safety
/// `values` and `probs` must point to `n` readable doubles each.
#[no_mangle]
pub unsafe extern "C" fn el_tree_optimize_iid(
    p: f64,
    q: f64,
    values: *const f64,
    probs: *const f64,
    n: usize,
    w: f64,
    d_max: usize,
    d_s: *mut usize,
    d_t: *mut usize,
) -> ElStatus {
    guard(|| {
        let d_s = out_ptr(d_s, "d_s")?;
        let d_t = out_ptr(d_t, "d_t")?;
        let dist = read_dist(values, probs, n)?;
        check(TreeConfig::iid(1, p, q, dist.clone(), w))?;
        let r = check(optimize_branching(|d| TreeConfig::iid(d, p, q, dist.clone(), w), d_max))?;
        *d_s = r.d_s;
        *d_t = r.d_t;
        Ok(())
    })
}
