//! C ABI over `qwqkd`.
//!
//! Every function returns a [`QwStatus`]; results go through out-pointers. On failure the
//! message is kept per thread and read back with [`qw_last_error`]. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qwqkd::protocol::{run_protocol, ProtocolConfig};
use qwqkd::security::{compute_c, depolarizing_closed_form, key_rate, max_tolerated_qber};
use qwqkd::sweep::{pi_fractions, run_sweep, SweepGrid, SweepOptions, SweepRow};
use qwqkd::walk::{born_distribution, evolve, Flip, StateVector, WalkParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Runtime = 3,
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: QwStatus, msg: impl Into<String>) -> QwStatus {
    set_error(msg);
    status
}

fn from_error(e: qwqkd::Error) -> QwStatus {
    let status = if e.is_validation() {
        QwStatus::InvalidArgument
    } else {
        QwStatus::Runtime
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> QwStatus) -> QwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(QwStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(QwStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

fn flip_from(code: u32) -> Option<Flip> {
    match code {
        0 => Some(Flip::I),
        1 => Some(Flip::X),
        2 => Some(Flip::Y),
        _ => None,
    }
}

fn flip_code(f: Flip) -> u32 {
    match f {
        Flip::I => 0,
        Flip::X => 1,
        Flip::Y => 2,
    }
}

/// Message for the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn qw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qw_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Coined walk on a cycle. Opaque to C.
pub struct QwWalk {
    params: WalkParams,
}

/// `flip`: 0 = I, 1 = X, 2 = Y. Angles in radians.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qw_walk_new(
    positions: usize,
    theta: f64,
    phi: f64,
    steps: u64,
    flip: u32,
    out: *mut *mut QwWalk,
) -> QwStatus {
    guard(|| {
        non_null!(out);
        let Some(flip) = flip_from(flip) else {
            return fail(QwStatus::InvalidArgument, format!("unknown flip code {flip}"));
        };
        let params = tri!(WalkParams::new(positions, theta, phi, steps)).with_flip(flip);
        *out = Box::into_raw(Box::new(QwWalk { params }));
        QwStatus::Ok
    })
}

/// # Safety
/// `walk` must be null or a handle from [`qw_walk_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_walk_free(walk: *mut QwWalk) {
    if !walk.is_null() {
        drop(Box::from_raw(walk));
    }
}

/// Born distribution after evolving the basis state `2x + s`; `len` must equal `2P`.
///
/// # Safety
/// `walk` must be a live handle and `probs` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qw_walk_distribution(
    walk: *const QwWalk,
    initial_index: usize,
    probs: *mut f64,
    len: usize,
) -> QwStatus {
    guard(|| {
        non_null!(walk, probs);
        let params = &(*walk).params;
        if len != params.dim() {
            return fail(
                QwStatus::InvalidArgument,
                format!("buffer holds {len} values, walk dimension is {}", params.dim()),
            );
        }
        if initial_index >= params.dim() {
            return fail(QwStatus::InvalidArgument, "initial index out of range");
        }
        let start = tri!(StateVector::basis(
            params.positions(),
            initial_index / 2,
            qwqkd::walk::CoinState::from_index(initial_index)
        ));
        let state = tri!(evolve(&start, params));
        let out = std::slice::from_raw_parts_mut(probs, len);
        out.copy_from_slice(&born_distribution(&state));
        QwStatus::Ok
    })
}

/// Minimum overlap constant over `t = 1..=t_max` for the walk's coin and flip.
///
/// # Safety
/// `walk` must be a live handle; `c` and `t_star` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_compute_c(
    walk: *const QwWalk,
    t_max: u64,
    c: *mut f64,
    t_star: *mut u64,
) -> QwStatus {
    guard(|| {
        non_null!(walk, c, t_star);
        let report = tri!(compute_c(&(*walk).params, t_max));
        *c = report.c;
        *t_star = report.t_star;
        QwStatus::Ok
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_max_tolerated_qber(c: f64, positions: usize, out: *mut f64) -> QwStatus {
    guard(|| {
        non_null!(out);
        *out = tri!(max_tolerated_qber(c, positions));
        QwStatus::Ok
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_key_rate(c: f64, h_z: f64, h_w: f64, out: *mut f64) -> QwStatus {
    guard(|| {
        non_null!(out);
        *out = tri!(key_rate(c, h_z, h_w));
        QwStatus::Ok
    })
}

/// Depolarizing parameter and error rate of the uniform Pauli channel.
///
/// # Safety
/// `lambda` and `qber` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_depolarizing(
    error_weight: f64,
    positions: usize,
    lambda: *mut f64,
    qber: *mut f64,
) -> QwStatus {
    guard(|| {
        non_null!(lambda, qber);
        let d = tri!(depolarizing_closed_form(error_weight, positions));
        *lambda = d.lambda;
        *qber = d.qber;
        QwStatus::Ok
    })
}

/// Best parameters for one `(P, F)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QwSweepRow {
    pub positions: usize,
    pub flip: u32,
    pub theta: f64,
    pub phi: f64,
    pub t: u64,
    pub c: f64,
    pub q_max: f64,
}

impl From<&SweepRow> for QwSweepRow {
    fn from(r: &SweepRow) -> Self {
        QwSweepRow {
            positions: r.positions,
            flip: flip_code(r.flip),
            theta: r.theta,
            phi: r.phi,
            t: r.t,
            c: r.c,
            q_max: r.q_max,
        }
    }
}

/// Grid search over `θ, φ ∈ {kπ/N}`. Opaque to C.
pub struct QwSweep {
    grid: SweepGrid,
    rows: Vec<SweepRow>,
}

/// # Safety
/// `positions` must point to `n_positions` values, `flips` to `n_flips` codes, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_sweep_new(
    positions: *const usize,
    n_positions: usize,
    flips: *const u32,
    n_flips: usize,
    denominator: u32,
    t_max: u64,
    out: *mut *mut QwSweep,
) -> QwStatus {
    guard(|| {
        non_null!(positions, flips, out);
        if denominator == 0 {
            return fail(QwStatus::InvalidArgument, "grid denominator must be positive");
        }
        let positions = std::slice::from_raw_parts(positions, n_positions).to_vec();
        let mut fs = Vec::with_capacity(n_flips);
        for &code in std::slice::from_raw_parts(flips, n_flips) {
            match flip_from(code) {
                Some(f) => fs.push(f),
                None => return fail(QwStatus::InvalidArgument, format!("unknown flip code {code}")),
            }
        }
        let fractions = pi_fractions(denominator);
        let grid = tri!(SweepGrid::new(positions, fractions.clone(), fractions, fs, t_max));
        tri!(grid.validate());
        *out = Box::into_raw(Box::new(QwSweep {
            grid,
            rows: Vec::new(),
        }));
        QwStatus::Ok
    })
}

/// Runs the sweep on `jobs` threads (0 = all cores). Replaces earlier results.
///
/// # Safety
/// `sweep` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_sweep_run(sweep: *mut QwSweep, jobs: usize) -> QwStatus {
    guard(|| {
        non_null!(sweep);
        let sweep = &mut *sweep;
        let options = SweepOptions {
            jobs: (jobs > 0).then_some(jobs),
            ..SweepOptions::default()
        };
        sweep.rows = tri!(run_sweep(&sweep.grid, &options));
        QwStatus::Ok
    })
}

/// # Safety
/// `sweep` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_sweep_row_count(sweep: *const QwSweep, count: *mut usize) -> QwStatus {
    guard(|| {
        non_null!(sweep, count);
        *count = (&*sweep).rows.len();
        QwStatus::Ok
    })
}

/// # Safety
/// `sweep` must be a live handle and `row` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_sweep_row(
    sweep: *const QwSweep,
    index: usize,
    row: *mut QwSweepRow,
) -> QwStatus {
    guard(|| {
        non_null!(sweep, row);
        let sweep = &*sweep;
        match sweep.rows.get(index) {
            Some(r) => {
                *row = r.into();
                QwStatus::Ok
            }
            None => fail(QwStatus::InvalidArgument, format!("row {index} out of range")),
        }
    })
}

/// # Safety
/// `sweep` must be null or a handle from [`qw_sweep_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_sweep_free(sweep: *mut QwSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Runs a protocol from a JSON config and returns the transcript as JSON.
///
/// The returned string is owned by the caller and must be released with [`qw_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_protocol_run_json(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> QwStatus {
    guard(|| {
        non_null!(config_json, out);
        let text = match CStr::from_ptr(config_json).to_str() {
            Ok(t) => t,
            Err(_) => return fail(QwStatus::InvalidArgument, "config is not valid UTF-8"),
        };
        let config = match ProtocolConfig::from_json(text) {
            Ok(c) => c,
            Err(qwqkd::Error::Json(e)) => return fail(QwStatus::InvalidArgument, e.to_string()),
            Err(e) => return from_error(e),
        };
        let json = tri!(tri!(run_protocol(&config)).to_json());
        match CString::new(json) {
            Ok(s) => {
                *out = s.into_raw();
                QwStatus::Ok
            }
            Err(_) => fail(QwStatus::Runtime, "transcript contains a NUL byte"),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
