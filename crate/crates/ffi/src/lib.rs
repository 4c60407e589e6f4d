//! C ABI over the bookcell simulator.
//!
//! Every fallible call returns a [`BookcellStatus`]; on failure the message
//! is available from [`bookcell_last_error`] on the same thread. Handles are
//! opaque and owned by the caller until passed to their `_free` function.
//! Byte buffers returned by the library are released with
//! [`bookcell_buffer_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bookcell::engine::snapshot;
use bookcell::metrics::to_csv;
use bookcell::{ActionKind, SimConfig, SimError, Simulation};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BookcellStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Simulation = 4,
    NumericBlowup = 5,
    Snapshot = 6,
    Panic = 7,
}

/// Action quadrant of a genome symbol.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BookcellAction {
    Expansion = 0,
    Connection = 1,
    Disconnection = 2,
    Transition = 3,
}

/// Opaque simulation handle.
pub struct BookcellSim {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: BookcellStatus, msg: impl Into<String>) -> BookcellStatus {
    set_error(msg);
    status
}

fn sim_status(e: &SimError) -> BookcellStatus {
    match e {
        SimError::NumericBlowup { .. } => BookcellStatus::NumericBlowup,
        SimError::Config(_) => BookcellStatus::Config,
        _ => BookcellStatus::Simulation,
    }
}

fn guard(f: impl FnOnce() -> BookcellStatus) -> BookcellStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(BookcellStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn sim_ref<'a>(sim: *const BookcellSim) -> Result<&'a BookcellSim, BookcellStatus> {
    sim.as_ref()
        .ok_or_else(|| fail(BookcellStatus::NullPointer, "null simulation handle"))
}

unsafe fn sim_mut<'a>(sim: *mut BookcellSim) -> Result<&'a mut BookcellSim, BookcellStatus> {
    sim.as_mut()
        .ok_or_else(|| fail(BookcellStatus::NullPointer, "null simulation handle"))
}

fn out_buffer(bytes: Vec<u8>, out: *mut *mut u8, out_len: *mut usize) -> BookcellStatus {
    let boxed = bytes.into_boxed_slice();
    let len = boxed.len();
    let p = Box::into_raw(boxed) as *mut u8;
    unsafe {
        *out = p;
        *out_len = len;
    }
    BookcellStatus::Ok
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bookcell_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bookcell_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a seeded simulation from TOML configuration text. An empty
/// string selects the defaults.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_new(config_toml: *const c_char, out: *mut *mut BookcellSim) -> BookcellStatus {
    guard(|| {
        if config_toml.is_null() || out.is_null() {
            return fail(BookcellStatus::NullPointer, "null argument");
        }
        let text = match CStr::from_ptr(config_toml).to_str() {
            Ok(t) => t,
            Err(_) => return fail(BookcellStatus::InvalidArgument, "configuration is not UTF-8"),
        };
        let config = match SimConfig::from_toml(text) {
            Ok(c) => c,
            Err(e) => return fail(BookcellStatus::Config, e.to_string()),
        };
        match Simulation::with_population(config) {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(BookcellSim { sim }));
                BookcellStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e.to_string()),
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_free(sim: *mut BookcellSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances every field by `steps` steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_step(sim: *mut BookcellSim, steps: u64) -> BookcellStatus {
    guard(|| {
        let s = try_status!(sim_mut(sim));
        match s.sim.run(steps) {
            Ok(()) => BookcellStatus::Ok,
            Err(e) => fail(sim_status(&e), e.to_string()),
        }
    })
}

/// Selects parallel or serial field execution. Results are identical.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_set_parallel(sim: *mut BookcellSim, parallel: bool) -> BookcellStatus {
    let s = try_status!(sim_mut(sim));
    s.sim.set_parallel(parallel);
    BookcellStatus::Ok
}

/// Steps taken so far.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_step_count(sim: *const BookcellSim, out: *mut u64) -> BookcellStatus {
    let s = try_status!(sim_ref(sim));
    if out.is_null() {
        return fail(BookcellStatus::NullPointer, "null output pointer");
    }
    *out = s.sim.step_count();
    BookcellStatus::Ok
}

/// Number of fields.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_field_count(sim: *const BookcellSim, out: *mut usize) -> BookcellStatus {
    let s = try_status!(sim_ref(sim));
    if out.is_null() {
        return fail(BookcellStatus::NullPointer, "null output pointer");
    }
    *out = s.sim.fields().len();
    BookcellStatus::Ok
}

/// Living cells summed over all fields.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_cell_count(sim: *const BookcellSim, out: *mut usize) -> BookcellStatus {
    let s = try_status!(sim_ref(sim));
    if out.is_null() {
        return fail(BookcellStatus::NullPointer, "null output pointer");
    }
    *out = s.sim.cell_count();
    BookcellStatus::Ok
}

/// Removes the metrics rows accumulated by `field` and returns them as CSV
/// text with a header line. The buffer is not NUL-terminated.
///
/// # Safety
/// `sim` must be a live handle; `out` and `out_len` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_drain_metrics_csv(
    sim: *mut BookcellSim,
    field: usize,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> BookcellStatus {
    guard(|| {
        let s = try_status!(sim_mut(sim));
        if out.is_null() || out_len.is_null() {
            return fail(BookcellStatus::NullPointer, "null output pointer");
        }
        let fields = s.sim.fields_mut();
        let n = fields.len();
        let Some(w) = fields.get_mut(field) else {
            return fail(BookcellStatus::InvalidArgument, format!("field {field} out of range (0..{n})"));
        };
        out_buffer(to_csv(&w.drain_rows()).into_bytes(), out, out_len)
    })
}

/// Serializes the full simulation state.
///
/// # Safety
/// `sim` must be a live handle; `out` and `out_len` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_snapshot(
    sim: *const BookcellSim,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> BookcellStatus {
    guard(|| {
        let s = try_status!(sim_ref(sim));
        if out.is_null() || out_len.is_null() {
            return fail(BookcellStatus::NullPointer, "null output pointer");
        }
        out_buffer(snapshot::snapshot(&s.sim), out, out_len)
    })
}

/// Rebuilds a simulation from snapshot bytes.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bookcell_sim_restore(
    data: *const u8,
    len: usize,
    out: *mut *mut BookcellSim,
) -> BookcellStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return fail(BookcellStatus::NullPointer, "null argument");
        }
        let bytes = std::slice::from_raw_parts(data, len);
        match snapshot::restore(bytes) {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(BookcellSim { sim }));
                BookcellStatus::Ok
            }
            Err(e) => fail(BookcellStatus::Snapshot, e.to_string()),
        }
    })
}

/// Releases a buffer returned by this library. NULL is ignored.
///
/// # Safety
/// `data` and `len` must come from one call of this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bookcell_buffer_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}

/// Action quadrant of an alphabet symbol.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bookcell_classify_action(symbol: u8, out: *mut BookcellAction) -> BookcellStatus {
    if out.is_null() {
        return fail(BookcellStatus::NullPointer, "null output pointer");
    }
    match bookcell::genome::classify_action(symbol) {
        Ok(kind) => {
            *out = match kind {
                ActionKind::Expansion => BookcellAction::Expansion,
                ActionKind::Connection => BookcellAction::Connection,
                ActionKind::Disconnection => BookcellAction::Disconnection,
                ActionKind::Transition => BookcellAction::Transition,
            };
            BookcellStatus::Ok
        }
        Err(e) => fail(BookcellStatus::InvalidArgument, e.to_string()),
    }
}
