//! C ABI for cosim-dse.
//!
//! Every function returns a [`CosimStatus`]; on failure the message is kept
//! per thread and read back with [`cosim_last_error_message`]. Units and
//! traces are opaque handles owned by the caller and released with their
//! `*_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cosim_dse::dse::{self, SweepOptions};
use cosim_dse::orchestrator::MultiModelConfig;
use cosim_dse::traces::{write_trace_csv, AlignedPair};
use cosim_dse::{run_cosim, Error, Registry, TimedTrace, UnitInstance};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CosimStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Bad configuration, parameter, port or input file.
    InvalidArgument = 3,
    /// A unit failed while the simulation was running.
    SimulationFailed = 4,
    /// Index outside the trace.
    OutOfRange = 5,
    /// Reading or writing a file failed.
    Io = 6,
    /// The library panicked; this is a bug.
    Internal = 7,
}

/// Opaque simulation unit.
pub struct CosimUnit {
    inner: UnitInstance,
}

/// Opaque results trace.
pub struct CosimTrace {
    inner: TimedTrace,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

struct Failure(CosimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnitStep { .. } | Error::SweepRun { .. } => CosimStatus::SimulationFailed,
            Error::Io { .. } => CosimStatus::Io,
            _ => CosimStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CosimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CosimStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CosimStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(CosimStatus::NullPointer, format!("`{what}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CosimStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn unit_ref<'a>(unit: *const CosimUnit) -> Result<&'a CosimUnit, Failure> {
    non_null(unit, "unit")?;
    Ok(&*unit)
}

unsafe fn trace_ref<'a>(trace: *const CosimTrace) -> Result<&'a CosimTrace, Failure> {
    non_null(trace, "trace")?;
    Ok(&*trace)
}

/// Message of the last failed call on this thread, or null after a
/// successful one. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cosim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cosim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a built-in unit (`vehicle`, `supervisory`, ...) with `n_params`
/// parameter overrides. Units that need a map, path or trace attachment
/// cannot be created here; run them through a multi-model file instead.
///
/// # Safety
/// `unit_type` must be a valid C string; `param_names` and `param_values`
/// must point to `n_params` entries (they may be null when `n_params` is 0);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cosim_unit_new(
    unit_type: *const c_char,
    param_names: *const *const c_char,
    param_values: *const f64,
    n_params: usize,
    out: *mut *mut CosimUnit,
) -> CosimStatus {
    guard(|| {
        non_null(out, "out")?;
        let unit_type = str_arg(unit_type, "unit_type")?;
        let mut parameters = BTreeMap::new();
        if n_params > 0 {
            non_null(param_names, "param_names")?;
            non_null(param_values, "param_values")?;
            for i in 0..n_params {
                let name = str_arg(*param_names.add(i), "param_names[i]")?;
                parameters.insert(name.to_string(), *param_values.add(i));
            }
        }
        let inner = Registry::with_builtins().instantiate(unit_type, &parameters)?;
        *out = Box::into_raw(Box::new(CosimUnit { inner }));
        Ok(())
    })
}

/// # Safety
/// `unit` must come from [`cosim_unit_new`]; `port` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn cosim_unit_set_input(unit: *mut CosimUnit, port: *const c_char, value: f64) -> CosimStatus {
    guard(|| {
        non_null(unit, "unit")?;
        let port = str_arg(port, "port")?;
        (*unit).inner.set_input(port, value)?;
        Ok(())
    })
}

/// Advances the unit by `h` seconds.
///
/// # Safety
/// `unit` must come from [`cosim_unit_new`].
#[no_mangle]
pub unsafe extern "C" fn cosim_unit_do_step(unit: *mut CosimUnit, h: f64) -> CosimStatus {
    guard(|| {
        non_null(unit, "unit")?;
        (*unit).inner.do_step(h)?;
        Ok(())
    })
}

/// # Safety
/// `unit` must come from [`cosim_unit_new`]; `port` must be a valid C
/// string; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cosim_unit_get_output(
    unit: *const CosimUnit,
    port: *const c_char,
    value: *mut f64,
) -> CosimStatus {
    guard(|| {
        let unit = unit_ref(unit)?;
        let port = str_arg(port, "port")?;
        non_null(value, "value")?;
        *value = unit.inner.get_output(port)?;
        Ok(())
    })
}

/// # Safety
/// `unit` must come from [`cosim_unit_new`]; `time` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cosim_unit_time(unit: *const CosimUnit, time: *mut f64) -> CosimStatus {
    guard(|| {
        let unit = unit_ref(unit)?;
        non_null(time, "time")?;
        *time = unit.inner.current_time();
        Ok(())
    })
}

/// # Safety
/// `unit` must come from [`cosim_unit_new`] and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cosim_unit_free(unit: *mut CosimUnit) {
    if !unit.is_null() {
        drop(Box::from_raw(unit));
    }
}

/// Mean and maximum Euclidean distance between `n` aligned points.
/// `reference_xy` and `simulated_xy` hold `2 * n` interleaved x, y values.
///
/// # Safety
/// Both arrays must hold `2 * n` doubles; `mean` and `max` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cosim_cross_track_error(
    reference_xy: *const f64,
    simulated_xy: *const f64,
    n: usize,
    mean: *mut f64,
    max: *mut f64,
) -> CosimStatus {
    guard(|| {
        non_null(reference_xy, "reference_xy")?;
        non_null(simulated_xy, "simulated_xy")?;
        non_null(mean, "mean")?;
        non_null(max, "max")?;
        let reference = std::slice::from_raw_parts(reference_xy, 2 * n);
        let simulated = std::slice::from_raw_parts(simulated_xy, 2 * n);
        let pairs = (0..n)
            .map(|i| {
                [
                    reference[2 * i],
                    reference[2 * i + 1],
                    simulated[2 * i],
                    simulated[2 * i + 1],
                ]
            })
            .collect();
        let (m, x) = dse::cross_track_error(&AlignedPair { pairs, clamped: 0 })?;
        *mean = m;
        *max = x;
        Ok(())
    })
}

/// Runs the multi-model file at `config_path` and returns its trace.
///
/// # Safety
/// `config_path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cosim_run_config(config_path: *const c_char, out: *mut *mut CosimTrace) -> CosimStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(config_path, "config_path")?;
        let config = MultiModelConfig::load(path)?;
        let inner = run_cosim(&config, &Registry::with_builtins())?;
        let names = inner
            .channels()
            .iter()
            .map(|c| CString::new(c.as_str()).unwrap_or_default())
            .collect();
        *out = Box::into_raw(Box::new(CosimTrace { inner, names }));
        Ok(())
    })
}

/// Number of rows (time points) in the trace; 0 for null.
///
/// # Safety
/// `trace` must be null or come from [`cosim_run_config`].
#[no_mangle]
pub unsafe extern "C" fn cosim_trace_rows(trace: *const CosimTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.len())
}

/// Number of value channels (excluding time); 0 for null.
///
/// # Safety
/// `trace` must be null or come from [`cosim_run_config`].
#[no_mangle]
pub unsafe extern "C" fn cosim_trace_channels(trace: *const CosimTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.channels().len())
}

/// Channel name, owned by the trace; null when out of range.
///
/// # Safety
/// `trace` must be null or come from [`cosim_run_config`].
#[no_mangle]
pub unsafe extern "C" fn cosim_trace_channel_name(trace: *const CosimTrace, channel: usize) -> *const c_char {
    trace
        .as_ref()
        .and_then(|t| t.names.get(channel))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// # Safety
/// `trace` must come from [`cosim_run_config`]; `time` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cosim_trace_time(trace: *const CosimTrace, row: usize, time: *mut f64) -> CosimStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        non_null(time, "time")?;
        if row >= t.inner.len() {
            return Err(Failure(
                CosimStatus::OutOfRange,
                format!("row {row} of {}", t.inner.len()),
            ));
        }
        *time = t.inner.time(row);
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`cosim_run_config`]; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cosim_trace_value(
    trace: *const CosimTrace,
    row: usize,
    channel: usize,
    value: *mut f64,
) -> CosimStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        non_null(value, "value")?;
        let (rows, channels) = (t.inner.len(), t.inner.channels().len());
        if row >= rows || channel >= channels {
            return Err(Failure(
                CosimStatus::OutOfRange,
                format!("({row}, {channel}) outside {rows} x {channels}"),
            ));
        }
        *value = t.inner.row(row)[channel];
        Ok(())
    })
}

/// Writes the trace as a results CSV.
///
/// # Safety
/// `trace` must come from [`cosim_run_config`]; `path` must be a valid C
/// string.
#[no_mangle]
pub unsafe extern "C" fn cosim_trace_write_csv(trace: *const CosimTrace, path: *const c_char) -> CosimStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        let path = str_arg(path, "path")?;
        write_trace_csv(&t.inner, path)?;
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`cosim_run_config`] and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cosim_trace_free(trace: *mut CosimTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Runs the exhaustive sweep described by the DSE configuration at
/// `config_path` and writes the results table to `out_path`. `workers` of
/// 0 uses one worker per CPU.
///
/// # Safety
/// Both paths must be valid C strings.
#[no_mangle]
pub unsafe extern "C" fn cosim_dse_sweep(
    config_path: *const c_char,
    out_path: *const c_char,
    workers: usize,
) -> CosimStatus {
    guard(|| {
        let config_path = str_arg(config_path, "config_path")?;
        let out_path = str_arg(out_path, "out_path")?;
        let config = dse::read_dse_config(config_path)?;
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let rows = dse::run_sweep(&config, &Registry::with_builtins(), &SweepOptions::workers(workers))?;
        dse::write_dse_results(&rows, out_path)?;
        Ok(())
    })
}
