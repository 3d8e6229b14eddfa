//! C ABI for `ttsurrogate`.
//!
//! Objects are opaque handles released with their `_free` function. Every
//! fallible call returns a [`TtsStatus`]; on failure the message is available
//! from [`tts_last_error`] on the same thread. Multi-indices are 0-based and
//! index batches are row-major `count x ndim` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ttsurrogate::anova::DEFAULT_PADDING_NOISE;
use ttsurrogate::benchmarks::Benchmark;
use ttsurrogate::pde::{self, PdeConfig};
use ttsurrogate::{als, AlsConfig, AnovaModel, Error, TtTensor};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtsStatus {
    Ok = 0,
    InvalidArgument = 1,
    IndexOutOfRange = 2,
    SizeLimit = 3,
    ZeroNorm = 4,
    Coverage = 5,
    InsufficientRows = 6,
    NonFinite = 7,
    SolverDiverged = 8,
    Parse = 9,
    Io = 10,
    NullPointer = 11,
    Panic = 12,
}

/// Opaque tensor train.
pub struct TtsTensor(TtTensor);

/// Opaque first-order ANOVA model.
pub struct TtsAnova(AnovaModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TtsStatus {
    match e {
        Error::InvalidArgument(_) => TtsStatus::InvalidArgument,
        Error::IndexOutOfRange { .. } => TtsStatus::IndexOutOfRange,
        Error::AtRow { source, .. } => status_of(source),
        Error::SizeLimit { .. } => TtsStatus::SizeLimit,
        Error::ZeroNorm => TtsStatus::ZeroNorm,
        Error::Coverage { .. } => TtsStatus::Coverage,
        Error::InsufficientRows { .. } => TtsStatus::InsufficientRows,
        Error::NonFinite { .. } => TtsStatus::NonFinite,
        Error::SolverDiverged { .. } => TtsStatus::SolverDiverged,
        Error::Parse(_) => TtsStatus::Parse,
        Error::Io(_) => TtsStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TtsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TtsStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            TtsStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            TtsStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn str_in<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

unsafe fn index_rows<'a>(
    idxs: *const usize,
    count: usize,
    ndim: usize,
) -> Result<Vec<&'a [usize]>, Fail> {
    if ndim == 0 {
        return Err(Fail::Lib(Error::InvalidArgument(
            "ndim must be positive".into(),
        )));
    }
    let total = count
        .checked_mul(ndim)
        .ok_or(Fail::Lib(Error::InvalidArgument(
            "index batch too large".into(),
        )))?;
    let flat: &[usize] = slice_in(idxs, total, "idxs")?;
    Ok(flat.chunks_exact(ndim).collect())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn tts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Random tensor train with ranks `(1, rank, ..., rank, 1)` and N(0, 1) entries.
///
/// # Safety
/// `dims` must point to `ndim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_random(
    dims: *const usize,
    ndim: usize,
    rank: usize,
    seed: u64,
    out: *mut *mut TtsTensor,
) -> TtsStatus {
    guard(|| {
        let dims = slice_in(dims, ndim, "dims")?;
        let t = TtTensor::random(dims, rank, seed)?;
        write(out, Box::into_raw(Box::new(TtsTensor(t))), "out")
    })
}

/// Parses the JSON tensor format.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_from_json(
    json: *const c_char,
    out: *mut *mut TtsTensor,
) -> TtsStatus {
    guard(|| {
        let t = TtTensor::from_json(str_in(json, "json")?)?;
        write(out, Box::into_raw(Box::new(TtsTensor(t))), "out")
    })
}

/// Serializes to JSON; release the string with `tts_string_free`.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_to_json(t: *const TtsTensor, out: *mut *mut c_char) -> TtsStatus {
    guard(|| {
        let t = handle(t, "tensor")?;
        let s = CString::new(t.0.to_json()).expect("json has no nul");
        write(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_ndim(t: *const TtsTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.ndim())
}

/// Copies the `ndim` mode sizes into `out`.
///
/// # Safety
/// `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_dims(
    t: *const TtsTensor,
    out: *mut usize,
    len: usize,
) -> TtsStatus {
    guard(|| {
        let t = handle(t, "tensor")?;
        copy_exact(t.0.dims(), out, len)
    })
}

/// Copies the `ndim + 1` ranks into `out`.
///
/// # Safety
/// `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_ranks(
    t: *const TtsTensor,
    out: *mut usize,
    len: usize,
) -> TtsStatus {
    guard(|| {
        let t = handle(t, "tensor")?;
        copy_exact(t.0.ranks(), out, len)
    })
}

unsafe fn copy_exact(src: &[usize], out: *mut usize, len: usize) -> Result<(), Fail> {
    if len != src.len() {
        return Err(Fail::Lib(Error::InvalidArgument(format!(
            "buffer holds {len} values, {} required",
            src.len()
        ))));
    }
    slice_out(out, len, "out")?.copy_from_slice(src);
    Ok(())
}

/// Element at a 0-based multi-index.
///
/// # Safety
/// `idx` must point to `ndim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_get(
    t: *const TtsTensor,
    idx: *const usize,
    ndim: usize,
    out: *mut f64,
) -> TtsStatus {
    guard(|| {
        let t = handle(t, "tensor")?;
        let v = t.0.get(slice_in(idx, ndim, "idx")?)?;
        write(out, v, "out")
    })
}

/// Elements at `count` multi-indices.
///
/// # Safety
/// `idxs` must hold `count * ndim` values and `out` room for `count`.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_get_many(
    t: *const TtsTensor,
    idxs: *const usize,
    count: usize,
    ndim: usize,
    out: *mut f64,
) -> TtsStatus {
    guard(|| {
        let t = handle(t, "tensor")?;
        let rows = index_rows(idxs, count, ndim)?;
        let vals = t.0.get_many(&rows)?;
        slice_out(out, count, "out")?.copy_from_slice(&vals);
        Ok(())
    })
}

/// # Safety
/// `t` must be a live handle or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tts_tt_free(t: *mut TtsTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Fits the first-order ANOVA model to `count` samples.
///
/// # Safety
/// `idxs` must hold `count * ndim` values, `ys` `count` values and
/// `dims` `ndim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tts_anova_fit(
    idxs: *const usize,
    ys: *const f64,
    count: usize,
    dims: *const usize,
    ndim: usize,
    out: *mut *mut TtsAnova,
) -> TtsStatus {
    guard(|| {
        let rows = index_rows(idxs, count, ndim)?;
        let ys = slice_in(ys, count, "ys")?;
        let dims = slice_in(dims, ndim, "dims")?;
        let m = AnovaModel::fit(&rows, ys, dims)?;
        write(out, Box::into_raw(Box::new(TtsAnova(m))), "out")
    })
}

/// # Safety
/// `idx` must point to `ndim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tts_anova_eval(
    a: *const TtsAnova,
    idx: *const usize,
    ndim: usize,
    out: *mut f64,
) -> TtsStatus {
    guard(|| {
        let a = handle(a, "anova")?;
        let v = a.0.eval(slice_in(idx, ndim, "idx")?)?;
        write(out, v, "out")
    })
}

/// Rank-`rank` tensor train of the model. Padding entries of each core are
/// normal with standard deviation `noise_scale` times that core's largest
/// exact entry; a negative `noise_scale` selects the default of 1e-3.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tts_anova_to_tt(
    a: *const TtsAnova,
    rank: usize,
    noise_scale: f64,
    seed: u64,
    out: *mut *mut TtsTensor,
) -> TtsStatus {
    guard(|| {
        let a = handle(a, "anova")?;
        let noise = if noise_scale < 0.0 {
            DEFAULT_PADDING_NOISE
        } else {
            noise_scale
        };
        let t = a.0.to_tt(rank, noise, seed)?;
        write(out, Box::into_raw(Box::new(TtsTensor(t))), "out")
    })
}

/// # Safety
/// `a` must be a live handle or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tts_anova_free(a: *mut TtsAnova) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Runs ALS completion from `init`, writing a new tensor to `out` and the
/// final relative training error to `train_error` (if non-null).
///
/// # Safety
/// `idxs` must hold `count * ndim(init)` values and `ys` `count` values.
#[no_mangle]
pub unsafe extern "C" fn tts_als_run(
    init: *const TtsTensor,
    idxs: *const usize,
    ys: *const f64,
    count: usize,
    sweeps: usize,
    stop_delta: f64,
    out: *mut *mut TtsTensor,
    train_error: *mut f64,
) -> TtsStatus {
    guard(|| {
        let init = handle(init, "init")?;
        let rows = index_rows(idxs, count, init.0.ndim())?;
        let ys = slice_in(ys, count, "ys")?;
        let cfg = AlsConfig {
            sweeps,
            stop_delta,
            ..AlsConfig::default()
        };
        let (t, report) = als::run(&init.0, &rows, ys, &cfg)?;
        if !train_error.is_null() {
            train_error.write(
                report
                    .train_error_per_sweep
                    .last()
                    .copied()
                    .unwrap_or(f64::NAN),
            );
        }
        write(out, Box::into_raw(Box::new(TtsTensor(t))), "out")
    })
}

/// Evaluates a named benchmark at a point `x` of length `d`.
///
/// # Safety
/// `name` must be nul-terminated; `x` must hold `d` values.
#[no_mangle]
pub unsafe extern "C" fn tts_benchmark_evaluate(
    name: *const c_char,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> TtsStatus {
    guard(|| {
        let b = Benchmark::new(str_in(name, "name")?, d)?;
        let v = b.evaluate(slice_in(x, d, "x")?)?;
        write(out, v, "out")
    })
}

/// Integral of the diffusion solution for 9 disk conductivities on an
/// `mesh x mesh` interior grid.
///
/// # Safety
/// `p` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tts_pde_voi(
    p: *const f64,
    len: usize,
    mesh: usize,
    out: *mut f64,
) -> TtsStatus {
    guard(|| {
        let v = pde::pde_voi(slice_in(p, len, "p")?, &PdeConfig::with_mesh(mesh))?;
        write(out, v, "out")
    })
}
