//! C ABI over the `qholo` library.
//!
//! Objects cross the boundary as opaque handles created by `qh_*_new` or
//! `qh_*_read*` and released by the matching `qh_*_free`. Every fallible
//! function returns a [`QhStatus`]; on failure the message is kept per
//! thread and can be copied out with [`qh_last_error_message`]. Output
//! pointers are written only on success. Panics are caught and reported as
//! [`QhStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ndarray::Array2;
use qholo::coincidence::{count_coincidences, count_triples, g2_zero};
use qholo::metrics::{fit_fringe, visibility};
use qholo::reconstruct::{reconstruct_hologram, ComplexField, PhaseMethod, ReconstructOptions};
use qholo::timetag::{read_any, TimeTagStream};
use qholo::Error;

/// Result of every fallible call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhStatus {
    Ok = 0,
    Config = 1,
    Data = 2,
    Parse = 3,
    Bounds = 4,
    UndefinedStatistic = 5,
    Detection = 6,
    InsufficientFringe = 7,
    FitNotConverged = 8,
    Io = 9,
    NullPointer = 10,
    InvalidUtf8 = 11,
    Panic = 12,
}

impl From<&Error> for QhStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config { .. } => QhStatus::Config,
            Error::Data(_) => QhStatus::Data,
            Error::Parse { .. } => QhStatus::Parse,
            Error::Bounds(_) => QhStatus::Bounds,
            Error::UndefinedStatistic(_) => QhStatus::UndefinedStatistic,
            Error::Detection(_) => QhStatus::Detection,
            Error::InsufficientFringe(_) => QhStatus::InsufficientFringe,
            Error::Fit { .. } => QhStatus::FitNotConverged,
            Error::Io { .. } => QhStatus::Io,
        }
    }
}

/// Phase-correction method for [`qh_reconstruct`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhMethod {
    ConjugateMultiply = 0,
    Recenter = 1,
    CalibrationFrame = 2,
}

/// Fringe-model parameters, see [`qh_fit_fringe`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QhFitParams {
    pub y0: f64,
    pub amplitude: f64,
    pub x0: f64,
    pub width: f64,
    pub modulation: f64,
    pub omega: f64,
    pub phi: f64,
    pub residual_rms: f64,
    /// Nonzero when the modulation is too small for omega and phi to mean
    /// anything.
    pub degenerate: i32,
}

/// Time-tag stream of one channel, picoseconds, sorted.
pub struct QhStream(TimeTagStream);

/// Real-valued frame, row-major.
pub struct QhFrame(Array2<f64>);

/// Complex field, row-major.
pub struct QhField(ComplexField);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Fail(QhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(QhStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QhStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any failure or panic.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QhStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            QhStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Fail> {
    h.as_ref().ok_or_else(|| null(what))
}

unsafe fn path(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Fail(QhStatus::InvalidUtf8, "path is not valid UTF-8".into()))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len - 1` bytes) and returns the full message
/// length in bytes. Pass `len = 0` to query the length.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len = 0`.
#[no_mangle]
pub unsafe extern "C" fn qh_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// New stream from `len` tags, which must be nondecreasing.
///
/// # Safety
/// `tags` must be valid for `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_stream_new(
    channel: u8,
    tags: *const u64,
    len: usize,
    out: *mut *mut QhStream,
) -> QhStatus {
    guard(|| {
        let s = TimeTagStream::new(channel, slice(tags, len, "tags")?.to_vec())?;
        write_out(out, Box::into_raw(Box::new(QhStream(s))), "out")
    })
}

/// Reads one channel from a binary or CSV time-tag file. A channel absent
/// from the file gives an empty stream.
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_stream_read(
    file: *const c_char,
    channel: u8,
    out: *mut *mut QhStream,
) -> QhStatus {
    guard(|| {
        let mut all = read_any(&path(file)?)?;
        let s = all
            .remove(&channel)
            .unwrap_or_else(|| TimeTagStream::empty(channel));
        write_out(out, Box::into_raw(Box::new(QhStream(s))), "out")
    })
}

/// Number of tags, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live stream handle.
#[no_mangle]
pub unsafe extern "C" fn qh_stream_len(s: *const QhStream) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `s` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn qh_stream_free(s: *mut QhStream) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Pairs with `2|t_b - offset - t_a| <= window_ps`, each tag used once.
///
/// # Safety
/// `a` and `b` must be live stream handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_count_coincidences(
    a: *const QhStream,
    b: *const QhStream,
    window_ps: u64,
    offset_ps: i64,
    out: *mut u64,
) -> QhStatus {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        let n = count_coincidences(a.0.tags(), b.0.tags(), window_ps, offset_ps)?;
        write_out(out, n, "out")
    })
}

/// Herald tags with a partner in both `a` and `b` within the window.
///
/// # Safety
/// All stream arguments must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_count_triples(
    herald: *const QhStream,
    a: *const QhStream,
    b: *const QhStream,
    window_ps: u64,
    offset_a_ps: i64,
    offset_b_ps: i64,
    out: *mut u64,
) -> QhStatus {
    guard(|| {
        let (h, a, b) = (handle(herald, "herald")?, handle(a, "a")?, handle(b, "b")?);
        let n = count_triples(
            h.0.tags(),
            a.0.tags(),
            b.0.tags(),
            window_ps,
            (offset_a_ps, offset_b_ps),
        )?;
        write_out(out, n, "out")
    })
}

/// `g2(0)` and its Poisson standard error from the four counts.
///
/// # Safety
/// `g2` and `sigma` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_g2(
    n1: u64,
    n12: u64,
    n13: u64,
    n123: u64,
    g2: *mut f64,
    sigma: *mut f64,
) -> QhStatus {
    guard(|| {
        if g2.is_null() || sigma.is_null() {
            return Err(null("output"));
        }
        let (v, s) = g2_zero(n1, n12, n13, n123)?;
        g2.write(v);
        sigma.write(s);
        Ok(())
    })
}

/// New `width × height` frame from row-major values.
///
/// # Safety
/// `data` must be valid for `width * height` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_frame_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut QhFrame,
) -> QhStatus {
    guard(|| {
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Fail(QhStatus::Data, "frame size overflows".into()))?;
        let v = slice(data, n, "data")?.to_vec();
        let a =
            Array2::from_shape_vec((height, width), v).map_err(|e| Fail(QhStatus::Data, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(QhFrame(a))), "out")
    })
}

/// Reads a count frame written by the `qholo` command-line tool.
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_frame_read_csv(file: *const c_char, out: *mut *mut QhFrame) -> QhStatus {
    guard(|| {
        let f = qholo::io::read_frame_csv(&path(file)?)?;
        write_out(out, Box::into_raw(Box::new(QhFrame(f.as_f64()))), "out")
    })
}

/// # Safety
/// `f` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn qh_frame_free(f: *mut QhFrame) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Reconstructs the object field from a hologram frame.
///
/// `mask_radius <= 0` picks the default radius. `calibration` may be null
/// except with [`QhMethod::CalibrationFrame`]. The located first-order
/// bin is written to `order_u`/`order_v` when those are non-null.
///
/// # Safety
/// Handles must be live or null as described; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_reconstruct(
    frame: *const QhFrame,
    method: QhMethod,
    mask_radius: i64,
    reference_half_width: i64,
    calibration: *const QhFrame,
    out: *mut *mut QhField,
    order_u: *mut i64,
    order_v: *mut i64,
) -> QhStatus {
    guard(|| {
        let frame = handle(frame, "frame")?;
        let opts = ReconstructOptions {
            mask_radius: (mask_radius > 0).then_some(mask_radius),
            reference_half_width,
            method: match method {
                QhMethod::ConjugateMultiply => PhaseMethod::ConjugateMultiply,
                QhMethod::Recenter => PhaseMethod::Recenter,
                QhMethod::CalibrationFrame => PhaseMethod::CalibrationFrame,
            },
            ..ReconstructOptions::default()
        };
        let cal = calibration.as_ref().map(|c| &c.0);
        let rec = reconstruct_hologram(&frame.0, &opts, cal)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !order_u.is_null() {
            order_u.write(rec.order.0);
        }
        if !order_v.is_null() {
            order_v.write(rec.order.1);
        }
        out.write(Box::into_raw(Box::new(QhField(rec.corrected))));
        Ok(())
    })
}

/// Field dimensions; zero for a null handle.
///
/// # Safety
/// `f` must be null or a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_field_dims(f: *const QhField, width: *mut usize, height: *mut usize) {
    let (h, w) = f.as_ref().map_or((0, 0), |f| f.0.data.dim());
    if !width.is_null() {
        width.write(w);
    }
    if !height.is_null() {
        height.write(h);
    }
}

unsafe fn copy_map(
    f: *const QhField,
    buf: *mut f64,
    len: usize,
    map: fn(&ComplexField) -> Array2<f64>,
) -> QhStatus {
    guard(|| {
        let f = handle(f, "field")?;
        let m = map(&f.0);
        if len < m.len() {
            return Err(Fail(
                QhStatus::Bounds,
                format!("buffer holds {len} values, field has {}", m.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        for (k, v) in m.iter().enumerate() {
            buf.add(k).write(*v);
        }
        Ok(())
    })
}

/// Copies the row-major amplitude into `buf`, which must hold
/// `width * height` values.
///
/// # Safety
/// `f` must be a live handle; `buf` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn qh_field_amplitude(f: *const QhField, buf: *mut f64, len: usize) -> QhStatus {
    copy_map(f, buf, len, ComplexField::amplitude)
}

/// Copies the row-major phase, wrapped to `(-π, π]`, into `buf`.
///
/// # Safety
/// `f` must be a live handle; `buf` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn qh_field_phase(f: *const QhField, buf: *mut f64, len: usize) -> QhStatus {
    copy_map(f, buf, len, ComplexField::phase)
}

/// # Safety
/// `f` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn qh_field_free(f: *mut QhField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Fringe visibility of a nonnegative profile.
///
/// # Safety
/// `profile` must be valid for `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_visibility(profile: *const f64, len: usize, out: *mut f64) -> QhStatus {
    guard(|| {
        let v = visibility(slice(profile, len, "profile")?)?;
        write_out(out, v.value, "out")
    })
}

/// Least-squares fit of the Gaussian-enveloped fringe model to a line.
///
/// # Safety
/// `line` must be valid for `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qh_fit_fringe(line: *const f64, len: usize, out: *mut QhFitParams) -> QhStatus {
    guard(|| {
        let fit = fit_fringe(slice(line, len, "line")?)?;
        let p = fit.params;
        let r = QhFitParams {
            y0: p.y0,
            amplitude: p.amplitude,
            x0: p.x0,
            width: p.width,
            modulation: p.modulation,
            omega: p.omega,
            phi: p.phi,
            residual_rms: fit.residual_rms,
            degenerate: fit.degenerate as i32,
        };
        write_out(out, r, "out")
    })
}

/// Runs the configured simulation and writes frames, tags and a manifest to
/// `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn qh_simulate(config: *const c_char, out_dir: *const c_char) -> QhStatus {
    guard(|| {
        let cfg = qholo::config::PipelineConfig::load(&path(config)?)?;
        let out = path(out_dir)?;
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let files = qholo::cli::simulate(&cfg, &out)?;
        qholo::cli::write_manifest(&cfg, &out, &files)?;
        Ok(())
    })
}
