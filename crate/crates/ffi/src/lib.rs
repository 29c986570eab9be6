//! C ABI over the `gottv` restoration library.
//!
//! Conventions:
//! - Every fallible call returns a [`GottvStatus`]; `GOTTV_STATUS_OK` is zero.
//! - On failure, [`gottv_last_error`] returns a message for the calling thread.
//! - Objects are opaque handles created by `*_new`/`*_read`/producers and
//!   released with the matching `*_free`. Freeing `NULL` is a no-op.
//! - Image data is `channels` planes of `rows x cols` doubles, row-major.
//! - Panics never cross the boundary; they surface as `GOTTV_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gottv::config::RunConfig;
use gottv::degrade::{degrade, DegradeSpec};
use gottv::io::{read_msi, write_msi, Dtype};
use gottv::metrics;
use gottv::opponent::{enumerate_qd, verify_opponent, OpponentBasis};
use gottv::{admm_restore, Error, ModelKind, MsiTensor, Regularizer};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GottvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    Io = 5,
    Format = 6,
    Numerical = 7,
    Panic = 8,
}

/// Restoration models.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GottvModel {
    Gottv = 0,
    Tv = 1,
    Vtv = 2,
    Ssahtv = 3,
    Asstv = 4,
    Svtv = 5,
}

fn model_kind(code: u32) -> Option<ModelKind> {
    const BY_CODE: [(GottvModel, ModelKind); 6] = [
        (GottvModel::Gottv, ModelKind::Gottv),
        (GottvModel::Tv, ModelKind::Tv),
        (GottvModel::Vtv, ModelKind::Vtv),
        (GottvModel::Ssahtv, ModelKind::Ssahtv),
        (GottvModel::Asstv, ModelKind::Asstv),
        (GottvModel::Svtv, ModelKind::Svtv),
    ];
    BY_CODE
        .iter()
        .find(|(m, _)| *m as u32 == code)
        .map(|&(_, k)| k)
}

/// Restoration parameters. Start from [`gottv_restore_options_default`].
///
/// `model` holds a `GottvModel` value. `sigma = 0` means pure denoising;
/// otherwise a Gaussian blur of that width is assumed. `max_iter = 0`
/// selects the default for the task.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GottvRestoreOptions {
    pub model: u32,
    pub lambda: f64,
    pub alpha: f64,
    pub mu: f64,
    pub sigma: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
}

/// Solver diagnostics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GottvRestoreInfo {
    pub iterations: usize,
    pub final_relerr: f64,
    pub seconds: f64,
    pub converged: bool,
}

/// Opaque multispectral image.
pub struct GottvImage {
    inner: MsiTensor,
}

/// Opaque list of opponent bases of one dimension.
pub struct GottvBasisSet {
    dim: usize,
    bases: Vec<OpponentBasis>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> GottvStatus {
    match e {
        Error::InvalidDimensions(_)
        | Error::DimensionMismatch(_)
        | Error::KernelTooLarge
        | Error::TooFewChannels
        | Error::TooFewChannelsForH
        | Error::ImageTooSmall(_)
        | Error::BandOutOfRange(..) => GottvStatus::DimensionMismatch,
        Error::NonFinite(_) => GottvStatus::NonFinite,
        Error::Io { .. } | Error::Png(_) => GottvStatus::Io,
        Error::BadMagic(_)
        | Error::TruncatedPayload(_)
        | Error::TrailingBytes(_)
        | Error::UnknownDtype(_) => GottvStatus::Format,
        Error::SingularSystem | Error::Divergence { .. } => GottvStatus::Numerical,
        _ => GottvStatus::InvalidArgument,
    }
}

/// Runs `f`, recording the error message and mapping panics.
fn guard(f: impl FnOnce() -> Result<(), (GottvStatus, String)>) -> GottvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GottvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            GottvStatus::Panic
        }
    }
}

type Outcome = Result<(), (GottvStatus, String)>;

fn lib(e: Error) -> (GottvStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GottvStatus, String) {
    (GottvStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (GottvStatus, String) {
    (GottvStatus::InvalidArgument, msg.into())
}

unsafe fn image_ref<'a>(
    p: *const GottvImage,
    what: &str,
) -> Result<&'a MsiTensor, (GottvStatus, String)> {
    p.as_ref().map(|i| &i.inner).ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, (GottvStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

unsafe fn emit_image(out: *mut *mut GottvImage, image: MsiTensor) {
    *out = Box::into_raw(Box::new(GottvImage { inner: image }));
}

/// Message of the last failed call on this thread, or `NULL` if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gottv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gottv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an image. `data` may be `NULL` for an all-zero image; otherwise it
/// must hold `rows * cols * channels` finite values.
///
/// # Safety
/// `data`, if non-null, must point to that many readable doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_image_new(
    rows: usize,
    cols: usize,
    channels: usize,
    data: *const f64,
    out: *mut *mut GottvImage,
) -> GottvStatus {
    guard(|| -> Outcome {
        if out.is_null() {
            return Err(null("out"));
        }
        let image = if data.is_null() {
            MsiTensor::zeros(rows, cols, channels)
        } else {
            let len = rows
                .checked_mul(cols)
                .and_then(|v| v.checked_mul(channels))
                .ok_or_else(|| invalid("image size overflows"))?;
            MsiTensor::from_vec(
                rows,
                cols,
                channels,
                std::slice::from_raw_parts(data, len).to_vec(),
            )
        }
        .map_err(lib)?;
        emit_image(out, image);
        Ok(())
    })
}

/// Releases an image.
///
/// # Safety
/// `image` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gottv_image_free(image: *mut GottvImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Writes the dimensions of `image`. Any output pointer may be `NULL`.
///
/// # Safety
/// `image` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_image_dims(
    image: *const GottvImage,
    rows: *mut usize,
    cols: *mut usize,
    channels: *mut usize,
) -> GottvStatus {
    guard(|| -> Outcome {
        let (m, n, d) = image_ref(image, "image")?.shape();
        for (p, v) in [(rows, m), (cols, n), (channels, d)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Borrowed pointer to the `rows * cols * channels` values of `image`,
/// valid while the handle lives. `NULL` if `image` is `NULL`.
///
/// # Safety
/// `image` must be a live handle or `NULL`.
#[no_mangle]
pub unsafe extern "C" fn gottv_image_data(image: *const GottvImage) -> *const f64 {
    image
        .as_ref()
        .map_or(ptr::null(), |i| i.inner.as_slice().as_ptr())
}

/// Reads an MSIRAW01 file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_image_read(
    path: *const c_char,
    out: *mut *mut GottvImage,
) -> GottvStatus {
    guard(|| -> Outcome {
        if out.is_null() {
            return Err(null("out"));
        }
        let image = read_msi(path_arg(path)?).map_err(lib)?;
        emit_image(out, image);
        Ok(())
    })
}

/// Writes an MSIRAW01 file with 32- or 64-bit samples (`bits` is 32 or 64).
///
/// # Safety
/// `image` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gottv_image_write(
    image: *const GottvImage,
    path: *const c_char,
    bits: u32,
) -> GottvStatus {
    guard(|| -> Outcome {
        let dtype = match bits {
            32 => Dtype::F32,
            64 => Dtype::F64,
            _ => return Err(invalid(format!("bits must be 32 or 64, got {bits}"))),
        };
        write_msi(path_arg(path)?, image_ref(image, "image")?, dtype).map_err(lib)
    })
}

/// Blurs `clean` with a Gaussian of width `sigma` (0 for none) and adds
/// seeded white Gaussian noise of standard deviation `noise_std`.
///
/// # Safety
/// `clean` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_degrade(
    clean: *const GottvImage,
    sigma: f64,
    noise_std: f64,
    seed: u64,
    out: *mut *mut GottvImage,
) -> GottvStatus {
    guard(|| -> Outcome {
        if out.is_null() {
            return Err(null("out"));
        }
        let clean = image_ref(clean, "clean")?;
        let spec = DegradeSpec::with_sigma(sigma, noise_std, seed).map_err(lib)?;
        emit_image(out, degrade(clean, &spec).map_err(lib)?);
        Ok(())
    })
}

/// Defaults matching the command-line tool.
#[no_mangle]
pub extern "C" fn gottv_restore_options_default() -> GottvRestoreOptions {
    let c = RunConfig::default();
    GottvRestoreOptions {
        model: GottvModel::Gottv as u32,
        lambda: c.lambda,
        alpha: c.alpha,
        mu: c.mu,
        sigma: c.sigma,
        max_iter: 0,
        rel_tol: c.rel_tol,
    }
}

/// Restores `observed`. `info` may be `NULL`.
///
/// # Safety
/// `observed` must be a live handle, `options` readable, `out` writable and
/// `info`, if non-null, writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_restore(
    observed: *const GottvImage,
    options: *const GottvRestoreOptions,
    out: *mut *mut GottvImage,
    info: *mut GottvRestoreInfo,
) -> GottvStatus {
    guard(|| -> Outcome {
        if out.is_null() {
            return Err(null("out"));
        }
        let observed = image_ref(observed, "observed")?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        let cfg = RunConfig {
            model: model_kind(o.model)
                .ok_or_else(|| invalid(format!("unknown model code {}", o.model)))?,
            lambda: o.lambda,
            alpha: o.alpha,
            mu: o.mu,
            sigma: o.sigma,
            max_iter: (o.max_iter > 0).then_some(o.max_iter),
            rel_tol: o.rel_tol,
            ..RunConfig::default()
        };
        let admm = cfg.admm().map_err(lib)?;
        let kernel = cfg.kernel().map_err(lib)?;
        let reg = Regularizer::for_kind(cfg.model, observed, cfg.alpha, cfg.mu).map_err(lib)?;
        let (restored, report) = admm_restore(observed, &kernel, &reg, &admm).map_err(lib)?;
        if let Some(info) = info.as_mut() {
            *info = GottvRestoreInfo {
                iterations: report.iterations,
                final_relerr: report.final_relerr(),
                seconds: report.seconds,
                converged: report.converged,
            };
        }
        emit_image(out, restored);
        Ok(())
    })
}

unsafe fn metric(
    reference: *const GottvImage,
    test: *const GottvImage,
    out: *mut f64,
    f: fn(&MsiTensor, &MsiTensor) -> gottv::Result<f64>,
) -> GottvStatus {
    guard(|| -> Outcome {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = f(image_ref(reference, "reference")?, image_ref(test, "test")?).map_err(lib)?;
        Ok(())
    })
}

/// Mean per-channel PSNR in dB (peak 1). Identical images give infinity.
///
/// # Safety
/// Both images must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_mpsnr(
    reference: *const GottvImage,
    test: *const GottvImage,
    out: *mut f64,
) -> GottvStatus {
    metric(reference, test, out, metrics::mpsnr)
}

/// Mean per-channel SSIM.
///
/// # Safety
/// Both images must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_mssim(
    reference: *const GottvImage,
    test: *const GottvImage,
    out: *mut f64,
) -> GottvStatus {
    metric(reference, test, out, metrics::mssim)
}

/// All canonical opponent bases of dimension `d` (`d! / 2` of them).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_basis_enumerate(
    d: usize,
    out: *mut *mut GottvBasisSet,
) -> GottvStatus {
    guard(|| -> Outcome {
        if out.is_null() {
            return Err(null("out"));
        }
        let bases = enumerate_qd(d).map_err(lib)?;
        *out = Box::into_raw(Box::new(GottvBasisSet { dim: d, bases }));
        Ok(())
    })
}

/// Number of bases in `set` (0 for `NULL`).
///
/// # Safety
/// `set` must be a live handle or `NULL`.
#[no_mangle]
pub unsafe extern "C" fn gottv_basis_set_len(set: *const GottvBasisSet) -> usize {
    set.as_ref().map_or(0, |s| s.bases.len())
}

/// Copies basis `index` into `matrix` as `d * d` row-major values and, if
/// `permutation` is non-null, its zero-based column permutation (`d` values).
///
/// # Safety
/// `set` must be a live handle; `matrix` must have room for `d * d` doubles
/// and `permutation`, if non-null, for `d` values.
#[no_mangle]
pub unsafe extern "C" fn gottv_basis_set_get(
    set: *const GottvBasisSet,
    index: usize,
    matrix: *mut f64,
    permutation: *mut usize,
) -> GottvStatus {
    guard(|| -> Outcome {
        let set = set.as_ref().ok_or_else(|| null("set"))?;
        if matrix.is_null() {
            return Err(null("matrix"));
        }
        let basis = set
            .bases
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of range 0..{}", set.bases.len())))?;
        ptr::copy_nonoverlapping(basis.matrix().as_ptr(), matrix, set.dim * set.dim);
        if !permutation.is_null() {
            ptr::copy_nonoverlapping(basis.permutation().as_ptr(), permutation, set.dim);
        }
        Ok(())
    })
}

/// Releases a basis set.
///
/// # Safety
/// `set` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gottv_basis_set_free(set: *mut GottvBasisSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Checks whether a row-major `d x d` matrix is an opponent transform.
/// Writes 1 to `valid` if it is, 0 otherwise.
///
/// # Safety
/// `matrix` must hold `d * d` readable doubles; `valid` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gottv_basis_verify(
    matrix: *const f64,
    d: usize,
    valid: *mut i32,
) -> GottvStatus {
    guard(|| -> Outcome {
        if matrix.is_null() {
            return Err(null("matrix"));
        }
        if valid.is_null() {
            return Err(null("valid"));
        }
        if d == 0 {
            return Err(invalid("d must be positive"));
        }
        let values = std::slice::from_raw_parts(matrix, d * d);
        let report = verify_opponent(values);
        *valid = i32::from(report.is_valid());
        if !report.is_valid() {
            set_error(format!("{:?}", report.violations));
        }
        Ok(())
    })
}
