//! C interface to the `ising_battery` simulator.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns an
//! [`IbStatus`]; on failure a message is available from
//! [`ib_last_error_message`] on the same thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ising_battery::linalg::{CMat2, RMat2, C64};
use ising_battery::model::{mode_spectrum, quasimomenta, DensityMatrix2};
use ising_battery::observables::{adiabatic_energy, ergotropy_2x2, ObservableSeries};
use ising_battery::protocol::{ou_sample_path, uniform_grid, NoisePath, NoiseSpec, RampProtocol};
use ising_battery::runner::{self, RunConfig};
use ising_battery::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Integration = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A run configuration.
pub struct IbConfig {
    inner: RunConfig,
}

/// Observable time series of one run.
pub struct IbSeries {
    inner: ObservableSeries,
}

/// One sampled noise realisation.
pub struct IbNoisePath {
    inner: NoisePath,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IbStatus {
    match e {
        Error::Config { .. } | Error::ConfigParse(_) => IbStatus::Config,
        Error::Integration { .. } => IbStatus::Integration,
        Error::Io { .. } => IbStatus::Io,
        _ => IbStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics.
fn guard<F: FnOnce() -> Result<(), (IbStatus, String)>>(f: F) -> IbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IbStatus::Panic
        }
    }
}

fn lift(e: Error) -> (IbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IbStatus, String) {
    (IbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (IbStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            IbStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn out_slice<'a>(
    p: *mut f64,
    len: usize,
    what: &str,
) -> Result<&'a mut [f64], (IbStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// including the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ib_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

#[no_mangle]
pub extern "C" fn ib_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ib_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Writes the `n / 2` positive quasimomenta of an `n`-site chain.
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ib_quasimomenta(n: usize, out: *mut f64, len: usize) -> IbStatus {
    guard(|| {
        let ks = quasimomenta(n).map_err(lift)?;
        if len < ks.len() {
            return Err((
                IbStatus::BufferTooSmall,
                format!("need {} entries, got {len}", ks.len()),
            ));
        }
        out_slice(out, len, "out")?[..ks.len()].copy_from_slice(&ks);
        Ok(())
    })
}

/// Eigenvalues `(eps_minus, eps_plus)` of mode `k` at field `h`.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ib_mode_spectrum(
    k: f64,
    h: f64,
    eps_minus: *mut f64,
    eps_plus: *mut f64,
) -> IbStatus {
    guard(|| {
        if eps_minus.is_null() || eps_plus.is_null() {
            return Err(null("output"));
        }
        let (lo, hi) = mode_spectrum(k, h);
        *eps_minus = lo;
        *eps_plus = hi;
        Ok(())
    })
}

/// Ergotropy of a 2x2 density matrix (row-major real and imaginary parts)
/// against a real symmetric Hamiltonian (row-major).
///
/// # Safety
/// `rho_re`, `rho_im`, `ham` must point to 4 doubles; `out` to one.
#[no_mangle]
pub unsafe extern "C" fn ib_ergotropy_2x2(
    rho_re: *const f64,
    rho_im: *const f64,
    ham: *const f64,
    out: *mut f64,
) -> IbStatus {
    guard(|| {
        if rho_re.is_null() || rho_im.is_null() || ham.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let re = std::slice::from_raw_parts(rho_re, 4);
        let im = std::slice::from_raw_parts(rho_im, 4);
        let h = std::slice::from_raw_parts(ham, 4);
        let c = |i: usize| C64::new(re[i], im[i]);
        let rho = DensityMatrix2::new(CMat2::new(c(0), c(1), c(2), c(3))).map_err(lift)?;
        let h = RMat2::new(h[0], h[1], h[2], h[3]);
        if (h[(0, 1)] - h[(1, 0)]).abs() > 1e-12 {
            return Err((
                IbStatus::InvalidArgument,
                "Hamiltonian is not symmetric".into(),
            ));
        }
        *out = ergotropy_2x2(&rho, &h);
        Ok(())
    })
}

/// Stored energy of the qubit following the instantaneous ground state.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ib_adiabatic_energy(
    h_i: f64,
    h_f: f64,
    t_f: f64,
    j: f64,
    t: f64,
    out: *mut f64,
) -> IbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = RampProtocol::new(h_i, h_f, t_f).map_err(lift)?;
        *out = adiabatic_energy(&p, j, t).map_err(lift)?;
        Ok(())
    })
}

/// Default configuration (chain, N = 300, ramp 0.8 -> 1.5 over 10).
#[no_mangle]
pub extern "C" fn ib_config_default() -> *mut IbConfig {
    Box::into_raw(Box::new(IbConfig {
        inner: RunConfig::default(),
    }))
}

/// Parses a TOML configuration.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ib_config_from_toml(
    text: *const c_char,
    out: *mut *mut IbConfig,
) -> IbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(text, "text")?;
        let inner = RunConfig::from_toml_str(text).map_err(lift)?;
        inner.resolve().map_err(lift)?;
        *out = Box::into_raw(Box::new(IbConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ib_config_free(cfg: *mut IbConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets the output directory used by [`ib_run`].
///
/// # Safety
/// `cfg` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ib_config_set_output_dir(
    cfg: *mut IbConfig,
    dir: *const c_char,
) -> IbStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        cfg.inner.output.dir = PathBuf::from(str_arg(dir, "dir")?);
        Ok(())
    })
}

/// Overrides the master noise seed.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ib_config_set_seed(cfg: *mut IbConfig, seed: u64) -> IbStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        cfg.inner.noise.get_or_insert_with(Default::default).seed = seed;
        Ok(())
    })
}

/// Runs the configuration in memory.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ib_simulate(cfg: *const IbConfig, out: *mut *mut IbSeries) -> IbStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rc = cfg.inner.resolve().map_err(lift)?;
        let sim = runner::simulate(&rc).map_err(lift)?;
        *out = Box::into_raw(Box::new(IbSeries { inner: sim.series }));
        Ok(())
    })
}

/// Runs the configuration and writes its output files.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ib_run(cfg: *const IbConfig) -> IbStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        runner::run(&cfg.inner).map_err(lift)?;
        Ok(())
    })
}

/// # Safety
/// `series` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ib_series_len(series: *const IbSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies the series into caller buffers of length `len`. Undefined
/// efficiencies are written as NaN. Any output pointer may be null.
///
/// # Safety
/// Non-null buffers must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ib_series_copy(
    series: *const IbSeries,
    t: *mut f64,
    de_per_site: *mut f64,
    ergotropy_per_site: *mut f64,
    efficiency: *mut f64,
    len: usize,
) -> IbStatus {
    guard(|| {
        let s = &series.as_ref().ok_or_else(|| null("series"))?.inner;
        let n = s.len();
        if len < n {
            return Err((
                IbStatus::BufferTooSmall,
                format!("need {n} entries, got {len}"),
            ));
        }
        let eff: Vec<f64> = s.efficiency.iter().map(|e| e.unwrap_or(f64::NAN)).collect();
        for (dst, src) in [
            (t, &s.t),
            (de_per_site, &s.de_per_site),
            (ergotropy_per_site, &s.ergotropy_per_site),
            (efficiency, &eff),
        ] {
            if !dst.is_null() {
                std::slice::from_raw_parts_mut(dst, n).copy_from_slice(src);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ib_series_free(series: *mut IbSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Samples an Ornstein-Uhlenbeck path on a uniform grid over
/// `[0, t_end]` with spacing at most `max_step`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ib_noise_path_sample(
    xi: f64,
    tau_n: f64,
    seed: u64,
    t_end: f64,
    max_step: f64,
    out: *mut *mut IbNoisePath,
) -> IbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = NoiseSpec::new(xi, tau_n, seed).map_err(lift)?;
        let grid = uniform_grid(0.0, t_end, max_step).map_err(lift)?;
        let inner = ou_sample_path(&spec, &grid).map_err(lift)?;
        *out = Box::into_raw(Box::new(IbNoisePath { inner }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ib_noise_path_len(path: *const IbNoisePath) -> usize {
    path.as_ref().map_or(0, |p| p.inner.grid().len())
}

/// # Safety
/// Non-null buffers must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ib_noise_path_copy(
    path: *const IbNoisePath,
    t: *mut f64,
    eta: *mut f64,
    len: usize,
) -> IbStatus {
    guard(|| {
        let p = &path.as_ref().ok_or_else(|| null("path"))?.inner;
        let n = p.grid().len();
        if len < n {
            return Err((
                IbStatus::BufferTooSmall,
                format!("need {n} entries, got {len}"),
            ));
        }
        if !t.is_null() {
            out_slice(t, n, "t")?.copy_from_slice(p.grid());
        }
        if !eta.is_null() {
            out_slice(eta, n, "eta")?.copy_from_slice(p.values());
        }
        Ok(())
    })
}

/// # Safety
/// `path` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ib_noise_path_free(path: *mut IbNoisePath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}
