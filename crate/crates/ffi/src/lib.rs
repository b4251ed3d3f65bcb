//! C ABI over the posterior backends.
//!
//! All heap objects cross the boundary as opaque handles created and
//! destroyed here; every fallible call returns a status code and leaves a
//! human-readable message retrievable with [`gf_last_error`] on the calling
//! thread. Output parameters are written only on `GF_STATUS_OK`.
//!
//! The quadratic (gaussian) evidence cost is implied throughout: the
//! potential width is taken from the model parameters.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gridfilter::analytic::{aux_integrals, posterior_closed_form};
use gridfilter::chain::chain_run;
use gridfilter::fock::fock_run;
use gridfilter::hermite::{project_prior, HermiteBasis};
use gridfilter::pde::pde_run;
use gridfilter::{Density, Error, Grid, ModelParams, ObservationSeries, Potential};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfStatus {
    /// Success; output parameters are valid.
    GfStatusOk = 0,
    /// An argument was out of range or inconsistent.
    GfStatusInvalidArgument = 1,
    /// The computation failed numerically (dead posterior, truncation
    /// gates, grid too small).
    GfStatusNumericFailure = 2,
    /// The requested backend cannot handle the configured potential.
    GfStatusIncompatibleMethod = 3,
    /// A required pointer was null.
    GfStatusNullPointer = 4,
}

use GfStatus::*;

/// Opaque model parameters (diffusion constant, evidence width, step).
pub struct GfParams(ModelParams);
/// Opaque uniform grid.
pub struct GfGrid(Grid);
/// Opaque normalized density on a grid.
pub struct GfDensity(Density);
/// Opaque observation series.
pub struct GfObservations(ObservationSeries);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(err: &Error) -> GfStatus {
    match err {
        Error::IncompatibleMethod { .. } => GfStatusIncompatibleMethod,
        Error::InvalidGrid(_)
        | Error::InvalidParams(_)
        | Error::Config(_)
        | Error::Domain(_)
        | Error::GridMismatch => GfStatusInvalidArgument,
        _ => GfStatusNumericFailure,
    }
}

fn fail(err: &Error) -> GfStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Runs a fallible body, converting panics into a status instead of
/// unwinding across the boundary.
fn guarded<T>(out: *mut *mut T, body: impl FnOnce() -> Result<T, Error>) -> GfStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return GfStatusNullPointer;
    }
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(value)) => {
            unsafe { *out = Box::into_raw(Box::new(value)) };
            GfStatusOk
        }
        Ok(Err(e)) => fail(&e),
        Err(_) => {
            set_error("internal panic");
            GfStatusNumericFailure
        }
    }
}

macro_rules! require {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => {
                set_error(concat!(stringify!($ptr), " is null"));
                return GfStatusNullPointer;
            }
        }
    };
}

/// Message describing the most recent failure on this thread.
///
/// # Safety
/// The pointer is owned by the library and valid until the next failing
/// call on the same thread. Do not free it.
#[no_mangle]
pub unsafe extern "C" fn gf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates model parameters.
///
/// # Safety
/// `out` must be a valid pointer. The handle must be released with
/// [`gf_params_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_params_new(
    diffusion: f64,
    delta: f64,
    eps: f64,
    out: *mut *mut GfParams,
) -> GfStatus {
    guarded(out, || ModelParams::new(diffusion, delta, eps).map(GfParams))
}

/// Releases parameters; a null handle is ignored.
///
/// # Safety
/// `params` must be a handle from [`gf_params_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_params_free(params: *mut GfParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Creates a uniform grid with `n_points >= 8` nodes on `[q_min, q_max]`.
///
/// # Safety
/// `out` must be valid; release the handle with [`gf_grid_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_grid_new(
    q_min: f64,
    q_max: f64,
    n_points: usize,
    out: *mut *mut GfGrid,
) -> GfStatus {
    guarded(out, || Grid::new(q_min, q_max, n_points).map(GfGrid))
}

/// Releases a grid; a null handle is ignored.
///
/// # Safety
/// `grid` must be a handle from [`gf_grid_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_grid_free(grid: *mut GfGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Creates an observation series of `len` values at spacing `eps`.
///
/// # Safety
/// `values` must point to `len` readable doubles (or be null with
/// `len == 0`); release the handle with [`gf_observations_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_observations_new(
    eps: f64,
    values: *const f64,
    len: usize,
    out: *mut *mut GfObservations,
) -> GfStatus {
    if values.is_null() && len > 0 {
        set_error("values is null");
        return GfStatusNullPointer;
    }
    let slice: Vec<f64> = if len == 0 {
        Vec::new()
    } else {
        std::slice::from_raw_parts(values, len).to_vec()
    };
    guarded(out, || ObservationSeries::new(eps, slice).map(GfObservations))
}

/// Releases an observation series; a null handle is ignored.
///
/// # Safety
/// `obs` must be a handle from [`gf_observations_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_observations_free(obs: *mut GfObservations) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// Creates a normalized Gaussian density on a grid.
///
/// # Safety
/// `grid` must be a live grid handle; release the result with
/// [`gf_density_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_density_gaussian(
    grid: *const GfGrid,
    mean: f64,
    std: f64,
    out: *mut *mut GfDensity,
) -> GfStatus {
    let grid = require!(grid);
    guarded(out, || Density::gaussian(grid.0, mean, std).map(GfDensity))
}

/// Creates a density from raw values (renormalized internally).
///
/// # Safety
/// `grid` must be live and `values` must point to as many doubles as the
/// grid has nodes; release the result with [`gf_density_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_density_from_values(
    grid: *const GfGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut GfDensity,
) -> GfStatus {
    let grid = require!(grid);
    if values.is_null() {
        set_error("values is null");
        return GfStatusNullPointer;
    }
    let vals = std::slice::from_raw_parts(values, len).to_vec();
    guarded(out, || {
        Density::new(grid.0, vals).and_then(|d| d.renormalize()).map(GfDensity)
    })
}

/// Releases a density; a null handle is ignored.
///
/// # Safety
/// `density` must be a handle produced by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gf_density_free(density: *mut GfDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Number of grid nodes of a density, or 0 for a null handle.
///
/// # Safety
/// `density` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn gf_density_len(density: *const GfDensity) -> usize {
    density.as_ref().map_or(0, |d| d.0.values().len())
}

/// Copies the density values into a caller buffer of `len` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles; `len` must equal
/// [`gf_density_len`].
#[no_mangle]
pub unsafe extern "C" fn gf_density_values(
    density: *const GfDensity,
    buf: *mut f64,
    len: usize,
) -> GfStatus {
    let density = require!(density);
    if buf.is_null() {
        set_error("buf is null");
        return GfStatusNullPointer;
    }
    let values = density.0.values();
    if len != values.len() {
        set_error("buffer length disagrees with the density");
        return GfStatusInvalidArgument;
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, len);
    GfStatusOk
}

/// Mean and variance of a density.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_density_moments(
    density: *const GfDensity,
    mean: *mut f64,
    variance: *mut f64,
) -> GfStatus {
    let density = require!(density);
    if mean.is_null() || variance.is_null() {
        set_error("moment output pointer is null");
        return GfStatusNullPointer;
    }
    match density.0.moments() {
        Ok((m, v)) => {
            *mean = m;
            *variance = v;
            GfStatusOk
        }
        Err(e) => fail(&e),
    }
}

/// L1 distance between two densities on the same grid.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_l1_distance(
    a: *const GfDensity,
    b: *const GfDensity,
    out: *mut f64,
) -> GfStatus {
    let a = require!(a);
    let b = require!(b);
    if out.is_null() {
        set_error("out is null");
        return GfStatusNullPointer;
    }
    match gridfilter::l1_distance(&a.0, &b.0) {
        Ok(d) => {
            *out = d;
            GfStatusOk
        }
        Err(e) => fail(&e),
    }
}

unsafe fn run_common(
    prior: *const GfDensity,
    obs: *const GfObservations,
    params: *const GfParams,
    out: *mut *mut GfDensity,
    body: impl FnOnce(&Density, &ObservationSeries, &ModelParams) -> Result<Density, Error>,
) -> GfStatus {
    let prior = require!(prior);
    let obs = require!(obs);
    let params = require!(params);
    guarded(out, || body(&prior.0, &obs.0, &params.0).map(GfDensity))
}

/// Discrete-chain posterior with the quadratic evidence cost.
///
/// # Safety
/// All handles must be live; release the result with [`gf_density_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_run_chain(
    prior: *const GfDensity,
    obs: *const GfObservations,
    params: *const GfParams,
    out: *mut *mut GfDensity,
) -> GfStatus {
    run_common(prior, obs, params, out, |prior, obs, params| {
        let v = Potential::gaussian(params.delta())?;
        chain_run(prior, obs, params, &v)
    })
}

/// Split-step integrator posterior. If `log_norm` is non-null it receives
/// the log of the evidence-induced norm decay.
///
/// # Safety
/// All handles must be live; release the result with [`gf_density_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_run_pde(
    prior: *const GfDensity,
    obs: *const GfObservations,
    params: *const GfParams,
    log_norm: *mut f64,
    out: *mut *mut GfDensity,
) -> GfStatus {
    run_common(prior, obs, params, out, |prior, obs, params| {
        let v = Potential::gaussian(params.delta())?;
        let (d, ln) = pde_run(prior, obs, params, &v, true)?;
        if !log_norm.is_null() {
            *log_norm = ln;
        }
        Ok(d)
    })
}

/// Closed-form posterior on `n_max` modes.
///
/// # Safety
/// All handles must be live; release the result with [`gf_density_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_run_analytic(
    prior: *const GfDensity,
    obs: *const GfObservations,
    params: *const GfParams,
    n_max: usize,
    out: *mut *mut GfDensity,
) -> GfStatus {
    run_common(prior, obs, params, out, |prior, obs, params| {
        let basis = HermiteBasis::new(params.delta(), params.diffusion(), n_max)?;
        let (state, _) = project_prior(prior, &basis)?;
        let t = obs.t_final();
        let aux = aux_integrals(obs, params, t)?;
        Ok(posterior_closed_form(&state, &aux, t, prior.grid())?.density)
    })
}

/// Ladder-operator posterior on `n_max` modes.
///
/// # Safety
/// All handles must be live; release the result with [`gf_density_free`].
#[no_mangle]
pub unsafe extern "C" fn gf_run_fock(
    prior: *const GfDensity,
    obs: *const GfObservations,
    params: *const GfParams,
    n_max: usize,
    out: *mut *mut GfDensity,
) -> GfStatus {
    run_common(prior, obs, params, out, |prior, obs, params| {
        fock_run(prior, obs, params, n_max)
    })
}
