//! Closed-form posterior for the Gaussian likelihood, backend "analytic".
//!
//! For `V(q - x) = (q - x)^2 / (2 delta^2)` the update equation is a driven
//! imaginary-time oscillator and integrates exactly. The posterior at time t
//! is, up to normalization,
//!
//! ```text
//! p(q, t)  ~  exp(tilt * q) * sum_n c_n exp(-omega (n + 1/2) t) f_n(q + shift)
//! ```
//!
//! where `c_n` expands the prior, `f_n` is the Hermite family, and `shift`,
//! `tilt` are evidence-weighted sinh/cosh integrals of the drive. The
//! remaining q-independent exponent is reported as `log_prefactor`; it
//! cancels under renormalization but, added to the log mass of the
//! unnormalized sum, tracks the norm decay of the PDE backend.
//!
//! The drive enters through the cross term `-(x / delta^2) q` of the
//! expanded potential; its sign is what pulls the posterior toward the
//! evidence (a positive constant drive must move the mean to
//! `x0 (1 - e^{-omega t})`, which fixes both signs below).

use crate::error::{Error, Result};
use crate::grid::{Density, Grid, ModelParams};
use crate::hermite::FockState;
use crate::observations::ObservationSeries;

/// Working-range bound: cosh/sinh weights grow like `exp(omega t)` and
/// amplify quadrature noise beyond this.
pub const MAX_OMEGA_T: f64 = 6.0;

/// Evidence-weighted integrals of the drive, all evaluated at one time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveIntegrals {
    /// Argument shift of the mode mixture (state units):
    /// `(sqrt(D)/delta) * int x(s) sinh(omega (t-s)) ds`.
    pub shift: f64,
    /// Exponential-tilt rate (1/state):
    /// `(1/delta^2) * int x(s) cosh(omega (t-s)) ds`.
    pub tilt: f64,
    /// Scalar from the second-order time-ordering (Magnus) correction:
    /// `(sqrt(D)/(2 delta^3)) * double-int over s' > s'' of
    /// x(s') x(s'') sinh(omega (s'-s''))`.
    pub magnus_phase: f64,
    /// Scalar from splitting the tilt and shift exponentials; factorizes
    /// exactly as `shift * tilt / 2`.
    pub ordering_phase: f64,
    /// `int x(s)^2 / (2 delta^2) ds`, the quadratic evidence cost.
    pub neg_log_evidence: f64,
}

/// Integrates the drive with the series' piecewise-constant interpolation,
/// per-interval trapezoid in time (intervals clipped to `[0, t]`).
pub fn aux_integrals(
    obs: &ObservationSeries,
    params: &ModelParams,
    t: f64,
) -> Result<DriveIntegrals> {
    let eps = obs.eps();
    if t < 0.0 || t > obs.t_final() + 1e-9 * eps {
        return Err(Error::Domain(format!(
            "time {t} outside the observation series [0, {}]",
            obs.t_final()
        )));
    }
    let omega = params.omega();
    let delta = params.delta();
    let sqrt_d = params.diffusion().sqrt();

    // Clipped intervals (a_i, b_i) with constant value x_i.
    let mut iv: Vec<(f64, f64, f64)> = Vec::new();
    for (i, &x) in obs.values().iter().enumerate() {
        let a = i as f64 * eps;
        let b = ((i + 1) as f64 * eps).min(t);
        if b <= a {
            break;
        }
        iv.push((a, b, x));
    }

    let mut shift = 0.0;
    let mut tilt = 0.0;
    let mut nle = 0.0;
    for &(a, b, x) in &iv {
        let len = b - a;
        shift += x * 0.5 * len * ((omega * (t - a)).sinh() + (omega * (t - b)).sinh());
        tilt += x * 0.5 * len * ((omega * (t - a)).cosh() + (omega * (t - b)).cosh());
        nle += x * x * len;
    }
    shift *= sqrt_d / delta;
    tilt /= delta * delta;
    nle /= 2.0 * delta * delta;

    // Ordered double integral over the triangle s'' < s': full cells by the
    // four-corner average, diagonal cells by the triangle vertex mean.
    let mut magnus = 0.0;
    for (i, &(ai, bi, xi)) in iv.iter().enumerate() {
        for &(aj, bj, xj) in &iv[..i] {
            let corners = (omega * (ai - aj)).sinh()
                + (omega * (ai - bj)).sinh()
                + (omega * (bi - aj)).sinh()
                + (omega * (bi - bj)).sinh();
            magnus += xi * xj * (bi - ai) * (bj - aj) * corners / 4.0;
        }
        let len = bi - ai;
        magnus += xi * xi * (len * len / 2.0) * (omega * len).sinh() / 3.0;
    }
    magnus *= sqrt_d / (2.0 * delta * delta * delta);

    Ok(DriveIntegrals {
        shift,
        tilt,
        magnus_phase: magnus,
        ordering_phase: shift * tilt / 2.0,
        neg_log_evidence: nle,
    })
}

/// Closed-form posterior with its scalar bookkeeping.
#[derive(Debug, Clone)]
pub struct AnalyticPosterior {
    /// Renormalized posterior density.
    pub density: Density,
    /// The q-independent exponent `ordering_phase - magnus_phase -
    /// neg_log_evidence` (cancels under renormalization).
    pub log_prefactor: f64,
    /// Log of the grid integral of the unnormalized tilt-times-mixture sum.
    /// `log_prefactor + log_mass` tracks the PDE backend's `log_norm`.
    pub log_mass: f64,
}

/// Evaluates the closed form on a grid and renormalizes.
///
/// Truncation can leave tiny negative wiggles; anything beyond the density
/// clamp tolerance is rejected with advice to raise `n_max`.
pub fn posterior_closed_form(
    state: &FockState,
    aux: &DriveIntegrals,
    t: f64,
    grid: &Grid,
) -> Result<AnalyticPosterior> {
    let basis = state.basis();
    let omega = basis.omega();
    if t < 0.0 || omega * t > MAX_OMEGA_T {
        return Err(Error::Domain(format!(
            "omega*t = {:.2} outside the working range [0, {MAX_OMEGA_T}]",
            omega * t
        )));
    }
    let decay: Vec<f64> = (0..basis.n_max())
        .map(|n| (-omega * (n as f64 + 0.5) * t).exp())
        .collect();
    // Stabilize the tilt exponent by its grid maximum; the offset cancels in
    // renormalization and is added back to log_mass.
    let c = (aux.tilt * grid.q_min()).max(aux.tilt * grid.q_max());
    let values: Vec<f64> = grid
        .points()
        .map(|q| {
            let mixture: f64 = basis
                .eval_all(q + aux.shift)
                .iter()
                .zip(state.coeffs())
                .zip(&decay)
                .map(|((f, cn), d)| f * cn * d)
                .sum();
            (aux.tilt * q - c).exp() * mixture
        })
        .collect();
    let raw = Density::new(*grid, values)?;
    let mass = raw.mass();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::DeadPosterior);
    }
    Ok(AnalyticPosterior {
        density: raw.renormalize()?,
        log_prefactor: aux.ordering_phase - aux.magnus_phase - aux.neg_log_evidence,
        log_mass: mass.ln() + c,
    })
}
