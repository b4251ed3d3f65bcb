//! Truncated ladder-operator evolution, backend "fock".
//!
//! The update generator splits into the relaxation part `omega (N + 1/2)`
//! (diagonal in the Hermite family) and a drive linear in the ladder
//! operators. Working in the frame of the relaxation part turns the drive
//! into `-x(t) s (e^{-omega t} a + e^{omega t} a_dag)` and the coefficient
//! vector obeys a linear ODE integrated here with classic RK4, one step per
//! observation interval. The frame transform is undone afterwards by the
//! diagonal decay `e^{-omega (n + 1/2) T}`.
//!
//! Truncation to `n_max` modes is only trustworthy while the top of the
//! ladder stays unpopulated; the tail gate is checked on the projected
//! prior and again on the evolved coefficients before the decay is applied
//! (the decay crushes the tail and would make the check vacuous).

use nalgebra::{DMatrix, DVector};

use crate::chain::check_series;
use crate::error::{Error, Result};
use crate::grid::{Density, ModelParams};
use crate::hermite::{project_prior, FockState, HermiteBasis, TAIL_LIMIT};
use crate::observations::ObservationSeries;

/// Frame weights reach `e^{omega T}`; beyond this the truncated ladder
/// pumps occupation upward faster than any practical `n_max` absorbs.
pub const MAX_OMEGA_T: f64 = 3.0;

/// Conjugation identities are exercised up to this rotation angle.
pub const MAX_BCH_OMEGA_T: f64 = 4.0;

/// Lowering and raising matrices on `n_max` modes.
///
/// The lowering matrix has `sqrt(n)` on the superdiagonal, the raising
/// matrix is its transpose. Their commutator is the identity except for
/// `-(n_max - 1)` in the last diagonal slot, the fingerprint of truncation.
pub fn ladder_matrices(n_max: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if n_max < 2 {
        return Err(Error::InvalidParams(format!(
            "ladder matrices need at least 2 modes, got {n_max}"
        )));
    }
    let mut lower = DMatrix::zeros(n_max, n_max);
    for n in 1..n_max {
        lower[(n - 1, n)] = (n as f64).sqrt();
    }
    let raise = lower.transpose();
    Ok((lower, raise))
}

/// Matrix exponential by scaling and squaring with a degree-16 Taylor
/// polynomial on the scaled matrix.
pub fn matrix_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix_exp needs a square matrix");
    // induced 1-norm: max absolute column sum
    let norm = (0..n)
        .map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=16 {
        term = (&term * &scaled) / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Conjugates `a + a_dag` with the exponential of the relaxation generator
/// and compares against the exact frame weights `e^{-+ omega t}` on the
/// tridiagonal, away from the truncated top of the ladder.
///
/// Returns the worst relative deviation over the interior block (top four
/// modes dropped) and both conjugation directions.
pub fn bch_conjugation_check(params: &ModelParams, t: f64, n_max: usize) -> Result<f64> {
    let omega = params.omega();
    if t < 0.0 || omega * t > MAX_BCH_OMEGA_T {
        return Err(Error::Domain(format!(
            "omega*t = {:.2} outside the conjugation check range [0, {MAX_BCH_OMEGA_T}]",
            omega * t
        )));
    }
    if n_max < 8 {
        return Err(Error::InvalidParams(format!(
            "conjugation check needs at least 8 modes, got {n_max}"
        )));
    }
    let (lower, raise) = ladder_matrices(n_max)?;
    let position = &lower + &raise;
    let generator = DMatrix::from_diagonal(&DVector::from_fn(n_max, |i, _| {
        omega * t * (i as f64 + 0.5)
    }));
    let mut worst = 0.0f64;
    for direction in [1.0, -1.0] {
        let u = matrix_exp(&(&generator * direction));
        let u_inv = matrix_exp(&(&generator * -direction));
        let conjugated = &u * &position * &u_inv;
        // exp(+G) a exp(-G) = e^{-omega t} a, and the transpose for a_dag
        let w_low = (-direction * omega * t).exp();
        let w_high = (direction * omega * t).exp();
        let interior = n_max - 4;
        for i in 0..interior {
            for j in 0..interior {
                let expected = w_low * lower[(i, j)] + w_high * raise[(i, j)];
                let dev = (conjugated[(i, j)] - expected).abs() / (1.0 + expected.abs());
                worst = worst.max(dev);
            }
        }
    }
    Ok(worst)
}

const COMMUTATOR_CHECK_MODES: usize = 16;
const COMMUTATOR_CHECK_TOL: f64 = 1e-8;

fn drive_commutator_scalar(params: &ModelParams, x1: f64, x2: f64, t1: f64, t2: f64) -> f64 {
    let omega = params.omega();
    -x1 * x2 * params.diffusion().sqrt() / params.delta().powi(3) * (omega * (t1 - t2)).sinh()
}

/// Worst relative deviation between the explicit matrix commutator of the
/// frame drive at two times and its scalar value times the identity, over
/// the interior of an `n_modes` ladder (last slot dropped, where the
/// truncated commutator differs by construction).
pub fn commutator_matrix_deviation(
    obs: &ObservationSeries,
    params: &ModelParams,
    t1: f64,
    t2: f64,
    n_modes: usize,
) -> Result<f64> {
    let x1 = obs.value_at(t1)?;
    let x2 = obs.value_at(t2)?;
    let omega = params.omega();
    let scalar = drive_commutator_scalar(params, x1, x2, t1, t2);
    let s = (params.diffusion().sqrt() / (2.0 * params.delta().powi(3))).sqrt();
    let (lower, raise) = ladder_matrices(n_modes)?;
    let h = |x: f64, t: f64| -> DMatrix<f64> {
        (&lower * (-omega * t).exp() + &raise * (omega * t).exp()) * (-x * s)
    };
    let h1 = h(x1, t1);
    let h2 = h(x2, t2);
    let commutator = &h1 * &h2 - &h2 * &h1;
    let mut worst = 0.0f64;
    for i in 0..n_modes - 1 {
        for j in 0..n_modes - 1 {
            let expected = if i == j { scalar } else { 0.0 };
            worst = worst.max((commutator[(i, j)] - expected).abs() / (1.0 + scalar.abs()));
        }
    }
    Ok(worst)
}

/// Scalar value of the commutator of the frame drive at two times,
/// `-x(t1) x(t2) (sqrt(D)/delta^3) sinh(omega (t1 - t2))`.
///
/// Cross-checked internally against the explicit matrix commutator on a
/// small ladder, whose interior diagonal must reproduce this scalar.
pub fn magnus_commutator(
    obs: &ObservationSeries,
    params: &ModelParams,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let dev = commutator_matrix_deviation(obs, params, t1, t2, COMMUTATOR_CHECK_MODES)?;
    if dev > COMMUTATOR_CHECK_TOL {
        return Err(Error::Domain(format!(
            "ladder commutator check failed: deviation {dev:.2e}"
        )));
    }
    Ok(drive_commutator_scalar(
        params,
        obs.value_at(t1)?,
        obs.value_at(t2)?,
        t1,
        t2,
    ))
}

/// Integrates the frame ODE `dc/dt = x(t) s (e^{-omega t} a + e^{omega t}
/// a_dag) c` with one RK4 step per observation interval.
///
/// The result stays in the relaxation frame: no diagonal decay is applied,
/// so the tail of the returned coefficients is meaningful.
pub fn fock_evolve(
    state: &FockState,
    obs: &ObservationSeries,
    params: &ModelParams,
) -> Result<FockState> {
    let basis = state.basis();
    if (basis.delta() - params.delta()).abs() > 1e-12 * params.delta()
        || (basis.diffusion() - params.diffusion()).abs() > 1e-12 * params.diffusion()
    {
        return Err(Error::InvalidParams(
            "basis and model parameters disagree".into(),
        ));
    }
    check_series(obs, params)?;
    let omega = params.omega();
    if omega * obs.t_final() > MAX_OMEGA_T {
        return Err(Error::Domain(format!(
            "omega*T = {:.2} outside the ladder working range [0, {MAX_OMEGA_T}]",
            omega * obs.t_final()
        )));
    }
    let n_max = basis.n_max();
    let (lower, raise) = ladder_matrices(n_max.max(2))?;
    let s = (params.diffusion().sqrt() / (2.0 * params.delta().powi(3))).sqrt();
    let eps = obs.eps();

    let deriv = |x: f64, t: f64, c: &DVector<f64>| -> DVector<f64> {
        let down = &lower * c;
        let up = &raise * c;
        down * (x * s * (-omega * t).exp()) + up * (x * s * (omega * t).exp())
    };

    let mut c = DVector::from_column_slice(state.coeffs());
    for (i, &x) in obs.values().iter().enumerate() {
        let t0 = i as f64 * eps;
        let k1 = deriv(x, t0, &c);
        let k2 = deriv(x, t0 + eps / 2.0, &(&c + &k1 * (eps / 2.0)));
        let k3 = deriv(x, t0 + eps / 2.0, &(&c + &k2 * (eps / 2.0)));
        let k4 = deriv(x, t0 + eps, &(&c + &k3 * eps));
        c += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (eps / 6.0);
    }
    FockState::new(c.as_slice().to_vec(), basis.clone())
}

/// Full ladder backend: project the prior, evolve in the relaxation frame,
/// gate the truncation tail, undo the frame, reconstruct on the prior's
/// grid and renormalize.
pub fn fock_run(
    prior: &Density,
    obs: &ObservationSeries,
    params: &ModelParams,
    n_max: usize,
) -> Result<Density> {
    let basis = HermiteBasis::new(params.delta(), params.diffusion(), n_max)?;
    let (state, _residual) = project_prior(prior, &basis)?;
    let tail = state.tail_ratio();
    if tail >= TAIL_LIMIT {
        return Err(Error::TailMass {
            tail,
            limit: TAIL_LIMIT,
        });
    }
    let evolved = fock_evolve(&state, obs, params)?;
    let tail = evolved.tail_ratio();
    if tail >= TAIL_LIMIT {
        return Err(Error::TailMass {
            tail,
            limit: TAIL_LIMIT,
        });
    }
    let t_final = obs.t_final();
    let omega = params.omega();
    let relaxed: Vec<f64> = evolved
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| c * (-omega * (n as f64 + 0.5) * t_final).exp())
        .collect();
    let relaxed = FockState::new(relaxed, basis)?;
    let grid = *prior.grid();
    Density::new(grid, relaxed.reconstruct_values(&grid))?.renormalize()
}
