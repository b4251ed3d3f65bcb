//! Uniform 1-D grids, densities on them, moments and distances.
//!
//! Everything downstream (all four posterior backends, the CLI, the FFI
//! surface) works with these types. Quadrature is the trapezoid rule
//! throughout, which composes exactly on a uniform grid and matches the
//! second-order accuracy of the step methods. Values outside `[q_min, q_max]`
//! are treated as zero; callers are expected to keep several posterior
//! standard deviations inside the grid.

use crate::error::{Error, Result};

/// Tolerance on the trapezoid integral for a density to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Negative values smaller than `-NEGATIVE_CLAMP_REL * max` are rejected;
/// anything in between is a harmless truncation artifact and is clamped to 0.
pub const NEGATIVE_CLAMP_REL: f64 = 1e-9;

/// Uniform grid over `[q_min, q_max]` with `n_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    q_min: f64,
    q_max: f64,
    n_points: usize,
    dq: f64,
}

impl Grid {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Grid> {
        if !q_min.is_finite() || !q_max.is_finite() {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if q_min >= q_max {
            return Err(Error::InvalidGrid(format!(
                "q_min {q_min} must be below q_max {q_max}"
            )));
        }
        if n_points < 8 {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 points, got {n_points}"
            )));
        }
        let dq = (q_max - q_min) / (n_points - 1) as f64;
        Ok(Grid { q_min, q_max, n_points, dq })
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.q_max - self.q_min)
    }

    /// Node `i`, exactly `q_min + i*dq`.
    pub fn point(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Trapezoid integral of samples over this grid.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        let sum: f64 = values.iter().sum();
        self.dq * (sum - 0.5 * (values[0] + values[self.n_points - 1]))
    }
}

/// Nonnegative function samples on a grid, with explicit normalization status.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    grid: Grid,
    values: Vec<f64>,
    normalized: bool,
}

impl Density {
    /// Wraps raw samples. Tiny negative entries (below `NEGATIVE_CLAMP_REL`
    /// of the maximum, typical of spectral truncation) are clamped to zero;
    /// genuinely negative profiles are rejected.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Density> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DeadPosterior);
        }
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_CLAMP_REL * max.max(0.0) {
            return Err(Error::NegativeDensity { min });
        }
        let mut values = values;
        for v in &mut values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mass = grid.trapezoid(&values);
        let normalized = (mass - 1.0).abs() <= NORMALIZATION_TOL;
        Ok(Density { grid, values, normalized })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Density> {
        let values = grid.points().map(f).collect();
        Density::new(grid, values)
    }

    /// Normalized Gaussian density `N(mean, std^2)` sampled on the grid.
    pub fn gaussian(grid: Grid, mean: f64, std: f64) -> Result<Density> {
        if !(std > 0.0) || !mean.is_finite() || !std.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gaussian density needs finite mean and positive std, got ({mean}, {std})"
            )));
        }
        let d = Density::from_fn(grid, |q| {
            let z = (q - mean) / std;
            (-0.5 * z * z).exp()
        })?;
        d.renormalize()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Trapezoid integral of the samples.
    pub fn mass(&self) -> f64 {
        self.grid.trapezoid(&self.values)
    }

    /// Scales the samples to unit integral.
    pub fn renormalize(&self) -> Result<Density> {
        let mass = self.mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::DeadPosterior);
        }
        let values = self.values.iter().map(|v| v / mass).collect();
        Ok(Density { grid: self.grid, values, normalized: true })
    }

    /// Mean and variance by trapezoid quadrature. Requires a normalized input.
    pub fn moments(&self) -> Result<(f64, f64)> {
        if !self.normalized {
            return Err(Error::Unnormalized);
        }
        let mean: f64 = self
            .grid
            .trapezoid(&self.values.iter().zip(self.grid.points()).map(|(p, q)| p * q).collect::<Vec<_>>());
        let var: f64 = self.grid.trapezoid(
            &self
                .values
                .iter()
                .zip(self.grid.points())
                .map(|(p, q)| p * (q - mean) * (q - mean))
                .collect::<Vec<_>>(),
        );
        Ok((mean, var))
    }
}

/// L1 distance between two normalized densities on the same grid; lies in [0, 2].
pub fn l1_distance(a: &Density, b: &Density) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    if !a.is_normalized() || !b.is_normalized() {
        return Err(Error::Unnormalized);
    }
    let diff: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .collect();
    Ok(a.grid().trapezoid(&diff))
}

/// Diffusion constant `D`, likelihood width `delta`, and time step `eps`.
///
/// The constructor enforces `eps * sqrt(D) / delta <= 0.5` so a single-step
/// likelihood weight stays well conditioned and splitting error stays small.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    diffusion: f64,
    delta: f64,
    eps: f64,
}

impl ModelParams {
    pub fn new(diffusion: f64, delta: f64, eps: f64) -> Result<ModelParams> {
        for (name, v) in [("D", diffusion), ("delta", delta), ("eps", eps)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        let stiffness = eps * diffusion.sqrt() / delta;
        if stiffness > 0.5 {
            return Err(Error::InvalidParams(format!(
                "eps*sqrt(D)/delta = {stiffness:.3} exceeds the stability bound 0.5"
            )));
        }
        Ok(ModelParams { diffusion, delta, eps })
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Relaxation rate `sqrt(D) / delta` of the Gaussian-likelihood problem.
    pub fn omega(&self) -> f64 {
        self.diffusion.sqrt() / self.delta
    }
}
