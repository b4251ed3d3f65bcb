//! Evidence series and likelihood potentials.
//!
//! Observations arrive at uniform spacing `eps`; the value stored at index
//! `i` is the evidence for the step ending at `t = (i+1)*eps`. All backends
//! treat the signal as piecewise constant over each step, so every method
//! discretizes exactly the same drive.

use crate::error::{Error, Result};

/// Evidence samples `x(t_1) .. x(t_N)` at uniform spacing `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    eps: f64,
    values: Vec<f64>,
}

impl ObservationSeries {
    pub fn new(eps: f64, values: Vec<f64>) -> Result<ObservationSeries> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParams(format!(
                "observation spacing must be positive and finite, got {eps}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("observations must be finite".into()));
        }
        Ok(ObservationSeries { eps, values })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total time covered by the series.
    pub fn t_final(&self) -> f64 {
        self.values.len() as f64 * self.eps
    }

    /// Piecewise-constant lookup: the value governing time `t`, i.e. the
    /// observation of the step interval containing `t` (right-continuous at
    /// step boundaries, so `t = i*eps` belongs to step `i-1`).
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t > self.t_final() + 1e-12 * self.eps {
            return Err(Error::Domain(format!(
                "time {t} outside the observation series [0, {}]",
                self.t_final()
            )));
        }
        let idx = ((t / self.eps).ceil() as usize).clamp(1, self.values.len().max(1)) - 1;
        Ok(self.values[idx])
    }
}

/// Likelihood potential `V(u)`, the negative per-time log likelihood as a
/// function of the residual `u = q - x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `V(u) = u^2 / (2 delta^2)`, the conjugate choice for Gaussian evidence.
    Gaussian { delta: f64 },
    /// Tabulated nonnegative values on a uniform residual grid, linearly
    /// interpolated and clamped to the end values outside `[u_min, u_max]`.
    Tabulated { u_min: f64, u_max: f64, values: Vec<f64> },
}

impl Potential {
    pub fn gaussian(delta: f64) -> Result<Potential> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "potential width must be positive, got {delta}"
            )));
        }
        Ok(Potential::Gaussian { delta })
    }

    pub fn tabulated(u_min: f64, u_max: f64, values: Vec<f64>) -> Result<Potential> {
        if !(u_min < u_max) || !u_min.is_finite() || !u_max.is_finite() {
            return Err(Error::InvalidParams("potential table needs finite u_min < u_max".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidParams("potential table needs at least 2 values".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParams("potential values must be finite and nonnegative".into()));
        }
        Ok(Potential::Tabulated { u_min, u_max, values })
    }

    /// The trivial potential: no evidence coupling at all. Runs under it
    /// reduce to free diffusion.
    pub fn zero() -> Potential {
        Potential::Tabulated { u_min: -1.0, u_max: 1.0, values: vec![0.0, 0.0] }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Potential::Gaussian { .. })
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Potential::Gaussian { delta } => u * u / (2.0 * delta * delta),
            Potential::Tabulated { u_min, u_max, values } => {
                let n = values.len();
                let du = (u_max - u_min) / (n - 1) as f64;
                if u <= *u_min {
                    return values[0];
                }
                if u >= *u_max {
                    return values[n - 1];
                }
                let s = (u - u_min) / du;
                let i = (s.floor() as usize).min(n - 2);
                let frac = s - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }
}
