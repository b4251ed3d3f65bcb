//! Backend dispatch, synthetic data generation and cross-backend runs.
//!
//! A scenario couples a prior, an observation series and model parameters;
//! every backend consumes the same inputs and produces a posterior on the
//! same grid, which is what makes the four implementations mutually
//! checkable. The comparison runner executes backends sequentially in a
//! fixed order and keeps per-backend failures isolated: one backend
//! rejecting its inputs (truncation gates, incompatible potential) must not
//! hide the results of the others.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::analytic::{aux_integrals, posterior_closed_form};
use crate::chain::chain_run;
use crate::error::{Error, Result};
use crate::fock::fock_run;
use crate::grid::{l1_distance, Density, Grid, ModelParams};
use crate::hermite::{project_prior, HermiteBasis};
use crate::observations::{ObservationSeries, Potential};
use crate::pde::pde_run;
use crate::rng::{standard_normal, LATENT_STREAM, OBSERVATION_STREAM};

/// Keep priors this many standard deviations inside the grid so that the
/// clipped tail mass is negligible without evaluating error functions.
const PRIOR_GRID_SIGMAS: f64 = 6.5;

/// Prior shape, grid-independent.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    Gaussian { mean: f64, std: f64 },
    /// Positive weights, renormalized on build.
    Mixture(Vec<(f64, f64, f64)>),
}

impl PriorSpec {
    fn components(&self) -> Vec<(f64, f64, f64)> {
        match self {
            PriorSpec::Gaussian { mean, std } => vec![(1.0, *mean, *std)],
            PriorSpec::Mixture(parts) => parts.clone(),
        }
    }

    /// Weight-averaged mean, the default start of a synthetic latent path.
    pub fn mean(&self) -> f64 {
        let parts = self.components();
        let total: f64 = parts.iter().map(|(w, _, _)| w).sum();
        parts.iter().map(|(w, m, _)| w * m).sum::<f64>() / total
    }

    /// Renders the prior on a grid as a normalized density.
    pub fn build(&self, grid: &Grid) -> Result<Density> {
        let parts = self.components();
        if parts.is_empty() {
            return Err(Error::InvalidParams("prior needs at least one component".into()));
        }
        let mut total_weight = 0.0;
        for &(w, mean, std) in &parts {
            if !(w > 0.0) || !(std > 0.0) || !mean.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "prior component (weight {w}, mean {mean}, std {std}) is not positive"
                )));
            }
            if mean - PRIOR_GRID_SIGMAS * std < grid.q_min()
                || mean + PRIOR_GRID_SIGMAS * std > grid.q_max()
            {
                return Err(Error::InvalidGrid(format!(
                    "prior component at mean {mean}, std {std} needs {PRIOR_GRID_SIGMAS} \
                     standard deviations inside the grid [{}, {}]",
                    grid.q_min(),
                    grid.q_max()
                )));
            }
            total_weight += w;
        }
        let d = Density::from_fn(*grid, |q| {
            parts
                .iter()
                .map(|&(w, mean, std)| {
                    let z = (q - mean) / std;
                    w / total_weight * (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
                })
                .sum()
        })?;
        d.renormalize()
    }
}

/// The four posterior implementations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backend {
    Chain,
    Pde,
    Analytic,
    Fock,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::Chain, Backend::Pde, Backend::Analytic, Backend::Fock];

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Chain => "chain",
            Backend::Pde => "pde",
            Backend::Analytic => "analytic",
            Backend::Fock => "fock",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Backend::Chain),
            "pde" => Ok(Backend::Pde),
            "analytic" => Ok(Backend::Analytic),
            "fock" => Ok(Backend::Fock),
            other => Err(Error::Config(format!(
                "unknown backend '{other}' (expected chain, pde, analytic or fock)"
            ))),
        }
    }
}

/// One backend's posterior with summary statistics and wall time.
#[derive(Debug, Clone)]
pub struct BackendRun {
    pub backend: Backend,
    pub density: Density,
    pub mean: f64,
    pub variance: f64,
    pub seconds: f64,
    /// Log of the evidence-induced norm decay, where the backend tracks it.
    pub log_norm: Option<f64>,
}

/// Executes one backend on shared inputs.
///
/// The closed-form and ladder backends are derived for the quadratic
/// evidence cost and reject any other potential.
pub fn run_backend(
    backend: Backend,
    prior: &Density,
    obs: &ObservationSeries,
    params: &ModelParams,
    potential: &Potential,
    n_max: usize,
) -> Result<BackendRun> {
    if matches!(backend, Backend::Analytic | Backend::Fock) && !potential.is_gaussian() {
        return Err(Error::IncompatibleMethod {
            method: backend.name().to_string(),
        });
    }
    let start = Instant::now();
    let (density, log_norm) = match backend {
        Backend::Chain => (chain_run(prior, obs, params, potential)?, None),
        Backend::Pde => {
            let (d, log_norm) = pde_run(prior, obs, params, potential, true)?;
            (d, Some(log_norm))
        }
        Backend::Analytic => {
            let basis = HermiteBasis::new(params.delta(), params.diffusion(), n_max)?;
            let (state, _) = project_prior(prior, &basis)?;
            let t = obs.t_final();
            let aux = aux_integrals(obs, params, t)?;
            let out = posterior_closed_form(&state, &aux, t, prior.grid())?;
            (out.density, Some(out.log_prefactor + out.log_mass))
        }
        Backend::Fock => (fock_run(prior, obs, params, n_max)?, None),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mean, variance) = density.moments()?;
    Ok(BackendRun {
        backend,
        density,
        mean,
        variance,
        seconds,
        log_norm,
    })
}

/// All requested backends on shared inputs, with pairwise distances among
/// the ones that succeeded.
#[derive(Debug)]
pub struct ComparisonReport {
    /// In execution order; failures keep their error.
    pub runs: Vec<(Backend, Result<BackendRun>)>,
    /// Upper triangle of the distance matrix including the (exactly zero)
    /// diagonal, `(a, b, l1)` with `a <= b` in run order; the lower half
    /// follows by symmetry.
    pub pairs: Vec<(Backend, Backend, f64)>,
}

impl ComparisonReport {
    pub fn get(&self, backend: Backend) -> Option<&BackendRun> {
        self.runs
            .iter()
            .find(|(b, _)| *b == backend)
            .and_then(|(_, r)| r.as_ref().ok())
    }
}

/// Runs the backends sequentially in their canonical order.
pub fn run_comparison(
    backends: &[Backend],
    prior: &Density,
    obs: &ObservationSeries,
    params: &ModelParams,
    potential: &Potential,
    n_max: usize,
) -> Result<ComparisonReport> {
    let mut ordered: Vec<Backend> = Backend::ALL
        .iter()
        .copied()
        .filter(|b| backends.contains(b))
        .collect();
    if ordered.is_empty() {
        ordered = Backend::ALL.to_vec();
    }
    let runs: Vec<(Backend, Result<BackendRun>)> = ordered
        .iter()
        .map(|&b| (b, run_backend(b, prior, obs, params, potential, n_max)))
        .collect();
    let mut pairs = Vec::new();
    for (i, (a, ra)) in runs.iter().enumerate() {
        for (b, rb) in runs.iter().skip(i) {
            if let (Ok(ra), Ok(rb)) = (ra, rb) {
                pairs.push((*a, *b, l1_distance(&ra.density, &rb.density)?));
            }
        }
    }
    Ok(ComparisonReport { runs, pairs })
}

/// Unit-step latent path: `q_{i+1} = q_i + sqrt(D eps) xi_i` with the
/// dedicated latent stream. Returns `n_steps + 1` states starting at `q0`.
pub fn sample_latent_path(params: &ModelParams, q0: f64, n_steps: usize, seed: u64) -> Vec<f64> {
    let step = (params.diffusion() * params.eps()).sqrt();
    let mut path = Vec::with_capacity(n_steps + 1);
    let mut q = q0;
    path.push(q);
    for i in 0..n_steps {
        q += step * standard_normal(seed, LATENT_STREAM, i as u64);
        path.push(q);
    }
    path
}

/// Noisy snapshots of the path: the i-th observation reports the state at
/// the end of the i-th interval through independent Gaussian noise, drawn
/// from the dedicated observation stream.
pub fn sample_observations(
    path: &[f64],
    obs_noise_std: f64,
    eps: f64,
    seed: u64,
) -> Result<ObservationSeries> {
    if !(obs_noise_std >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "observation noise std {obs_noise_std} must be nonnegative"
        )));
    }
    if path.is_empty() {
        return Err(Error::InvalidParams(
            "cannot observe an empty path".into(),
        ));
    }
    let values: Vec<f64> = path[1..]
        .iter()
        .enumerate()
        .map(|(i, &q)| q + obs_noise_std * standard_normal(seed, OBSERVATION_STREAM, i as u64))
        .collect();
    ObservationSeries::new(eps, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn desk_grid() -> Grid {
        Grid::new(-8.0, 8.0, 513).unwrap()
    }

    #[test]
    fn gaussian_prior_builds_with_requested_moments() {
        let g = desk_grid();
        let d = PriorSpec::Gaussian { mean: 0.4, std: 0.8 }.build(&g).unwrap();
        let (mean, var) = d.moments().unwrap();
        assert_relative_eq!(mean, 0.4, epsilon = 1e-9);
        assert_relative_eq!(var, 0.64, max_relative = 1e-6);
    }

    #[test]
    fn mixture_prior_normalizes_weights() {
        let g = desk_grid();
        let spec = PriorSpec::Mixture(vec![(2.0, -1.0, 0.5), (2.0, 1.0, 0.5)]);
        let d = spec.build(&g).unwrap();
        let (mean, _) = d.moments().unwrap();
        assert_relative_eq!(mean, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn priors_must_sit_well_inside_the_grid() {
        let g = desk_grid();
        let far = PriorSpec::Gaussian { mean: 5.0, std: 1.0 };
        assert!(matches!(far.build(&g), Err(Error::InvalidGrid(_))));
        let wide = PriorSpec::Mixture(vec![(1.0, 0.0, 0.5), (1.0, 0.0, 3.0)]);
        assert!(wide.build(&g).is_err());
        let bad = PriorSpec::Mixture(vec![(0.0, 0.0, 0.5)]);
        assert!(matches!(bad.build(&g), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn backend_names_round_trip() {
        for b in Backend::ALL {
            assert_eq!(b.name().parse::<Backend>().unwrap(), b);
            assert_eq!(format!("{b}"), b.name());
        }
        assert!(matches!("spectral".parse::<Backend>(), Err(Error::Config(_))));
    }

    #[test]
    fn latent_path_is_deterministic_with_unit_step_statistics() {
        let p = ModelParams::new(1.0, 1.0, 0.01).unwrap();
        let a = sample_latent_path(&p, 0.3, 2000, 42);
        let b = sample_latent_path(&p, 0.3, 2000, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2001);
        assert_eq!(a[0], 0.3);
        let c = sample_latent_path(&p, 0.3, 2000, 43);
        assert_ne!(a, c);

        let increments: Vec<f64> = a.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = increments.iter().sum::<f64>() / increments.len() as f64;
        let var = increments.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / increments.len() as f64;
        assert!(mean.abs() < 3.0 * (0.01f64 / 2000.0).sqrt());
        assert_relative_eq!(var, 0.01, max_relative = 0.1);
    }

    #[test]
    fn observations_track_the_path_through_noise() {
        let p = ModelParams::new(1.0, 1.0, 0.01).unwrap();
        let path = sample_latent_path(&p, 0.0, 1000, 7);
        let obs = sample_observations(&path, 0.5, 0.01, 7).unwrap();
        assert_eq!(obs.len(), 1000);
        assert_eq!(obs.eps(), 0.01);
        let residuals: Vec<f64> = obs
            .values()
            .iter()
            .zip(&path[1..])
            .map(|(x, q)| x - q)
            .collect();
        let var = residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64;
        assert_relative_eq!(var, 0.25, max_relative = 0.15);
        // noiseless observations reproduce the path
        let clean = sample_observations(&path, 0.0, 0.01, 7).unwrap();
        assert_eq!(clean.values(), &path[1..]);
        // a single-state path has no intervals and yields an empty series
        assert!(sample_observations(&path[..1], 0.5, 0.01, 7).unwrap().is_empty());
        assert!(sample_observations(&[], 0.5, 0.01, 7).is_err());
    }

    #[test]
    fn comparison_runs_all_backends_in_canonical_order() {
        let g = desk_grid();
        let p = ModelParams::new(1.0, 1.0, 0.005).unwrap();
        let prior = PriorSpec::Gaussian { mean: 0.0, std: 1.0 }.build(&g).unwrap();
        let path = sample_latent_path(&p, 0.0, 40, 3);
        let obs = sample_observations(&path, 1.0, 0.005, 3).unwrap();
        let v = Potential::gaussian(1.0).unwrap();
        let report = run_comparison(
            &[Backend::Fock, Backend::Chain, Backend::Analytic, Backend::Pde],
            &prior,
            &obs,
            &p,
            &v,
            48,
        )
        .unwrap();
        let order: Vec<Backend> = report.runs.iter().map(|(b, _)| *b).collect();
        assert_eq!(order, Backend::ALL.to_vec());
        for (b, r) in &report.runs {
            let run = r.as_ref().unwrap_or_else(|e| panic!("{b} failed: {e}"));
            assert!(run.seconds >= 0.0);
            assert!(run.variance > 0.0);
        }
        assert_eq!(report.pairs.len(), 10);
        for &(a, b, l1) in &report.pairs {
            if a == b {
                assert_eq!(l1, 0.0, "diagonal entry {a} must vanish");
            } else {
                assert!(l1 < 1e-2, "{a} vs {b}: {l1:.2e}");
            }
        }
        let exact_pair = report
            .pairs
            .iter()
            .find(|(a, b, _)| *a == Backend::Pde && *b == Backend::Analytic)
            .unwrap();
        assert!(exact_pair.2 < 1e-4);
        assert!(report.get(Backend::Pde).unwrap().log_norm.is_some());
        assert!(report.get(Backend::Chain).unwrap().log_norm.is_none());
    }

    #[test]
    fn incompatible_backends_fail_without_hiding_the_rest() {
        let g = desk_grid();
        let p = ModelParams::new(1.0, 1.0, 0.005).unwrap();
        let prior = PriorSpec::Gaussian { mean: 0.0, std: 1.0 }.build(&g).unwrap();
        let obs = ObservationSeries::new(0.005, vec![0.1; 20]).unwrap();
        let report =
            run_comparison(&Backend::ALL, &prior, &obs, &p, &Potential::zero(), 32).unwrap();
        assert!(report.get(Backend::Chain).is_some());
        assert!(report.get(Backend::Pde).is_some());
        for b in [Backend::Analytic, Backend::Fock] {
            let err = report
                .runs
                .iter()
                .find(|(x, _)| *x == b)
                .and_then(|(_, r)| r.as_ref().err())
                .expect("expected a failure");
            assert!(matches!(err, Error::IncompatibleMethod { .. }));
        }
        // only the chain/pde block survives
        assert_eq!(report.pairs.len(), 3);
        assert_eq!(report.pairs[0], (Backend::Chain, Backend::Chain, 0.0));
        assert_eq!(report.pairs[1].1, Backend::Pde);
        assert_eq!(report.pairs[2], (Backend::Pde, Backend::Pde, 0.0));
    }

    #[test]
    fn posterior_mean_tracks_the_latent_state() {
        // Informative observations (noise std = delta): over 20 seeds the
        // final posterior mean should beat the prior as a point estimate.
        let g = desk_grid();
        let p = ModelParams::new(1.0, 1.0, 0.005).unwrap();
        let prior = PriorSpec::Gaussian { mean: 0.0, std: 1.0 }.build(&g).unwrap();
        let v = Potential::gaussian(1.0).unwrap();
        let mut sq = 0.0;
        let seeds = 20;
        for seed in 0..seeds {
            let path = sample_latent_path(&p, 0.0, 200, seed);
            let obs = sample_observations(&path, 1.0, 0.005, seed).unwrap();
            let run = run_backend(Backend::Pde, &prior, &obs, &p, &v, 48).unwrap();
            let err = run.mean - path[200];
            sq += err * err;
        }
        let rmse = (sq / seeds as f64).sqrt();
        assert!(rmse < 1.0, "rmse {rmse:.3} not below the prior std");
    }
}
