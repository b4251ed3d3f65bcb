//! Built-in verification suites.
//!
//! Each suite measures one identity the implementation relies on and
//! reports the worst observed deviation against a fixed tolerance. The
//! suites are deterministic and self-contained; together they cover the
//! propagator (semigroup property), the mode family (orthonormality), the
//! ladder algebra (commutator, frame conjugation, ordering correction) and
//! the relaxed profile (shape and decay rate under the PDE integrator).

use crate::chain::chapman_kolmogorov_check;
use crate::error::Result;
use crate::fock::{bch_conjugation_check, commutator_matrix_deviation, ladder_matrices};
use crate::grid::{Density, Grid, ModelParams};
use crate::hermite::{ground_state_density, project_prior, HermiteBasis};
use crate::observations::{ObservationSeries, Potential};
use crate::pde::pde_run;
use crate::rng::standard_normal;

/// Outcome of one verification suite.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.deviation.is_finite() && self.deviation < self.tolerance
    }
}

fn desk_grid() -> Result<Grid> {
    Grid::new(-8.0, 8.0, 513)
}

fn semigroup_suite() -> Result<SuiteResult> {
    let params = ModelParams::new(1.0, 1.0, 0.05)?;
    let dev = chapman_kolmogorov_check(0.05, &params, &desk_grid()?)?;
    Ok(SuiteResult {
        name: "chapman-kolmogorov",
        deviation: dev,
        tolerance: 1e-4,
    })
}

fn orthonormality_suite() -> Result<SuiteResult> {
    let basis = HermiteBasis::new(1.0, 1.0, 21)?;
    let grid = Grid::new(-10.0, 10.0, 1025)?;
    let rows: Vec<Vec<f64>> = basis.sample_on(&grid);
    let mut worst = 0.0f64;
    for m in 0..basis.n_max() {
        for n in m..basis.n_max() {
            let prod: Vec<f64> = rows[m].iter().zip(&rows[n]).map(|(a, b)| a * b).collect();
            let ip = grid.trapezoid(&prod);
            let expected = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((ip - expected).abs());
        }
    }
    Ok(SuiteResult {
        name: "hermite-orthonormality",
        deviation: worst,
        tolerance: 1e-6,
    })
}

fn ladder_commutator_suite() -> Result<SuiteResult> {
    let n = 16;
    let (lower, raise) = ladder_matrices(n)?;
    let commutator = &lower * &raise - &raise * &lower;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expected = match (i, j) {
                (i, j) if i == j && i == n - 1 => -((n - 1) as f64),
                (i, j) if i == j => 1.0,
                _ => 0.0,
            };
            worst = worst.max((commutator[(i, j)] - expected).abs() / (1.0 + expected.abs()));
        }
    }
    Ok(SuiteResult {
        name: "ladder-commutator",
        deviation: worst,
        tolerance: 1e-12,
    })
}

fn conjugation_suite() -> Result<SuiteResult> {
    let params = ModelParams::new(1.0, 1.0, 0.005)?;
    let dev = bch_conjugation_check(&params, 0.5, 32)?;
    Ok(SuiteResult {
        name: "bch-conjugation",
        deviation: dev,
        tolerance: 1e-8,
    })
}

fn ordering_suite() -> Result<SuiteResult> {
    let params = ModelParams::new(1.0, 1.0, 0.1)?;
    let obs = ObservationSeries::new(0.1, vec![1.3, -0.7, 0.9, 0.4, -1.1])?;
    let mut worst = 0.0f64;
    for (t1, t2) in [(0.25, 0.05), (0.45, 0.15), (0.35, 0.35)] {
        worst = worst.max(commutator_matrix_deviation(&obs, &params, t1, t2, 16)?);
    }
    Ok(SuiteResult {
        name: "magnus-commutator",
        deviation: worst,
        tolerance: 1e-8,
    })
}

fn stationarity_suites() -> Result<[SuiteResult; 2]> {
    let params = ModelParams::new(1.0, 1.0, 0.005)?;
    let grid = desk_grid()?;
    let basis = HermiteBasis::new(1.0, 1.0, 8)?;
    let prior = ground_state_density(&basis, &grid)?;
    let t_final = 1.0;
    let obs = ObservationSeries::new(0.005, vec![0.0; 200])?;
    let v = Potential::gaussian(1.0)?;
    let (post, log_norm) = pde_run(&prior, &obs, &params, &v, true)?;
    let shape = prior
        .values()
        .iter()
        .zip(post.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    // the relaxed profile decays at exactly omega/2 per unit time
    let rate = (log_norm / t_final + 0.5 * params.omega()).abs();
    Ok([
        SuiteResult {
            name: "stationarity-shape",
            deviation: shape,
            tolerance: 1e-5,
        },
        SuiteResult {
            name: "stationarity-rate",
            deviation: rate,
            tolerance: 1e-3,
        },
    ])
}

fn prefactor_suite() -> Result<SuiteResult> {
    let params = ModelParams::new(1.0, 1.0, 0.005)?;
    let grid = desk_grid()?;
    let prior = Density::gaussian(grid, 0.0, 1.0)?;
    let xs: Vec<f64> = (0..100).map(|i| 0.8 * standard_normal(17, 5, i)).collect();
    let obs = ObservationSeries::new(0.005, xs)?;
    let v = Potential::gaussian(1.0)?;
    let (_, log_norm) = pde_run(&prior, &obs, &params, &v, true)?;
    let basis = HermiteBasis::new(1.0, 1.0, 48)?;
    let (state, _) = project_prior(&prior, &basis)?;
    let aux = crate::analytic::aux_integrals(&obs, &params, 0.5)?;
    let out = crate::analytic::posterior_closed_form(&state, &aux, 0.5, &grid)?;
    Ok(SuiteResult {
        name: "prefactor-tracking",
        deviation: (out.log_prefactor + out.log_mass - log_norm).abs(),
        tolerance: 1e-3,
    })
}

/// Runs every suite and returns the results in a fixed order.
pub fn run_verification() -> Result<Vec<SuiteResult>> {
    let mut results = vec![
        semigroup_suite()?,
        orthonormality_suite()?,
        ladder_commutator_suite()?,
        conjugation_suite()?,
        ordering_suite()?,
    ];
    results.extend(stationarity_suites()?);
    results.push(prefactor_suite()?);
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ck_with_kernel;

    #[test]
    fn all_suites_pass() {
        let results = run_verification().unwrap();
        assert!(results.len() >= 5);
        for r in &results {
            assert!(
                r.passed(),
                "{}: deviation {:.3e} exceeds tolerance {:.0e}",
                r.name,
                r.deviation,
                r.tolerance
            );
        }
    }

    #[test]
    fn suite_names_are_unique() {
        let results = run_verification().unwrap();
        let mut names: Vec<&str> = results.iter().map(|r| r.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), results.len());
    }

    #[test]
    fn a_wrong_propagator_fails_the_semigroup_suite() {
        // A kernel whose spread ignores the time step still composes to a
        // wider kernel, so the semigroup comparison must flag it. (Scaling
        // the variance by a constant would not do: any var proportional to
        // eps is still a semigroup.)
        let params = ModelParams::new(1.0, 1.0, 0.05).unwrap();
        let grid = Grid::new(-8.0, 8.0, 513).unwrap();
        let wrong = |q_to: f64, q_from: f64, _eps: f64, d: f64| {
            let var = d * 0.05;
            Ok((-(q_to - q_from) * (q_to - q_from) / (2.0 * var)).exp()
                / (2.0 * std::f64::consts::PI * var).sqrt())
        };
        let dev = ck_with_kernel(&wrong, 0.05, &params, &grid).unwrap();
        assert!(dev > 1e-2, "mutated kernel slipped through: {dev:.2e}");
        let good = ck_with_kernel(
            &|q_to, q_from, eps, d| crate::chain::free_propagator_value(q_to, q_from, eps, d),
            0.05,
            &params,
            &grid,
        )
        .unwrap();
        assert!(good < 1e-4);
    }
}
