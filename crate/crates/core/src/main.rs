//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification or runtime failure, 2
//! configuration error, 3 method incompatible with the configured
//! potential.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gridfilter::config::RunConfig;
use gridfilter::csvio;
use gridfilter::scenario::{
    run_backend, run_comparison, sample_latent_path, sample_observations, Backend,
};
use gridfilter::verify::run_verification;
use gridfilter::{Error, ObservationSeries, Potential, Result};

#[derive(Parser)]
#[command(name = "gridfilter", version, about = "Grid-based Bayesian filtering of a diffusing latent state")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic latent path and noisy observations.
    Simulate {
        /// Run configuration file (key = value lines).
        #[arg(long)]
        config: PathBuf,
        /// Directory for latent.csv and observations.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run one backend over an observation file and write the posterior.
    Filter {
        #[arg(long)]
        config: PathBuf,
        /// Backend: chain, pde, analytic or fock.
        #[arg(long)]
        method: String,
        /// Observation CSV (as written by simulate).
        #[arg(long)]
        obs: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write snapshots.csv with the posterior every K steps.
        #[arg(long, value_name = "K")]
        snapshots_every: Option<usize>,
    },
    /// Run several backends on identical inputs and write their distances.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Comma-separated subset of chain,pde,analytic,fock (default all).
        #[arg(long)]
        backends: Option<String>,
    },
    /// Run the built-in verification suites.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::IncompatibleMethod { .. } => 3,
                _ => 1,
            })
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Simulate { config, out_dir } => cmd_simulate(&config, &out_dir),
        Command::Filter {
            config,
            method,
            obs,
            out_dir,
            snapshots_every,
        } => cmd_filter(&config, &method, &obs, &out_dir, snapshots_every),
        Command::Compare {
            config,
            out_dir,
            backends,
        } => cmd_compare(&config, &out_dir, backends.as_deref()),
        Command::Verify => cmd_verify(),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_simulate(config: &Path, out_dir: &Path) -> Result<u8> {
    let cfg = RunConfig::load(config)?;
    let params = cfg.params()?;
    let n_steps = cfg.n_steps()?;
    let path = sample_latent_path(&params, cfg.prior.mean(), n_steps, cfg.seed);
    let obs = sample_observations(&path, cfg.obs_noise_std, cfg.eps, cfg.seed)?;
    ensure_dir(out_dir)?;
    let latent_path = out_dir.join("latent.csv");
    let obs_path = out_dir.join("observations.csv");
    csvio::write_latent(&latent_path, &cfg, &path, cfg.eps)?;
    csvio::write_observations(&obs_path, &cfg, &obs)?;
    println!("wrote {}", latent_path.display());
    println!("wrote {}", obs_path.display());
    Ok(0)
}

fn cmd_filter(
    config: &Path,
    method: &str,
    obs_path: &Path,
    out_dir: &Path,
    snapshots_every: Option<usize>,
) -> Result<u8> {
    let cfg = RunConfig::load(config)?;
    let backend: Backend = method.parse()?;
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let prior = cfg.prior.build(&grid)?;
    let n_steps = cfg.n_steps()?;
    let (series, _) = csvio::read_observations(obs_path)?;

    // Zero evidence over a positive horizon means free spreading: run the
    // general backends with a zero potential. The quadratic-cost backends
    // have no such limit and refuse.
    let (series, potential) = if series.is_empty() && n_steps > 0 {
        if matches!(backend, Backend::Analytic | Backend::Fock) {
            return Err(Error::IncompatibleMethod {
                method: backend.name().to_string(),
            });
        }
        (
            ObservationSeries::new(cfg.eps, vec![0.0; n_steps])?,
            Potential::zero(),
        )
    } else {
        if !series.is_empty() {
            if (series.eps() - cfg.eps).abs() > 1e-9 * cfg.eps {
                return Err(Error::Config(format!(
                    "observation spacing {} disagrees with configured eps {}",
                    series.eps(),
                    cfg.eps
                )));
            }
            if series.len() != n_steps {
                return Err(Error::Config(format!(
                    "{} observations but the configuration calls for {n_steps}",
                    series.len()
                )));
            }
        }
        (series, cfg.potential()?)
    };

    let run = run_backend(backend, &prior, &series, &params, &potential, cfg.n_max)?;
    ensure_dir(out_dir)?;
    let posterior_path = out_dir.join("posterior.csv");
    csvio::write_posterior(&posterior_path, &cfg, &run.density)?;
    println!("wrote {}", posterior_path.display());

    if let Some(k) = snapshots_every {
        if k == 0 {
            return Err(Error::Config("snapshot interval must be positive".into()));
        }
        let mut snaps = Vec::new();
        let mut m = k;
        while m <= series.len() {
            let prefix = ObservationSeries::new(series.eps(), series.values()[..m].to_vec())?;
            let partial = run_backend(backend, &prior, &prefix, &params, &potential, cfg.n_max)?;
            snaps.push((m as f64 * series.eps(), partial.density));
            m += k;
        }
        let snap_path = out_dir.join("snapshots.csv");
        csvio::write_snapshots(&snap_path, &cfg, &snaps)?;
        println!("wrote {}", snap_path.display());
    }

    println!(
        "{}: mean = {:.6}, variance = {:.6}{}",
        backend,
        run.mean,
        run.variance,
        match run.log_norm {
            Some(l) => format!(", log_norm = {l:.6}"),
            None => String::new(),
        }
    );
    Ok(0)
}

fn cmd_compare(config: &Path, out_dir: &Path, backends: Option<&str>) -> Result<u8> {
    let cfg = RunConfig::load(config)?;
    let requested: Vec<Backend> = match backends {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<Backend>())
            .collect::<Result<_>>()?,
        None => Backend::ALL.to_vec(),
    };
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let prior = cfg.prior.build(&grid)?;
    let n_steps = cfg.n_steps()?;
    let path = sample_latent_path(&params, cfg.prior.mean(), n_steps, cfg.seed);
    let obs = sample_observations(&path, cfg.obs_noise_std, cfg.eps, cfg.seed)?;
    let potential = cfg.potential()?;

    let report = run_comparison(&requested, &prior, &obs, &params, &potential, cfg.n_max)?;
    ensure_dir(out_dir)?;
    let cmp_path = out_dir.join("comparison.csv");
    csvio::write_comparison(&cmp_path, &cfg, &report)?;
    println!("wrote {}", cmp_path.display());
    for &(a, b, l1) in &report.pairs {
        if a != b {
            println!("{a} vs {b}: L1 = {l1:.3e}");
        }
    }

    let mut first_failure: Option<&Error> = None;
    for (backend, result) in &report.runs {
        if let Err(e) = result {
            eprintln!("{backend} failed: {e}");
            first_failure.get_or_insert(e);
        }
    }
    match first_failure {
        None => Ok(0),
        Some(Error::Config(_)) => Ok(2),
        Some(Error::IncompatibleMethod { .. }) => Ok(3),
        Some(_) => Ok(1),
    }
}

fn cmd_verify() -> Result<u8> {
    let results = run_verification()?;
    let mut failures = 0;
    for r in &results {
        let status = if r.passed() { "ok" } else { "FAIL" };
        println!(
            "{:<24} max deviation {:.3e} (tolerance {:.0e}) {status}",
            r.name, r.deviation, r.tolerance
        );
        if !r.passed() {
            failures += 1;
        }
    }
    if failures > 0 {
        eprintln!("{failures} suite(s) failed");
        Ok(1)
    } else {
        println!("all {} suites passed", results.len());
        Ok(0)
    }
}
