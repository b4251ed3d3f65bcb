//! Run configuration: `key = value` files and their round trip through
//! output metadata.
//!
//! The key set is closed. Unknown keys are rejected by name rather than
//! ignored, so a typo in a tolerance or a seed cannot silently fall back to
//! a default. Every output file carries the full configuration as `#`
//! metadata lines in a fixed order, and those lines parse back into an
//! identical configuration.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ModelParams};
use crate::observations::Potential;
use crate::scenario::PriorSpec;

/// Evidence cost selector. Only the quadratic (gaussian) cost supports the
/// closed-form and ladder backends; `zero` turns the update into free
/// relaxation and serves as the minimal non-gaussian case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Gaussian,
    Zero,
}

impl PotentialKind {
    fn name(&self) -> &'static str {
        match self {
            PotentialKind::Gaussian => "gaussian",
            PotentialKind::Zero => "zero",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub diffusion: f64,
    pub delta: f64,
    pub eps: f64,
    pub t_final: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_n: usize,
    pub n_max: usize,
    pub seed: u64,
    pub prior: PriorSpec,
    pub obs_noise_std: f64,
    pub potential: PotentialKind,
}

const KEYS: [&str; 12] = [
    "D",
    "delta",
    "eps",
    "t_final",
    "grid_min",
    "grid_max",
    "grid_n",
    "n_max",
    "seed",
    "prior",
    "obs_noise_std",
    "potential",
];

const DEFAULT_N_MAX: usize = 48;

impl RunConfig {
    /// Parses a configuration file: one `key = value` per line, `#`
    /// comments and blank lines allowed.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1))
            })?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    /// Loads and parses a configuration file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Recovers a configuration from the `# key = value` metadata lines of
    /// an output file; lines without an '=' are ignored as plain comments.
    pub fn from_metadata<'a, I: IntoIterator<Item = &'a str>>(lines: I) -> Result<RunConfig> {
        let mut pairs = Vec::new();
        for raw in lines {
            let line = raw.trim();
            let Some(body) = line.strip_prefix('#') else { continue };
            if let Some((key, value)) = body.split_once('=') {
                pairs.push((key.trim().to_string(), value.trim().to_string()));
            }
        }
        Self::from_pairs(pairs)
    }

    fn from_pairs(pairs: Vec<(String, String)>) -> Result<RunConfig> {
        let mut seen = HashSet::new();
        for (key, _) in &pairs {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown configuration key '{key}'")));
            }
            if !seen.insert(key.clone()) {
                return Err(Error::Config(format!("duplicate configuration key '{key}'")));
            }
        }
        let get = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let require = |key: &str| {
            get(key).ok_or_else(|| Error::Config(format!("missing configuration key '{key}'")))
        };
        let float = |key: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("key '{key}': '{v}' is not a number")))
        };

        let diffusion = float("D", require("D")?)?;
        let delta = float("delta", require("delta")?)?;
        let eps = float("eps", require("eps")?)?;
        let t_final = float("t_final", require("t_final")?)?;
        let grid_min = float("grid_min", require("grid_min")?)?;
        let grid_max = float("grid_max", require("grid_max")?)?;
        let grid_n = require("grid_n")?
            .parse::<usize>()
            .map_err(|_| Error::Config("key 'grid_n': expected a positive integer".into()))?;
        let n_max = match get("n_max") {
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| Error::Config("key 'n_max': expected a positive integer".into()))?,
            None => DEFAULT_N_MAX,
        };
        let seed = require("seed")?
            .parse::<u64>()
            .map_err(|_| Error::Config("key 'seed': expected an unsigned integer".into()))?;
        let prior = parse_prior(require("prior")?)?;
        let obs_noise_std = match get("obs_noise_std") {
            Some(v) => float("obs_noise_std", v)?,
            None => delta,
        };
        let potential = match get("potential") {
            None | Some("gaussian") => PotentialKind::Gaussian,
            Some("zero") => PotentialKind::Zero,
            Some(other) => {
                return Err(Error::Config(format!(
                    "key 'potential': '{other}' is not one of gaussian, zero"
                )))
            }
        };

        let cfg = RunConfig {
            diffusion,
            delta,
            eps,
            t_final,
            grid_min,
            grid_max,
            grid_n,
            n_max,
            seed,
            prior,
            obs_noise_std,
            potential,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds every derived object once so that out-of-range values fail at
    /// load time as configuration errors.
    fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(format!("invalid configuration: {e}"));
        self.params().map_err(wrap)?;
        let grid = self.grid().map_err(wrap)?;
        self.prior.build(&grid).map_err(wrap)?;
        if !(self.obs_noise_std >= 0.0) {
            return Err(Error::Config(
                "invalid configuration: obs_noise_std must be nonnegative".into(),
            ));
        }
        self.n_steps()?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.diffusion, self.delta, self.eps)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_min, self.grid_max, self.grid_n)
    }

    pub fn potential(&self) -> Result<Potential> {
        match self.potential {
            PotentialKind::Gaussian => Potential::gaussian(self.delta),
            PotentialKind::Zero => Ok(Potential::zero()),
        }
    }

    /// Number of observation intervals; `t_final` must be a whole multiple
    /// of `eps`.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.t_final >= 0.0) {
            return Err(Error::Config("invalid configuration: t_final must be nonnegative".into()));
        }
        let n = (self.t_final / self.eps).round();
        if (n * self.eps - self.t_final).abs() > 1e-9 * self.eps.max(self.t_final) {
            return Err(Error::Config(format!(
                "invalid configuration: t_final = {} is not a multiple of eps = {}",
                self.t_final, self.eps
            )));
        }
        Ok(n as usize)
    }

    /// Canonical `# key = value` metadata lines in fixed key order.
    pub fn metadata_lines(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(KEYS.len());
        out.push(format!("# D = {}", self.diffusion));
        out.push(format!("# delta = {}", self.delta));
        out.push(format!("# eps = {}", self.eps));
        out.push(format!("# t_final = {}", self.t_final));
        out.push(format!("# grid_min = {}", self.grid_min));
        out.push(format!("# grid_max = {}", self.grid_max));
        out.push(format!("# grid_n = {}", self.grid_n));
        out.push(format!("# n_max = {}", self.n_max));
        out.push(format!("# seed = {}", self.seed));
        out.push(format!("# prior = {}", prior_to_string(&self.prior)));
        out.push(format!("# obs_noise_std = {}", self.obs_noise_std));
        out.push(format!("# potential = {}", self.potential.name()));
        out
    }
}

/// Splits at `sep` occurrences outside parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_gaussian_term(s: &str) -> Result<(f64, f64)> {
    let inner = s
        .strip_prefix("gaussian(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Config(format!("'{s}' is not of the form gaussian(mean,std)")))?;
    let args = split_top(inner, ',');
    if args.len() != 2 {
        return Err(Error::Config(format!(
            "gaussian takes two arguments (mean, std), got '{inner}'"
        )));
    }
    let mean = args[0]
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("gaussian mean '{}' is not a number", args[0])))?;
    let std = args[1]
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("gaussian std '{}' is not a number", args[1])))?;
    Ok((mean, std))
}

/// Parses `gaussian(m,s)` or `mix(w1*gaussian(m1,s1)+w2*gaussian(m2,s2))`.
pub fn parse_prior(text: &str) -> Result<PriorSpec> {
    let compact: String = text.split_whitespace().collect();
    if compact.starts_with("gaussian(") {
        let (mean, std) = parse_gaussian_term(&compact)?;
        return Ok(PriorSpec::Gaussian { mean, std });
    }
    if let Some(inner) = compact.strip_prefix("mix(").and_then(|r| r.strip_suffix(')')) {
        if inner.is_empty() {
            return Err(Error::Config("mix(...) needs at least one component".into()));
        }
        let mut parts = Vec::new();
        for term in split_top(inner, '+') {
            let (w, g) = term.split_once('*').ok_or_else(|| {
                Error::Config(format!("mix component '{term}' must be weight*gaussian(mean,std)"))
            })?;
            let weight = w
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("mix weight '{w}' is not a number")))?;
            let (mean, std) = parse_gaussian_term(g)?;
            parts.push((weight, mean, std));
        }
        return Ok(PriorSpec::Mixture(parts));
    }
    Err(Error::Config(format!(
        "prior '{text}' must be gaussian(mean,std) or mix(w*gaussian(mean,std)+...)"
    )))
}

/// Canonical text form accepted back by [`parse_prior`].
pub fn prior_to_string(prior: &PriorSpec) -> String {
    match prior {
        PriorSpec::Gaussian { mean, std } => format!("gaussian({mean},{std})"),
        PriorSpec::Mixture(parts) => {
            let mut s = String::from("mix(");
            for (i, (w, m, sd)) in parts.iter().enumerate() {
                if i > 0 {
                    s.push('+');
                }
                let _ = write!(s, "{w}*gaussian({m},{sd})");
            }
            s.push(')');
            s
        }
    }
}
