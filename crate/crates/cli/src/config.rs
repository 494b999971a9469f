//! Run configuration: defaults, `key = value` file loading, flag
//! precedence, and validation.  The resolved configuration is embedded in
//! every output file so results carry their own provenance.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use nlslab::{Grid, Params};
use serde::Serialize;

/// Fully resolved experiment configuration.  Precedence, lowest to
/// highest: built-in defaults, configuration file, `NLSLAB_OUT`
/// (output directory only), command-line flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub p: f64,
    pub beta: f64,
    /// Half-length of the periodic domain `[-L, L)`.
    pub length: f64,
    /// Number of grid nodes (power of two).
    pub points: usize,
    /// Residual tolerance for iterative solvers.
    pub tol: f64,
    /// Iteration cap for iterative solvers.
    pub max_iter: usize,
    /// Time horizon of evolution experiments.
    pub t_final: f64,
    /// Time step of evolution experiments.
    pub dt: f64,
    /// Perturbation amplitude for stability experiments.
    pub epsilon: f64,
    /// Seed for every randomized sampler.
    pub seed: u64,
    /// Directory receiving all output files.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            beta: 2.0,
            length: 20.0,
            points: 1024,
            tol: 1e-12,
            max_iter: 200,
            t_final: 10.0,
            dt: 1e-3,
            epsilon: 1e-2,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Configuration problem: reported on exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Flags shared by every subcommand.  Each maps to a `RunConfig` field
/// and overrides both the defaults and the configuration file.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Configuration file with `key = value` lines and `#` comments.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Nonlinearity exponent (1 <= p < 2).
    #[arg(long)]
    pub p: Option<f64>,
    /// Coupling strength.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Half-length of the periodic domain.
    #[arg(long = "L", value_name = "L")]
    pub length: Option<f64>,
    /// Number of grid nodes (power of two, at least 16).
    #[arg(long = "N", value_name = "N")]
    pub points: Option<usize>,
    /// Residual tolerance for iterative solvers.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap for iterative solvers.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Time horizon of evolution experiments.
    #[arg(long = "T", value_name = "T")]
    pub t_final: Option<f64>,
    /// Time step of evolution experiments.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Perturbation amplitude for stability experiments (0 to 0.1).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Seed for every randomized sampler.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (also settable via NLSLAB_OUT).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Maximum number of worker threads for independent jobs.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=512))]
    pub jobs: u64,
    /// Print the files and columns this command writes, then exit.
    #[arg(long)]
    pub describe_output: bool,
}

impl CommonArgs {
    /// Resolve defaults, file, environment, and flags into a validated
    /// configuration.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            apply_file(&mut cfg, path)?;
        }
        if let Ok(dir) = std::env::var("NLSLAB_OUT") {
            if !dir.is_empty() {
                cfg.out_dir = PathBuf::from(dir);
            }
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.length {
            cfg.length = v;
        }
        if let Some(v) = self.points {
            cfg.points = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.t_final {
            cfg.t_final = v;
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        validate(&cfg)?;
        Ok(cfg)
    }
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    Params::new(cfg.p, cfg.beta).map_err(|e| ConfigError(e.to_string()))?;
    Grid::new(cfg.length, cfg.points).map_err(|e| ConfigError(e.to_string()))?;
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        return Err(ConfigError(format!("tol must be positive, got {}", cfg.tol)));
    }
    if cfg.max_iter == 0 {
        return Err(ConfigError("max_iter must be at least 1".into()));
    }
    if !(cfg.t_final.is_finite() && cfg.t_final >= 0.0) {
        return Err(ConfigError(format!("T must be nonnegative, got {}", cfg.t_final)));
    }
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(ConfigError(format!("dt must be positive, got {}", cfg.dt)));
    }
    if !(cfg.epsilon.is_finite() && (0.0..=0.1).contains(&cfg.epsilon)) {
        return Err(ConfigError(format!(
            "epsilon must lie in [0, 0.1], got {}",
            cfg.epsilon
        )));
    }
    Ok(())
}

fn apply_file(cfg: &mut RunConfig, path: &Path) -> Result<(), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError(format!(
                "{}:{line_no}: expected `key = value`, got `{raw}`",
                path.display()
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| {
            ConfigError(format!(
                "{}:{line_no}: {key} must be {what}, got `{value}`",
                path.display()
            ))
        };
        match key {
            "p" => cfg.p = value.parse().map_err(|_| bad("a number"))?,
            "beta" => cfg.beta = value.parse().map_err(|_| bad("a number"))?,
            "L" => cfg.length = value.parse().map_err(|_| bad("a number"))?,
            "N" => cfg.points = value.parse().map_err(|_| bad("an integer"))?,
            "tol" => cfg.tol = value.parse().map_err(|_| bad("a number"))?,
            "max_iter" => cfg.max_iter = value.parse().map_err(|_| bad("an integer"))?,
            "T" => cfg.t_final = value.parse().map_err(|_| bad("a number"))?,
            "dt" => cfg.dt = value.parse().map_err(|_| bad("a number"))?,
            "epsilon" => cfg.epsilon = value.parse().map_err(|_| bad("a number"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("an integer"))?,
            "out" => cfg.out_dir = PathBuf::from(value),
            _ => {
                return Err(ConfigError(format!(
                    "{}:{line_no}: unknown key `{key}` (known: p, beta, L, N, tol, max_iter, T, dt, epsilon, seed, out)",
                    path.display()
                )))
            }
        }
    }
    Ok(())
}
