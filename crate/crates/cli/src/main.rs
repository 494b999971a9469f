//! Command-line driver: reproducible experiments on weakly coupled 1D
//! nonlinear Schrödinger systems.  Every run writes JSON/CSV/binary
//! outputs that embed the fully resolved configuration; identical
//! configuration and seed produce bit-identical files.
//!
//! Exit codes: 0 success, 1 experiment failure, 2 usage or configuration
//! error.

mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nlslab::dynamics::{self, EvolutionTrace};
use nlslab::field::shift_and_phase;
use nlslab::ground_state::{self, synthesized_ground_state, GroundState};
use nlslab::io as field_io;
use nlslab::linearized::{assemble_l_minus, assemble_l_plus, symmetric_spectrum};
use nlslab::variational::{self, NehariSampler};
use nlslab::verify::{self, CheckResult};
use nlslab::{coercivity, eig, modulation, Grid, Params};

use config::{CommonArgs, ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "nlslab",
    version,
    about = "Numerical experiments on weakly coupled 1D nonlinear Schrödinger systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the synchronized standing-wave profile and report its residual.
    Gs {
        #[command(flatten)]
        common: CommonArgs,
        /// Refine the closed-form profile with the damped Newton solver.
        #[arg(long)]
        refine: bool,
    },
    /// Spectrum and kernel diagnostics of a second-variation block at the profile.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// How many of the smallest eigenvalues to report.
        #[arg(long, default_value_t = 8)]
        k: usize,
        /// Which second-variation block to assemble.
        #[arg(long, value_enum, default_value_t = OperatorArg::LPlus)]
        operator: OperatorArg,
    },
    /// Constrained Rayleigh-quotient minima of the second variation.
    Coercivity {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sample the mass shell near the profile and fit action gap against squared distance.
    ConvexityScan {
        #[command(flatten)]
        common: CommonArgs,
        /// Samples drawn per amplitude.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Comma-separated perturbation amplitudes.
        #[arg(long, value_delimiter = ',', default_value = "0.02,0.05")]
        amplitudes: Vec<f64>,
    },
    /// Orbit distance of a state via the translation/phase modulation fit.
    Distance {
        #[command(flatten)]
        common: CommonArgs,
        /// Binary field dump to measure; omit to use a transformed profile.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        /// Translation applied to the profile when no input is given.
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        /// First-component phase applied when no input is given.
        #[arg(long, default_value_t = 0.0)]
        theta1: f64,
        /// Second-component phase applied when no input is given.
        #[arg(long, default_value_t = 0.0)]
        theta2: f64,
    },
    /// Evolve a state with the splitting integrator and record conservation traces.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        /// Binary field dump for the initial state; omit to start at the profile.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        /// Record one trace row every this many steps.
        #[arg(long, default_value_t = 100)]
        record_every: usize,
    },
    /// Perturb the profile on its mass shell and track the orbit distance in time.
    Stability {
        #[command(flatten)]
        common: CommonArgs,
        /// Stability verdict threshold: sup Γ must stay within this factor of Γ(0).
        #[arg(long, default_value_t = 10.0)]
        growth_factor: f64,
        /// Record one trace row every this many steps.
        #[arg(long, default_value_t = 100)]
        record_every: usize,
    },
    /// Estimate the constrained action infima and scan the algebraic feasibility region.
    Nehari {
        #[command(flatten)]
        common: CommonArgs,
        /// Random states drawn for the infimum estimates.
        #[arg(long, default_value_t = 60)]
        samples: usize,
        /// Grid resolution per axis of the region scan (even).
        #[arg(long, default_value_t = 2000)]
        resolution: usize,
    },
    /// Run the full acceptance suite; nonzero exit if any check fails.
    VerifyAll {
        #[command(flatten)]
        common: CommonArgs,
        /// Smaller grids and sample counts for a fast health check.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OperatorArg {
    /// Block acting on the real (amplitude) part of the perturbation.
    LPlus,
    /// Block acting on the imaginary (phase) part of the perturbation.
    LMinus,
}

/// Failures split by exit code: configuration problems exit 2,
/// experiment problems exit 1.
enum CliError {
    Config(String),
    Experiment(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<nlslab::Error> for CliError {
    fn from(e: nlslab::Error) -> Self {
        CliError::Experiment(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Experiment(format!("i/o failure: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Experiment(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gs { common, refine } => cmd_gs(&common, refine),
        Command::Spectrum { common, k, operator } => cmd_spectrum(&common, k, operator),
        Command::Coercivity { common } => cmd_coercivity(&common),
        Command::ConvexityScan { common, samples, amplitudes } => {
            cmd_convexity_scan(&common, samples, &amplitudes)
        }
        Command::Distance { common, input, x0, theta1, theta2 } => {
            cmd_distance(&common, input.as_deref(), x0, [theta1, theta2])
        }
        Command::Evolve { common, input, record_every } => {
            cmd_evolve(&common, input.as_deref(), record_every)
        }
        Command::Stability { common, growth_factor, record_every } => {
            cmd_stability(&common, growth_factor, record_every)
        }
        Command::Nehari { common, samples, resolution } => {
            cmd_nehari(&common, samples, resolution)
        }
        Command::VerifyAll { common, quick } => cmd_verify_all(&common, quick),
    }
}

fn build_grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    Grid::new(cfg.length, cfg.points).map_err(|e| CliError::Config(e.to_string()))
}

fn build_params(cfg: &RunConfig) -> Result<Params, CliError> {
    Params::new(cfg.p, cfg.beta).map_err(|e| CliError::Config(e.to_string()))
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Experiment(format!("cannot create {}: {e}", cfg.out_dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Experiment(format!("serialization failure: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_trace_csv(path: &Path, trace: &EvolutionTrace) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "t,mass1,mass2,energy,gamma")?;
    for i in 0..trace.times.len() {
        let gamma = trace.gamma.get(i).copied().unwrap_or(f64::NAN);
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            trace.times[i], trace.mass1[i], trace.mass2[i], trace.energy[i], gamma
        )?;
    }
    w.flush()?;
    Ok(())
}

fn component_masses(grid: &Grid, state: &GroundState) -> [f64; 2] {
    let sq1: Vec<f64> = state.profile.comps[0].iter().map(|&v| v * v).collect();
    let sq2: Vec<f64> = state.profile.comps[1].iter().map(|&v| v * v).collect();
    [grid.integrate(&sq1), grid.integrate(&sq2)]
}

fn relative_drift(series: &[f64]) -> f64 {
    let first = series.first().copied().unwrap_or(0.0);
    series
        .iter()
        .map(|v| ((v - first) / first).abs())
        .fold(0.0, f64::max)
}

fn absolute_drift(series: &[f64]) -> f64 {
    let first = series.first().copied().unwrap_or(0.0);
    series.iter().map(|v| (v - first).abs()).fold(0.0, f64::max)
}

fn describe(text: &str) -> Result<(), CliError> {
    println!("{}", text.trim_end());
    Ok(())
}

fn cmd_gs(common: &CommonArgs, refine: bool) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "gs writes into the output directory:\n\
             \x20 gs.json          resolved configuration, solver origin, frequency, elliptic residual, component masses, action\n\
             \x20 gs_profile.nls1  binary field dump of the real profile pair (NLS1 header, little-endian f64)\n\
             \x20 gs_profile.csv   columns: x,u1,u2",
        );
    }
    let cfg = common.resolve()?;
    let grid = build_grid(&cfg)?;
    let params = build_params(&cfg)?;
    ensure_out_dir(&cfg)?;
    let mut state = synthesized_ground_state(&grid, &params)?;
    let mut newton_iterations = None;
    if refine {
        let outcome =
            ground_state::newton_solve(&grid, &params, &state.profile, cfg.tol, cfg.max_iter)?;
        newton_iterations = Some(outcome.iterations);
        state = outcome.state;
    }
    let residual = ground_state::elliptic_residual(&grid, &params, &state.profile).total();
    let mass = component_masses(&grid, &state);
    let action = variational::action_i_real(&grid, &state.profile, &params);

    #[derive(Serialize)]
    struct Options {
        refine: bool,
        newton_iterations: Option<usize>,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        options: Options,
        origin: ground_state::ProfileOrigin,
        omega: f64,
        elliptic_residual: f64,
        mass: [f64; 2],
        action: f64,
    }
    field_io::write_real_pair(&cfg.out_dir.join("gs_profile.nls1"), &grid, &state.profile)?;
    field_io::write_real_pair_csv(&cfg.out_dir.join("gs_profile.csv"), &grid, &state.profile)?;
    write_json(
        &cfg.out_dir.join("gs.json"),
        &Report {
            config: &cfg,
            options: Options { refine, newton_iterations },
            origin: state.origin,
            omega: state.omega,
            elliptic_residual: residual,
            mass,
            action,
        },
    )?;
    println!(
        "ground state at p = {}, beta = {}: elliptic residual {:.3e}, action {:.9}; wrote {}",
        cfg.p,
        cfg.beta,
        residual,
        action,
        cfg.out_dir.join("gs.json").display()
    );
    Ok(())
}

fn cmd_spectrum(common: &CommonArgs, k: usize, operator: OperatorArg) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "spectrum writes into the output directory:\n\
             \x20 spectrum.json  resolved configuration, operator, k smallest eigenvalues (ascending), kernel_dim, zero_tol, spectral range",
        );
    }
    if k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }
    let cfg = common.resolve()?;
    let grid = build_grid(&cfg)?;
    let params = build_params(&cfg)?;
    ensure_out_dir(&cfg)?;
    let state = synthesized_ground_state(&grid, &params)?;
    let matrix = match operator {
        OperatorArg::LPlus => assemble_l_plus(&grid, &params, &state.profile),
        OperatorArg::LMinus => assemble_l_minus(&grid, &params, &state.profile),
    };
    let report = symmetric_spectrum(&matrix, k.min(2 * grid.len()));

    #[derive(Serialize)]
    struct Options {
        k: usize,
        operator: OperatorArg,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        options: Options,
        #[serde(flatten)]
        spectrum: &'a nlslab::linearized::SpectrumReport,
    }
    write_json(
        &cfg.out_dir.join("spectrum.json"),
        &Report { config: &cfg, options: Options { k, operator }, spectrum: &report },
    )?;
    let shown = report.eigenvalues.iter().take(4).collect::<Vec<_>>();
    println!(
        "kernel dimension {} (zero tolerance {:.3e}); smallest eigenvalues {:?}; wrote {}",
        report.kernel_dim,
        report.zero_tol,
        shown,
        cfg.out_dir.join("spectrum.json").display()
    );
    Ok(())
}

fn cmd_coercivity(common: &CommonArgs) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "coercivity writes into the output directory:\n\
             \x20 coercivity.json  resolved configuration plus three constrained Rayleigh-quotient reports\n\
             \x20                  (mass tangent, restricted subspace, constrained second block) and the\n\
             \x20                  unconstrained minimum of the first block",
        );
    }
    let cfg = common.resolve()?;
    let grid = build_grid(&cfg)?;
    let params = build_params(&cfg)?;
    ensure_out_dir(&cfg)?;
    let state = synthesized_ground_state(&grid, &params)?;
    let mass_tangent = coercivity::min_rayleigh_over_v(&grid, &state)?;
    let restricted = coercivity::min_rayleigh_over_v0(&grid, &state)?;
    let second_block = coercivity::min_rayleigh_l_minus_constrained(&grid, &state)?;
    let matrix = assemble_l_plus(&grid, &params, &state.profile);
    let unconstrained_min = eig::smallest_eigenpairs(&matrix, 1).0[0];

    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        mass_tangent: &'a coercivity::CoercivityReport,
        restricted: &'a coercivity::CoercivityReport,
        second_block: &'a coercivity::CoercivityReport,
        unconstrained_min: f64,
    }
    write_json(
        &cfg.out_dir.join("coercivity.json"),
        &Report {
            config: &cfg,
            mass_tangent: &mass_tangent,
            restricted: &restricted,
            second_block: &second_block,
            unconstrained_min,
        },
    )?;
    println!(
        "constrained minima: mass tangent {:.3e}, restricted {:.6}, second block {:.6}; unconstrained {:.4}; wrote {}",
        mass_tangent.min_rayleigh_l2,
        restricted.min_rayleigh_l2,
        second_block.min_rayleigh_l2,
        unconstrained_min,
        cfg.out_dir.join("coercivity.json").display()
    );
    Ok(())
}

fn cmd_convexity_scan(
    common: &CommonArgs,
    samples: usize,
    amplitudes: &[f64],
) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "convexity-scan writes into the output directory:\n\
             \x20 convexity_scan.csv   columns: distance_sq,action_gap,energy_gap (one row per sample)\n\
             \x20 convexity_scan.json  resolved configuration, sample counts, fitted slope of gap vs squared distance,\n\
             \x20                      number of negative gaps and dropped fits",
        );
    }
    if samples == 0 {
        return Err(CliError::Config("samples must be at least 1".into()));
    }
    if amplitudes.is_empty() || amplitudes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(CliError::Config(
            "amplitudes must be a nonempty list of positive numbers".into(),
        ));
    }
    let cfg = common.resolve()?;
    let grid = build_grid(&cfg)?;
    let params = build_params(&cfg)?;
    ensure_out_dir(&cfg)?;
    let state = synthesized_ground_state(&grid, &params)?;
    let scan = coercivity::energy_gap_scan(&grid, &state, samples, amplitudes, cfg.seed)?;
    let negatives = scan.points.iter().filter(|pt| pt.action_gap < 0.0).count();

    let csv_path = cfg.out_dir.join("convexity_scan.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&csv_path)?);
    writeln!(w, "distance_sq,action_gap,energy_gap")?;
    for pt in &scan.points {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", pt.distance_sq, pt.action_gap, pt.energy_gap)?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Options<'a> {
        samples_per_amplitude: usize,
        amplitudes: &'a [f64],
    }
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        options: Options<'a>,
        points: usize,
        slope: f64,
        negative_gaps: usize,
        dropped_fits: usize,
    }
    write_json(
        &cfg.out_dir.join("convexity_scan.json"),
        &Report {
            config: &cfg,
            options: Options { samples_per_amplitude: samples, amplitudes },
            points: scan.points.len(),
            slope: scan.slope,
            negative_gaps: negatives,
            dropped_fits: scan.dropped,
        },
    )?;
    println!(
        "{} samples: {} negative action gaps, {} dropped fits, gap/distance² slope {:.4}; wrote {}",
        scan.points.len(),
        negatives,
        scan.dropped,
        scan.slope,
        cfg.out_dir.join("convexity_scan.json").display()
    );
    Ok(())
}

fn cmd_distance(
    common: &CommonArgs,
    input: Option<&Path>,
    x0: f64,
    theta: [f64; 2],
) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "distance writes into the output directory:\n\
             \x20 distance.json  resolved configuration, recovered translation and phases, squared orbit distance,\n\
             \x20                first-order orthogonality residuals, convergence flag",
        );
    }
    let cfg = common.resolve()?;
    let params = build_params(&cfg)?;
    ensure_out_dir(&cfg)?;
    let (grid, phi) = match input {
        Some(path) => {
            let stored = field_io::read_field(path)?;
            let grid = Grid::new(stored.header.l, stored.header.n)?;
            let phi = stored.to_complex_pair()?;
            (grid, phi)
        }
        None => {
            let grid = build_grid(&cfg)?;
            let state = synthesized_ground_state(&grid, &params)?;
            let phi = shift_and_phase(&grid, &state.profile.to_complex(), x0, theta);
            (grid, phi)
        }
    };
    let state = synthesized_ground_state(&grid, &params)?;
    let fit = modulation::modulation_fit(&grid, &phi, &state.profile, &params)?;

    #[derive(Serialize)]
    struct Options<'a> {
        input: Option<&'a Path>,
        planted_x0: f64,
        planted_theta1: f64,
        planted_theta2: f64,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        options: Options<'a>,
        #[serde(flatten)]
        fit: &'a modulation::ModulationFit,
    }
    write_json(
        &cfg.out_dir.join("distance.json"),
        &Report {
            config: &cfg,
            options: Options {
                input,
                planted_x0: x0,
                planted_theta1: theta[0],
                planted_theta2: theta[1],
            },
            fit: &fit,
        },
    )?;
    println!(
        "orbit distance {:.6e} (x0 = {:.6}, theta = [{:.6}, {:.6}], converged: {}); wrote {}",
        fit.distance_sq_h1.max(0.0).sqrt(),
        fit.x0,
        fit.theta1,
        fit.theta2,
        fit.converged,
        cfg.out_dir.join("distance.json").display()
    );
    Ok(())
}

fn cmd_evolve(
    common: &CommonArgs,
    input: Option<&Path>,
    record_every: usize,
) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "evolve writes into the output directory:\n\
             \x20 evolve_trace.csv  columns: t,mass1,mass2,energy,gamma (gamma = squared orbit distance)\n\
             \x20 evolve_final.nls1 binary field dump of the final state\n\
             \x20 evolve.json       resolved configuration, scheme, recorded rows, relative mass drift,\n\
             \x20                   absolute energy drift, abort time if the step became unstable",
        );
    }
    if record_every == 0 {
        return Err(CliError::Config("record-every must be at least 1".into()));
    }
    let cfg = common.resolve()?;
    let params = build_params(&cfg)?;
    ensure_out_dir(&cfg)?;
    let (grid, psi0) = match input {
        Some(path) => {
            let stored = field_io::read_field(path)?;
            let grid = Grid::new(stored.header.l, stored.header.n)?;
            let psi0 = stored.to_complex_pair()?;
            (grid, psi0)
        }
        None => {
            let grid = build_grid(&cfg)?;
            let state = synthesized_ground_state(&grid, &params)?;
            let psi0 = state.profile.to_complex();
            (grid, psi0)
        }
    };
    let state = synthesized_ground_state(&grid, &params)?;
    let trace = dynamics::evolve(
        &grid,
        &psi0,
        cfg.t_final,
        cfg.dt,
        &params,
        record_every,
        Some(&state),
    )?;
    let mass_drift = relative_drift(&trace.mass1).max(relative_drift(&trace.mass2));
    let energy_drift = absolute_drift(&trace.energy);

    write_trace_csv(&cfg.out_dir.join("evolve_trace.csv"), &trace)?;
    field_io::write_complex_pair(&cfg.out_dir.join("evolve_final.nls1"), &grid, &trace.final_state)?;

    #[derive(Serialize)]
    struct Options<'a> {
        input: Option<&'a Path>,
        record_every: usize,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        options: Options<'a>,
        scheme: &'a str,
        recorded_rows: usize,
        mass_drift_relative: f64,
        energy_drift: f64,
        aborted_at: Option<f64>,
    }
    write_json(
        &cfg.out_dir.join("evolve.json"),
        &Report {
            config: &cfg,
            options: Options { input, record_every },
            scheme: &trace.scheme,
            recorded_rows: trace.times.len(),
            mass_drift_relative: mass_drift,
            energy_drift,
            aborted_at: trace.aborted_at,
        },
    )?;
    if let Some(t) = trace.aborted_at {
        return Err(CliError::Experiment(format!(
            "evolution aborted at t = {t}: the time step became unstable (outputs were written)"
        )));
    }
    println!(
        "evolved to T = {} at dt = {}: relative mass drift {:.3e}, energy drift {:.3e}; wrote {}",
        cfg.t_final,
        cfg.dt,
        mass_drift,
        energy_drift,
        cfg.out_dir.join("evolve.json").display()
    );
    Ok(())
}

fn cmd_stability(
    common: &CommonArgs,
    growth_factor: f64,
    record_every: usize,
) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "stability writes into the output directory:\n\
             \x20 stability_trace.csv  columns: t,mass1,mass2,energy,gamma (gamma = squared orbit distance)\n\
             \x20 stability.json       resolved configuration, initial and supremum squared orbit distances,\n\
             \x20                      growth factor, verdict, energy offset of the perturbed state, full trace",
        );
    }
    if record_every == 0 {
        return Err(CliError::Config("record-every must be at least 1".into()));
    }
    if !(growth_factor.is_finite() && growth_factor >= 1.0) {
        return Err(CliError::Config(format!(
            "growth-factor must be at least 1, got {growth_factor}"
        )));
    }
    let cfg = common.resolve()?;
    let grid = build_grid(&cfg)?;
    let params = build_params(&cfg)?;
    ensure_out_dir(&cfg)?;
    let state = synthesized_ground_state(&grid, &params)?;
    let report = dynamics::stability_experiment(
        &grid,
        &state,
        cfg.epsilon,
        cfg.t_final,
        cfg.dt,
        cfg.seed,
        record_every,
        growth_factor,
    )?;

    write_trace_csv(&cfg.out_dir.join("stability_trace.csv"), &report.trace)?;

    #[derive(Serialize)]
    struct Options {
        record_every: usize,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        options: Options,
        #[serde(flatten)]
        report: &'a dynamics::StabilityReport,
    }
    write_json(
        &cfg.out_dir.join("stability.json"),
        &Report { config: &cfg, options: Options { record_every }, report: &report },
    )?;
    println!(
        "perturbation amplitude {}: Γ(0) = {:.3e}, sup Γ = {:.3e}, stable within factor {}: {}; wrote {}",
        cfg.epsilon,
        report.gamma0,
        report.sup_gamma,
        growth_factor,
        report.stable,
        cfg.out_dir.join("stability.json").display()
    );
    Ok(())
}

fn cmd_nehari(common: &CommonArgs, samples: usize, resolution: usize) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "nehari writes into the output directory:\n\
             \x20 nehari.json  resolved configuration, scalar constants, action infima estimates, ordering flag,\n\
             \x20              region-scan pinch verdict and feasible-point count\n\
             \x20 region.csv   columns: mass1,mass2 (squared component masses of feasible points)",
        );
    }
    if samples == 0 {
        return Err(CliError::Config("samples must be at least 1".into()));
    }
    let cfg = common.resolve()?;
    let grid = build_grid(&cfg)?;
    let params = build_params(&cfg)?;
    ensure_out_dir(&cfg)?;
    let sampler = NehariSampler { count: samples, seed: cfg.seed };
    let report = variational::infima_estimate(&grid, &params, &sampler)?;
    let region = variational::algebraic_region_check(&params, resolution)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let csv_path = cfg.out_dir.join("region.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&csv_path)?);
    writeln!(w, "mass1,mass2")?;
    for (m1, m2) in &region.feasible_points {
        writeln!(w, "{m1:.17e},{m2:.17e}")?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Options {
        samples: usize,
        resolution: usize,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a RunConfig,
        options: Options,
        #[serde(flatten)]
        infima: &'a variational::NehariReport,
        region_pinch_ok: bool,
        region_feasible_points: usize,
    }
    write_json(
        &cfg.out_dir.join("nehari.json"),
        &Report {
            config: &cfg,
            options: Options { samples, resolution },
            infima: &report,
            region_pinch_ok: region.pinch_ok,
            region_feasible_points: region.feasible_points.len(),
        },
    )?;
    println!(
        "action at the profile {:.9}, infima chain holds: {}, region pinches: {}; wrote {}",
        report.i_at_z,
        report.chain_ok,
        region.pinch_ok,
        cfg.out_dir.join("nehari.json").display()
    );
    Ok(())
}

fn cmd_verify_all(common: &CommonArgs, quick: bool) -> Result<(), CliError> {
    if common.describe_output {
        return describe(
            "verify-all writes no files: it prints one line per acceptance check\n\
             and exits nonzero if any check fails.  --jobs runs checks concurrently.",
        );
    }
    common.resolve()?;
    let results = run_checks(quick, common.jobs as usize);
    let mut failures = 0usize;
    for r in &results {
        println!("{}", r.line());
        if !r.passed {
            failures += 1;
        }
    }
    println!("{} of {} checks passed", results.len() - failures, results.len());
    if failures > 0 {
        return Err(CliError::Experiment(format!("{failures} acceptance checks failed")));
    }
    Ok(())
}

/// Run the acceptance checks, optionally distributing the independent
/// checks over a capped worker pool.  Results come back in suite order
/// regardless of completion order.
fn run_checks(quick: bool, jobs: usize) -> Vec<CheckResult> {
    type CheckFn = fn(bool) -> CheckResult;
    const CHECKS: [CheckFn; 12] = [
        verify::closed_form_profiles,
        verify::kernel_certification,
        verify::eigenvalue_formulas,
        verify::coercivity_signs,
        verify::shell_identity_samples,
        verify::convexity_scan,
        verify::conservation_laws,
        verify::orbital_stability,
        verify::isolated_minimizer,
        verify::variational_constants,
        verify::modulation_recovery,
        verify::linearized_consistency,
    ];
    if jobs <= 1 {
        return verify::run_all(quick);
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(CHECKS.len()));
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(CHECKS.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(check) = CHECKS.get(i) else { break };
                let result = check(quick);
                results.lock().unwrap().push(result);
            });
        }
    });
    let mut collected = results.into_inner().unwrap();
    collected.sort_by_key(|r| r.id);
    collected
}
