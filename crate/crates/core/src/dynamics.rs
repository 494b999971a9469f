//! Time evolution of the coupled system.
//!
//! The module provides the conserved functionals (component masses and the
//! Hamiltonian energy), a Strang split-step integrator for the full
//! nonlinear flow, a matching integrator for the flow linearised at a
//! standing-wave profile, and a seeded orbital-stability experiment that
//! tracks the squared orbit distance `Γ(t)` along a perturbed trajectory.
//!
//! Conventions: the evolution is `i ∂t φ_j + ½ ∂xx φ_j + W_j(Φ) φ_j = 0`
//! with `W_1 = |φ1|^2p + β |φ2|^(p+1) |φ1|^(p-1)` (indices swapped for the
//! second component), so the standing wave built from a profile `R` is
//! `Φ(t) = R e^{it}`.  Powers of a vanishing modulus are zero, matching the
//! operator modules.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::field::{ComplexPair, Pairing};
use crate::grid::Grid;
use crate::ground_state::GroundState;
use crate::linearized::{hessian_potentials, qminus_potentials};
use crate::modulation;
use crate::sampling::{rescale_to_mass, rescale_to_norm, sample_complex_pair, seeded_rng, SamplerConfig};
use crate::{Error, Params, Result};

/// Hard ceiling on scaling-and-squaring rounds in the small matrix
/// exponential; `2^64` exceeds any finite norm reachable from `f64` input.
const MAX_SQUARINGS: u32 = 64;

/// Absolute floor in the stability verdict: squared orbit distances at the
/// level of the integrator's own noise (an exact standing wave drifts off
/// the orbit by no more than this over the horizons used here) never count
/// as growth, so an unperturbed run with `Γ(0) = 0` is judged flat.
const ORBIT_NOISE_FLOOR: f64 = 1e-8;

/// `m^(e/2)` for a squared modulus `m = |ψ|²`, under the convention that a
/// vanishing modulus yields zero for every exponent `e ≥ 0`.
fn modulus_pow(m_sq: f64, e: f64) -> f64 {
    if m_sq == 0.0 {
        0.0
    } else {
        m_sq.powf(0.5 * e)
    }
}

/// Hamiltonian energy
/// `E(Φ) = ½ ∫ |∂x Φ|² − (p+1)⁻¹ ∫ (|φ1|^(2p+2) + |φ2|^(2p+2) + 2β |φ1 φ2|^(p+1))`,
/// normalised so that its gradient reproduces the evolution's nonlinearity
/// with unit coefficient.
pub fn energy(grid: &Grid, phi: &ComplexPair, params: &Params) -> f64 {
    let p = params.p();
    let beta = params.beta();
    let n = phi.len();
    let mut kinetic = 0.0;
    for i in 0..2 {
        let d = grid.derivative_c(&phi.comps[i]);
        let dens: Vec<f64> = d.iter().map(|c| c.norm_sqr()).collect();
        kinetic += grid.integrate(&dens);
    }
    let mut potential = vec![0.0; n];
    for j in 0..n {
        let m1 = phi.comps[0][j].norm_sqr();
        let m2 = phi.comps[1][j].norm_sqr();
        potential[j] = modulus_pow(m1, 2.0 * p + 2.0)
            + modulus_pow(m2, 2.0 * p + 2.0)
            + 2.0 * beta * modulus_pow(m1 * m2, p + 1.0);
    }
    0.5 * kinetic - grid.integrate(&potential) / (p + 1.0)
}

fn pair_is_finite(phi: &ComplexPair) -> bool {
    phi.comps
        .iter()
        .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
}

/// Pointwise nonlinear phase rotation over a time `tau`:
/// `ψ_j ← ψ_j · exp(i τ W_j)` with the moduli (hence `W_j`) frozen, which
/// integrates the zero-dispersion sub-flow exactly.
fn nonlinear_phase(psi: &mut ComplexPair, tau: f64, params: &Params) {
    let p = params.p();
    let beta = params.beta();
    let n = psi.len();
    for j in 0..n {
        let m1 = psi.comps[0][j].norm_sqr();
        let m2 = psi.comps[1][j].norm_sqr();
        let w1 = modulus_pow(m1, 2.0 * p) + beta * modulus_pow(m2, p + 1.0) * modulus_pow(m1, p - 1.0);
        let w2 = modulus_pow(m2, 2.0 * p) + beta * modulus_pow(m1, p + 1.0) * modulus_pow(m2, p - 1.0);
        psi.comps[0][j] *= Complex64::cis(tau * w1);
        psi.comps[1][j] *= Complex64::cis(tau * w2);
    }
}

/// Fourier multiplier for the free sub-flow `i ∂t ψ = −½ ∂xx ψ` over `dt`.
fn free_multiplier(grid: &Grid, dt: f64) -> Vec<Complex64> {
    grid.wavenumbers()
        .iter()
        .map(|&k| Complex64::cis(-0.5 * k * k * dt))
        .collect()
}

fn apply_multiplier(grid: &Grid, psi: &mut ComplexPair, mult: &[Complex64]) {
    for i in 0..2 {
        grid.fft(&mut psi.comps[i]);
        for (c, m) in psi.comps[i].iter_mut().zip(mult) {
            *c *= m;
        }
        grid.ifft(&mut psi.comps[i]);
    }
}

fn strang_step(grid: &Grid, psi: &mut ComplexPair, dt: f64, params: &Params, mult: &[Complex64]) {
    nonlinear_phase(psi, 0.5 * dt, params);
    apply_multiplier(grid, psi, mult);
    nonlinear_phase(psi, 0.5 * dt, params);
}

fn validate_step(grid: &Grid, psi: &ComplexPair, dt: f64) -> Result<()> {
    if psi.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "field has {} nodes but the grid has {}",
            psi.len(),
            grid.len()
        )));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "time step must be finite and positive, got {dt}"
        )));
    }
    Ok(())
}

/// One Strang step `exp(N dt/2) exp(A dt) exp(N dt/2)` of the full system:
/// a half-step nonlinear phase rotation, a full free step in Fourier space,
/// and another half-step rotation.  Fails with [`Error::NoConvergence`] if
/// the result is no longer finite.
pub fn split_step(grid: &Grid, psi: &ComplexPair, dt: f64, params: &Params) -> Result<ComplexPair> {
    validate_step(grid, psi, dt)?;
    let mult = free_multiplier(grid, dt);
    let mut out = psi.clone();
    strang_step(grid, &mut out, dt, params, &mult);
    if !pair_is_finite(&out) {
        return Err(Error::NoConvergence(
            "time step became unstable: non-finite values after one split step".into(),
        ));
    }
    Ok(out)
}

/// Sampled history of one evolution run.
///
/// All lists share the same length and are indexed by recording instant;
/// `gamma` is empty when no orbit was tracked.  If the run hit non-finite
/// values the trace covers the instants before the blow-up and `aborted_at`
/// holds the time of the offending step, otherwise it is `None`.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionTrace {
    /// Recording times, starting at `0`.
    pub times: Vec<f64>,
    /// First-component mass `‖φ1‖₂²` at each recording time.
    pub mass1: Vec<f64>,
    /// Second-component mass `‖φ2‖₂²` at each recording time.
    pub mass2: Vec<f64>,
    /// Hamiltonian energy at each recording time.
    pub energy: Vec<f64>,
    /// Squared orbit distance `Γ(t)` when an orbit is tracked (`NaN` marks a
    /// recording instant whose modulation fit failed to converge).
    pub gamma: Vec<f64>,
    /// Actual step size used (the horizon divided into equal steps).
    pub dt: f64,
    /// Integrator identifier.
    pub scheme: String,
    /// Time at which the run went non-finite, if it did.
    pub aborted_at: Option<f64>,
    /// Field at the last completed step (the initial field if the first
    /// step already failed).
    #[serde(skip)]
    pub final_state: ComplexPair,
}

fn record_instant(
    trace: &mut EvolutionTrace,
    grid: &Grid,
    params: &Params,
    track: Option<&GroundState>,
    t: f64,
    psi: &ComplexPair,
) {
    trace.times.push(t);
    let masses = psi.component_masses(grid);
    trace.mass1.push(masses[0]);
    trace.mass2.push(masses[1]);
    trace.energy.push(energy(grid, psi, params));
    if let Some(state) = track {
        let g = modulation::distance_to_orbit(grid, psi, &state.profile, &state.params)
            .unwrap_or(f64::NAN);
        trace.gamma.push(g);
    }
}

/// Evolve `psi0` to time `t_final` with Strang splitting, recording the
/// conserved functionals every `record_every` steps (plus the initial and
/// final instants).  With `track_orbit` set, the squared orbit distance to
/// that state is recorded as well.  A zero horizon yields the single
/// initial record.  Non-finite values abort the run but still return the
/// partial trace, with `aborted_at` set.
pub fn evolve(
    grid: &Grid,
    psi0: &ComplexPair,
    t_final: f64,
    dt: f64,
    params: &Params,
    record_every: usize,
    track_orbit: Option<&GroundState>,
) -> Result<EvolutionTrace> {
    validate_step(grid, psi0, dt)?;
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::InvalidInput(format!(
            "evolution horizon must be finite and non-negative, got {t_final}"
        )));
    }
    if record_every == 0 {
        return Err(Error::InvalidInput(
            "recording stride must be at least 1".into(),
        ));
    }
    let steps = if t_final == 0.0 {
        0
    } else {
        (t_final / dt).round().max(1.0) as usize
    };
    let dt_eff = if steps == 0 { dt } else { t_final / steps as f64 };
    let mult = free_multiplier(grid, dt_eff);

    let mut psi = psi0.clone();
    let mut trace = EvolutionTrace {
        times: Vec::new(),
        mass1: Vec::new(),
        mass2: Vec::new(),
        energy: Vec::new(),
        gamma: Vec::new(),
        dt: dt_eff,
        scheme: "strang-splitting".into(),
        aborted_at: None,
        final_state: psi0.clone(),
    };
    record_instant(&mut trace, grid, params, track_orbit, 0.0, &psi);
    for step in 1..=steps {
        strang_step(grid, &mut psi, dt_eff, params, &mult);
        let t = dt_eff * step as f64;
        if !pair_is_finite(&psi) {
            trace.aborted_at = Some(t);
            return Ok(trace);
        }
        if step % record_every == 0 || step == steps {
            record_instant(&mut trace, grid, params, track_orbit, t, &psi);
        }
        trace.final_state = psi.clone();
    }
    if steps > 0 {
        trace.final_state = psi;
    }
    Ok(trace)
}

/// `exp(M)` for a small matrix by scaling and squaring with a truncated
/// Taylor series; ample accuracy for the step-sized generators used here.
fn mat4_exp(m: &Matrix4<f64>) -> Matrix4<f64> {
    let mut scaled = *m;
    let mut squarings = 0u32;
    while scaled.amax() > 0.25 && squarings < MAX_SQUARINGS {
        scaled /= 2.0;
        squarings += 1;
    }
    let mut sum = Matrix4::identity();
    let mut term = Matrix4::identity();
    for k in 1..=16 {
        term = (term * scaled) / k as f64;
        sum += term;
    }
    for _ in 0..squarings {
        sum *= sum;
    }
    sum
}

/// Evolve a perturbation `W = U + iV` under the flow linearised at the
/// standing wave of `state`, `∂t U = L₋ V`, `∂t V = −L₊ U`, using Strang
/// splitting: a half-step of the local (potential) part, integrated exactly
/// by pointwise `4×4` exponentials, a full step of the constant-coefficient
/// part via the multiplier `e^{−i(1+k²/2) dt}`, and another local half-step.
/// Returns the perturbation at `t_final`.
pub fn evolve_linearized(
    grid: &Grid,
    w0: &ComplexPair,
    state: &GroundState,
    t_final: f64,
    dt: f64,
) -> Result<ComplexPair> {
    validate_step(grid, w0, dt)?;
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::InvalidInput(format!(
            "evolution horizon must be finite and non-negative, got {t_final}"
        )));
    }
    if state.profile.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "profile has {} nodes but the grid has {}",
            state.profile.len(),
            grid.len()
        )));
    }
    let steps = if t_final == 0.0 {
        0
    } else {
        (t_final / dt).round().max(1.0) as usize
    };
    if steps == 0 {
        return Ok(w0.clone());
    }
    let dt_eff = t_final / steps as f64;

    let pots = hessian_potentials(&state.params, &state.profile);
    let q = qminus_potentials(&state.params, &state.profile);
    let n = grid.len();
    // Pointwise generator on (u1, u2, v1, v2): du = -Q v, dv = +H u; the
    // half-step exponentials are frozen for the whole run.
    let half_exp: Vec<Matrix4<f64>> = (0..n)
        .map(|j| {
            let m = Matrix4::new(
                0.0, 0.0, -q[0][j], 0.0,
                0.0, 0.0, 0.0, -q[1][j],
                pots.h11[j], pots.h12[j], 0.0, 0.0,
                pots.h12[j], pots.h22[j], 0.0, 0.0,
            );
            mat4_exp(&(m * (0.5 * dt_eff)))
        })
        .collect();
    let free_mult: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| Complex64::cis(-(1.0 + 0.5 * k * k) * dt_eff))
        .collect();

    let mut w = w0.clone();
    let local_half = |w: &mut ComplexPair| {
        for (j, e) in half_exp.iter().enumerate() {
            let a = w.comps[0][j];
            let b = w.comps[1][j];
            let out = e * Vector4::new(a.re, b.re, a.im, b.im);
            w.comps[0][j] = Complex64::new(out[0], out[2]);
            w.comps[1][j] = Complex64::new(out[1], out[3]);
        }
    };
    for _ in 0..steps {
        local_half(&mut w);
        apply_multiplier(grid, &mut w, &free_mult);
        local_half(&mut w);
    }
    if !pair_is_finite(&w) {
        return Err(Error::NoConvergence(
            "linearized evolution became unstable: non-finite values".into(),
        ));
    }
    Ok(w)
}

/// Outcome of one seeded orbital-stability run.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// Full recorded history, orbit distance included.
    pub trace: EvolutionTrace,
    /// Squared orbit distance of the prepared initial state.
    pub gamma0: f64,
    /// Largest recorded squared orbit distance over the run.
    pub sup_gamma: f64,
    /// Perturbation amplitude that was requested.
    pub epsilon: f64,
    /// Seed of the perturbation sampler.
    pub seed: u64,
    /// Allowed growth factor in the verdict.
    pub growth_factor: f64,
    /// Whether `sup Γ ≤ growth_factor · Γ(0)` up to the integrator's orbit
    /// noise floor, so an unperturbed run is not judged by scheme noise.
    pub stable: bool,
    /// Energy mismatch `E(R + εY) − E(R)` before the mass-shell rescale.
    pub energy_offset_before_rescale: f64,
}

/// Perturb the standing wave of `state` with a seeded smooth field of unit
/// standard-`H¹` norm and amplitude `epsilon`, project the sum back to the
/// profile's mass shell, evolve to `t_final`, and summarise the recorded
/// squared orbit distance.  The amplitude must lie in `[0, 0.1]`, the
/// perturbative regime the verdict is meaningful for.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    grid: &Grid,
    state: &GroundState,
    epsilon: f64,
    t_final: f64,
    dt: f64,
    seed: u64,
    record_every: usize,
    growth_factor: f64,
) -> Result<StabilityReport> {
    if !(0.0..=0.1).contains(&epsilon) {
        return Err(Error::InvalidInput(format!(
            "perturbation amplitude must lie in [0, 0.1], got {epsilon}"
        )));
    }
    if !growth_factor.is_finite() || growth_factor <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "growth factor must be finite and positive, got {growth_factor}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let raw = sample_complex_pair(grid, &SamplerConfig::smooth(), &mut rng)?;
    let perturbation = rescale_to_norm(grid, &raw, Pairing::H1Standard, 1.0)?;
    let r_complex = state.profile.to_complex();

    let mut prepared = r_complex.clone();
    prepared.add_scaled(epsilon, &perturbation);
    let energy_offset_before_rescale =
        energy(grid, &prepared, &state.params) - energy(grid, &r_complex, &state.params);
    let mass_target = state.profile.norm_sq(grid, Pairing::L2);
    let psi0 = rescale_to_mass(grid, &prepared, mass_target)?;

    let trace = evolve(grid, &psi0, t_final, dt, &state.params, record_every, Some(state))?;
    if let Some(t) = trace.aborted_at {
        return Err(Error::NoConvergence(format!(
            "stability run became unstable at t = {t}"
        )));
    }
    let gamma0 = *trace.gamma.first().ok_or_else(|| {
        Error::NoConvergence("stability run recorded no orbit distance".into())
    })?;
    let sup_gamma = trace.gamma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stable = sup_gamma <= growth_factor * gamma0 + ORBIT_NOISE_FLOOR;
    Ok(StabilityReport {
        trace,
        gamma0,
        sup_gamma,
        epsilon,
        seed,
        growth_factor,
        stable,
        energy_offset_before_rescale,
    })
}
