//! Standing-wave profiles: closed forms, Newton refinement, and a
//! normalized gradient flow.
//!
//! A frequency-one standing wave `Ψ(t,x) = R(x) e^{it}` requires the real
//! pair `R = (r1, r2)` to solve the profile system
//!
//! ```text
//! -½ r_i'' + r_i = r_i^(2p+1) + β r_i^p r_j^(p+1),   i ≠ j,
//! ```
//!
//! with nonnegative components.  The synchronized solution is explicit,
//! `R = (1+β)^(-1/(2p)) (z, z)` with the scalar soliton
//! `z(x) = (p+1)^(1/(2p)) sech^(1/p)(√2 p x)`; it is the ground state for
//! `β > 1` and serves both as the exact reference and as the seed for the
//! iterative solvers.  Solutions are translation invariant, so every solver
//! output is recentered to put the peak of the total density at `x = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::field::{Pairing, RealPair};
use crate::grid::Grid;
use crate::linearized::{self, hessian_potentials, qminus_potentials};
use crate::minres;
use crate::params::Params;
use crate::{Error, Result};

/// How a stored profile was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileOrigin {
    /// Evaluated from the synchronized closed form.
    ClosedForm,
    /// Newton iteration on the profile system.
    Newton,
    /// Normalized gradient flow at fixed mass.
    GradientFlow,
}

/// A numerically resolved standing-wave profile together with the residual
/// of the equation it solves.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub params: Params,
    pub profile: RealPair,
    /// Standing-wave frequency: the profile satisfies
    /// `-½ r'' + ω r = nonlinearity(r)` up to `residual_norm`.  Closed-form
    /// and Newton states have `ω = 1`; the gradient flow reports the
    /// Lagrange multiplier of its mass constraint.
    pub omega: f64,
    /// `L²` norm of the profile-system residual at frequency `omega`.
    pub residual_norm: f64,
    pub origin: ProfileOrigin,
}

/// Samples of the scalar soliton `z(x) = (p+1)^(1/(2p)) sech^(1/p)(√2 p x)`,
/// the unique positive even solution of `-½ z'' + z = z^(2p+1)`.
pub fn scalar_soliton(grid: &Grid, p: f64) -> Result<Vec<f64>> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParams(format!("soliton exponent must be positive, got {p}")));
    }
    let amp = (p + 1.0).powf(0.5 / p);
    let b = std::f64::consts::SQRT_2 * p;
    Ok(grid.nodes().iter().map(|&x| amp * (b * x).cosh().powf(-1.0 / p)).collect())
}

/// Closed-form derivative
/// `z'(x) = -√2 (p+1)^(1/(2p)) sech^(1/p)(√2 p x) tanh(√2 p x)`.
pub fn scalar_soliton_derivative(grid: &Grid, p: f64) -> Result<Vec<f64>> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParams(format!("soliton exponent must be positive, got {p}")));
    }
    let amp = (p + 1.0).powf(0.5 / p);
    let b = std::f64::consts::SQRT_2 * p;
    Ok(grid
        .nodes()
        .iter()
        .map(|&x| -(amp * b / p) * (b * x).cosh().powf(-1.0 / p) * (b * x).tanh())
        .collect())
}

/// The synchronized profile `(1+β)^(-1/(2p)) (z, z)`.  It solves the system
/// for every admissible `β`; for `β > 1` it is additionally the ground
/// state.
pub fn synthesized_ground_state(grid: &Grid, params: &Params) -> Result<GroundState> {
    let a = params.coupling_amplitude();
    let z = scalar_soliton(grid, params.p())?;
    let comp: Vec<f64> = z.iter().map(|&v| a * v).collect();
    let profile = RealPair::new(comp.clone(), comp);
    let residual_norm = elliptic_residual(grid, params, &profile).total();
    Ok(GroundState {
        params: *params,
        profile,
        omega: 1.0,
        residual_norm,
        origin: ProfileOrigin::ClosedForm,
    })
}

/// The coupled nonlinearity `g_i = |u_i|^2p u_i + β |u_i|^(p-1) u_i |u_j|^(p+1)`
/// (with every power vanishing where its base does).
pub fn nonlinearity(params: &Params, u: &RealPair) -> RealPair {
    let q = qminus_potentials(params, u);
    let mut g = RealPair::zeros(u.len());
    for i in 0..2 {
        for j in 0..u.len() {
            g.comps[i][j] = q[i][j] * u.comps[i][j];
        }
    }
    g
}

/// Residual of the frequency-one profile system, per component.
#[derive(Debug, Clone)]
pub struct EllipticResidual {
    /// Pointwise residual fields `F_i = -½ u_i'' + u_i - g_i(U)`.
    pub field: RealPair,
    pub res1_l2: f64,
    pub res2_l2: f64,
}

impl EllipticResidual {
    /// `L²` norm of the stacked residual.
    pub fn total(&self) -> f64 {
        self.res1_l2.hypot(self.res2_l2)
    }
}

pub fn elliptic_residual(grid: &Grid, params: &Params, u: &RealPair) -> EllipticResidual {
    let g = nonlinearity(params, u);
    let mut field = RealPair::zeros(u.len());
    let mut norms = [0.0; 2];
    for i in 0..2 {
        let upp = grid.second_derivative(&u.comps[i]);
        for j in 0..u.len() {
            field.comps[i][j] = -0.5 * upp[j] + u.comps[i][j] - g.comps[i][j];
        }
        norms[i] = grid
            .integrate(&field.comps[i].iter().map(|&v| v * v).collect::<Vec<_>>())
            .max(0.0)
            .sqrt();
    }
    EllipticResidual { field, res1_l2: norms[0], res2_l2: norms[1] }
}

/// Translates a pair so the peak of its total density `r1² + r2²` sits at
/// `x = 0` (the translation gauge used for comparisons).  The peak is
/// located to machine precision by Newton on the derivative of the Fourier
/// interpolant, and the shift is applied spectrally.
pub fn recenter_profile(grid: &Grid, profile: &RealPair) -> RealPair {
    let n = grid.len();
    let density: Vec<f64> =
        (0..n).map(|j| profile.comps[0][j].powi(2) + profile.comps[1][j].powi(2)).collect();
    let (jmax, dmax) = density
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(ja, va), (j, &v)| if v > va { (j, v) } else { (ja, va) });
    if dmax.is_nan() || dmax <= 0.0 {
        return profile.clone();
    }
    let hat = grid.spectrum_real(&density);
    let l = grid.half_length();
    let eval_derivative = |x: f64, order: u32| -> f64 {
        let mut acc = Complex64::ZERO;
        for (m, (&c, &k)) in hat.iter().zip(grid.wavenumbers()).enumerate() {
            if order % 2 == 1 && m == n / 2 {
                continue;
            }
            acc += c * Complex64::new(0.0, k).powu(order) * Complex64::from_polar(1.0, k * (x + l));
        }
        acc.re / n as f64
    };
    let node = grid.nodes()[jmax];
    let mut x0 = node;
    for _ in 0..40 {
        let d1 = eval_derivative(x0, 1);
        let d2 = eval_derivative(x0, 2);
        if d2.is_nan() || d2 >= 0.0 {
            break;
        }
        let step = d1 / d2;
        x0 -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    if !x0.is_finite() || (x0 - node).abs() > grid.dx() {
        x0 = node;
    }
    if x0 == 0.0 {
        return profile.clone();
    }
    let mut out = RealPair::zeros(n);
    for i in 0..2 {
        let v: Vec<Complex64> =
            profile.comps[i].iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let shifted = grid.shift_c(&v, x0);
        for (o, c) in out.comps[i].iter_mut().zip(&shifted) {
            *o = c.re;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub state: GroundState,
    /// `L²` residual before each accepted step and after the last.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
}

const NEWTON_LINEAR_RTOL: f64 = 1e-13;
const NEWTON_LINEAR_MAX_ITER: usize = 1500;
/// A final Newton direction with curvature below this marks the second
/// variation as numerically singular.
const SINGULAR_CURVATURE: f64 = 1e-3;

/// Fourier multiplier `(1 + k²/2)^e` applied componentwise.  With
/// `e = -1/2` this is the symmetric square root of the inverse of the free
/// part of the second variation, used as a preconditioner.
fn sobolev_multiplier(grid: &Grid, u: &RealPair, exponent: f64) -> RealPair {
    let mut out = RealPair::zeros(u.len());
    for i in 0..2 {
        let mut hat = grid.spectrum_real(&u.comps[i]);
        for (c, &k) in hat.iter_mut().zip(grid.wavenumbers()) {
            *c *= (1.0 + 0.5 * k * k).powf(exponent);
        }
        grid.ifft(&mut hat);
        for (o, c) in out.comps[i].iter_mut().zip(&hat) {
            *o = c.re;
        }
    }
    out
}

/// Damped Newton iteration for the profile system, starting from `initial`.
///
/// Each step solves the symmetric system `L₊ δ = F` by MINRES on the
/// preconditioned operator `P^(1/2) L₊ P^(1/2)` with
/// `P = (-½∂xx + 1)^(-1)`, deflating the translation quasi-kernel
/// `P^(-1/2) ∂xU` so the iterate never drifts along the soliton manifold.
/// Steps are accepted under an Armijo-type residual decrease with up to 20
/// halvings.
///
/// Failure to converge distinguishes two causes: a genuinely singular
/// second variation — flagged via the curvature of the final Newton
/// direction, which collapses on the degenerate family `p = β` where the
/// kernel is enlarged — and a plain iteration-budget or line-search failure.
pub fn newton_solve(
    grid: &Grid,
    params: &Params,
    initial: &RealPair,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!("Newton tolerance must be positive, got {tol}")));
    }
    let mut u = initial.clone();
    let mut res = elliptic_residual(grid, params, &u);
    let mut fnorm = res.total();
    if !fnorm.is_finite() {
        return Err(Error::InvalidInput("initial residual is not finite".into()));
    }
    let mut history = vec![fnorm];
    let mut last_delta: Option<RealPair> = None;

    let singular_check = |u: &RealPair, delta: &Option<RealPair>| -> Option<f64> {
        let delta = delta.as_ref()?;
        let pots = hessian_potentials(params, u);
        let ld = linearized::apply_l_plus(grid, &pots, delta);
        let den = delta.norm_sq(grid, Pairing::L2);
        (den > 0.0).then(|| delta.inner(grid, &ld, Pairing::L2) / den)
    };

    for iter in 0..=max_iter {
        if fnorm <= tol {
            return Ok(finish_newton(grid, params, u, history, iter));
        }
        if iter == max_iter {
            break;
        }
        let pots = hessian_potentials(params, &u);
        let dxu = RealPair::new(grid.derivative(&u.comps[0]), grid.derivative(&u.comps[1]));
        let mut vk = sobolev_multiplier(grid, &dxu, 0.5).flatten();
        let nk = vk.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut vk {
            *v /= nk;
        }
        let project = |w: &mut Vec<f64>| {
            let c: f64 = w.iter().zip(&vk).map(|(a, b)| a * b).sum();
            for (a, b) in w.iter_mut().zip(&vk) {
                *a -= c * b;
            }
        };
        let mut rhs = sobolev_multiplier(grid, &res.field, -0.5).flatten();
        project(&mut rhs);
        let apply = |y: &[f64]| {
            let mut y = y.to_vec();
            project(&mut y);
            let s = sobolev_multiplier(grid, &RealPair::from_flat(&y), -0.5);
            let ls = linearized::apply_l_plus(grid, &pots, &s);
            let mut w = sobolev_multiplier(grid, &ls, -0.5).flatten();
            project(&mut w);
            w
        };
        let out = minres::minres(apply, &rhs, NEWTON_LINEAR_RTOL, NEWTON_LINEAR_MAX_ITER);
        if !out.converged && out.rel_residual > 1e-6 {
            return Err(Error::SingularOperator(format!(
                "second variation appears singular: inner solve stalled at relative residual \
                 {:.2e} after {} iterations (the kernel is enlarged on the degenerate family \
                 p = β)",
                out.rel_residual, out.iterations
            )));
        }
        let delta = sobolev_multiplier(grid, &RealPair::from_flat(&out.x), -0.5);

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let mut cand = u.clone();
            cand.add_scaled(-lambda, &delta);
            let cand_res = elliptic_residual(grid, params, &cand);
            let cand_norm = cand_res.total();
            if cand_norm <= (1.0 - 0.5 * lambda) * fnorm {
                u = cand;
                res = cand_res;
                fnorm = cand_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        last_delta = Some(delta);
        if !accepted {
            if let Some(rho) = singular_check(&u, &last_delta) {
                if rho.abs() < SINGULAR_CURVATURE {
                    return Err(singular_direction_error(rho, fnorm));
                }
            }
            return Err(Error::NoConvergence(format!(
                "Newton line search stalled at residual {fnorm:.3e} after {iter} iterations"
            )));
        }
        history.push(fnorm);
    }
    if let Some(rho) = singular_check(&u, &last_delta) {
        if rho.abs() < SINGULAR_CURVATURE {
            return Err(singular_direction_error(rho, fnorm));
        }
    }
    Err(Error::NoConvergence(format!(
        "Newton used all {max_iter} iterations; final residual {fnorm:.3e} above tolerance \
         {tol:.1e}"
    )))
}

fn singular_direction_error(rho: f64, fnorm: f64) -> Error {
    Error::SingularOperator(format!(
        "second variation is singular along the final Newton direction (curvature {rho:.2e} at \
         residual {fnorm:.3e}); the kernel is enlarged on the degenerate family p = β"
    ))
}

fn finish_newton(
    grid: &Grid,
    params: &Params,
    profile: RealPair,
    history: Vec<f64>,
    iterations: usize,
) -> NewtonOutcome {
    let profile = recenter_profile(grid, &profile);
    let residual_norm = elliptic_residual(grid, params, &profile).total();
    NewtonOutcome {
        state: GroundState {
            params: *params,
            profile,
            omega: 1.0,
            residual_norm,
            origin: ProfileOrigin::Newton,
        },
        residual_history: history,
        iterations,
    }
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub state: GroundState,
    /// Lagrange multiplier of the mass constraint at the final state.
    pub omega: f64,
    /// Energy at the final state.
    pub energy: f64,
    pub iterations: usize,
    /// True when one component carries less than `1e-6` of the total mass:
    /// the flow collapsed onto a one-component state.  Reported, not an
    /// error.
    pub semitrivial: bool,
}

const FLOW_MAX_STEPS: usize = 200_000;

/// Energy `½ Σ ∫|u_i'|² - (1/(p+1)) ∫ (u1^(2p+2) + u2^(2p+2) +
/// 2β |u1 u2|^(p+1))`, the quantity minimized at fixed total mass.
pub fn energy_real(grid: &Grid, params: &Params, u: &RealPair) -> f64 {
    let (p, beta) = (params.p(), params.beta());
    let mut kinetic = 0.0;
    for i in 0..2 {
        let d = grid.derivative(&u.comps[i]);
        kinetic += 0.5 * grid.integrate(&d.iter().map(|&v| v * v).collect::<Vec<_>>());
    }
    let density: Vec<f64> = (0..u.len())
        .map(|j| {
            let a = u.comps[0][j].abs();
            let b = u.comps[1][j].abs();
            a.powf(2.0 * p + 2.0) + b.powf(2.0 * p + 2.0) + 2.0 * beta * (a * b).powf(p + 1.0)
        })
        .collect();
    kinetic - grid.integrate(&density) / (p + 1.0)
}

/// Normalized gradient flow (semi-implicit in the linear part) minimizing
/// the energy on the sphere of total `L²` mass `mass_target`.
///
/// One step solves `(1 + dt(1 + k²/2)) û* = û + dt ĝ(U)` mode by mode and
/// rescales the pair back to the mass target by one common factor; a step
/// that raises the energy is redone with half the step size.  The flow
/// terminates when the projected gradient norm `‖∇E + 2ωU‖_L²` falls below
/// `tol`; the converged state solves `-½U'' + ωU = g(U)` with the reported
/// multiplier, which approaches 1 when `mass_target` matches the
/// frequency-one profile mass.
pub fn gradient_flow_minimize(
    grid: &Grid,
    params: &Params,
    initial: &RealPair,
    mass_target: f64,
    dt: f64,
    tol: f64,
) -> Result<FlowOutcome> {
    if !(mass_target.is_finite() && mass_target > 0.0) {
        return Err(Error::InvalidInput(format!("mass target must be positive, got {mass_target}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("flow step must be positive, got {dt}")));
    }
    let init_norm = initial.norm(grid, Pairing::L2);
    if init_norm == 0.0 {
        return Err(Error::InvalidInput("gradient flow needs a nonzero initial pair".into()));
    }
    let mut u = initial.scaled(mass_target / init_norm);
    let mut step_size = dt;
    let mut energy = energy_real(grid, params, &u);

    for step in 0..FLOW_MAX_STEPS {
        let g = nonlinearity(params, &u);

        // Multiplier and projected gradient at the current state.
        let mass_sq = mass_target * mass_target;
        let mut grad_sq = 0.0;
        let mut upp = RealPair::zeros(u.len());
        for i in 0..2 {
            let d = grid.derivative(&u.comps[i]);
            grad_sq += grid.integrate(&d.iter().map(|&v| v * v).collect::<Vec<_>>());
            upp.comps[i] = grid.second_derivative(&u.comps[i]);
        }
        let omega = (u.inner(grid, &g, Pairing::L2) - 0.5 * grad_sq) / mass_sq;
        let mut res = RealPair::zeros(u.len());
        for i in 0..2 {
            for j in 0..u.len() {
                res.comps[i][j] = -0.5 * upp.comps[i][j] + omega * u.comps[i][j] - g.comps[i][j];
            }
        }
        let res_norm = res.norm(grid, Pairing::L2);
        if 2.0 * res_norm < tol {
            return Ok(finish_flow(grid, params, u, omega, res_norm, energy, step));
        }

        // Semi-implicit step with energy-decrease safeguard.
        loop {
            let mut cand = RealPair::zeros(u.len());
            for i in 0..2 {
                let mut hat_u = grid.spectrum_real(&u.comps[i]);
                let hat_g = grid.spectrum_real(&g.comps[i]);
                for ((cu, cg), &k) in hat_u.iter_mut().zip(&hat_g).zip(grid.wavenumbers()) {
                    *cu = (*cu + step_size * cg) / (1.0 + step_size * (1.0 + 0.5 * k * k));
                }
                grid.ifft(&mut hat_u);
                for (o, c) in cand.comps[i].iter_mut().zip(&hat_u) {
                    *o = c.re;
                }
            }
            let cand_norm = cand.norm(grid, Pairing::L2);
            if cand_norm == 0.0 {
                return Err(Error::NoConvergence("gradient flow collapsed to zero".into()));
            }
            let cand = cand.scaled(mass_target / cand_norm);
            let cand_energy = energy_real(grid, params, &cand);
            if cand_energy <= energy + 1e-12 {
                u = cand;
                energy = cand_energy;
                step_size = (step_size * 1.1).min(dt);
                break;
            }
            step_size *= 0.5;
            if step_size < 1e-8 {
                return Err(Error::NoConvergence(format!(
                    "gradient flow stalled: no energy-decreasing step at projected gradient \
                     {:.3e}",
                    2.0 * res_norm
                )));
            }
        }
    }
    Err(Error::NoConvergence(format!("gradient flow did not converge in {FLOW_MAX_STEPS} steps")))
}

fn finish_flow(
    grid: &Grid,
    params: &Params,
    profile: RealPair,
    omega: f64,
    residual_norm: f64,
    energy: f64,
    iterations: usize,
) -> FlowOutcome {
    let profile = recenter_profile(grid, &profile);
    let masses: Vec<f64> = (0..2)
        .map(|i| grid.integrate(&profile.comps[i].iter().map(|&v| v * v).collect::<Vec<_>>()))
        .collect();
    let total = masses[0] + masses[1];
    let semitrivial = masses.iter().any(|&m| m / total < 1e-6);
    FlowOutcome {
        state: GroundState {
            params: *params,
            profile,
            omega,
            residual_norm,
            origin: ProfileOrigin::GradientFlow,
        },
        omega,
        energy,
        iterations,
        semitrivial,
    }
}
