//! The acceptance suite: twelve self-contained checks covering the whole
//! library, runnable from the dedicated integration-test target and from
//! the command line.  Each check owns its parameters, grids, and seeds, so
//! runs are deterministic; `quick` trades grid size and sample counts for
//! speed while keeping every check meaningful.

use num_complex::Complex64;
use serde::Serialize;

use crate::coercivity;
use crate::dynamics;
use crate::eig;
use crate::field::{shift_and_phase, ComplexPair, Pairing, RealPair};
use crate::grid::Grid;
use crate::ground_state::{self, synthesized_ground_state};
use crate::linearized::{
    assemble_l_plus, decouple_at_synchronized, symmetric_spectrum, weighted_eigenproblem,
};
use crate::modulation;
use crate::sampling::{
    rescale_to_mass, rescale_to_norm, sample_complex_pair, sample_real_pair, seeded_rng,
    SamplerConfig,
};
use crate::variational::{self, NehariSampler};
use crate::{Params, Result};

/// Outcome of one acceptance check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    /// Position in the suite (1-based).
    pub id: usize,
    /// Short behavioural name.
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantities backing the verdict (or the error that aborted
    /// the check).
    pub details: String,
}

impl CheckResult {
    /// One-line report: `[ 3/12] ok — eigenvalue formulas: …`.
    pub fn line(&self) -> String {
        format!(
            "[{:>2}/12] {} — {}: {}",
            self.id,
            if self.passed { "ok  " } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

const HALF_LENGTH: f64 = 20.0;

fn grid_points(quick: bool) -> usize {
    if quick {
        512
    } else {
        1024
    }
}

fn check(id: usize, name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match body() {
        Ok((passed, details)) => CheckResult { id, name, passed, details },
        Err(e) => CheckResult {
            id,
            name,
            passed: false,
            details: format!("aborted: {e}"),
        },
    }
}

fn euclidean_cosine(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: f64 = a.iter().map(|&x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&x| x * x).sum::<f64>().sqrt();
    (num / na / nb).abs()
}

fn profile_derivative(grid: &Grid, r: &RealPair) -> RealPair {
    RealPair::new(grid.derivative(&r.comps[0]), grid.derivative(&r.comps[1]))
}

/// Check 1 — the closed-form synchronized profile solves the discrete
/// elliptic system to below `1e-9` across the exponent/coupling grid.
pub fn closed_form_profiles(_quick: bool) -> CheckResult {
    check(1, "closed-form profiles", || {
        let grid = Grid::new(HALF_LENGTH, 1024)?;
        let mut worst = 0.0f64;
        for p in [1.0, 1.25, 1.5, 1.9] {
            for beta in [1.5, 2.0, 3.0] {
                let params = Params::new(p, beta)?;
                let state = synthesized_ground_state(&grid, &params)?;
                let res = ground_state::elliptic_residual(&grid, &params, &state.profile).total();
                worst = worst.max(res);
            }
        }
        Ok((
            worst < 1e-9,
            format!("worst elliptic residual {worst:.3e} over 12 parameter pairs (bound 1e-9)"),
        ))
    })
}

/// Check 2 — kernel of the first second-variation block: one-dimensional
/// and spanned by the translation mode away from the degenerate line,
/// at least two-dimensional on it.
pub fn kernel_certification(quick: bool) -> CheckResult {
    check(2, "kernel certification", || {
        let grid = Grid::new(HALF_LENGTH, grid_points(quick))?;
        let mut notes = Vec::new();
        let mut passed = true;
        for beta in [2.0, 3.0] {
            let params = Params::new(1.0, beta)?;
            let state = synthesized_ground_state(&grid, &params)?;
            let a = assemble_l_plus(&grid, &params, &state.profile);
            let report = symmetric_spectrum(&a, 4);
            let near_zero = report
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|(_, x), (_, y)| x.abs().total_cmp(&y.abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let dz = profile_derivative(&grid, &state.profile).flatten();
            let cos = euclidean_cosine(&report.eigenvectors[near_zero], &dz);
            let ok = report.kernel_dim == 1 && cos > 0.999;
            passed &= ok;
            notes.push(format!(
                "β={beta}: kernel dim {} cos {:.6}",
                report.kernel_dim, cos
            ));
        }
        let params = Params::new(1.5, 1.5)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let a = assemble_l_plus(&grid, &params, &state.profile);
        let report = symmetric_spectrum(&a, 4);
        passed &= report.kernel_dim >= 2;
        notes.push(format!("degenerate line: kernel dim {}", report.kernel_dim));
        Ok((passed, notes.join("; ")))
    })
}

/// Check 3 — closed-form eigenvalues: the rotated interaction Hessian
/// gives `(3, 1/3)` at `p=1, β=2`, and the weighted eigenproblem returns
/// `μ1 = 1` (mode `z`) and `μ2 = 2p+1` (mode `∂x z`).
pub fn eigenvalue_formulas(quick: bool) -> CheckResult {
    check(3, "eigenvalue formulas", || {
        let grid = Grid::new(HALF_LENGTH, grid_points(quick))?;
        let params = Params::new(1.0, 2.0)?;
        let dec = decouple_at_synchronized(&grid, &params)?;
        let rotation_ok =
            (dec.lambda1 - 3.0).abs() <= 1e-15 && (dec.lambda2 - 1.0 / 3.0).abs() <= 1e-15;

        let modes = weighted_eigenproblem(&grid, 1.0, 2)?;
        let z = ground_state::scalar_soliton(&grid, 1.0)?;
        let dz = grid.derivative(&z);
        let mu1_ok = (modes[0].0 - 1.0).abs() <= 1e-6 && euclidean_cosine(&modes[0].1, &z) > 0.999;
        let mu2_ok = (modes[1].0 - 3.0).abs() <= 1e-6 && euclidean_cosine(&modes[1].1, &dz) > 0.999;
        Ok((
            rotation_ok && mu1_ok && mu2_ok,
            format!(
                "rotated eigenvalues ({}, {}); weighted μ1 = {:.9} (cos {:.6}), μ2 = {:.9} (cos {:.6})",
                dec.lambda1,
                dec.lambda2,
                modes[0].0,
                euclidean_cosine(&modes[0].1, &z),
                modes[1].0,
                euclidean_cosine(&modes[1].1, &dz),
            ),
        ))
    })
}

/// Check 4 — sign structure of the constrained quotients at `p=1, β=2`:
/// zero on the mass tangent, strictly positive on the restricted subspace
/// and for the constrained second block, clearly negative unconstrained.
pub fn coercivity_signs(quick: bool) -> CheckResult {
    check(4, "coercivity signs", || {
        let grid = Grid::new(HALF_LENGTH, grid_points(quick))?;
        let params = Params::new(1.0, 2.0)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let v = coercivity::min_rayleigh_over_v(&grid, &state)?;
        let v0 = coercivity::min_rayleigh_over_v0(&grid, &state)?;
        let lm = coercivity::min_rayleigh_l_minus_constrained(&grid, &state)?;
        let a = assemble_l_plus(&grid, &params, &state.profile);
        let unconstrained = eig::smallest_eigenpairs(&a, 1).0[0];
        let passed = v.min_rayleigh_l2.abs() <= 1e-6
            && v0.min_rayleigh_l2 > 1e-3
            && lm.min_rayleigh_l2 > 1e-3
            && unconstrained < -0.05;
        Ok((
            passed,
            format!(
                "mass-tangent {:.3e}; restricted {:.6}; second block {:.6}; unconstrained {:.4}",
                v.min_rayleigh_l2, v0.min_rayleigh_l2, lm.min_rayleigh_l2, unconstrained
            ),
        ))
    })
}

/// Check 5 — the mass-shell orthogonality identity holds to `1e-10` on
/// every random shell sample.
pub fn shell_identity_samples(quick: bool) -> CheckResult {
    check(5, "mass-shell identity", || {
        let grid = Grid::new(HALF_LENGTH, 1024)?;
        let params = Params::new(1.0, 2.0)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let mass = state.profile.norm_sq(&grid, Pairing::L2);
        let samples = if quick { 200 } else { 1000 };
        let mut rng = seeded_rng(1203);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let noise = sample_complex_pair(&grid, &SamplerConfig::flat(), &mut rng)?;
            let noise = rescale_to_norm(&grid, &noise, Pairing::H1Standard, 0.3)?;
            let mut phi = state.profile.to_complex();
            phi.add_scaled(1.0, &noise);
            let phi = rescale_to_mass(&grid, &phi, mass)?;
            let gap = coercivity::mass_shell_identity_check(&grid, &phi, &state.profile)?.gap;
            worst = worst.max(gap);
        }
        Ok((
            worst < 1e-10,
            format!("worst identity gap {worst:.3e} over {samples} shell samples (bound 1e-10)"),
        ))
    })
}

/// Check 6 — convexity scan at `p=1, β=2`: no sampled state below the
/// profile's action, and a positive fitted slope of gap against squared
/// orbit distance.
pub fn convexity_scan(quick: bool) -> CheckResult {
    check(6, "energy convexity scan", || {
        let grid = Grid::new(HALF_LENGTH, grid_points(quick))?;
        let params = Params::new(1.0, 2.0)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let per_amplitude = if quick { 25 } else { 100 };
        let scan = coercivity::energy_gap_scan(&grid, &state, per_amplitude, &[0.02, 0.05], 2026)?;
        let negatives = scan.points.iter().filter(|p| p.action_gap < 0.0).count();
        let passed = negatives == 0 && scan.slope > 0.0 && scan.dropped == 0;
        Ok((
            passed,
            format!(
                "{} samples, {} negative gaps, {} dropped fits, slope {:.4}",
                scan.points.len(),
                negatives,
                scan.dropped,
                scan.slope
            ),
        ))
    })
}

/// Check 7 — conservation laws for a Gaussian pair: mass to `1e-11`
/// relative, energy to `1e-6`, and quadratic improvement under step
/// halving.
pub fn conservation_laws(quick: bool) -> CheckResult {
    check(7, "conservation laws", || {
        let grid = Grid::new(HALF_LENGTH, 1024)?;
        let params = Params::new(1.0, 2.0)?;
        let psi0 = ComplexPair::new(
            grid.nodes()
                .iter()
                .map(|&x| Complex64::new(0.8 * (-0.5 * x * x).exp(), 0.0))
                .collect(),
            grid.nodes()
                .iter()
                .map(|&x| Complex64::new(0.6 * (-x * x / 3.0).exp(), 0.0))
                .collect(),
        );
        let horizon = if quick { 2.0 } else { 10.0 };
        let run = |dt: f64| -> Result<(f64, f64)> {
            let trace = dynamics::evolve(&grid, &psi0, horizon, dt, &params, 100, None)?;
            let mass_drift = trace
                .mass1
                .iter()
                .zip(&trace.mass2)
                .map(|(a, b)| {
                    ((a - trace.mass1[0]) / trace.mass1[0]).abs()
                        + ((b - trace.mass2[0]) / trace.mass2[0]).abs()
                })
                .fold(0.0, f64::max);
            let energy_drift = trace
                .energy
                .iter()
                .map(|e| (e - trace.energy[0]).abs())
                .fold(0.0, f64::max);
            Ok((mass_drift, energy_drift))
        };
        let (mass_drift, energy_drift) = run(1e-3)?;
        let (_, energy_fine) = run(5e-4)?;
        let ratio = energy_drift / energy_fine;
        let passed = mass_drift < 1e-11
            && energy_drift < 1e-6
            && (3.5..=4.5).contains(&ratio);
        Ok((
            passed,
            format!(
                "mass drift {mass_drift:.3e} (bound 1e-11), energy drift {energy_drift:.3e} (bound 1e-6), halving ratio {ratio:.2} (expect 3.5–4.5), horizon {horizon}"
            ),
        ))
    })
}

/// Check 8 — orbital stability at `p=1, β=3`: the perturbed orbit distance
/// stays within a factor 10 of its initial value and scales quadratically
/// in the perturbation amplitude.
pub fn orbital_stability(quick: bool) -> CheckResult {
    check(8, "orbital stability", || {
        let grid = Grid::new(HALF_LENGTH, 1024)?;
        let params = Params::new(1.0, 3.0)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let horizon = if quick { 2.0 } else { 10.0 };
        let coarse =
            dynamics::stability_experiment(&grid, &state, 1e-2, horizon, 1e-3, 20260822, 100, 10.0)?;
        let fine =
            dynamics::stability_experiment(&grid, &state, 5e-3, horizon, 1e-3, 20260822, 100, 10.0)?;
        let scaling = coarse.sup_gamma / fine.sup_gamma;
        let passed = coarse.stable && (2.0..=6.0).contains(&scaling);
        Ok((
            passed,
            format!(
                "Γ(0) = {:.3e}, sup Γ = {:.3e} (stable: {}); amplitude-halving ratio {:.2} (expect 4 ± 50%), horizon {horizon}",
                coarse.gamma0, coarse.sup_gamma, coarse.stable, scaling
            ),
        ))
    })
}

/// Check 9 — isolatedness: damped Newton started from sizeable random
/// perturbations of the profile always lands back on its orbit.
pub fn isolated_minimizer(quick: bool) -> CheckResult {
    check(9, "isolated profile", || {
        let grid = Grid::new(HALF_LENGTH, 1024)?;
        let params = Params::new(1.0, 3.0)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let scale = 0.05 * state.profile.norm(&grid, Pairing::H1Standard);
        let tries = if quick { 5 } else { 20 };
        let mut rng = seeded_rng(909);
        let mut worst: f64 = 0.0;
        for _ in 0..tries {
            let noise = sample_real_pair(&grid, &SamplerConfig::smooth(), &mut rng)?;
            let noise = noise.scaled(scale / noise.norm(&grid, Pairing::H1Standard));
            let mut start = state.profile.clone();
            start.add_scaled(1.0, &noise);
            let outcome = ground_state::newton_solve(&grid, &params, &start, 1e-12, 60)?;
            let d_sq = modulation::distance_to_orbit(
                &grid,
                &outcome.state.profile.to_complex(),
                &state.profile,
                &params,
            )?;
            worst = worst.max(d_sq.max(0.0).sqrt());
        }
        Ok((
            worst < 1e-8,
            format!(
                "worst orbit distance {worst:.3e} over {tries} restarts at 5% perturbation (bound 1e-8)"
            ),
        ))
    })
}

/// Check 10 — scalar variational constants, the infima chain, and the
/// algebraic feasibility region's pinch behaviour.
pub fn variational_constants(quick: bool) -> CheckResult {
    check(10, "variational constants", || {
        let grid = Grid::new(HALF_LENGTH, 1024)?;
        let consts = variational::scalar_constants(&grid, 1.0)?;
        let s1_ok = (consts.s1 - 1.941967).abs() <= 1e-6;
        let t1_ok = (consts.t1 - 0.942809).abs() <= 1e-6;
        let params = Params::new(1.0, 3.0)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let i_z = variational::action_i_real(&grid, &state.profile, &params);
        let i_ok = (i_z - 0.471405).abs() <= 1e-6;

        let sampler = NehariSampler {
            count: if quick { 20 } else { 60 },
            seed: 4242,
        };
        let report = variational::infima_estimate(&grid, &params, &sampler)?;

        let resolution = if quick { 400 } else { 2000 };
        let pinch2 = variational::algebraic_region_check(&Params::new(1.0, 2.0)?, resolution)?;
        let pinch3 = variational::algebraic_region_check(&Params::new(1.0, 3.0)?, resolution)?;
        let loose = variational::algebraic_region_check(&Params::new(1.0, 0.5)?, resolution)?;
        let region_ok = pinch2.pinch_ok && pinch3.pinch_ok && !loose.pinch_ok;

        let passed = s1_ok && t1_ok && i_ok && report.chain_ok && region_ok;
        Ok((
            passed,
            format!(
                "S1 = {:.7} (ref 1.941967), T1 = {:.7} (ref 0.942809), I = {:.7} (ref 0.471405); chain {}; region pinch β=2/β=3/β=0.5: {}/{}/{}",
                consts.s1, consts.t1, i_z, report.chain_ok, pinch2.pinch_ok, pinch3.pinch_ok, loose.pinch_ok
            ),
        ))
    })
}

/// Check 11 — modulation: exact recovery of a planted translation/phase
/// triple, and the first-order orthogonality residuals at converged noisy
/// fits.
pub fn modulation_recovery(quick: bool) -> CheckResult {
    check(11, "modulation recovery", || {
        let grid = Grid::new(HALF_LENGTH, 1024)?;
        let params = Params::new(1.0, 3.0)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let planted = shift_and_phase(&grid, &state.profile.to_complex(), 0.7, [1.1, 0.4]);
        let fit = modulation::modulation_fit(&grid, &planted, &state.profile, &params)?;
        let recovery = (fit.x0 - 0.7)
            .abs()
            .max((fit.theta1 - 1.1).abs())
            .max((fit.theta2 - 0.4).abs());

        let r_norm = state.profile.norm(&grid, Pairing::H1Standard);
        let fits = if quick { 5 } else { 20 };
        let mut rng = seeded_rng(77);
        let mut converged = 0usize;
        let mut worst_residual = 0.0f64;
        for _ in 0..fits {
            let noise = sample_complex_pair(&grid, &SamplerConfig::smooth(), &mut rng)?;
            let noise = rescale_to_norm(&grid, &noise, Pairing::H1Standard, 0.05)?;
            let mut phi = shift_and_phase(&grid, &state.profile.to_complex(), -0.4, [0.9, 2.2]);
            phi.add_scaled(1.0, &noise);
            let fit = modulation::modulation_fit(&grid, &phi, &state.profile, &params)?;
            if !fit.converged {
                continue;
            }
            converged += 1;
            let w_norm = fit.distance_sq_h1.max(0.0).sqrt();
            for res in fit.orthogonality_residuals {
                worst_residual = worst_residual.max(res.abs() / (r_norm * w_norm.max(1e-30)));
            }
        }
        let residual_ok = worst_residual < 1e-8 && converged == fits;
        Ok((
            recovery <= 1e-8 && residual_ok,
            format!(
                "planted-offset recovery error {recovery:.3e} (bound 1e-8); {converged}/{fits} noisy fits converged, scaled residual sup {worst_residual:.3e} (bound 1e-8)"
            ),
        ))
    })
}

/// Check 12 — the linearized flow is the first-order limit of the full
/// flow in the rotating frame: the amplitude-normalized defect does not
/// grow as the amplitude shrinks.
pub fn linearized_consistency(_quick: bool) -> CheckResult {
    check(12, "linearized consistency", || {
        let grid = Grid::new(HALF_LENGTH, 1024)?;
        let params = Params::new(1.0, 3.0)?;
        let state = synthesized_ground_state(&grid, &params)?;
        let z = state.profile.to_complex();
        let mut rng = seeded_rng(3001);
        let y = sample_complex_pair(&grid, &SamplerConfig::smooth(), &mut rng)?;
        let y = rescale_to_norm(&grid, &y, Pairing::H1Standard, 1.0)?;
        let t_final = 1.0;
        let w = dynamics::evolve_linearized(&grid, &y, &state, t_final, 1e-3)?;
        let defect_at = |eps: f64| -> Result<f64> {
            let mut psi0 = z.clone();
            psi0.add_scaled(eps, &y);
            let trace = dynamics::evolve(&grid, &psi0, t_final, 1e-3, &params, usize::MAX, None)?;
            let rotated = ComplexPair::new(
                trace.final_state.comps[0]
                    .iter()
                    .map(|c| c * Complex64::cis(-t_final))
                    .collect(),
                trace.final_state.comps[1]
                    .iter()
                    .map(|c| c * Complex64::cis(-t_final))
                    .collect(),
            );
            Ok(rotated.sub(&z).scaled(1.0 / eps).sub(&w).norm(&grid, Pairing::L2))
        };
        let coarse = defect_at(1e-2)?;
        let fine = defect_at(1e-3)?;
        Ok((
            fine <= coarse,
            format!(
                "normalized defect {fine:.3e} at amplitude 1e-3 vs {coarse:.3e} at 1e-2 (must not grow)"
            ),
        ))
    })
}

/// Run every check in suite order.
pub fn run_all(quick: bool) -> Vec<CheckResult> {
    vec![
        closed_form_profiles(quick),
        kernel_certification(quick),
        eigenvalue_formulas(quick),
        coercivity_signs(quick),
        shell_identity_samples(quick),
        convexity_scan(quick),
        conservation_laws(quick),
        orbital_stability(quick),
        isolated_minimizer(quick),
        variational_constants(quick),
        modulation_recovery(quick),
        linearized_consistency(quick),
    ]
}
