//! Second-variation operators at a real profile.
//!
//! With `R = (r1, r2)` a real pair and `W = U + iV` a complex perturbation,
//! the flow linearised about the standing wave `R e^{it}` reads
//!
//! ```text
//! ∂t U =  L₋ V,      ∂t V = -L₊ U,
//! L₊ = -½∂xx + 1 - H(R)        (H = Hessian of the interaction density),
//! L₋ = -½∂xx + 1 - diag(q1, q2),   q_i = |r_i|^2p + β |r_i|^(p-1) |r_j|^(p+1),
//! ```
//!
//! so that `L₋ R = 0` whenever `R` solves the profile system (phase modes)
//! and `L₊ ∂xR = 0` (translation mode).  Operators are available both as
//! dense symmetric matrices on the doubled grid (for eigensolves) and as
//! matrix-free FFT applications (for Newton and time stepping); the two
//! agree to rounding by construction since the dense Laplacian block is the
//! circulant generated by the same spectral symbol.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::eig;
use crate::field::{ComplexPair, RealPair};
use crate::grid::Grid;
use crate::params::Params;
use crate::{Error, Result};

/// Pointwise entries of the symmetric Hessian `H(R)` of the interaction
/// density `F(u1, u2) = (|u1|^(2p+2) + |u2|^(2p+2) + 2β|u1 u2|^(p+1)) / (2p+2)`
/// (normalised so that `∇F` is the profile-equation nonlinearity).
#[derive(Debug, Clone)]
pub struct HessianPotentials {
    pub h11: Vec<f64>,
    pub h12: Vec<f64>,
    pub h22: Vec<f64>,
}

/// `|v|^e` under the convention `0^e := 0` for every `e ≥ 0` (including
/// `e = 0`, so that products carrying a factor of a vanishing component
/// vanish with it — the operators below are evaluated at profiles where a
/// component may be identically zero).
fn abs_pow(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.abs().powf(e)
    }
}

/// Sign-safe odd power `|v|^(e-1) v`, again with `0 ↦ 0`.
fn odd_pow(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.abs().powf(e - 1.0) * v
    }
}

pub fn hessian_potentials(params: &Params, r: &RealPair) -> HessianPotentials {
    let (p, beta) = (params.p(), params.beta());
    let n = r.len();
    let mut h11 = Vec::with_capacity(n);
    let mut h12 = Vec::with_capacity(n);
    let mut h22 = Vec::with_capacity(n);
    for j in 0..n {
        let a = r.comps[0][j];
        let b = r.comps[1][j];
        h11.push((2.0 * p + 1.0) * abs_pow(a, 2.0 * p) + p * beta * abs_pow(a, p - 1.0) * abs_pow(b, p + 1.0));
        h22.push((2.0 * p + 1.0) * abs_pow(b, 2.0 * p) + p * beta * abs_pow(b, p - 1.0) * abs_pow(a, p + 1.0));
        h12.push((p + 1.0) * beta * odd_pow(a, p) * odd_pow(b, p));
    }
    HessianPotentials { h11, h12, h22 }
}

/// Apply the Hessian matrix pointwise: `(H(R) u)_i = h_ii u_i + h_12 u_j`.
pub fn apply_hessian(pots: &HessianPotentials, u: &RealPair) -> RealPair {
    let n = u.len();
    let mut out = RealPair::zeros(n);
    for j in 0..n {
        out.comps[0][j] = pots.h11[j] * u.comps[0][j] + pots.h12[j] * u.comps[1][j];
        out.comps[1][j] = pots.h12[j] * u.comps[0][j] + pots.h22[j] * u.comps[1][j];
    }
    out
}

/// The diagonal potentials `q_i = |r_i|^2p + β |r_i|^(p-1) |r_j|^(p+1)` of
/// `L₋`, chosen so that `q_i r_i` is exactly the profile-equation
/// nonlinearity.
pub fn qminus_potentials(params: &Params, r: &RealPair) -> [Vec<f64>; 2] {
    let (p, beta) = (params.p(), params.beta());
    [0, 1].map(|i| {
        (0..r.len())
            .map(|j| {
                let own = r.comps[i][j];
                let other = r.comps[1 - i][j];
                abs_pow(own, 2.0 * p) + beta * abs_pow(own, p - 1.0) * abs_pow(other, p + 1.0)
            })
            .collect()
    })
}

/// Dense symmetric `2N×2N` matrix `-½∂xx + 1 - [[w11, w12], [w12, w22]]`
/// acting on stacked pairs (component 0 rows first).
fn assemble_block(grid: &Grid, w11: &[f64], w12: Option<&[f64]>, w22: &[f64]) -> DMatrix<f64> {
    let n = grid.len();
    let col = grid.second_derivative_column();
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let kij = -0.5 * col[(n + i - j) % n];
            a[(i, j)] = kij;
            a[(n + i, n + j)] = kij;
        }
    }
    for i in 0..n {
        a[(i, i)] += 1.0 - w11[i];
        a[(n + i, n + i)] += 1.0 - w22[i];
        if let Some(w) = w12 {
            a[(i, n + i)] = -w[i];
            a[(n + i, i)] = -w[i];
        }
    }
    a
}

pub fn assemble_l_plus(grid: &Grid, params: &Params, r: &RealPair) -> DMatrix<f64> {
    let pots = hessian_potentials(params, r);
    assemble_block(grid, &pots.h11, Some(&pots.h12), &pots.h22)
}

pub fn assemble_l_minus(grid: &Grid, params: &Params, r: &RealPair) -> DMatrix<f64> {
    let q = qminus_potentials(params, r);
    assemble_block(grid, &q[0], None, &q[1])
}

/// Matrix-free `L₊ u` via FFT second derivatives.
pub fn apply_l_plus(grid: &Grid, pots: &HessianPotentials, u: &RealPair) -> RealPair {
    let hu = apply_hessian(pots, u);
    linear_part_minus(grid, u, &hu)
}

/// Matrix-free `L₋ v`.
pub fn apply_l_minus(grid: &Grid, q: &[Vec<f64>; 2], v: &RealPair) -> RealPair {
    let n = v.len();
    let mut qv = RealPair::zeros(n);
    for i in 0..2 {
        for j in 0..n {
            qv.comps[i][j] = q[i][j] * v.comps[i][j];
        }
    }
    linear_part_minus(grid, v, &qv)
}

/// `(-½∂xx + 1) u - w`.
fn linear_part_minus(grid: &Grid, u: &RealPair, w: &RealPair) -> RealPair {
    let n = u.len();
    let mut out = RealPair::zeros(n);
    for i in 0..2 {
        let upp = grid.second_derivative(&u.comps[i]);
        for j in 0..n {
            out.comps[i][j] = -0.5 * upp[j] + u.comps[i][j] - w.comps[i][j];
        }
    }
    out
}

/// Time derivative of a perturbation under the linearised flow:
/// `∂t W = ∂t U + i ∂t V = L₋ V - i L₊ U`.
pub fn apply_linearization(grid: &Grid, params: &Params, r: &RealPair, w: &ComplexPair) -> ComplexPair {
    let pots = hessian_potentials(params, r);
    let q = qminus_potentials(params, r);
    let du = apply_l_minus(grid, &q, &w.im());
    let dv = apply_l_plus(grid, &pots, &w.re()).scaled(-1.0);
    ComplexPair::from_re_im(&du, &dv)
}

/// Summary of a dense symmetric eigensolve.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Doubled-grid dimension of the operator.
    pub dim: usize,
    /// The `k` smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors for the reported window (unit Euclidean norm).
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    /// Count of numerically-zero eigenvalues over the whole spectrum.
    pub kernel_dim: usize,
    /// Threshold used for the kernel count (`1e-6 · max|λ|`).
    pub zero_tol: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// The `k` smallest eigenpairs of a dense symmetric operator together with
/// kernel diagnostics over the full spectrum.
pub fn symmetric_spectrum(a: &DMatrix<f64>, k: usize) -> SpectrumReport {
    let (values, vectors, full) = eig::smallest_eigenpairs(a, k);
    let max_abs = full.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    SpectrumReport {
        dim: a.nrows(),
        eigenvalues: values,
        eigenvectors: vectors,
        kernel_dim: eig::kernel_dimension_of(&full),
        zero_tol: eig::KERNEL_RTOL * max_abs,
        min_eigenvalue: full.first().copied().unwrap_or(f64::NAN),
        max_eigenvalue: full.last().copied().unwrap_or(f64::NAN),
    }
}

/// Count of eigenvalues with `|λ| < zero_tol`.  Rejects a tolerance that
/// fails to separate clusters: an eigenvalue within a factor 10 of
/// `zero_tol` on either side makes the count ambiguous.
pub fn kernel_dimension(a: &DMatrix<f64>, zero_tol: f64) -> Result<usize> {
    if zero_tol.is_nan() || zero_tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "kernel tolerance must be positive, got {zero_tol}"
        )));
    }
    let spectrum = eig::spectrum_sorted(a);
    if let Some(bad) = spectrum
        .iter()
        .find(|&&v| v.abs() > zero_tol / 10.0 && v.abs() < zero_tol * 10.0)
    {
        return Err(Error::InvalidInput(format!(
            "kernel tolerance {zero_tol:.3e} does not separate clusters: eigenvalue {bad:.6e} \
             lies within a factor 10 of it"
        )));
    }
    Ok(spectrum.iter().filter(|&&v| v.abs() < zero_tol).count())
}

/// Kernel count at the default tolerance `1e-6 · max|λ|`.
pub fn kernel_dimension_default(a: &DMatrix<f64>) -> usize {
    eig::kernel_dimension_of(&eig::spectrum_sorted(a))
}

/// Eigenvalues of the interaction Hessian at the synchronized profile
/// `a·(z, z)`, in the rotated frame `w± = (u1 ± u2)/√2` where it becomes
/// `diag(λ1, λ2)·z^2p` with
///
/// `λ1 = 2p + 1`, `λ2 = (2p + 1 - β)/(1 + β)`.
///
/// `λ2 = 1` exactly when `p = β`, which is the degenerate-kernel case.
pub fn decoupled_hessian_eigenvalues(params: &Params) -> (f64, f64) {
    let (p, beta) = (params.p(), params.beta());
    (2.0 * p + 1.0, (2.0 * p + 1.0 - beta) / (1.0 + beta))
}

/// Result of diagonalizing the interaction Hessian at the synchronized
/// profile by the π/4 rotation `w1 = (u1+u2)/√2`, `w2 = (u1-u2)/√2`.
#[derive(Debug, Clone, Serialize)]
pub struct Decoupling {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Largest pointwise off-diagonal entry of the rotated Hessian (exactly
    /// zero in exact arithmetic by the component symmetry of the profile).
    pub max_offdiagonal: f64,
    /// Largest pointwise defect `|diag_i - λ_i z^2p|`.
    pub max_diagonal_defect: f64,
}

/// Builds the synchronized profile, rotates its Hessian pointwise, and
/// verifies that the rotation diagonalizes it with diagonal `λ_i z^2p`.
pub fn decouple_at_synchronized(grid: &Grid, params: &Params) -> Result<Decoupling> {
    let (lambda1, lambda2) = decoupled_hessian_eigenvalues(params);
    let gs = crate::ground_state::synthesized_ground_state(grid, params)?;
    let pots = hessian_potentials(params, &gs.profile);
    let z = crate::ground_state::scalar_soliton(grid, params.p())?;
    let mut max_off = 0.0_f64;
    let mut max_defect = 0.0_f64;
    for j in 0..grid.len() {
        // Q H Qᵀ for the π/4 rotation: diagonal (h11+h22)/2 ± h12,
        // off-diagonal (h11-h22)/2.
        let avg = 0.5 * (pots.h11[j] + pots.h22[j]);
        let off = 0.5 * (pots.h11[j] - pots.h22[j]);
        let w = abs_pow(z[j], 2.0 * params.p());
        max_off = max_off.max(off.abs());
        max_defect = max_defect.max((avg + pots.h12[j] - lambda1 * w).abs());
        max_defect = max_defect.max((avg - pots.h12[j] - lambda2 * w).abs());
    }
    let scale = (2.0 * params.p() + 1.0) * abs_pow(z[grid.len() / 2], 2.0 * params.p());
    if max_off > 1e-12 * scale || max_defect > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "rotation failed to diagonalize the Hessian: off-diagonal {max_off:.3e}, \
             diagonal defect {max_defect:.3e}"
        )));
    }
    Ok(Decoupling { lambda1, lambda2, max_offdiagonal: max_off, max_diagonal_defect: max_defect })
}

/// Weighted scalar eigenproblem `(-½∂xx + 1) w = μ z^2p w` for the soliton
/// weight.  Returns the `k` smallest positive `μ` ascending with
/// eigenfunctions on the full grid; the known exact pairs are `μ1 = 1` with
/// `w ∝ z` and `μ2 = 2p + 1` with `w ∝ ∂x z`.
pub fn weighted_eigenproblem(grid: &Grid, p: f64, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let z = crate::ground_state::scalar_soliton(grid, p)?;
    let weight: Vec<f64> = z.iter().map(|&v| abs_pow(v, 2.0 * p)).collect();
    weighted_eigenproblem_for(grid, &weight, k)
}

/// Core solver for a general nonnegative weight `m`, restricted to the
/// subspace where the weight is numerically nonsingular (relative cutoff
/// `1e-13`).
///
/// The congruence is taken through the *inverse* operator: with
/// `C = M^(1/2) A⁻¹ M^(1/2)` the wanted eigenvalues are `μ = 1/ν` for the
/// largest `ν` of `C`, and `‖C‖ ≈ 1/μ_min` stays O(1), so the tiny weight
/// values at the support boundary never amplify rounding (the direct
/// congruence `M^(-1/2) A M^(-1/2)` would have norm `~1/cutoff` and lose the
/// small eigenvalues entirely).
fn weighted_eigenproblem_for(
    grid: &Grid,
    weight: &[f64],
    k: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    assert_eq!(weight.len(), grid.len());
    let max_w = weight.iter().fold(0.0_f64, |m, &v| m.max(v));
    if max_w.is_nan() || max_w <= 0.0 {
        return Err(Error::InvalidInput("weight is identically zero".into()));
    }
    if weight.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("weight must be nonnegative".into()));
    }
    let cutoff = 1e-13 * max_w;
    let support: Vec<usize> = (0..grid.len()).filter(|&j| weight[j] >= cutoff).collect();
    let ns = support.len();
    if ns < 4 {
        return Err(Error::InvalidInput("weight support is too small".into()));
    }
    let col = grid.second_derivative_column();
    let n = grid.len();
    let mut a = DMatrix::<f64>::zeros(ns, ns);
    for (ai, &gi) in support.iter().enumerate() {
        for (aj, &gj) in support.iter().enumerate() {
            a[(ai, aj)] = -0.5 * col[(n + gi - gj) % n];
        }
        a[(ai, ai)] += 1.0;
    }
    let chol = nalgebra::Cholesky::new(a)
        .ok_or_else(|| Error::SingularOperator("restricted operator not positive definite".into()))?;
    let sqrt_m = DMatrix::<f64>::from_fn(ns, ns, |i, j| {
        if i == j {
            weight[support[i]].sqrt()
        } else {
            0.0
        }
    });
    // X = A⁻¹ M^(1/2);  C = M^(1/2) X.
    let x = chol.solve(&sqrt_m);
    let c = {
        let c = &sqrt_m * &x;
        let ct = c.transpose();
        (c + ct) * 0.5
    };
    let eig = c.symmetric_eigen();
    let mut idx: Vec<usize> = (0..ns).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let tiny = 1e-12 * eig.eigenvalues[idx[0]].abs().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(k);
    for &i in idx.iter().take(k) {
        let nu = eig.eigenvalues[i];
        if nu <= tiny {
            break;
        }
        // w = A⁻¹ M^(1/2) y = X y, embedded into the full grid.
        let y = eig.eigenvectors.column(i);
        let ws = &x * y;
        let mut w = vec![0.0; n];
        for (ai, &gi) in support.iter().enumerate() {
            w[gi] = ws[ai];
        }
        let nrm = w.iter().map(|&v| v * v).sum::<f64>().sqrt();
        for v in &mut w {
            *v /= nrm;
        }
        out.push((1.0 / nu, w));
    }
    if out.len() < k {
        return Err(Error::NoConvergence(format!(
            "only {} positive weighted eigenvalues available, {k} requested",
            out.len()
        )));
    }
    Ok(out)
}
