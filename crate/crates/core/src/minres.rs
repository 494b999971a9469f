//! MINRES for symmetric (possibly indefinite) linear operators.
//!
//! The Newton solver for standing-wave profiles needs `L₊ δ = -F` where `L₊`
//! is symmetric with one negative eigenvalue and a near-kernel translation
//! mode, so CG is out and an unsymmetric method is wasteful.  Callers fold
//! any (symmetric positive definite) preconditioning into `apply` by solving
//! the congruence-transformed system.

/// Outcome of a MINRES solve.
#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    /// True relative residual `‖b - Ax‖ / ‖b‖`, recomputed at exit.
    pub rel_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` for symmetric `A` given as a closure.
pub fn minres<A>(apply: A, b: &[f64], rel_tol: f64, max_iter: usize) -> MinresOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let beta1 = norm(b);
    if beta1 == 0.0 {
        return MinresOutcome { x: vec![0.0; n], rel_residual: 0.0, iterations: 0, converged: true };
    }

    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];

    let (mut oldb, mut beta) = (0.0_f64, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0_f64, 0.0_f64, beta1);
    let (mut cs, mut sn) = (-1.0_f64, 0.0_f64);
    let mut iterations = 0;

    for itn in 1..=max_iter {
        iterations = itn;
        let v: Vec<f64> = r2.iter().map(|&r| r / beta).collect();
        let mut y = apply(&v);
        if itn >= 2 {
            let s = beta / oldb;
            for (yi, r) in y.iter_mut().zip(&r1) {
                *yi -= s * r;
            }
        }
        let alfa = dot(&v, &y);
        let s = alfa / beta;
        for (yi, r) in y.iter_mut().zip(&r2) {
            *yi -= s * r;
        }
        r1 = std::mem::replace(&mut r2, y);
        oldb = beta;
        beta = norm(&r2);

        // Previous Givens rotation applied to the new tridiagonal column.
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;

        // Next rotation.
        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = (0..n)
            .map(|i| (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma)
            .collect();
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += phi * wi;
        }

        if phibar <= rel_tol * beta1 || beta <= f64::EPSILON * beta1 {
            break;
        }
    }

    let ax = apply(&x);
    let res: Vec<f64> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let rel_residual = norm(&res) / beta1;
    MinresOutcome { x, rel_residual, iterations, converged: rel_residual <= rel_tol * 10.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn solve_dense(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
        let lu = a.clone().lu();
        lu.solve(&DVector::from_column_slice(b)).unwrap().iter().copied().collect()
    }

    fn random_symmetric(n: usize, shift: f64, seed: u64) -> DMatrix<f64> {
        // Small deterministic pseudo-random symmetric matrix.
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let raw = DMatrix::from_fn(n, n, |_, _| next());
        let sym = (&raw + raw.transpose()) * 0.5;
        sym + DMatrix::identity(n, n) * shift
    }

    #[test]
    fn matches_a_direct_solve_on_a_definite_system() {
        let a = random_symmetric(40, 6.0, 7);
        let b: Vec<f64> = (0..40).map(|i| ((i * i) % 13) as f64 - 6.0).collect();
        let out = minres(|v| (&a * DVector::from_column_slice(v)).iter().copied().collect(), &b, 1e-13, 500);
        assert!(out.converged);
        let exact = solve_dense(&a, &b);
        for (u, v) in out.x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn handles_an_indefinite_system() {
        let mut a = random_symmetric(40, 0.0, 13);
        for i in 0..40 {
            a[(i, i)] += if i % 2 == 0 { 4.0 } else { -4.0 };
        }
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let out = minres(|v| (&a * DVector::from_column_slice(v)).iter().copied().collect(), &b, 1e-12, 2000);
        assert!(out.converged, "rel_residual = {}", out.rel_residual);
        let exact = solve_dense(&a, &b);
        for (u, v) in out.x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let out = minres(|v| v.to_vec(), &[0.0; 8], 1e-12, 10);
        assert!(out.converged);
        assert!(out.x.iter().all(|&v| v == 0.0));
    }
}
