//! Dense symmetric eigensolves, plain and constrained.
//!
//! Constrained Rayleigh-quotient minima are computed by deflation: a
//! Householder QR of the constraint vectors yields an orthonormal basis of
//! their orthogonal complement, the operator is congruence-transformed onto
//! that complement, and the reduced symmetric matrix is eigensolved densely.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative zero threshold used to count kernel vectors: eigenvalues with
/// `|λ| < 1e-6 · max|λ|` are considered numerically zero.
pub const KERNEL_RTOL: f64 = 1e-6;

/// All eigenvalues in ascending order.
pub fn spectrum_sorted(a: &DMatrix<f64>) -> Vec<f64> {
    let eig = a.clone().symmetric_eigen();
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// The `k` smallest eigenpairs, eigenvalues ascending, eigenvectors
/// normalised to unit Euclidean norm.  Also returns the full ascending
/// spectrum for kernel counting.
pub fn smallest_eigenpairs(a: &DMatrix<f64>, k: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let k = k.min(n);
    let values: Vec<f64> = idx.iter().take(k).map(|&i| eig.eigenvalues[i]).collect();
    let vectors: Vec<Vec<f64>> = idx
        .iter()
        .take(k)
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let full: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    (values, vectors, full)
}

/// Number of numerically-zero eigenvalues in an ascending spectrum.
pub fn kernel_dimension_of(spectrum: &[f64]) -> usize {
    let max_abs = spectrum.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let tol = KERNEL_RTOL * max_abs;
    spectrum.iter().filter(|v| v.abs() < tol).count()
}

/// Householder reflectors spanning the constraint space; columns `m..n` of
/// the implicit orthogonal factor form an orthonormal basis of the
/// complement.
struct Deflation {
    reflectors: Vec<Vec<f64>>,
    n: usize,
}

impl Deflation {
    fn from_constraints(constraints: &[Vec<f64>]) -> Result<Self> {
        let n = constraints[0].len();
        let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(constraints.len());
        for (j, c) in constraints.iter().enumerate() {
            assert_eq!(c.len(), n);
            let scale = c.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
            let mut col = c.clone();
            for v in &reflectors {
                reflect(v, &mut col);
            }
            let tail_norm = col[j..].iter().map(|&v| v * v).sum::<f64>().sqrt();
            if tail_norm < 1e-12 * (scale + 1.0) {
                return Err(Error::InvalidInput(format!(
                    "constraint {j} is linearly dependent on the previous ones"
                )));
            }
            let alpha = -col[j].signum() * tail_norm;
            let mut v = vec![0.0; n];
            v[j..].copy_from_slice(&col[j..]);
            v[j] -= alpha;
            let vnorm = v.iter().map(|&u| u * u).sum::<f64>().sqrt();
            for u in &mut v {
                *u /= vnorm;
            }
            reflectors.push(v);
        }
        Ok(Self { reflectors, n })
    }

    fn m(&self) -> usize {
        self.reflectors.len()
    }

    /// `Qᵀ A Q`, computed one symmetric reflector sandwich at a time.
    fn congruence(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = a.clone();
        for v in &self.reflectors {
            let vv = DVector::from_column_slice(v);
            let w = &a * &vv;
            let s = vv.dot(&w);
            let n = self.n;
            for i in 0..n {
                let vi = vv[i];
                let wi = w[i];
                for j in 0..n {
                    a[(i, j)] += -2.0 * (vi * w[j] + wi * vv[j]) + 4.0 * s * vi * vv[j];
                }
            }
        }
        a
    }

    /// Lift a reduced vector `y ∈ R^(n-m)` back to the full space.
    fn lift(&self, y: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut w = vec![0.0; self.n];
        w[m..].copy_from_slice(y);
        for v in self.reflectors.iter().rev() {
            reflect(v, &mut w);
        }
        w
    }
}

fn reflect(v: &[f64], x: &mut [f64]) {
    let d: f64 = v.iter().zip(x.iter()).map(|(&a, &b)| a * b).sum();
    for (xi, &vi) in x.iter_mut().zip(v) {
        *xi -= 2.0 * d * vi;
    }
}

/// Outcome of a constrained eigensolve: the `k` smallest Rayleigh-quotient
/// stationary values on the orthogonal complement of the constraints, with
/// witnesses lifted back to the full space (unit Euclidean norm).
#[derive(Debug, Clone)]
pub struct ConstrainedEig {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Largest `|⟨c_i, w⟩| / (‖c_i‖·‖w‖)` over constraints and witnesses.
    pub constraint_defect: f64,
}

/// Smallest eigenpairs of `A` restricted to `{x : ⟨c_i, x⟩ = 0}`.
pub fn constrained_smallest_eigenpairs(
    a: &DMatrix<f64>,
    constraints: &[Vec<f64>],
    k: usize,
) -> Result<ConstrainedEig> {
    if constraints.is_empty() {
        let (values, vectors, _) = smallest_eigenpairs(a, k);
        return Ok(ConstrainedEig { values, vectors, constraint_defect: 0.0 });
    }
    let defl = Deflation::from_constraints(constraints)?;
    let m = defl.m();
    let reduced = defl.congruence(a);
    let block = reduced.view((m, m), (a.nrows() - m, a.ncols() - m)).into_owned();
    let block = symmetrized(block);
    let (values, vectors_red, _) = smallest_eigenpairs(&block, k);
    finish_constrained(&defl, constraints, values, vectors_red)
}

/// Smallest eigenvalues of the pencil `A x = λ B x` (`B` symmetric positive
/// definite) restricted to `{x : ⟨c_i, x⟩ = 0}`; the returned values are the
/// stationary values of `⟨Ax, x⟩ / ⟨Bx, x⟩` on that subspace.
pub fn constrained_smallest_generalized(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    constraints: &[Vec<f64>],
    k: usize,
) -> Result<ConstrainedEig> {
    let n = a.nrows();
    let defl = if constraints.is_empty() {
        Deflation { reflectors: Vec::new(), n }
    } else {
        Deflation::from_constraints(constraints)?
    };
    let m = defl.m();
    let a_red = defl.congruence(a).view((m, m), (n - m, n - m)).into_owned();
    let b_red = defl.congruence(b).view((m, m), (n - m, n - m)).into_owned();
    finish_generalized(&defl, constraints, a_red, b_red, k)
}

fn finish_generalized(
    defl: &Deflation,
    constraints: &[Vec<f64>],
    a_red: DMatrix<f64>,
    b_red: DMatrix<f64>,
    k: usize,
) -> Result<ConstrainedEig> {
    let a_red = symmetrized(a_red);
    let b_red = symmetrized(b_red);
    let chol = nalgebra::Cholesky::new(b_red)
        .ok_or_else(|| Error::SingularOperator("metric is not positive definite".into()))?;
    let l = chol.l();
    // M = L⁻¹ A L⁻ᵀ, assembled via two triangular solves.
    let t1 = l
        .solve_lower_triangular(&a_red)
        .ok_or_else(|| Error::SingularOperator("singular triangular factor".into()))?;
    let mt = l
        .solve_lower_triangular(&t1.transpose())
        .ok_or_else(|| Error::SingularOperator("singular triangular factor".into()))?;
    let m_mat = symmetrized(mt);
    let (values, vectors_y, _) = smallest_eigenpairs(&m_mat, k);
    // Map y back through x = L⁻ᵀ y, then lift through the deflation.
    let lt = l.transpose();
    let vectors_red: Vec<Vec<f64>> = vectors_y
        .iter()
        .map(|y| {
            let sol = lt
                .solve_upper_triangular(&DVector::from_column_slice(y))
                .expect("triangular solve after successful factorisation");
            let nrm = sol.norm();
            sol.iter().map(|&v| v / nrm).collect()
        })
        .collect();
    finish_constrained(defl, constraints, values, vectors_red)
}

fn finish_constrained(
    defl: &Deflation,
    constraints: &[Vec<f64>],
    values: Vec<f64>,
    vectors_red: Vec<Vec<f64>>,
) -> Result<ConstrainedEig> {
    let mut defect = 0.0_f64;
    let vectors: Vec<Vec<f64>> = vectors_red
        .iter()
        .map(|y| {
            let w = if defl.m() == 0 { y.clone() } else { defl.lift(y) };
            let wn = w.iter().map(|&v| v * v).sum::<f64>().sqrt();
            let w: Vec<f64> = w.iter().map(|&v| v / wn).collect();
            for c in constraints {
                let cn = c.iter().map(|&v| v * v).sum::<f64>().sqrt();
                let d: f64 = c.iter().zip(&w).map(|(&a, &b)| a * b).sum();
                defect = defect.max((d / cn).abs());
            }
            w
        })
        .collect();
    Ok(ConstrainedEig { values, vectors, constraint_defect: defect })
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            let base = 1.0 / (1.0 + (i as f64 - j as f64).abs());
            if i == j {
                base + i as f64 * 0.5
            } else {
                base
            }
        })
    }

    #[test]
    fn smallest_eigenpairs_are_sorted_and_orthonormal() {
        let a = test_matrix(30);
        let (vals, vecs, full) = smallest_eigenpairs(&a, 4);
        assert_eq!(vals.len(), 4);
        assert_eq!(full.len(), 30);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for v in &vecs {
            let n: f64 = v.iter().map(|&u| u * u).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-10);
        }
        // Residual check A v = λ v.
        for (lam, v) in vals.iter().zip(&vecs) {
            let av = &a * DVector::from_column_slice(v);
            for i in 0..30 {
                assert!((av[i] - lam * v[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn kernel_count_uses_a_relative_threshold() {
        let spectrum = vec![-3.0, -1e-9, 2e-9, 0.5, 4.0];
        assert_eq!(kernel_dimension_of(&spectrum), 2);
        let spectrum = vec![1e-9, 2e-9, 3e-9];
        // Everything is within 1e-6 of the max => all "zero".
        assert_eq!(kernel_dimension_of(&spectrum), 0);
    }

    #[test]
    fn constrained_minimum_matches_a_brute_force_projection() {
        let a = test_matrix(24);
        let c1: Vec<f64> = (0..24).map(|i| 1.0 + (i as f64 * 0.3).sin()).collect();
        let c2: Vec<f64> = (0..24).map(|i| (i as f64 * 0.7).cos()).collect();
        let out = constrained_smallest_eigenpairs(&a, &[c1.clone(), c2.clone()], 2).unwrap();
        assert!(out.constraint_defect < 1e-10);

        // Brute force: build an explicit orthonormal complement basis by
        // Gram-Schmidt against the constraints and eigensolve the projection.
        let n = 24;
        let mut basis: Vec<DVector<f64>> = Vec::new();
        let cons = [
            DVector::from_column_slice(&c1).normalize(),
            {
                let mut v = DVector::from_column_slice(&c2);
                let u0 = DVector::from_column_slice(&c1).normalize();
                let proj = u0.dot(&v);
                v -= u0 * proj;
                v.normalize()
            },
        ];
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            for c in &cons {
                let d = c.dot(&v);
                v -= c * d;
            }
            for b in &basis {
                let d = b.dot(&v);
                v -= b * d;
            }
            let nv = v.norm();
            if nv > 1e-8 {
                basis.push(v / nv);
            }
        }
        assert_eq!(basis.len(), n - 2);
        let q = DMatrix::from_columns(&basis);
        let proj = q.transpose() * &a * &q;
        let brute = spectrum_sorted(&proj);
        assert!((out.values[0] - brute[0]).abs() < 1e-9, "{} vs {}", out.values[0], brute[0]);
        assert!((out.values[1] - brute[1]).abs() < 1e-9);
    }

    #[test]
    fn constrained_witness_attains_the_reported_quotient() {
        let a = test_matrix(24);
        let c: Vec<f64> = (0..24).map(|i| (i as f64 * 0.11).exp() % 2.0).collect();
        let out = constrained_smallest_eigenpairs(&a, &[c], 1).unwrap();
        let w = DVector::from_column_slice(&out.vectors[0]);
        let quotient = (w.transpose() * &a * &w)[(0, 0)] / w.norm_squared();
        assert!((quotient - out.values[0]).abs() < 1e-9);
    }

    #[test]
    fn dependent_constraints_are_rejected() {
        let a = test_matrix(10);
        let c1: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let c2: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        assert!(constrained_smallest_eigenpairs(&a, &[c1, c2], 1).is_err());
    }

    #[test]
    fn generalized_quotient_matches_a_scaled_identity_metric() {
        // With B = 4I the generalized quotient is a quarter of the plain one.
        let a = test_matrix(16);
        let b = DMatrix::identity(16, 16) * 4.0;
        let c: Vec<f64> = (0..16).map(|i| 1.0 + i as f64 * 0.2).collect();
        let plain = constrained_smallest_eigenpairs(&a, std::slice::from_ref(&c), 1).unwrap();
        let gener = constrained_smallest_generalized(&a, &b, &[c], 1).unwrap();
        assert!((gener.values[0] - plain.values[0] / 4.0).abs() < 1e-10);
        assert!(gener.constraint_defect < 1e-10);
    }
}
