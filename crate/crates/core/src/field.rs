//! Two-component real and complex fields and their inner products.

use num_complex::Complex64;

use crate::grid::Grid;

/// The three pairings used by the laboratory.
///
/// * `L2`: `Σ_i ∫ u_i v_i`
/// * `H1Standard`: `Σ_i ∫ (u_i v_i + u_i' v_i')` — the norm used for orbit
///   distances and modulation fits.
/// * `H1Energy`: `Σ_i ∫ (u_i v_i + ½ u_i' v_i')` — the norm under which the
///   profile equation is exactly the natural critical-point equation, used by
///   the variational module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    L2,
    H1Standard,
    H1Energy,
}

impl Pairing {
    fn gradient_weight(self) -> f64 {
        match self {
            Pairing::L2 => 0.0,
            Pairing::H1Standard => 1.0,
            Pairing::H1Energy => 0.5,
        }
    }
}

/// A real two-component field sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPair {
    pub comps: [Vec<f64>; 2],
}

/// A complex two-component field sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPair {
    pub comps: [Vec<Complex64>; 2],
}

impl RealPair {
    pub fn new(c1: Vec<f64>, c2: Vec<f64>) -> Self {
        assert_eq!(c1.len(), c2.len());
        Self { comps: [c1, c2] }
    }

    pub fn zeros(n: usize) -> Self {
        Self { comps: [vec![0.0; n], vec![0.0; n]] }
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps[0].is_empty()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            comps: [
                self.comps[0].iter().map(|&v| f(v)).collect(),
                self.comps[1].iter().map(|&v| f(v)).collect(),
            ],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        assert_eq!(self.len(), other.len());
        for i in 0..2 {
            for (a, b) in self.comps[i].iter_mut().zip(&other.comps[i]) {
                *a += s * b;
            }
        }
    }

    /// Interpret the pair as a complex field with zero imaginary part.
    pub fn to_complex(&self) -> ComplexPair {
        ComplexPair {
            comps: [
                self.comps[0].iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                self.comps[1].iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            ],
        }
    }

    /// Stack both components into a single vector (component 0 first), the
    /// layout used by the dense operator assembly.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.len());
        out.extend_from_slice(&self.comps[0]);
        out.extend_from_slice(&self.comps[1]);
        out
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        assert_eq!(flat.len() % 2, 0);
        let n = flat.len() / 2;
        Self::new(flat[..n].to_vec(), flat[n..].to_vec())
    }

    pub fn inner(&self, grid: &Grid, other: &Self, pairing: Pairing) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            let u = &self.comps[i];
            let v = &other.comps[i];
            acc += grid.integrate(&u.iter().zip(v).map(|(&a, &b)| a * b).collect::<Vec<_>>());
        }
        let w = pairing.gradient_weight();
        if w != 0.0 {
            for i in 0..2 {
                let du = grid.derivative(&self.comps[i]);
                let dv = grid.derivative(&other.comps[i]);
                acc += w
                    * grid
                        .integrate(&du.iter().zip(&dv).map(|(&a, &b)| a * b).collect::<Vec<_>>());
            }
        }
        acc
    }

    pub fn norm_sq(&self, grid: &Grid, pairing: Pairing) -> f64 {
        self.inner(grid, self, pairing)
    }

    pub fn norm(&self, grid: &Grid, pairing: Pairing) -> f64 {
        self.norm_sq(grid, pairing).max(0.0).sqrt()
    }
}

impl ComplexPair {
    pub fn new(c1: Vec<Complex64>, c2: Vec<Complex64>) -> Self {
        assert_eq!(c1.len(), c2.len());
        Self { comps: [c1, c2] }
    }

    pub fn zeros(n: usize) -> Self {
        Self { comps: [vec![Complex64::ZERO; n], vec![Complex64::ZERO; n]] }
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps[0].is_empty()
    }

    pub fn from_re_im(re: &RealPair, im: &RealPair) -> Self {
        assert_eq!(re.len(), im.len());
        Self {
            comps: [0, 1].map(|i| {
                re.comps[i]
                    .iter()
                    .zip(&im.comps[i])
                    .map(|(&a, &b)| Complex64::new(a, b))
                    .collect()
            }),
        }
    }

    pub fn re(&self) -> RealPair {
        RealPair {
            comps: [
                self.comps[0].iter().map(|c| c.re).collect(),
                self.comps[1].iter().map(|c| c.re).collect(),
            ],
        }
    }

    pub fn im(&self) -> RealPair {
        RealPair {
            comps: [
                self.comps[0].iter().map(|c| c.im).collect(),
                self.comps[1].iter().map(|c| c.im).collect(),
            ],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            comps: [
                self.comps[0].iter().map(|&c| s * c).collect(),
                self.comps[1].iter().map(|&c| s * c).collect(),
            ],
        }
    }

    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        assert_eq!(self.len(), other.len());
        for i in 0..2 {
            for (a, b) in self.comps[i].iter_mut().zip(&other.comps[i]) {
                *a += s * b;
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            comps: [0, 1].map(|i| {
                self.comps[i]
                    .iter()
                    .zip(&other.comps[i])
                    .map(|(&a, &b)| a - b)
                    .collect()
            }),
        }
    }

    /// Real inner product `Re Σ_i ∫ u_i conj(v_i) (+ gradient terms)`.
    pub fn inner(&self, grid: &Grid, other: &Self, pairing: Pairing) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            let u = &self.comps[i];
            let v = &other.comps[i];
            acc += grid.integrate(
                &u.iter().zip(v).map(|(a, b)| (a * b.conj()).re).collect::<Vec<_>>(),
            );
        }
        let w = pairing.gradient_weight();
        if w != 0.0 {
            for i in 0..2 {
                let du = grid.derivative_c(&self.comps[i]);
                let dv = grid.derivative_c(&other.comps[i]);
                acc += w
                    * grid.integrate(
                        &du.iter().zip(&dv).map(|(a, b)| (a * b.conj()).re).collect::<Vec<_>>(),
                    );
            }
        }
        acc
    }

    pub fn norm_sq(&self, grid: &Grid, pairing: Pairing) -> f64 {
        self.inner(grid, self, pairing)
    }

    pub fn norm(&self, grid: &Grid, pairing: Pairing) -> f64 {
        self.norm_sq(grid, pairing).max(0.0).sqrt()
    }

    /// Per-component squared `L²` masses `(‖φ1‖₂², ‖φ2‖₂²)`.
    pub fn component_masses(&self, grid: &Grid) -> [f64; 2] {
        [0, 1].map(|i| {
            grid.integrate(&self.comps[i].iter().map(|c| c.norm_sqr()).collect::<Vec<_>>())
        })
    }
}

/// `(φ1(·+x0) e^{iθ1}, φ2(·+x0) e^{iθ2})`: the symmetry group action whose
/// orbit through a profile the modulation module measures distances to.
pub fn shift_and_phase(grid: &Grid, phi: &ComplexPair, x0: f64, theta: [f64; 2]) -> ComplexPair {
    ComplexPair {
        comps: [0, 1].map(|i| {
            let shifted = grid.shift_c(&phi.comps[i], x0);
            let rot = Complex64::from_polar(1.0, theta[i]);
            shifted.iter().map(|&c| c * rot).collect()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(20.0, 256).unwrap()
    }

    /// `z` scaled to `a·(z, z)` for p = 1, β = 3 (amplitude 1/2).
    fn synchronized_pair(g: &Grid) -> RealPair {
        let s2 = 2.0_f64.sqrt();
        let r: Vec<f64> = g.nodes().iter().map(|&x| 0.5 * s2 / (s2 * x).cosh()).collect();
        RealPair::new(r.clone(), r)
    }

    #[test]
    fn l2_norm_of_the_synchronized_pair_is_mass_sqrt_2() {
        // ‖a(z,z)‖₂² = 2·a²·2√2 = √2 at a = 1/2.
        let g = grid();
        let z = synchronized_pair(&g);
        assert!((z.norm_sq(&g, Pairing::L2) - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn energy_pairing_reproduces_the_scalar_soliton_identity() {
        // ½‖z'‖₂² + ‖z‖₂² = ‖z‖₄⁴ = 8√2/3 for the cubic soliton.
        let g = grid();
        let s2 = 2.0_f64.sqrt();
        let z: Vec<f64> = g.nodes().iter().map(|&x| s2 / (s2 * x).cosh()).collect();
        let u = RealPair::new(z, vec![0.0; g.len()]);
        let expected = 8.0 * s2 / 3.0;
        assert!((u.norm_sq(&g, Pairing::H1Energy) - expected).abs() < 1e-10);
    }

    #[test]
    fn pairings_differ_only_in_the_gradient_weight() {
        let g = grid();
        let u = RealPair::new(
            g.nodes().iter().map(|&x| (-0.5 * x * x).exp()).collect(),
            g.nodes().iter().map(|&x| x * (-0.3 * x * x).exp()).collect(),
        );
        let l2 = u.norm_sq(&g, Pairing::L2);
        let std = u.norm_sq(&g, Pairing::H1Standard);
        let energy = u.norm_sq(&g, Pairing::H1Energy);
        let grad = std - l2;
        assert!(grad > 0.0);
        assert!((energy - (l2 + 0.5 * grad)).abs() < 1e-12 * std);
    }

    #[test]
    fn complex_inner_reduces_to_real_inner_on_real_data() {
        let g = grid();
        let u = RealPair::new(
            g.nodes().iter().map(|&x| (-0.2 * x * x).exp()).collect(),
            g.nodes().iter().map(|&x| (0.4 * x).sin() * (-0.2 * x * x).exp()).collect(),
        );
        let uc = u.to_complex();
        for pairing in [Pairing::L2, Pairing::H1Standard, Pairing::H1Energy] {
            let a = u.norm_sq(&g, pairing);
            let b = uc.norm_sq(&g, pairing);
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn shift_and_phase_is_an_isometry_in_every_pairing() {
        let g = grid();
        let phi = ComplexPair::new(
            g.nodes()
                .iter()
                .map(|&x| Complex64::new((-0.3 * x * x).exp(), 0.2 * (-0.1 * x * x).exp()))
                .collect(),
            g.nodes()
                .iter()
                .map(|&x| Complex64::new((0.2 * x).cos() * (-0.2 * x * x).exp(), 0.0))
                .collect(),
        );
        let moved = shift_and_phase(&g, &phi, 3.127, [0.913, -2.4]);
        for pairing in [Pairing::L2, Pairing::H1Standard, Pairing::H1Energy] {
            let a = phi.norm_sq(&g, pairing);
            let b = moved.norm_sq(&g, pairing);
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "{pairing:?}: {a} vs {b}");
        }
    }

    #[test]
    fn shift_and_phase_composes_additively() {
        let g = grid();
        let phi = ComplexPair::new(
            g.nodes().iter().map(|&x| Complex64::new((-0.3 * x * x).exp(), 0.1)).collect(),
            g.nodes().iter().map(|&x| Complex64::new(0.0, (-0.25 * x * x).exp())).collect(),
        );
        let once = shift_and_phase(&g, &phi, 1.25, [0.3, 0.7]);
        let twice = shift_and_phase(&g, &once, -0.75, [0.2, -0.1]);
        let direct = shift_and_phase(&g, &phi, 0.5, [0.5, 0.6]);
        let diff = twice.sub(&direct);
        assert!(diff.norm(&g, Pairing::H1Standard) < 1e-11);
    }

    #[test]
    fn flatten_round_trips() {
        let g = grid();
        let u = synchronized_pair(&g);
        assert_eq!(RealPair::from_flat(&u.flatten()), u);
    }
}
