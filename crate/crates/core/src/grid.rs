//! Periodic Fourier collocation grid.
//!
//! Nodes are `x_j = -L + j·h`, `h = 2L/N`, with `N` a power of two, and
//! spectral operations use the discrete wavenumbers `k_m = π m / L` in FFT
//! storage order (`m = 0, 1, …, N/2-1, -N/2, …, -1`).  All integrals are the
//! periodic rectangle rule `h·Σ`, which is spectrally accurate for smooth
//! periodic integrands.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

#[derive(Clone)]
pub struct Grid {
    l: f64,
    n: usize,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("l", &self.l)
            .field("n", &self.n)
            .finish()
    }
}

impl Grid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidGrid(format!("half-length must be positive, got {l}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "node count must be a power of two >= 16, got {n}"
            )));
        }
        let dx = 2.0 * l / n as f64;
        let x = (0..n).map(|j| -l + j as f64 * dx).collect();
        let k = (0..n)
            .map(|m| {
                let signed = if m <= n / 2 { m as isize } else { m as isize - n as isize };
                std::f64::consts::PI * signed as f64 / l
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            l,
            n,
            dx,
            x,
            k,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.l
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    /// Wavenumbers in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Periodic rectangle rule `h·Σ v_j`.
    pub fn integrate(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.n);
        self.dx * v.iter().sum::<f64>()
    }

    /// Unnormalised forward transform, in place.
    pub fn fft(&self, v: &mut [Complex64]) {
        assert_eq!(v.len(), self.n);
        self.fwd.process(v);
    }

    /// Normalised inverse transform, in place.
    pub fn ifft(&self, v: &mut [Complex64]) {
        assert_eq!(v.len(), self.n);
        self.inv.process(v);
        let scale = 1.0 / self.n as f64;
        for c in v.iter_mut() {
            *c *= scale;
        }
    }

    pub fn spectrum(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut hat = v.to_vec();
        self.fft(&mut hat);
        hat
    }

    pub fn spectrum_real(&self, v: &[f64]) -> Vec<Complex64> {
        let mut hat: Vec<Complex64> = v.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        self.fft(&mut hat);
        hat
    }

    /// Spectral first derivative of a real field.  The unmatched Nyquist mode
    /// is dropped so the result stays real and odd-symmetric.
    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        let mut hat = self.spectrum_real(v);
        self.multiply_ik(&mut hat);
        self.ifft(&mut hat);
        hat.iter().map(|c| c.re).collect()
    }

    /// Spectral second derivative of a real field.
    pub fn second_derivative(&self, v: &[f64]) -> Vec<f64> {
        let mut hat = self.spectrum_real(v);
        for (c, &k) in hat.iter_mut().zip(&self.k) {
            *c *= -k * k;
        }
        self.ifft(&mut hat);
        hat.iter().map(|c| c.re).collect()
    }

    /// Spectral first derivative of a complex field.
    pub fn derivative_c(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut hat = self.spectrum(v);
        self.multiply_ik(&mut hat);
        self.ifft(&mut hat);
        hat
    }

    /// Spectral second derivative of a complex field.
    pub fn second_derivative_c(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut hat = self.spectrum(v);
        for (c, &k) in hat.iter_mut().zip(&self.k) {
            *c *= -k * k;
        }
        self.ifft(&mut hat);
        hat
    }

    fn multiply_ik(&self, hat: &mut [Complex64]) {
        for (m, (c, &k)) in hat.iter_mut().zip(&self.k).enumerate() {
            if m == self.n / 2 {
                *c = Complex64::ZERO;
            } else {
                *c *= Complex64::new(0.0, k);
            }
        }
    }

    /// Samples of `v(· + x0)` computed by the exact Fourier shift.
    pub fn shift_c(&self, v: &[Complex64], x0: f64) -> Vec<Complex64> {
        let mut hat = self.spectrum(v);
        for (c, &k) in hat.iter_mut().zip(&self.k) {
            *c *= Complex64::from_polar(1.0, k * x0);
        }
        self.ifft(&mut hat);
        hat
    }

    /// First column of the (symmetric, circulant) dense matrix representing
    /// the spectral second derivative.  Entry `(i, j)` of the matrix is
    /// `column[(i - j) mod N]`.
    pub fn second_derivative_column(&self) -> Vec<f64> {
        let mut hat: Vec<Complex64> =
            self.k.iter().map(|&k| Complex64::new(-k * k, 0.0)).collect();
        self.ifft(&mut hat);
        let mut col: Vec<f64> = hat.iter().map(|c| c.re).collect();
        // -k² is exactly even across conjugate modes, so the column is even up
        // to rounding; symmetrising it makes the assembled matrix exactly
        // symmetric.
        for i in 1..self.n / 2 {
            let avg = 0.5 * (col[i] + col[self.n - i]);
            col[i] = avg;
            col[self.n - i] = avg;
        }
        col
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(20.0, 256).unwrap()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(20.0, 100).is_err());
        assert!(Grid::new(20.0, 8).is_err());
        assert!(Grid::new(0.0, 64).is_err());
        assert!(Grid::new(-3.0, 64).is_err());
    }

    #[test]
    fn node_layout_and_spacing() {
        let g = Grid::new(20.0, 1024).unwrap();
        assert_eq!(g.dx(), 0.0390625);
        assert_eq!(g.nodes()[0], -20.0);
        let last = g.nodes()[1023];
        assert!((last - (20.0 - g.dx())).abs() < 1e-12);
    }

    #[test]
    fn integrates_a_localized_profile_to_spectral_accuracy() {
        // ∫ sech²(√2 x) dx = √2 over the line; the tail at |x| = 20 is ~1e-24.
        let g = grid();
        let v: Vec<f64> = g.nodes().iter().map(|&x| (2.0_f64.sqrt() * x).cosh().powi(-2)).collect();
        assert!((g.integrate(&v) - 2.0_f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn differentiates_trigonometric_modes_exactly() {
        let g = grid();
        let kx = std::f64::consts::PI * 3.0 / g.half_length();
        let v: Vec<f64> = g.nodes().iter().map(|&x| (kx * x).sin()).collect();
        let d = g.derivative(&v);
        let dd = g.second_derivative(&v);
        for j in 0..g.len() {
            let x = g.nodes()[j];
            assert!((d[j] - kx * (kx * x).cos()).abs() < 1e-12);
            assert!((dd[j] + kx * kx * (kx * x).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn differentiates_a_soliton_profile_against_the_closed_form() {
        // z = √2 sech(√2 x) has z' = -2 sech(√2 x) tanh(√2 x).  The profile
        // is analytic in a strip of half-width π/(2√2), so resolving its
        // derivative to 1e-10 needs wavenumbers past ~25.
        let g = Grid::new(20.0, 512).unwrap();
        let s2 = 2.0_f64.sqrt();
        let v: Vec<f64> = g.nodes().iter().map(|&x| s2 / (s2 * x).cosh()).collect();
        let d = g.derivative(&v);
        for j in 0..g.len() {
            let x = g.nodes()[j];
            let exact = -2.0 * (s2 * x).tanh() / (s2 * x).cosh();
            assert!((d[j] - exact).abs() < 1e-10, "node {j}: {} vs {exact}", d[j]);
        }
    }

    #[test]
    fn fourier_shift_translates_band_limited_data_exactly() {
        let g = grid();
        let kx = std::f64::consts::PI * 5.0 / g.half_length();
        let v: Vec<Complex64> = g
            .nodes()
            .iter()
            .map(|&x| Complex64::new((kx * x).cos(), (kx * x).sin()))
            .collect();
        let shifted = g.shift_c(&v, 0.7);
        for j in 0..g.len() {
            let x = g.nodes()[j] + 0.7;
            let exact = Complex64::new((kx * x).cos(), (kx * x).sin());
            assert!((shifted[j] - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn dense_second_derivative_column_matches_the_fft_path() {
        let g = Grid::new(10.0, 64).unwrap();
        let col = g.second_derivative_column();
        let n = g.len();
        // Apply the circulant by direct convolution and compare.
        let v: Vec<f64> = g.nodes().iter().map(|&x| (0.3 * x).sin() * (-0.1 * x * x).exp()).collect();
        let dense: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| col[(n + i - j) % n] * v[j]).sum())
            .collect();
        let fft = g.second_derivative(&v);
        for j in 0..n {
            assert!((dense[j] - fft[j]).abs() < 1e-9, "node {j}: {} vs {}", dense[j], fft[j]);
        }
    }
}
