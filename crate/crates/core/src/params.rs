//! Problem parameters for the coupled system.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Nonlinearity exponent `p` and coupling strength `β`.
///
/// The admissible range is `1 ≤ p < 2`, `β > 0`.  Synchronized ground states
/// `a·(z, z)` exist for `β > 1`; their non-degeneracy additionally requires
/// `p ≠ β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    p: f64,
    beta: f64,
}

impl Params {
    pub fn new(p: f64, beta: f64) -> Result<Self> {
        if !p.is_finite() || !(1.0..2.0).contains(&p) {
            return Err(Error::InvalidParams(format!(
                "exponent p must satisfy 1 <= p < 2, got {p}"
            )));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "coupling beta must be positive, got {beta}"
            )));
        }
        Ok(Self { p, beta })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Whether the synchronized profile `a·(z, z)` exists (`β > 1`).
    pub fn has_synchronized_state(&self) -> bool {
        self.beta > 1.0
    }

    /// Whether the linearization at the synchronized profile has an enlarged
    /// kernel (`p = β`): the symmetric/antisymmetric decoupling then produces
    /// a second zero mode on top of the translation mode.
    pub fn is_degenerate(&self) -> bool {
        (self.p - self.beta).abs() < 1e-12
    }

    /// Amplitude `a = (1 + β)^(-1/(2p))` of the synchronized profile
    /// `a·(z, z)`, which solves the coupled system for every admissible `β`
    /// (it is a ground state only for `β > 1`).
    pub fn coupling_amplitude(&self) -> f64 {
        (1.0 + self.beta).powf(-0.5 / self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_the_admissible_range() {
        assert!(Params::new(1.0, 2.0).is_ok());
        assert!(Params::new(1.9, 0.5).is_ok());
    }

    #[test]
    fn rejects_out_of_range_exponents_and_couplings() {
        assert!(Params::new(0.9, 2.0).is_err());
        assert!(Params::new(2.0, 2.0).is_err());
        assert!(Params::new(1.5, 0.0).is_err());
        assert!(Params::new(1.5, -1.0).is_err());
        assert!(Params::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn amplitude_matches_the_closed_form() {
        let params = Params::new(1.0, 3.0).unwrap();
        // (1 + 3)^(-1/2) = 1/2.
        assert!((params.coupling_amplitude() - 0.5).abs() < 1e-15);

        let params = Params::new(1.5, 2.0).unwrap();
        let expected = 3.0_f64.powf(-1.0 / 3.0);
        assert!((params.coupling_amplitude() - expected).abs() < 1e-15);

        // At β = 1 the amplitude is 2^(-1/2); the profile is still a
        // solution there even though it is no longer the ground state.
        let params = Params::new(1.0, 1.0).unwrap();
        assert!((params.coupling_amplitude() - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!(!params.has_synchronized_state());
    }

    #[test]
    fn degeneracy_flags_equal_exponent_and_coupling() {
        assert!(Params::new(1.5, 1.5).unwrap().is_degenerate());
        assert!(!Params::new(1.0, 2.0).unwrap().is_degenerate());
    }
}
