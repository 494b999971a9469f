//! Numerical laboratory for weakly coupled one-dimensional nonlinear
//! Schrödinger systems
//!
//! The library studies the focusing two-component system
//!
//! ```text
//! i ∂t φ1 + ½ ∂xx φ1 + (|φ1|^2p + β |φ2|^(p+1) |φ1|^(p-1)) φ1 = 0
//! i ∂t φ2 + ½ ∂xx φ2 + (|φ2|^2p + β |φ1|^(p+1) |φ2|^(p-1)) φ2 = 0
//! ```
//!
//! on a periodic interval `[-L, L)`, together with the standing-wave profile
//! system obtained from the ansatz `φ_i(t, x) = r_i(x) e^{it}`:
//!
//! ```text
//! -½ r_i'' + r_i = r_i^(2p+1) + β r_i^p r_j^(p+1),   j ≠ i.
//! ```
//!
//! Everything is organised around a handful of cooperating modules:
//!
//! * [`params`] / [`grid`] / [`field`] — problem parameters, the Fourier
//!   collocation grid, and real/complex two-component fields with the three
//!   inner products used throughout (`L²`, standard `H¹`, and the energy
//!   `H¹` pairing `½∫u'v' + ∫uv` under which the profile equation becomes
//!   a natural critical-point equation).
//! * [`ground_state`] — closed-form synchronized solitons, damped Newton and
//!   constrained gradient-flow solvers for standing-wave profiles.
//! * [`linearized`] — the second-variation operators `L₊`/`L₋`, dense
//!   spectral assembly, kernel diagnostics, the symmetric/antisymmetric
//!   decoupling at the synchronized state, and the weighted eigenproblem
//!   `(-½∂xx + 1) w = μ z^{2p} w`.
//! * [`coercivity`] — constrained Rayleigh quotients of `L₊`/`L₋`,
//!   mass-shell identities, and sampled verification of the quadratic
//!   energy lower bound.
//! * [`modulation`] — best-fit translation and phases against the orbit of a
//!   profile, orbit distances, and the first-order orthogonality residuals.
//! * [`dynamics`] — mass/energy functionals, Strang split-step evolution of
//!   the full system, evolution of the linearization, and orbital-stability
//!   experiments.
//! * [`variational`] — the action functional, Nehari-manifold utilities,
//!   sampled estimates of the constrained minimization levels, and the
//!   algebraic feasibility region used to locate the minimizer profile.
//! * [`verify`] — the acceptance suite driven both by `cargo test` and the
//!   command-line `verify-all` subcommand.

// Index-synchronized loops over several same-length node arrays are the
// clearest form for the grid stencils and operator assemblies below.
#![allow(clippy::needless_range_loop)]

pub mod coercivity;
pub mod dynamics;
pub mod eig;
pub mod field;
pub mod grid;
pub mod ground_state;
pub mod io;
pub mod linearized;
pub mod minres;
pub mod modulation;
pub mod params;
pub mod sampling;
pub mod variational;
pub mod verify;

pub use field::{ComplexPair, Pairing, RealPair};
pub use grid::Grid;
pub use ground_state::GroundState;
pub use params::Params;

/// Errors produced by solvers and validators across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("solver failed to converge: {0}")]
    NoConvergence(String),
    #[error("linear system is singular or nearly singular: {0}")]
    SingularOperator(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
