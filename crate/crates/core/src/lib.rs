//! The n-dimensional Chaplygin rolling ball as a compressed almost-Hamiltonian
//! system on the left-trivialized tangent bundle of SO(n).
//!
//! The crate is organised in layers:
//!
//! * [`algebra`] — the Lie algebra so(n) with the splitting h ⊕ h⊥ adapted to
//!   the stabilizer of `e_n`, structure constants, adjoint action and the
//!   group exponential.
//! * [`ball`] — the physical model: inertia operator, rolling connection,
//!   frame/coframe coefficient functions, compressed Hamiltonian, momentum map,
//!   the metric operator Φ and the conformal factor f.
//! * [`forms`] — exterior calculus on SO(n) × so(n): the canonical form Ω^S,
//!   the ⟨J,K⟩ and ⟨L,Curv⟩ corrections, the projection χ, and a frame-based
//!   exterior derivative.
//! * [`dynamics`] — extraction of the nonholonomic vector field by a pointwise
//!   linear solve, a Munthe-Kaas RK4 integrator, and the time-reparametrized
//!   flow.
//! * [`oracle`] — an independent full-phase-space integration with explicit
//!   Lagrange multipliers, used as a brute-force cross-check.
//! * [`reduction`] — the internal SO(n−1) symmetry: momentum level sets,
//!   projection to the sphere, closedness diagnostics and dimension audits.
//! * [`verify`] — the named verification suites driven by the CLI.
//! * [`scenario`] — scenario/trajectory/report file formats for the CLI.

pub mod algebra;
pub mod ball;
pub mod dynamics;
pub mod forms;
pub mod oracle;
pub mod reduction;
pub mod scenario;
pub mod verify;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not skew-symmetric (residual {0:.3e})")]
    NotSkew(f64),
    #[error("matrix is not special orthogonal (residual {0:.3e})")]
    NotSpecialOrthogonal(f64),
    #[error("dimension n must be at least 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("group element does not stabilize e_n (residual {0:.3e})")]
    NotInStabilizer(f64),
    #[error("point too close to the relative equilibria set: min |g_a| = {0:.3e}")]
    NearEquilibrium(f64),
    #[error("singular linear system (|det| = {0:.3e})")]
    SingularSystem(f64),
    #[error("inertia operator must be symmetric positive definite")]
    InvalidInertia,
    #[error("unsupported form degree {0}")]
    UnsupportedDegree(usize),
    #[error("energy guard tripped at t = {t:.6}: per-step drift {drift:.3e} (reduce dt)")]
    EnergyGuard { t: f64, drift: f64 },
    #[error("constraint guard tripped at t = {t:.6}: residual {drift:.3e}")]
    ConstraintGuard { t: f64, drift: f64 },
    #[error("trajectory time grids do not match")]
    GridMismatch,
    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
