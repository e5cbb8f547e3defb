//! Numerical toolkit for geometric Hamilton-Jacobi theory on cosymplectic
//! and contact manifolds.
//!
//! The extended phase space `T*Q x R` carries either a cosymplectic structure
//! (time-dependent mechanics) or a contact structure (dissipative mechanics),
//! both handled in a single global Darboux chart `(q, p, t)`. The crate
//! evaluates the structure tensors (`eta`, `Omega`, flat/sharp, Reeb fields,
//! Poisson/Jacobi brackets), integrates the associated evolution vector
//! fields, checks candidate Hamilton-Jacobi solutions (sections of
//! `T*Q x R -> Q x R`) by residual and by flow comparison, solves the 1-d HJ
//! equations by the method of characteristics, and ships four worked example
//! systems as fixtures.
//!
//! Modules:
//! - [`geometry`]: structure tensors and brackets in Darboux coordinates.
//! - [`dynamics`]: evolution fields, RK4 / Dormand-Prince 5(4) flows,
//!   conservation and dissipation diagnostics.
//! - [`hamilton_jacobi`]: sections-as-solutions machinery — residuals,
//!   gamma-relatedness, characteristics, complete-solution involution.
//! - [`systems`]: the trigonometric system, the Winternitz-Smorodinsky and
//!   anisotropic planar oscillators, and the damped oscillator.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hamilton_jacobi;
pub mod point;
pub mod scalar_field;
pub mod section;
pub mod systems;

pub use dynamics::{
    hamiltonian_drift, integrate, integrate_hamiltonian, DriftMode, DriftReport, IntegratorConfig,
    Method, StructureKind, Trajectory,
};
pub use error::{Error, Result};
pub use geometry::GeometricStructure;
pub use hamilton_jacobi::{
    hj_residual_contact, hj_residual_cosymplectic, relatedness_error, residual_sweep,
    CharacteristicSolution, GridSpec, ResidualMode, ResidualReport,
};
pub use point::{ExtendedPhasePoint, OneForm, TangentVector};
pub use scalar_field::{FieldGrad, ScalarField};
pub use section::{CompleteSolution, Section};
