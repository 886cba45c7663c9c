//! Compressible non-Newtonian Stokes flow on the periodic torus: a
//! pseudo-spectral simulator for the regularized system and a harness that
//! checks the a priori estimates numerically.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod constitutive;
pub mod continuity;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod momentum;
pub mod quadrature;

pub use constitutive::{ConstitutiveModel, RegularizationParams, ViscosityLaw};
pub use error::{Error, Result};
pub use fields::{Grid, Norm, ScalarField, TensorField, VectorField};
pub use momentum::{MomentumProblem, MomentumSolution};
