//! Smooth decomposition of bivariate functions into sums of ridge functions
//! along prescribed directions, with plane-wave utilities for factored
//! constant-coefficient operators.
//!
//! The pipeline in [`decompose`] consumes only evaluations (and, on the
//! symbolic path, exact derivatives) of `F`, so the profiles it returns are
//! smooth even when `F` was built from badly behaved summands.

pub mod calculus;
pub mod decompose;
pub mod expr;
pub mod format;
pub mod geometry;
pub mod pde;

pub use calculus::{BivariateFunction, Interpolation, Method, SampledProfile};
pub use decompose::{decompose, reconstruct, DecomposeError, DecomposeOptions, Decomposition};
pub use expr::{Expr, ExprError};
pub use format::{read_decomposition, write_decomposition, FormatError};
pub use geometry::{Direction, DirectionSet, NormalizedProblem, Rect};
pub use pde::{PdeError, PlaneWaveOperator};
