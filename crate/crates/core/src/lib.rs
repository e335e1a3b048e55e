//! Double forms on a Euclidean vector space and the generalized Einstein
//! conditions of the Thorpe tensors of an algebraic curvature tensor.

pub mod classify;
pub mod curvature;
pub mod decomposition;
pub mod error;
pub mod exterior;
pub mod form;
pub mod oracle;
pub mod solver;

pub use curvature::AlgebraicCurvature;
pub use decomposition::{split, Decomposition};
pub use error::{Error, Result};
pub use exterior::MultiIndex;
pub use form::DoubleForm;
