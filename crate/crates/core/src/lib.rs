//! Bivariate copulas under the Markov product.
//!
//! Checkerboard copulas are exact: the Markov product of two checkerboards
//! is the checkerboard of the product of their doubly stochastic matrices.
//! Closed-form families are discretized onto checkerboards for the algebra
//! and evaluated directly everywhere else.

pub mod algebra;
pub mod copula;
pub mod error;
pub mod families;
pub mod grid;
pub mod interval;
pub mod metrics;
pub mod monotonicity;
pub mod operators;
pub mod sampling;
pub mod spec;
pub mod step;

pub use algebra::AlgebraConfig;
pub use copula::{Copula, Special};
pub use error::{CopulaError, Result};
pub use grid::{CellSide, GridCopula};
pub use interval::IntervalFamily;
pub use spec::CopulaSpec;
pub use step::StepFunction;
