//! Semidefinite and linear lower bounds for the symmetric traveling
//! salesman problem.

pub mod bound;
pub mod circulant;
pub mod conic;
pub mod distance;
pub mod error;
pub mod held_karp;
pub mod instances;
pub mod relaxations;
pub mod scalar;

pub use bound::{BoundResult, Method};
pub use distance::DistanceMatrix;
pub use error::{Error, Result};
pub use scalar::{Field, Real, Scalar};

pub type Rational = num_rational::Ratio<i64>;
pub type Matrix = nalgebra::DMatrix<f64>;
pub type ExactMatrix = nalgebra::DMatrix<i64>;
