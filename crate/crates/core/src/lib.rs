//! Exact arithmetic for quaternion orders with an orthogonal involution:
//! the twisted Euclidean algorithm, covering radii of plus parts, the
//! classification of Euclidean ‡-orders and Dirichlet domains in H^4.

pub mod enumerate;
pub mod error;
pub mod h4_geom;
pub mod exact_quat;
pub mod lattice_orders;
pub mod linalg;
pub mod order_enum;
pub mod polytope;
pub mod cli;
pub mod covering;
pub mod data;
pub mod twisted_euclid;

pub use error::{Error, Result};
pub use exact_quat::{Algebra, OrthogonalInvolution, QuatAlgebra, Quaternion, Rational};
