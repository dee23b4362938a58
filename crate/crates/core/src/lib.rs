//! Numerical toolkit for positive solutions of the one-dimensional
//! prescribed-curvature Neumann problem
//!
//! ```text
//! -(u' / sqrt(1 + u'^2))' = lambda a(x) f(u),   u'(0) = u'(1) = 0,
//! ```
//!
//! with a sign-changing weight `a` and a nonlinearity `f` that behaves like
//! `u^p` at zero and `h u^-q` at infinity.
//!
//! All solvers are generic over [`Real`]; the aliases at the crate root fix
//! the scalar to `f64`.

pub mod eigen;
pub mod io;
pub mod error;
pub mod model;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod scalar;
pub mod shoot;
pub mod singular;
pub mod contin;
pub mod varmin;
pub mod asymp;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Weight = model::Weight<f64>;
pub type Nonlinearity = model::Nonlinearity<f64>;
pub type Problem = model::Problem<f64>;
pub type SolutionMesh = model::SolutionMesh<f64>;
