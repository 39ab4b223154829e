//! Polynomial initial value problems (PIVPs) as a compilation target and the
//! machinery around them: exact multivariate polynomial arithmetic, the PIVP
//! intermediate representation with growth bounds, closure operations that
//! mechanically combine systems, GPAC circuits compiled to and from PIVPs, a
//! zoo of approximating functions, and an adaptive Taylor-series simulator.

pub mod bound;
pub mod circuit;
pub mod closure;
pub mod coeff;
pub mod pivp;
pub mod poly;
pub mod schema;
pub mod sim;
pub mod zoo;

pub use bound::BoundExpr;
pub use coeff::Coefficient;
pub use pivp::{Domain, Pivp};
pub use poly::{PolyMatrix, Polynomial};
