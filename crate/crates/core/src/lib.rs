//! Principal nest of real quadratic maps `x² + c`: nest construction,
//! hyperbolic interval geometry, itinerary search and verification suites.
//! Arithmetic is generic over [`Real`]; the aliases below fix it to MPFR.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hyperbolic;
pub mod nest;
pub mod precision;
pub mod report;
pub mod scalar;
pub mod search;
pub mod verify;

pub use error::{Error, Result};
pub use precision::{BigReal, PrecisionContext};
pub use scalar::Real;

pub type BigInterval = hyperbolic::Interval<BigReal>;
pub type BigConfiguration = hyperbolic::GapConfiguration<BigReal>;
pub type BigMap = dynamics::QuadraticMap<BigReal>;
pub type BigNest = nest::NestResult<BigReal>;
pub type BigGeometry = geometry::LevelGeometry<BigReal>;
pub type BigReport = report::Report<BigReal>;
