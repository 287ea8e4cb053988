//! Numerical laboratory for correlation decay and entanglement area laws in
//! one-dimensional quantum states.
//!
//! The crate is organized bottom-up: dense linear algebra and sampling
//! ([`linalg`], [`space`], [`rng`]), states ([`density`], [`states`]),
//! distance measures ([`metrics`]), entropies ([`entropy`]), the correlation
//! engine ([`correlations`]) and the experiment layer ([`protocols`]).

pub mod correlations;
pub mod csv;
pub mod density;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod protocols;
pub mod rng;
pub mod space;
pub mod states;
pub mod verify;

pub use density::DensityOperator;
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, C64};
pub use rng::RngSeed;
pub use space::TensorSpace;
