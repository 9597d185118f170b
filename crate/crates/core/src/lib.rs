//! Hyperbolic Cantor sets generated by two smooth contractions of [0,1]: cylinder
//! hierarchies, the scaling function, ratio Cantor sets, limit sets of the
//! scenery process, rigidity conjugacies, and the associated Gibbs measures.
//!
//! Geometry is computed in extended precision ([`real::Real`]); reports use `f64`.

pub mod config;
pub mod error;
pub mod hierarchy;
pub mod maps;
pub mod ratioset;
pub mod real;
pub mod scaling;
pub mod scenery;
pub mod stats;
pub mod symbolic;
pub mod system;
pub mod thermo;
pub mod ergodic;

pub use config::SystemConfig;
pub use error::{Error, Result};
pub use symbolic::{BiWindow, DualWord, Word};
pub use system::ContractionSystem;
