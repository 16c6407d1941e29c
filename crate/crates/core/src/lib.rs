//! Two-point correlators of a harmonically trapped one-dimensional Bose gas
//! at finite temperature, with a finite-difference reference solver.

pub mod correlator;
pub mod error;
pub mod green_homogeneous;
pub mod green_trapped;
pub mod legendre;
pub mod model;
pub mod oracle;
pub mod special;
pub mod validation;


pub use error::{Error, Result};
pub use model::{DerivedScales, Model, PhysicalParams, PointPair, Regime, RegimeThresholds};
