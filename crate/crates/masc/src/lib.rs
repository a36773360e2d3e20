//! Simulation toolkit for an orbiting ISAC node over Mars.
//!
//! The pipeline runs in the order of the modules below: orbit geometry feeds
//! the channel model, the sensing precoder maximizes echo coverage over the
//! visible cap, sensed parameters are mapped to the downlink, the downlink
//! precoder is designed against the dust uncertainty interval, and the frame
//! is split between the two phases along a Pareto front. `bounds` holds the
//! Cramér-Rao machinery used for the estimation noise model.
//!
//! ```
//! use masc::orbit::{OrbitConfig, orbital_period};
//! let period = orbital_period(&OrbitConfig::default());
//! assert!((period - 7085.0).abs() < 1.0);
//! ```

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod bounds;
pub mod channel;
pub mod config;
pub mod error;
pub mod figures;
pub mod linalg;
pub mod mapping;
pub mod orbit;
pub mod output;
pub mod robust;
pub mod scenario;
pub mod sensing;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference noise temperature, K.
pub const T0_KELVIN: f64 = 290.0;

/// Decibels to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to decibels.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
