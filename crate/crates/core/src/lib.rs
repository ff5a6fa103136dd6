//! Simulator for mmWave vehicle-to-vehicle links assisted by conformal
//! (cylindrical) metasurfaces mounted on car doors.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: cylindrical element layouts, road and vehicle geometry,
//!   the specular relay area.
//! - [`phase`]: phase-profile synthesis from the generalized reflection law,
//!   reflected-angle and evanescence classification.
//! - [`channel`]: direct and cascaded channel matrices, path loss, normalized
//!   metasurface gains.
//! - [`scenario`]: Poisson highway traffic, plan-view blockage, relay
//!   candidate enumeration.
//! - [`link`]: position-based beam codebooks, beam selection and SNR.
//! - [`experiments`]: seeded Monte-Carlo drivers producing tables and ECDFs.
//! - [`config`] and [`cli`]: configuration resolution and the `cris` binary.

pub mod channel;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod geometry;
pub mod link;
pub mod output;
pub mod phase;
pub mod rng;
pub mod scenario;
pub mod units;

pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wavelength in meters for a carrier frequency given in GHz.
pub fn wavelength(frequency_ghz: f64) -> f64 {
    SPEED_OF_LIGHT / (frequency_ghz * 1e9)
}
