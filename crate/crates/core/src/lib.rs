//! Design and analysis of photon-pair sources based on spontaneous four-wave
//! mixing in birefringent photonic-crystal fiber.

pub mod bessel;
pub mod cli;
pub mod config;
pub mod constants;
pub mod dispersion;
pub mod error;
pub mod fiber_fit;
pub mod hom;
pub mod jsa;
pub mod material;
pub mod phasematch;

pub use error::{Error, Result};
