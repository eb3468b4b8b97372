//! Simulation and analysis of off-axis holograms recorded with heralded
//! single photons.
//!
//! The crate covers the whole chain: a photon-pair source with realistic
//! detectors ([`source`]), coincidence counting and `g2(0)` ([`coincidence`],
//! [`monitor`]), the interferometer forward model ([`forward`]), raster-scan
//! acquisition ([`scan`]), Fourier reconstruction ([`reconstruct`]) and
//! quality metrics ([`metrics`]). [`config`], [`io`] and [`cli`] drive it
//! from files.

pub mod cli;
pub mod coincidence;
pub mod config;
pub mod error;
pub mod forward;
pub mod io;
pub mod metrics;
pub mod monitor;
pub mod reconstruct;
pub mod scan;
pub mod seed;
pub mod source;
pub mod timetag;

pub use error::{Error, Result};
