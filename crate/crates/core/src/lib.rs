//! Simulation and calibration toolkit for temperature-dependent metal-oxide
//! memristors.
//!
//! The crate is organised around the physical device model ([`device`]), the
//! chamber/device thermal plant ([`thermal`]), parameter extraction and
//! inverse problems ([`calibration`]), protocol runners that reproduce the
//! characterization experiments ([`experiments`]), the 25-synapse thermally
//! regulated neuron ([`homeostasis`]) and the file formats used by the CLI
//! ([`io`]).
//!
//! Everything is deterministic given its inputs; randomness only enters
//! through seeded sub-streams from [`rng`].

pub mod calibration;
pub mod device;
pub mod error;
pub mod experiments;
pub mod homeostasis;
pub mod io;
pub mod presets;
pub mod rng;
pub mod stats;
pub mod thermal;

pub use error::{Error, Result};
