//! Physical device model: thermionic conduction, temperature-dependent
//! read-out and pulse-driven switching with a volatile/persistent split.
//!
//! Plastic state lives in reference-resistance space (the resistance the
//! device would show at 300 K once the volatile part has relaxed).
//! Temperature only enters through the read-out factor
//! [`rho_temperature_factor`], so a programming train changes the state by
//! a fraction that is almost independent of the temperature it was applied
//! at.

mod conduction;
mod state;
mod switching;
mod thermal_fit;

pub use conduction::{thermionic_current, ThermionicParams, BOLTZMANN_EV};
pub use state::{DeviceState, R_CEILING, R_FLOOR};
pub use switching::{
    apply_pulse_train, fraction_spread, reset_to_reference, retention_run, train_switch_fraction,
    Pulse, ResetOutcome, SwitchingParams,
};
pub use thermal_fit::{
    calibrate_phi_from_drop, phi_for_state, phi_lower_bound, read_resistance,
    rho_temperature_factor, schottky_resistance, Anchor, ThermalFit, T_MAX, T_MIN, T_REF,
};

/// Read-out voltage used throughout the characterization protocols.
pub const V_READ: f64 = 0.2;
