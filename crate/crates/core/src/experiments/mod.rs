//! Protocol runners reproducing the characterization experiments.
//!
//! Each runner owns its device state and thermal plant and returns a tagged
//! trace plus the summary figures the protocol exists to measure.

mod cycling;
mod iv;
mod switching;
mod thermometer;
mod trace;

pub use cycling::{
    run_level_sweep, run_thermal_cycling, CyclingOptions, CyclingRun, DriftModel, HoldSummary,
    LevelRun,
};
pub use iv::{iv_voltages, run_iv_sweep};
pub use switching::{
    run_heat_stimulate_retention, run_nullcline_sweep, HsrOptions, HsrRun, NullclineCell,
    NullclineSweep,
};
pub use thermometer::{run_thermometer, ThermometerAccuracy, ThermometerRead, ThermometerRun};
pub use trace::{Phase, TraceRecord};
