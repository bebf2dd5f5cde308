use crate::error::{Error, Result};

/// Lowest resistance the model will place a device at (ohm).
pub const R_FLOOR: f64 = 1.0e3;
/// Highest resistance the model will place a device at (ohm).
pub const R_CEILING: f64 = 30.0e6;

/// Progress through the most recent programming train, kept so that a
/// train split into several calls lands on the same state as one call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TrainProgress {
    pub v: f64,
    pub t: f64,
    pub width: f64,
    pub fraction: f64,
    pub base_r_eff: f64,
    pub start_persistent: f64,
    pub start_volatile: f64,
    pub pulses: u64,
}

/// Plastic state of one memristor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceState {
    pub(crate) r_persistent: f64,
    pub(crate) r_volatile_excess: f64,
    pub(crate) pulse_count: u64,
    pub(crate) train: Option<TrainProgress>,
}

impl DeviceState {
    /// A relaxed device at reference resistance `r` (ohm).
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < R_FLOOR || r > R_CEILING {
            return Err(Error::invalid(format!(
                "reference resistance {r} outside [{R_FLOOR}, {R_CEILING}] ohm"
            )));
        }
        Ok(Self {
            r_persistent: r,
            r_volatile_excess: 0.0,
            pulse_count: 0,
            train: None,
        })
    }

    pub fn r_persistent(&self) -> f64 {
        self.r_persistent
    }

    pub fn r_volatile_excess(&self) -> f64 {
        self.r_volatile_excess
    }

    pub fn pulse_count(&self) -> u64 {
        self.pulse_count
    }

    /// Effective reference resistance: persistent plus volatile excess.
    pub fn r_eff(&self) -> f64 {
        self.r_persistent + self.r_volatile_excess
    }

    /// Drops the volatile excess, as after a long relaxation.
    pub fn relaxed(&self) -> Self {
        Self {
            r_volatile_excess: 0.0,
            train: None,
            ..*self
        }
    }

    /// Scales the state by `factor`, used for device-to-device spread.
    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self {
            r_persistent: (self.r_persistent * factor).clamp(R_FLOOR, R_CEILING),
            r_volatile_excess: self.r_volatile_excess * factor,
            train: None,
            ..*self
        }
    }
}
