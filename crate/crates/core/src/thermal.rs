//! Chamber and device thermal plant, temperature schedules and the
//! resistance settling criterion.

use rand::seq::SliceRandom;

use crate::device::{T_MAX, T_MIN};
use crate::error::{Error, Result};
use crate::rng;

/// Default chamber-air time constant (s).
pub const TAU_AIR_DEFAULT: f64 = 180.0;
/// Default device time constant for a packaged die (s).
pub const TAU_DEV_PACKAGED: f64 = 720.0;
/// Device time constant for a bare die on the wafer (s).
pub const TAU_DEV_ON_WAFER: f64 = 60.0;
/// Default hold per schedule entry (s).
pub const DEFAULT_HOLD: f64 = 3600.0;
/// Trailing window of the settling criterion (s).
pub const SETTLING_WINDOW: f64 = 360.0;
/// Trailing change must be below this share of the total change.
pub const SETTLING_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantPreset {
    Packaged,
    OnWafer,
}

impl PlantPreset {
    pub fn tau_dev(self) -> f64 {
        match self {
            PlantPreset::Packaged => TAU_DEV_PACKAGED,
            PlantPreset::OnWafer => TAU_DEV_ON_WAFER,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlantPreset::Packaged => "packaged",
            PlantPreset::OnWafer => "on-wafer",
        }
    }
}

impl std::str::FromStr for PlantPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "packaged" => Ok(PlantPreset::Packaged),
            "on-wafer" | "on_wafer" => Ok(PlantPreset::OnWafer),
            other => Err(Error::invalid(format!("unknown plant preset '{other}'"))),
        }
    }
}

/// Two cascaded first-order stages: chamber air follows the setpoint, the
/// device follows the air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalPlant {
    t_set: f64,
    t_air: f64,
    t_dev: f64,
    tau_air: f64,
    tau_dev: f64,
}

fn check_setpoint(t: f64) -> Result<()> {
    if !(T_MIN..=T_MAX).contains(&t) {
        return Err(Error::invalid(format!(
            "setpoint {t} K outside chamber range [{T_MIN}, {T_MAX}] K"
        )));
    }
    Ok(())
}

impl ThermalPlant {
    /// A plant in equilibrium at `t`.
    pub fn new(t: f64, tau_air: f64, tau_dev: f64) -> Result<Self> {
        check_setpoint(t)?;
        if !(tau_air > 0.0 && tau_dev > 0.0) || !tau_air.is_finite() || !tau_dev.is_finite() {
            return Err(Error::invalid("plant time constants must be positive"));
        }
        Ok(Self {
            t_set: t,
            t_air: t,
            t_dev: t,
            tau_air,
            tau_dev,
        })
    }

    pub fn from_preset(t: f64, preset: PlantPreset) -> Result<Self> {
        Self::new(t, TAU_AIR_DEFAULT, preset.tau_dev())
    }

    pub fn t_set(&self) -> f64 {
        self.t_set
    }

    pub fn t_air(&self) -> f64 {
        self.t_air
    }

    pub fn t_dev(&self) -> f64 {
        self.t_dev
    }

    pub fn tau_air(&self) -> f64 {
        self.tau_air
    }

    pub fn tau_dev(&self) -> f64 {
        self.tau_dev
    }

    pub fn set_setpoint(&mut self, t: f64) -> Result<()> {
        check_setpoint(t)?;
        self.t_set = t;
        Ok(())
    }

    /// Places both stages at the current setpoint.
    pub fn equilibrate(&mut self) {
        self.t_air = self.t_set;
        self.t_dev = self.t_set;
    }

    /// Advances the plant by `dt` seconds with the setpoint held.
    ///
    /// Uses the analytic solution of the cascade, so any `dt` is stable and
    /// one step of `dt` matches two steps of `dt/2`.
    pub fn step(&self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!(
                "plant step must be positive, got {dt}"
            )));
        }
        Ok(self.advanced(dt))
    }

    pub(crate) fn advanced(&self, dt: f64) -> Self {
        let air_offset = self.t_air - self.t_set;
        let dev_offset = self.t_dev - self.t_set;
        let decay_air = (-dt / self.tau_air).exp();
        let decay_dev = (-dt / self.tau_dev).exp();
        // dev(t) = e^{-t/td} (D0 + A (t/td) * expm1(x)/x), x = t (ta - td)/(ta td)
        let x = dt * (self.tau_air - self.tau_dev) / (self.tau_air * self.tau_dev);
        let shape = if x == 0.0 { 1.0 } else { x.exp_m1() / x };
        Self {
            t_air: self.t_set + air_offset * decay_air,
            t_dev: self.t_set + decay_dev * (dev_offset + air_offset * (dt / self.tau_dev) * shape),
            ..*self
        }
    }
}

/// One schedule entry: a setpoint held for `hold` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub setpoint: f64,
    pub hold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSchedule {
    entries: Vec<ScheduleEntry>,
    seed: u64,
}

impl TemperatureSchedule {
    /// Setpoints must be multiples of 10 K inside the chamber range and
    /// holds positive.
    pub fn new(entries: Vec<ScheduleEntry>, seed: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("schedule needs at least one entry"));
        }
        for e in &entries {
            check_setpoint(e.setpoint)?;
            if (e.setpoint / 10.0).fract() != 0.0 {
                return Err(Error::invalid(format!(
                    "setpoint {} K is not a multiple of 10 K",
                    e.setpoint
                )));
            }
            if !(e.hold > 0.0) || !e.hold.is_finite() {
                return Err(Error::invalid(format!(
                    "hold must be positive, got {}",
                    e.hold
                )));
            }
        }
        Ok(Self { entries, seed })
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn setpoints(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.setpoint).collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.entries.iter().map(|e| e.hold).sum()
    }
}

/// The standard scrambled thermal cycle.
///
/// Starts at 300 K, visits 310-360 K in a seeded random order, then
/// revisits 360 K and finishes back at 300 K. A permutation ending on
/// 360 K has its last two elements swapped so no setpoint repeats
/// back-to-back.
pub fn scrambled_schedule(seed: u64, hold: f64) -> Result<TemperatureSchedule> {
    let mut middle: Vec<f64> = (1..=6).map(|k| T_MIN + 10.0 * k as f64).collect();
    middle.shuffle(&mut rng::substream(seed, rng::STREAM_SCHEDULE));
    let n = middle.len();
    if middle[n - 1] == T_MAX {
        middle.swap(n - 1, n - 2);
    }
    let setpoints = std::iter::once(T_MIN).chain(middle).chain([T_MAX, T_MIN]);
    let entries = setpoints
        .map(|setpoint| ScheduleEntry { setpoint, hold })
        .collect();
    TemperatureSchedule::new(entries, seed)
}

/// Outcome of the settling check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Settling {
    Settled,
    NotSettled {
        /// Trailing-window change as a share of the total change.
        ratio: f64,
    },
    /// The history does not yet span the trailing window.
    InsufficientData,
}

impl Settling {
    pub fn is_settled(&self) -> bool {
        matches!(self, Settling::Settled)
    }
}

/// Checks whether the resistance over the trailing six minutes changed by
/// less than 2% of its total change since the setpoint change.
///
/// `history` holds `(time, resistance)` samples in increasing time order,
/// starting at the setpoint change.
pub fn settled(history: &[(f64, f64)]) -> Settling {
    let (Some(&(t0, r0)), Some(&(t_end, r_end))) = (history.first(), history.last()) else {
        return Settling::InsufficientData;
    };
    if t_end - t0 < SETTLING_WINDOW {
        return Settling::InsufficientData;
    }
    let t_back = t_end - SETTLING_WINDOW;
    let idx = history.partition_point(|&(t, _)| t <= t_back);
    // history[idx-1].0 <= t_back < history[idx].0
    let (ta, ra) = history[idx - 1];
    let r_back = match history.get(idx) {
        Some(&(tb, rb)) if tb > ta => ra + (rb - ra) * (t_back - ta) / (tb - ta),
        _ => ra,
    };
    let trailing = (r_end - r_back).abs();
    let total = (r_end - r0).abs();
    if trailing == 0.0 && total == 0.0 {
        return Settling::Settled;
    }
    if trailing < SETTLING_FRACTION * total {
        Settling::Settled
    } else {
        Settling::NotSettled {
            ratio: if total > 0.0 {
                trailing / total
            } else {
                f64::INFINITY
            },
        }
    }
}
