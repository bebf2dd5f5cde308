use rand_distr::{Distribution, StandardNormal};

use super::trace::{Phase, TraceRecord};
use crate::calibration::sensitivity_percent_per_k;
use crate::device::{read_resistance, DeviceState, ThermalFit, T_REF, V_READ};
use crate::error::{Error, Result};
use crate::presets::DeviceLevel;
use crate::rng;
use crate::thermal::{
    settled, Settling, TemperatureSchedule, ThermalPlant, TAU_AIR_DEFAULT, TAU_DEV_PACKAGED,
};

/// Slow multiplicative drift of the device resistance.
///
/// The log-drift is a random walk reflected at `±ln(1 + max_discrepancy)/2`,
/// so two readings of the same state never differ by more than
/// `max_discrepancy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    pub enabled: bool,
    /// Standard deviation of the log-drift accumulated over one hour.
    pub sigma_per_sqrt_hour: f64,
    pub max_discrepancy: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            enabled: false,
            sigma_per_sqrt_hour: 0.01,
            max_discrepancy: 0.05,
        }
    }
}

struct DriftWalk<R> {
    rng: R,
    log_drift: f64,
    step_sigma: f64,
    bound: f64,
    enabled: bool,
}

impl<R: rand::Rng> DriftWalk<R> {
    fn new(model: &DriftModel, cadence: f64, rng: R) -> Self {
        Self {
            rng,
            log_drift: 0.0,
            step_sigma: model.sigma_per_sqrt_hour * (cadence / 3600.0).sqrt(),
            bound: 0.5 * (1.0 + model.max_discrepancy).ln(),
            enabled: model.enabled,
        }
    }

    fn advance(&mut self) -> f64 {
        if self.enabled {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            let mut d = self.log_drift + self.step_sigma * z;
            // Reflect until inside; a single step never exceeds the band by much.
            while d.abs() > self.bound {
                d = d.signum() * 2.0 * self.bound - d;
            }
            self.log_drift = d;
        }
        self.log_drift.exp()
    }

    fn factor(&self) -> f64 {
        self.log_drift.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclingOptions {
    /// Read cadence during holds (s).
    pub cadence: f64,
    pub tau_air: f64,
    pub tau_dev: f64,
    pub drift: DriftModel,
    pub seed: u64,
    /// Fail the run when a hold ends unsettled.
    pub require_settled: bool,
}

impl Default for CyclingOptions {
    fn default() -> Self {
        Self {
            cadence: 6.0,
            tau_air: TAU_AIR_DEFAULT,
            tau_dev: TAU_DEV_PACKAGED,
            drift: DriftModel::default(),
            seed: 0,
            require_settled: true,
        }
    }
}

/// Summary of one schedule entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldSummary {
    pub setpoint: f64,
    /// Last resistance read in the hold.
    pub r_end: f64,
    /// Resistance the device converges to at this setpoint, drift included.
    pub r_steady: f64,
    pub settling: Settling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclingRun {
    pub trace: Vec<TraceRecord>,
    pub holds: Vec<HoldSummary>,
}

impl CyclingRun {
    fn visits(&self, setpoint: f64) -> impl Iterator<Item = &HoldSummary> {
        self.holds.iter().filter(move |h| h.setpoint == setpoint)
    }

    /// `|R_last - R_first| / R_first` between the first and last visit of
    /// `setpoint`, using steady-state resistances.
    pub fn revisit_discrepancy(&self, setpoint: f64) -> Option<f64> {
        let first = self.visits(setpoint).next()?;
        let last = self.visits(setpoint).last()?;
        if std::ptr::eq(first, last) {
            return None;
        }
        Some(((last.r_steady - first.r_steady) / first.r_steady).abs())
    }

    /// Same as [`Self::revisit_discrepancy`] but on the last read of each
    /// hold, which still carries the residual thermal lag.
    pub fn end_of_hold_discrepancy(&self, setpoint: f64) -> Option<f64> {
        let first = self.visits(setpoint).next()?;
        let last = self.visits(setpoint).last()?;
        if std::ptr::eq(first, last) {
            return None;
        }
        Some(((last.r_end - first.r_end) / first.r_end).abs())
    }

    /// Fractional drop between the first 300 K hold and the first visit to
    /// the hottest setpoint of the schedule, on end-of-hold reads.
    pub fn total_drop(&self) -> Option<f64> {
        let cold = self.visits(T_REF).next()?;
        let hottest = self
            .holds
            .iter()
            .map(|h| h.setpoint)
            .fold(f64::NEG_INFINITY, f64::max);
        let hot = self.visits(hottest).next()?;
        Some(1.0 - hot.r_end / cold.r_end)
    }

    /// `(setpoint, end-of-hold resistance)` per hold.
    pub fn settled_points(&self) -> Vec<(f64, f64)> {
        self.holds.iter().map(|h| (h.setpoint, h.r_end)).collect()
    }

    pub fn sensitivity(&self) -> Result<f64> {
        sensitivity_percent_per_k(&self.settled_points())
    }
}

/// Steps a device through a temperature schedule, reading it at a fixed
/// cadence and checking the settling criterion at the end of every hold.
pub fn run_thermal_cycling(
    state: &DeviceState,
    fit: &ThermalFit,
    schedule: &TemperatureSchedule,
    opts: &CyclingOptions,
    drift_stream: &str,
) -> Result<CyclingRun> {
    if !(opts.cadence > 0.0) || !opts.cadence.is_finite() {
        return Err(Error::invalid("read cadence must be positive"));
    }
    let mut plant = ThermalPlant::new(T_REF, opts.tau_air, opts.tau_dev)?;
    let mut drift = DriftWalk::new(
        &opts.drift,
        opts.cadence,
        rng::substream(opts.seed, drift_stream),
    );

    let mut t = 0.0;
    let mut last_r = read_resistance(state, fit, plant.t_dev());
    let mut trace = vec![TraceRecord {
        t,
        t_set: plant.t_set(),
        t_air: plant.t_air(),
        t_dev: plant.t_dev(),
        r: last_r,
        phase: Phase::Read,
        pulse_index: None,
        v_applied: V_READ,
    }];
    let mut holds = Vec::with_capacity(schedule.entries().len());

    for entry in schedule.entries() {
        plant.set_setpoint(entry.setpoint)?;
        // Settling judges thermal convergence, so it runs on the drift-free
        // read-out.
        let mut history = vec![(t, read_resistance(state, fit, plant.t_dev()))];
        let steps = (entry.hold / opts.cadence).round().max(1.0) as usize;
        for _ in 0..steps {
            plant = plant.advanced(opts.cadence);
            t += opts.cadence;
            let clean = read_resistance(state, fit, plant.t_dev());
            last_r = clean * drift.advance();
            history.push((t, clean));
            trace.push(TraceRecord {
                t,
                t_set: plant.t_set(),
                t_air: plant.t_air(),
                t_dev: plant.t_dev(),
                r: last_r,
                phase: Phase::Read,
                pulse_index: None,
                v_applied: V_READ,
            });
        }
        let settling = settled(&history);
        if opts.require_settled && !settling.is_settled() {
            return Err(Error::Protocol(format!(
                "hold at {} K ended unsettled at t={t} s ({settling:?}, t_dev={:.4} K)",
                entry.setpoint,
                plant.t_dev()
            )));
        }
        holds.push(HoldSummary {
            setpoint: entry.setpoint,
            r_end: last_r,
            r_steady: read_resistance(state, fit, entry.setpoint) * drift.factor(),
            settling,
        });
    }
    Ok(CyclingRun { trace, holds })
}

/// Cycling result for one resistive level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRun {
    pub level: DeviceLevel,
    pub run: CyclingRun,
    pub drop: f64,
    pub sensitivity: f64,
}

/// Runs the same schedule on a fresh device and plant per level.
pub fn run_level_sweep(
    levels: &[DeviceLevel],
    fit: &ThermalFit,
    schedule: &TemperatureSchedule,
    opts: &CyclingOptions,
) -> Result<Vec<LevelRun>> {
    levels
        .iter()
        .map(|&level| {
            let stream = format!("{}/{}", rng::STREAM_DRIFT, level.label());
            let run = run_thermal_cycling(&level.state(), fit, schedule, opts, &stream)?;
            let drop = run.total_drop().unwrap_or(0.0);
            // A schedule that never leaves 300 K has zero sensitivity.
            let sensitivity = run.sensitivity().unwrap_or(0.0);
            Ok(LevelRun {
                level,
                run,
                drop,
                sensitivity,
            })
        })
        .collect()
}
