use super::trace::{Phase, TraceRecord};
use crate::calibration::NullclinePoint;
use crate::device::{
    apply_pulse_train, read_resistance, reset_to_reference, DeviceState, Pulse, SwitchingParams,
    ThermalFit, T_REF, V_READ,
};
use crate::error::{Error, Result};
use crate::thermal::{ThermalPlant, DEFAULT_HOLD, TAU_AIR_DEFAULT, TAU_DEV_PACKAGED};

#[derive(Debug, Clone, PartialEq)]
pub struct HsrOptions {
    /// Read cadence while the plant settles (s).
    pub cadence: f64,
    /// Wait after each temperature change (s).
    pub stabilise: f64,
    pub pulse_v: f64,
    pub pulse_width: f64,
    pub pulses: u64,
    /// Time between programming pulses (s).
    pub pulse_period: f64,
    pub retention_reads: usize,
    pub retention_interval: f64,
    pub tau_air: f64,
    pub tau_dev: f64,
}

impl Default for HsrOptions {
    fn default() -> Self {
        Self {
            cadence: 6.0,
            stabilise: DEFAULT_HOLD,
            pulse_v: 1.5,
            pulse_width: 100e-6,
            pulses: 200,
            pulse_period: 0.01,
            retention_reads: 200,
            retention_interval: 1.0,
            tau_air: TAU_AIR_DEFAULT,
            tau_dev: TAU_DEV_PACKAGED,
        }
    }
}

impl HsrOptions {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("cadence", self.cadence),
            ("stabilise", self.stabilise),
            ("pulse_width", self.pulse_width),
            ("pulse_period", self.pulse_period),
            ("retention_interval", self.retention_interval),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::invalid(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.pulses == 0 || self.retention_reads == 0 {
            return Err(Error::invalid(
                "pulse and retention counts must be positive",
            ));
        }
        Ok(())
    }
}

/// Outcome of one heat, stimulate, retention and reset cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct HsrRun {
    pub trace: Vec<TraceRecord>,
    pub t_test: f64,
    /// Device temperature the train was applied at.
    pub t_program: f64,
    /// 300 K read before heating.
    pub reference_r: f64,
    /// Relative change of the reference-temperature resistance caused by the train.
    pub fraction_ref: f64,
    /// Relative change as read at the programming temperature.
    pub fraction_at_test: f64,
    /// Relative change as read at 300 K, volatile part included.
    pub fraction_at_300: f64,
    /// Share of the train-induced change that relaxed during retention.
    pub retention_recovery: f64,
    pub reset_pulses: usize,
    pub final_state: DeviceState,
}

struct Recorder {
    trace: Vec<TraceRecord>,
    t: f64,
    plant: ThermalPlant,
}

impl Recorder {
    fn push(&mut self, r: f64, phase: Phase, pulse_index: Option<u64>, v_applied: f64) {
        self.trace.push(TraceRecord {
            t: self.t,
            t_set: self.plant.t_set(),
            t_air: self.plant.t_air(),
            t_dev: self.plant.t_dev(),
            r,
            phase,
            pulse_index,
            v_applied,
        });
    }

    fn advance(&mut self, dt: f64) {
        self.plant = self.plant.advanced(dt);
        self.t += dt;
    }

    fn wait(
        &mut self,
        duration: f64,
        cadence: f64,
        state: &DeviceState,
        fit: &ThermalFit,
        phase: Phase,
    ) {
        let steps = (duration / cadence).round().max(1.0) as usize;
        for _ in 0..steps {
            self.advance(cadence);
            let r = read_resistance(state, fit, self.plant.t_dev());
            self.push(r, phase, None, V_READ);
        }
    }
}

/// Heats the device to `t_test`, applies a programming train, follows the
/// relaxation at `t_test`, then cools to 300 K and resets the device to its
/// starting read-out.
pub fn run_heat_stimulate_retention(
    state: &DeviceState,
    t_test: f64,
    fit: &ThermalFit,
    params: &SwitchingParams,
    opts: &HsrOptions,
) -> Result<HsrRun> {
    params.validate()?;
    opts.validate()?;
    let mut rec = Recorder {
        trace: Vec::new(),
        t: 0.0,
        plant: ThermalPlant::new(T_REF, opts.tau_air, opts.tau_dev)?,
    };
    let reference_r = read_resistance(state, fit, T_REF);
    rec.push(reference_r, Phase::Read, None, V_READ);

    rec.plant.set_setpoint(t_test)?;
    rec.wait(opts.stabilise, opts.cadence, state, fit, Phase::Read);

    let t_program = rec.plant.t_dev();
    let before = *state;
    let mut device = *state;
    for k in 0..opts.pulses {
        let (next, _) = apply_pulse_train(
            &device,
            Pulse::new(opts.pulse_v, opts.pulse_width, 1),
            t_program,
            fit,
            params,
        )?;
        device = next;
        rec.advance(opts.pulse_period);
        let r = read_resistance(&device, fit, rec.plant.t_dev());
        rec.push(r, Phase::Program, Some(k + 1), opts.pulse_v);
    }
    let programmed = device;

    let v0 = device.r_volatile_excess();
    let mut elapsed = 0.0;
    for _ in 0..opts.retention_reads {
        rec.advance(opts.retention_interval);
        elapsed += opts.retention_interval;
        device = DeviceState {
            r_volatile_excess: v0 * (-elapsed / params.tau_ret).exp(),
            train: None,
            ..device
        };
        let r = read_resistance(&device, fit, rec.plant.t_dev());
        rec.push(r, Phase::Retention, None, V_READ);
    }

    let change = programmed.r_eff() - before.r_eff();
    let retention_recovery = if change == 0.0 {
        0.0
    } else {
        (programmed.r_eff() - device.r_eff()) / change
    };

    rec.plant.set_setpoint(T_REF)?;
    rec.wait(opts.stabilise, opts.cadence, &device, fit, Phase::Reset);
    let reset = reset_to_reference(&device, reference_r, fit, params)?;
    for (k, &(v, r)) in reset.trace.iter().enumerate() {
        rec.advance(opts.pulse_period);
        rec.push(r, Phase::Reset, Some(k as u64 + 1), v);
    }

    let ratio =
        |t: f64| read_resistance(&programmed, fit, t) / read_resistance(&before, fit, t) - 1.0;
    Ok(HsrRun {
        trace: rec.trace,
        t_test,
        t_program,
        reference_r,
        fraction_ref: programmed.r_eff() / before.r_eff() - 1.0,
        fraction_at_test: ratio(t_program),
        fraction_at_300: ratio(T_REF),
        retention_recovery,
        reset_pulses: reset.pulses,
        final_state: reset.state,
    })
}

/// One voltage and temperature cell of a nullcline sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullclineCell {
    pub v: f64,
    pub t: f64,
    pub t_program: f64,
    pub fraction_ref: f64,
    pub fraction_at_test: f64,
    pub fraction_at_300: f64,
    pub reset_pulses: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullclineSweep {
    pub cells: Vec<NullclineCell>,
    pub final_state: DeviceState,
}

impl NullclineSweep {
    /// Grid of reference-temperature fractions, the quantity the switching
    /// curve is fitted on.
    pub fn grid(&self) -> Vec<NullclinePoint> {
        self.cells
            .iter()
            .map(|c| NullclinePoint {
                v: c.v,
                t: c.t,
                frac: c.fraction_ref,
            })
            .collect()
    }

    pub fn cell(&self, v: f64, t: f64) -> Option<&NullclineCell> {
        self.cells.iter().find(|c| c.v == v && c.t == t)
    }
}

/// Repeats the heat-stimulate-retention cycle over a voltage and
/// temperature grid on a single device, voltage-major.
pub fn run_nullcline_sweep(
    state: &DeviceState,
    voltages: &[f64],
    temperatures: &[f64],
    fit: &ThermalFit,
    params: &SwitchingParams,
    opts: &HsrOptions,
) -> Result<NullclineSweep> {
    if voltages.is_empty() || temperatures.is_empty() {
        return Err(Error::invalid(
            "nullcline sweep needs voltages and temperatures",
        ));
    }
    let mut device = *state;
    let mut cells = Vec::with_capacity(voltages.len() * temperatures.len());
    for &v in voltages {
        for &t in temperatures {
            let run = run_heat_stimulate_retention(
                &device,
                t,
                fit,
                params,
                &HsrOptions {
                    pulse_v: v,
                    ..opts.clone()
                },
            )?;
            cells.push(NullclineCell {
                v,
                t,
                t_program: run.t_program,
                fraction_ref: run.fraction_ref,
                fraction_at_test: run.fraction_at_test,
                fraction_at_300: run.fraction_at_300,
                reset_pulses: run.reset_pulses,
            });
            device = run.final_state;
        }
    }
    Ok(NullclineSweep {
        cells,
        final_state: device,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::fit_switch_curve;
    use crate::device::train_switch_fraction;
    use crate::presets::{default_fit, DeviceLevel};
    use approx::assert_relative_eq;

    fn quick() -> HsrOptions {
        HsrOptions {
            tau_dev: 60.0,
            stabilise: 1200.0,
            ..Default::default()
        }
    }

    #[test]
    fn hsr_returns_to_reference() {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let s = DeviceLevel::L1.state();
        let run = run_heat_stimulate_retention(&s, 340.0, &fit, &p, &quick()).unwrap();
        let end = read_resistance(&run.final_state, &fit, T_REF);
        assert!(((end - run.reference_r) / run.reference_r).abs() < 0.01);
        assert!(run.trace.windows(2).all(|w| w[1].t > w[0].t));
        assert!(run.retention_recovery > 0.0 && run.retention_recovery <= 0.6 + 1e-9);
    }

    #[test]
    fn phases_are_contiguous() {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let run = run_heat_stimulate_retention(&DeviceLevel::L1.state(), 320.0, &fit, &p, &quick())
            .unwrap();
        let mut blocks: Vec<Phase> = Vec::new();
        for r in &run.trace {
            if blocks.last() != Some(&r.phase) {
                blocks.push(r.phase);
            }
        }
        assert_eq!(
            blocks,
            vec![Phase::Read, Phase::Program, Phase::Retention, Phase::Reset]
        );
    }

    #[test]
    fn settled_fraction_follows_switching_law() {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let s = DeviceLevel::L1.state();
        let run = run_heat_stimulate_retention(&s, 330.0, &fit, &p, &quick()).unwrap();
        let saturation = 1.0 - (-(200.0) / p.n_tau).exp();
        let expected = train_switch_fraction(1.5, run.t_program, &p) * saturation;
        assert_relative_eq!(run.fraction_ref, expected, max_relative = 1e-9);
    }

    #[test]
    fn sub_threshold_pulses_leave_device_alone() {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let opts = HsrOptions {
            pulse_v: 0.3,
            ..quick()
        };
        let run =
            run_heat_stimulate_retention(&DeviceLevel::L2.state(), 350.0, &fit, &p, &opts).unwrap();
        assert_eq!(run.fraction_ref, 0.0);
        assert_eq!(run.reset_pulses, 0);
    }

    #[test]
    fn small_grid_recovers_curve() {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let sweep = run_nullcline_sweep(
            &DeviceLevel::L1.state(),
            &[0.9, 1.1, 1.4],
            &[310.0, 360.0],
            &fit,
            &p,
            &quick(),
        )
        .unwrap();
        assert_eq!(sweep.cells.len(), 6);
        let f = fit_switch_curve(&sweep.grid()).unwrap();
        assert!(f.g_14_360 > f.g_14_310);
        assert!(f.beta > 0.0);
    }
}
