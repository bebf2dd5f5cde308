use rand_distr::{Distribution, StandardNormal};

use crate::calibration::{TemperatureReading, ThermometerTable};
use crate::device::{read_resistance, ThermalFit};
use crate::error::{Error, Result};
use crate::presets::DeviceLevel;
use crate::rng;

/// One read of the thermometer experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermometerRead {
    pub t_true: f64,
    /// `None` for the noise-free read.
    pub trial: Option<usize>,
    pub r: f64,
    /// `None` when the read fell outside the guarded band.
    pub reading: Option<TemperatureReading>,
}

impl ThermometerRead {
    pub fn error(&self) -> Option<f64> {
        self.reading.map(|r| r.kelvin - self.t_true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermometerRun {
    pub exact: Vec<ThermometerRead>,
    pub noisy: Vec<ThermometerRead>,
}

/// Accuracy of the noisy reads at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermometerAccuracy {
    pub t_true: f64,
    pub rms_error: f64,
    pub max_abs_error: f64,
    pub out_of_band: usize,
}

impl ThermometerRun {
    pub fn accuracy(&self) -> Vec<ThermometerAccuracy> {
        let mut temps: Vec<f64> = self.noisy.iter().map(|r| r.t_true).collect();
        temps.dedup();
        temps
            .into_iter()
            .map(|t| {
                let reads: Vec<&ThermometerRead> =
                    self.noisy.iter().filter(|r| r.t_true == t).collect();
                let errors: Vec<f64> = reads.iter().filter_map(|r| r.error()).collect();
                let rms = if errors.is_empty() {
                    f64::NAN
                } else {
                    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
                };
                ThermometerAccuracy {
                    t_true: t,
                    rms_error: rms,
                    max_abs_error: errors.iter().fold(0.0, |m: f64, e| m.max(e.abs())),
                    out_of_band: reads.len() - errors.len(),
                }
            })
            .collect()
    }
}

/// Reads a level preset at each temperature, once noise-free and `trials`
/// times with multiplicative log-normal noise of relative size `noise`, and
/// inverts every read back to a temperature.
pub fn run_thermometer(
    level: DeviceLevel,
    fit: &ThermalFit,
    temperatures: &[f64],
    trials: usize,
    noise: f64,
    guard: f64,
    seed: u64,
) -> Result<ThermometerRun> {
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::invalid(format!(
            "read noise must be non-negative, got {noise}"
        )));
    }
    let state = level.state();
    let table = ThermometerTable::new(fit, state.r_eff(), guard)?;
    let mut rng = rng::substream(seed, rng::STREAM_READ_NOISE);
    let mut exact = Vec::with_capacity(temperatures.len());
    let mut noisy = Vec::with_capacity(temperatures.len() * trials);
    for &t in temperatures {
        let r = read_resistance(&state, fit, t);
        exact.push(ThermometerRead {
            t_true: t,
            trial: None,
            r,
            reading: Some(table.invert(r)?),
        });
        for trial in 0..trials {
            let z: f64 = StandardNormal.sample(&mut rng);
            let r_noisy = r * (noise * z).exp();
            noisy.push(ThermometerRead {
                t_true: t,
                trial: Some(trial),
                r: r_noisy,
                reading: table.invert(r_noisy).ok(),
            });
        }
    }
    Ok(ThermometerRun { exact, noisy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::default_fit;

    #[test]
    fn noise_free_reads_invert_exactly() {
        let fit = default_fit();
        let temps: Vec<f64> = (0..7).map(|i| 300.0 + 10.0 * i as f64).collect();
        let run = run_thermometer(DeviceLevel::L1, &fit, &temps, 0, 0.0, 0.05, 0).unwrap();
        for r in &run.exact {
            assert!(r.error().unwrap().abs() < 1e-6);
        }
        assert!(run.noisy.is_empty());
    }

    #[test]
    fn noisy_reads_are_seeded() {
        let fit = default_fit();
        let a = run_thermometer(DeviceLevel::Pristine, &fit, &[330.0], 20, 0.01, 0.05, 3).unwrap();
        let b = run_thermometer(DeviceLevel::Pristine, &fit, &[330.0], 20, 0.01, 0.05, 3).unwrap();
        assert_eq!(a, b);
        let acc = a.accuracy();
        assert_eq!(acc.len(), 1);
        assert!(acc[0].rms_error > 0.0);
    }
}
