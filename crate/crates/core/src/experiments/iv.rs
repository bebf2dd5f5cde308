use crate::calibration::IvCurveSet;
use crate::device::{SwitchingParams, ThermalFit};
use crate::error::{Error, Result};
use crate::presets::DeviceLevel;

/// Symmetric bias grid `±k v_max / steps`, `k = 1..=steps`, without 0 V.
pub fn iv_voltages(v_max: f64, steps: usize) -> Vec<f64> {
    (1..=steps)
        .flat_map(|k| {
            let v = v_max * k as f64 / steps as f64;
            [-v, v]
        })
        .collect()
}

/// Non-switching IV curves of a level preset. The sweep must stay below the
/// switching threshold, so the device state is never touched.
pub fn run_iv_sweep(
    level: DeviceLevel,
    fit: &ThermalFit,
    temperatures: &[f64],
    v_max: f64,
    steps: usize,
    switching: &SwitchingParams,
) -> Result<IvCurveSet> {
    if !(v_max > 0.0) || v_max >= switching.v_th {
        return Err(Error::invalid(format!(
            "IV sweep amplitude {v_max} V must be positive and below the {} V switching threshold",
            switching.v_th
        )));
    }
    if steps == 0 {
        return Err(Error::invalid("IV sweep needs at least one step"));
    }
    let params = level.thermionic(fit)?;
    IvCurveSet::synthesize(&params, temperatures, &iv_voltages(v_max, steps))
}
