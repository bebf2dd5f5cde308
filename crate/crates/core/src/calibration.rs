//! Parameter extraction and inverse problems: thermionic signature
//! regression, per-kelvin sensitivity, the resistance thermometer and the
//! switching-curve fit.

use crate::device::{
    phi_for_state, read_resistance, rho_temperature_factor, thermionic_current, DeviceState,
    ThermalFit, ThermionicParams, BOLTZMANN_EV, T_MAX, T_MIN, T_REF,
};
use crate::error::{Error, Result};
use crate::stats::{linear_fit, shared_intercept_fit};

/// IV samples at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct IvCurve {
    pub temperature: f64,
    /// `(bias V, current A)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Non-switching IV curves measured at several temperatures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IvCurveSet {
    pub curves: Vec<IvCurve>,
}

impl IvCurveSet {
    pub fn new(curves: Vec<IvCurve>) -> Self {
        Self { curves }
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c.temperature).collect()
    }

    /// Forward model: evaluates `params` on the `temperatures x voltages`
    /// grid.
    pub fn synthesize(
        params: &ThermionicParams,
        temperatures: &[f64],
        voltages: &[f64],
    ) -> Result<Self> {
        let curves = temperatures
            .iter()
            .map(|&t| {
                let points = voltages
                    .iter()
                    .map(|&v| thermionic_current(v, t, params).map(|i| (v, i)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(IvCurve {
                    temperature: t,
                    points,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { curves })
    }
}

/// Goodness-of-fit figures returned with every extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureDiagnostics {
    /// R² of the joint `ln(I/T²)` vs `1/T` regression with a shared intercept.
    pub stage1_r2: f64,
    /// R² of the apparent-barrier vs `sqrt|v|` regression.
    pub stage2_r2: f64,
    /// Per-bias slope `m(v)` of stage 1 (K).
    pub slopes: Vec<(f64, f64)>,
    /// Largest relative error when the extracted parameters regenerate the
    /// input currents.
    pub max_regen_error: f64,
}

impl SignatureDiagnostics {
    /// True when both regressions reach `min_r2` and the regenerated
    /// currents stay within `max_error` relative.
    pub fn is_consistent(&self, min_r2: f64, max_error: f64) -> bool {
        self.stage1_r2 >= min_r2 && self.stage2_r2 >= min_r2 && self.max_regen_error <= max_error
    }
}

/// Raw estimates from the signature-plot pipeline.
///
/// The estimates are kept even when they violate the physical invariants of
/// [`ThermionicParams`]; [`ThermionicExtraction::params`] performs that check.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermionicExtraction {
    pub a_prefactor: f64,
    pub phi_b: f64,
    pub alpha_pos: f64,
    pub alpha_neg: f64,
    pub diagnostics: SignatureDiagnostics,
}

impl ThermionicExtraction {
    pub fn params(&self) -> Result<ThermionicParams> {
        ThermionicParams::new(self.a_prefactor, self.phi_b, self.alpha_pos, self.alpha_neg)
    }
}

/// Extracts `(A, phi_b, alpha+, alpha-)` from IV curves.
///
/// Stage 1 regresses `ln(I/T²)` on `1/T` for every bias with one intercept
/// `ln A` shared by all biases. Stage 2 regresses the apparent barrier
/// `-k m(v)` on `sqrt|v|` per polarity with a shared intercept `phi_b`.
/// Zero-bias samples are ignored.
pub fn extract_thermionic(ivs: &IvCurveSet) -> Result<ThermionicExtraction> {
    const STAGE1: &str = "stage 1 (ln(I/T^2) vs 1/T)";
    const STAGE2: &str = "stage 2 (barrier vs sqrt|v|)";
    let err = |stage, reason: String| Error::Extraction { stage, reason };

    if ivs.curves.len() < 3 {
        return Err(err(
            STAGE1,
            format!("need at least 3 temperatures, got {}", ivs.curves.len()),
        ));
    }
    let biases: Vec<f64> = ivs.curves[0]
        .points
        .iter()
        .map(|p| p.0)
        .filter(|&v| v != 0.0)
        .collect();
    let n_pos = biases.iter().filter(|&&v| v > 0.0).count();
    let n_neg = biases.len() - n_pos;
    if n_pos < 3 || n_neg < 3 {
        return Err(err(
            STAGE1,
            format!(
                "need at least 3 biases per polarity, got {n_pos} positive and {n_neg} negative"
            ),
        ));
    }

    let mut groups = Vec::with_capacity(biases.len());
    for &v in &biases {
        let mut xs = Vec::with_capacity(ivs.curves.len());
        let mut ys = Vec::with_capacity(ivs.curves.len());
        for curve in &ivs.curves {
            let t = curve.temperature;
            if !(t > 0.0) || !t.is_finite() {
                return Err(err(STAGE1, format!("non-physical temperature {t}")));
            }
            let i = curve
                .points
                .iter()
                .find(|p| p.0 == v)
                .map(|p| p.1)
                .ok_or_else(|| err(STAGE1, format!("bias {v} V missing at {t} K")))?;
            // Current must flow in the direction of the bias.
            let magnitude = i * v.signum();
            if !(magnitude > 0.0) || !magnitude.is_finite() {
                return Err(err(
                    STAGE1,
                    format!("non-positive current {i} A at {v} V, {t} K"),
                ));
            }
            xs.push(1.0 / t);
            ys.push((magnitude / (t * t)).ln());
        }
        groups.push((xs, ys));
    }
    let stage1 = shared_intercept_fit(&groups)
        .ok_or_else(|| err(STAGE1, "singular design (temperatures do not vary)".into()))?;

    let mut pos = (Vec::new(), Vec::new());
    let mut neg = (Vec::new(), Vec::new());
    for (&v, &m) in biases.iter().zip(&stage1.slopes) {
        let target = if v > 0.0 { &mut pos } else { &mut neg };
        target.0.push(v.abs().sqrt());
        target.1.push(-BOLTZMANN_EV * m);
    }
    let stage2 = shared_intercept_fit(&[pos, neg])
        .ok_or_else(|| err(STAGE2, "singular design (biases do not vary)".into()))?;

    let a_prefactor = stage1.intercept.exp();
    let phi_b = stage2.intercept;
    let alpha_pos = -stage2.slopes[0];
    let alpha_neg = -stage2.slopes[1];

    // Regenerate with the raw estimates, bypassing the invariant checks.
    let mut max_regen_error: f64 = 0.0;
    for curve in &ivs.curves {
        let t = curve.temperature;
        for &(v, i) in curve.points.iter().filter(|p| p.0 != 0.0) {
            let alpha = if v < 0.0 { alpha_neg } else { alpha_pos };
            let model = a_prefactor
                * t
                * t
                * (-(phi_b - alpha * v.abs().sqrt()) / (BOLTZMANN_EV * t)).exp();
            max_regen_error = max_regen_error.max(((model - i.abs()) / i.abs()).abs());
        }
    }

    Ok(ThermionicExtraction {
        a_prefactor,
        phi_b,
        alpha_pos,
        alpha_neg,
        diagnostics: SignatureDiagnostics {
            stage1_r2: stage1.r_squared,
            stage2_r2: stage2.r_squared,
            slopes: biases
                .iter()
                .copied()
                .zip(stage1.slopes.iter().copied())
                .collect(),
            max_regen_error,
        },
    })
}

/// Least-squares slope of `100 (R(T)/R(300) - 1)` against `T - 300`, in
/// percent per kelvin. Repeated 300 K points are averaged for the baseline.
pub fn sensitivity_percent_per_k(trace: &[(f64, f64)]) -> Result<f64> {
    let baseline: Vec<f64> = trace
        .iter()
        .filter(|(t, _)| (t - T_REF).abs() < 1e-9)
        .map(|p| p.1)
        .collect();
    if baseline.is_empty() {
        return Err(Error::invalid("sensitivity needs a 300 K baseline point"));
    }
    let r300 = crate::stats::mean(&baseline);
    let xs: Vec<f64> = trace.iter().map(|(t, _)| t - T_REF).collect();
    let ys: Vec<f64> = trace
        .iter()
        .map(|(_, r)| 100.0 * (r / r300 - 1.0))
        .collect();
    linear_fit(&xs, &ys)
        .map(|f| f.slope)
        .ok_or_else(|| Error::invalid("sensitivity needs at least two distinct temperatures"))
}

/// Which band edge a thermometer reading was clamped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandEdge {
    Cold,
    Hot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureReading {
    pub kelvin: f64,
    pub clamped: Option<BandEdge>,
}

/// Default guard band around the calibrated resistance range, wide enough to
/// keep a read with a few percent noise at a band edge.
pub const DEFAULT_GUARD: f64 = 0.05;

/// Inverts the resistance read-out of a device to its temperature.
#[derive(Debug, Clone)]
pub struct ThermometerTable {
    fit: ThermalFit,
    state: DeviceState,
    band_low: f64,
    band_high: f64,
    guard: f64,
}

impl ThermometerTable {
    /// `r_eff` is the device's effective reference resistance.
    pub fn new(fit: &ThermalFit, r_eff: f64, guard: f64) -> Result<Self> {
        let state = DeviceState::new(r_eff)?;
        if !(guard >= 0.0) || !guard.is_finite() {
            return Err(Error::invalid(format!(
                "guard band must be non-negative, got {guard}"
            )));
        }
        let phi = phi_for_state(r_eff, fit);
        let band_high = r_eff * rho_temperature_factor(T_MIN, phi);
        let band_low = r_eff * rho_temperature_factor(T_MAX, phi);
        if !(band_low < band_high) {
            return Err(Error::invalid("thermometer band is empty"));
        }
        Ok(Self {
            fit: fit.clone(),
            state,
            band_low,
            band_high,
            guard,
        })
    }

    /// `[R(360 K), R(300 K)]` in ohm.
    pub fn band(&self) -> (f64, f64) {
        (self.band_low, self.band_high)
    }

    pub fn invert(&self, r_measured: f64) -> Result<TemperatureReading> {
        let out_of_range = || Error::OutOfRange {
            resistance: r_measured,
            band_low: self.band_low,
            band_high: self.band_high,
        };
        if !r_measured.is_finite() {
            return Err(out_of_range());
        }
        if r_measured >= self.band_high {
            return if r_measured <= self.band_high * (1.0 + self.guard) {
                Ok(TemperatureReading {
                    kelvin: T_MIN,
                    clamped: (r_measured > self.band_high).then_some(BandEdge::Cold),
                })
            } else {
                Err(out_of_range())
            };
        }
        if r_measured <= self.band_low {
            return if r_measured >= self.band_low * (1.0 - self.guard) {
                Ok(TemperatureReading {
                    kelvin: T_MAX,
                    clamped: (r_measured < self.band_low).then_some(BandEdge::Hot),
                })
            } else {
                Err(out_of_range())
            };
        }
        // Read-out decreases with temperature on the whole band.
        let (mut lo, mut hi) = (T_MIN, T_MAX);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if read_resistance(&self.state, &self.fit, mid) > r_measured {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(TemperatureReading {
            kelvin: 0.5 * (lo + hi),
            clamped: None,
        })
    }
}

/// One-shot inversion with the default guard band.
pub fn invert_temperature(
    r_measured: f64,
    fit: &ThermalFit,
    r_eff: f64,
) -> Result<TemperatureReading> {
    ThermometerTable::new(fit, r_eff, DEFAULT_GUARD)?.invert(r_measured)
}

/// One cell of a switching nullcline grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullclinePoint {
    pub v: f64,
    pub t: f64,
    pub frac: f64,
}

/// Parameters recovered by [`fit_switch_curve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchCurveFit {
    pub g_14_310: f64,
    pub g_14_360: f64,
    pub beta: f64,
}

/// Recovers the anchor fractions and voltage steepness of the train model
/// from a nullcline grid.
///
/// The 1.4 V column is regressed linearly in temperature and evaluated at
/// 310 K and 360 K. The steepness comes from a log-linear regression in
/// amplitude over the cells at or below 310 K, where the temperature factor
/// is 1.
pub fn fit_switch_curve(grid: &[NullclinePoint]) -> Result<SwitchCurveFit> {
    let active: Vec<&NullclinePoint> = grid.iter().filter(|p| p.v > 0.0 && p.frac > 0.0).collect();
    if active.is_empty() {
        return Err(Error::Calibration(
            "nullcline grid has no switching cells (all fractions zero)".into(),
        ));
    }
    let anchor: Vec<&NullclinePoint> = active
        .iter()
        .copied()
        .filter(|p| (p.v - 1.4).abs() < 1e-9 && (310.0 - 1e-9..=360.0 + 1e-9).contains(&p.t))
        .collect();
    let (ts, fs): (Vec<f64>, Vec<f64>) = anchor.iter().map(|p| (p.t, p.frac)).unzip();
    let t_fit = linear_fit(&ts, &fs).ok_or_else(|| {
        Error::Calibration(
            "grid needs 1.4 V cells at two or more temperatures in [310, 360] K".into(),
        )
    })?;

    let cold: Vec<&NullclinePoint> = active
        .iter()
        .copied()
        .filter(|p| p.t <= 310.0 + 1e-9)
        .collect();
    let (vs, ln_fs): (Vec<f64>, Vec<f64>) = cold.iter().map(|p| (p.v, p.frac.ln())).unzip();
    let v_fit = linear_fit(&vs, &ln_fs).ok_or_else(|| {
        Error::Calibration("grid needs two or more switching amplitudes at or below 310 K".into())
    })?;

    Ok(SwitchCurveFit {
        g_14_310: t_fit.predict(310.0),
        g_14_360: t_fit.predict(360.0),
        beta: v_fit.slope,
    })
}
