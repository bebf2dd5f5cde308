use super::conduction::BOLTZMANN_EV;
use super::state::DeviceState;
use crate::error::{Error, Result};

/// Reference temperature of the resistance state (K).
pub const T_REF: f64 = 300.0;
/// Lower edge of the characterised temperature range (K).
pub const T_MIN: f64 = 300.0;
/// Upper edge of the characterised temperature range (K).
pub const T_MAX: f64 = 360.0;

/// Apparent barriers at or below this value make `R(T)` non-monotone on
/// `[T_MIN, T_MAX]`: `d ln R / dT = -2/T - phi/(k T^2)` first turns
/// non-negative at the cold end.
pub fn phi_lower_bound() -> f64 {
    -2.0 * BOLTZMANN_EV * T_MIN
}

/// `R(T) / R(T_REF)` for a contact with apparent barrier `phi_app` (eV).
///
/// Ratio form of the reverse-biased Schottky read-out: the `T^-2`
/// prefactor and the Arrhenius term, both normalised at `T_REF`.
pub fn rho_temperature_factor(t: f64, phi_app: f64) -> f64 {
    let ratio = T_REF / t;
    ratio * ratio * ((phi_app / BOLTZMANN_EV) * (1.0 / t - 1.0 / T_REF)).exp()
}

/// Absolute reverse-biased Schottky read-out `R = a_prime * T^-2 * exp(phi/(kT))`
/// with `a_prime = 1/A` in K²·ohm.
pub fn schottky_resistance(t: f64, phi_app: f64, a_prime: f64) -> f64 {
    a_prime / (t * t) * (phi_app / (BOLTZMANN_EV * t)).exp()
}

const PHI_UPPER: f64 = 5.0;

/// Apparent barrier reproducing a fractional resistance drop `total_drop`
/// between `T_REF` and `T_MAX`.
///
/// Bracketed bisection on `rho(T_MAX, phi) = 1 - total_drop`; `rho` is
/// strictly decreasing in `phi` so the root is unique.
pub fn calibrate_phi_from_drop(total_drop: f64) -> Result<f64> {
    let lo_bound = phi_lower_bound();
    let min_drop = 1.0 - rho_temperature_factor(T_MAX, lo_bound);
    let max_drop = 1.0 - rho_temperature_factor(T_MAX, PHI_UPPER);
    if !total_drop.is_finite() || total_drop <= min_drop || total_drop >= max_drop {
        return Err(Error::Calibration(format!(
            "drop {total_drop} outside achievable range ({min_drop:.6}, {max_drop:.6}); \
             the lower limit is set by the monotonicity bound phi_app > {lo_bound:.6} eV"
        )));
    }
    let target = 1.0 - total_drop;
    let (mut lo, mut hi) = (lo_bound, PHI_UPPER);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let rho = rho_temperature_factor(T_MAX, mid);
        if (rho - target).abs() < 1e-13 || hi - lo < 1e-16 {
            return Ok(mid);
        }
        if rho > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if (rho_temperature_factor(T_MAX, mid) - target).abs() < 1e-10 {
        Ok(mid)
    } else {
        Err(Error::Calibration(format!(
            "bisection did not converge for drop {total_drop}"
        )))
    }
}

/// One row of the thermal sensitivity table.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub label: String,
    /// Resistance at `T_REF` (ohm).
    pub r_ref: f64,
    /// Fractional decrease of resistance between `T_REF` and `T_MAX`.
    pub total_drop: f64,
    /// Derived apparent barrier (eV, signed).
    pub phi_app: f64,
}

/// Maps a resistance state to its thermal sensitivity.
///
/// Anchors are ordered by strictly decreasing reference resistance. The
/// apparent barrier between anchors is interpolated linearly in
/// `log10(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFit {
    anchors: Vec<Anchor>,
    log_r: Vec<f64>,
}

impl ThermalFit {
    pub fn new<S: Into<String>>(rows: impl IntoIterator<Item = (S, f64, f64)>) -> Result<Self> {
        let mut anchors = Vec::new();
        for (label, r_ref, total_drop) in rows {
            let label = label.into();
            if !(r_ref > 0.0) || !r_ref.is_finite() {
                return Err(Error::invalid(format!(
                    "anchor '{label}' has non-positive resistance {r_ref}"
                )));
            }
            let phi_app = calibrate_phi_from_drop(total_drop)?;
            anchors.push(Anchor {
                label,
                r_ref,
                total_drop,
                phi_app,
            });
        }
        if anchors.is_empty() {
            return Err(Error::invalid("thermal fit needs at least one anchor"));
        }
        if anchors.windows(2).any(|w| w[1].r_ref >= w[0].r_ref) {
            return Err(Error::invalid(
                "anchors must be strictly decreasing in reference resistance",
            ));
        }
        let log_r = anchors.iter().map(|a| a.r_ref.log10()).collect();
        Ok(Self { anchors, log_r })
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn t_ref(&self) -> f64 {
        T_REF
    }

    pub fn anchor(&self, label: &str) -> Option<&Anchor> {
        self.anchors
            .iter()
            .find(|a| a.label.eq_ignore_ascii_case(label))
    }
}

/// Apparent barrier for a device whose effective reference resistance is
/// `r_eff`. Clamped to the end anchors outside the table.
pub fn phi_for_state(r_eff: f64, fit: &ThermalFit) -> f64 {
    let x = r_eff.log10();
    let anchors = &fit.anchors;
    let logs = &fit.log_r;
    if x >= logs[0] {
        return anchors[0].phi_app;
    }
    let last = logs.len() - 1;
    if x <= logs[last] {
        return anchors[last].phi_app;
    }
    // logs is strictly decreasing; find i with logs[i] > x >= logs[i+1].
    let i = logs.partition_point(|&l| l > x) - 1;
    let (x0, x1) = (logs[i], logs[i + 1]);
    let (p0, p1) = (anchors[i].phi_app, anchors[i + 1].phi_app);
    p0 + (p1 - p0) * (x - x0) / (x1 - x0)
}

/// Resistance the device reads at temperature `t`. Never mutates the state.
pub fn read_resistance(state: &DeviceState, fit: &ThermalFit, t: f64) -> f64 {
    let r_eff = state.r_eff();
    r_eff * rho_temperature_factor(t, phi_for_state(r_eff, fit))
}
