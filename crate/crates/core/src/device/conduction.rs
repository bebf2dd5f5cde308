use crate::error::{Error, Result};

/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV: f64 = 8.617333262e-5;

/// Thermionic emission parameters over an interfacial barrier.
///
/// `a_prefactor` folds the Richardson constant and the effective area into
/// a single A/K² constant. The barrier-lowering factor is kept per polarity
/// so asymmetric contacts can be represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermionicParams {
    a_prefactor: f64,
    phi_b: f64,
    alpha_pos: f64,
    alpha_neg: f64,
}

impl ThermionicParams {
    pub fn new(a_prefactor: f64, phi_b: f64, alpha_pos: f64, alpha_neg: f64) -> Result<Self> {
        let all_finite = [a_prefactor, phi_b, alpha_pos, alpha_neg]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::invalid("thermionic parameters must be finite"));
        }
        if !(a_prefactor > 0.0) {
            return Err(Error::invalid(format!(
                "current prefactor must be positive, got {a_prefactor}"
            )));
        }
        if phi_b < 0.0 || alpha_pos < 0.0 || alpha_neg < 0.0 {
            return Err(Error::invalid(format!(
                "barrier and lowering factors must be non-negative (phi_b={phi_b}, alpha+={alpha_pos}, alpha-={alpha_neg})"
            )));
        }
        Ok(Self {
            a_prefactor,
            phi_b,
            alpha_pos,
            alpha_neg,
        })
    }

    pub fn symmetric(a_prefactor: f64, phi_b: f64, alpha: f64) -> Result<Self> {
        Self::new(a_prefactor, phi_b, alpha, alpha)
    }

    pub fn a_prefactor(&self) -> f64 {
        self.a_prefactor
    }

    pub fn phi_b(&self) -> f64 {
        self.phi_b
    }

    pub fn alpha_pos(&self) -> f64 {
        self.alpha_pos
    }

    pub fn alpha_neg(&self) -> f64 {
        self.alpha_neg
    }

    /// Barrier-lowering factor for the polarity of `v`.
    pub fn alpha_for(&self, v: f64) -> f64 {
        if v < 0.0 {
            self.alpha_neg
        } else {
            self.alpha_pos
        }
    }

    /// Apparent barrier `phi_b - alpha * sqrt(|v|)` at bias `v`.
    pub fn apparent_barrier(&self, v: f64) -> f64 {
        self.phi_b - self.alpha_for(v) * v.abs().sqrt()
    }
}

/// Current through the device at bias `v` (volts) and temperature `t`
/// (kelvin). The sign of the current follows the sign of the bias.
pub fn thermionic_current(v: f64, t: f64, p: &ThermionicParams) -> Result<f64> {
    if !v.is_finite() || !t.is_finite() {
        return Err(Error::invalid("bias and temperature must be finite"));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {t}"
        )));
    }
    let magnitude = p.a_prefactor * t * t * (-p.apparent_barrier(v) / (BOLTZMANN_EV * t)).exp();
    Ok(if v < 0.0 { -magnitude } else { magnitude })
}
