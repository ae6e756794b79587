//! Spontaneous Raman noise photon numbers as a function of fiber temperature.
//!
//! Stokes photons (red side of the pump) scale with the phonon occupancy
//! `n_th + 1`, anti-Stokes photons (blue side) with `n_th`, where
//! `n_th = 1 / (exp(h nu / k_B T) - 1)`. Both share the prefactor
//! `g L exp(-alpha L)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant (J s), exact SI value.
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Boltzmann constant (J/K), exact SI value.
pub const BOLTZMANN_K: f64 = 1.380_649e-23;

/// Side of the pump on which a Raman photon is emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RamanSide {
    /// Frequency below the pump (phonon emission).
    Stokes,
    /// Frequency above the pump (phonon absorption).
    AntiStokes,
}

/// Fiber and pump parameters for the spontaneous Raman model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanParams {
    /// Gain coefficient per meter, proportional to pump power (1/m).
    pub gain_per_m: f64,
    /// Fiber length (m).
    pub length_m: f64,
    /// Loss coefficient (1/m), assumed independent of temperature.
    pub loss_per_m: f64,
    /// Pump-to-channel frequency offset (Hz).
    pub detuning_hz: f64,
    /// Fiber temperature (K).
    pub temperature_k: f64,
}

impl RamanParams {
    pub fn validate(&self) -> Result<()> {
        check_temperature(self.temperature_k)?;
        check_detuning(self.detuning_hz)?;
        if !(self.gain_per_m >= 0.0 && self.gain_per_m.is_finite()) {
            return Err(Error::Domain(format!("gain must be >= 0, got {}", self.gain_per_m)));
        }
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(Error::Domain(format!("fiber length must be > 0, got {}", self.length_m)));
        }
        if !(self.loss_per_m >= 0.0 && self.loss_per_m.is_finite()) {
            return Err(Error::Domain(format!("loss must be >= 0, got {}", self.loss_per_m)));
        }
        Ok(())
    }

    /// `g L exp(-alpha L)`, the temperature-independent prefactor.
    pub fn prefactor(&self) -> f64 {
        self.gain_per_m * self.length_m * (-self.loss_per_m * self.length_m).exp()
    }

    pub fn with_temperature(self, temperature_k: f64) -> Self {
        Self { temperature_k, ..self }
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature must be > 0 K, got {t}")))
    }
}

fn check_detuning(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("detuning must be > 0 Hz, got {nu}")))
    }
}

/// Phonon energy expressed as a temperature, `h nu / k_B` (K).
///
/// About 19.2 K for a 400 GHz detuning.
pub fn phonon_temperature(detuning_hz: f64) -> f64 {
    PLANCK_H * detuning_hz / BOLTZMANN_K
}

/// Temperature-dependent occupancy factor for one side.
///
/// Stokes: `1 / (1 - exp(-x))`; anti-Stokes: `1 / (exp(x) - 1)`, with
/// `x = h nu / (k_B T)`.
pub fn bose_factor(side: RamanSide, temperature_k: f64, detuning_hz: f64) -> Result<f64> {
    check_temperature(temperature_k)?;
    check_detuning(detuning_hz)?;
    let x = phonon_temperature(detuning_hz) / temperature_k;
    Ok(match side {
        RamanSide::Stokes => 1.0 / -(-x).exp_m1(),
        // exp_m1 overflows to +inf as T -> 0+, giving exactly 0.
        RamanSide::AntiStokes => 1.0 / x.exp_m1(),
    })
}

/// Mean Stokes photons per pulse.
pub fn stokes_mean(p: &RamanParams) -> Result<f64> {
    p.validate()?;
    Ok(p.prefactor() * bose_factor(RamanSide::Stokes, p.temperature_k, p.detuning_hz)?)
}

/// Mean anti-Stokes photons per pulse.
pub fn anti_stokes_mean(p: &RamanParams) -> Result<f64> {
    p.validate()?;
    Ok(p.prefactor() * bose_factor(RamanSide::AntiStokes, p.temperature_k, p.detuning_hz)?)
}

pub fn raman_mean(side: RamanSide, p: &RamanParams) -> Result<f64> {
    match side {
        RamanSide::Stokes => stokes_mean(p),
        RamanSide::AntiStokes => anti_stokes_mean(p),
    }
}

/// Rescale a measured noise level from `t_ref` to `t_new` with the occupancy
/// factor of the given side. Gain, length and loss are held fixed.
pub fn scale_noise_to_temperature(
    mu_ref: f64,
    t_ref: f64,
    t_new: f64,
    detuning_hz: f64,
    side: RamanSide,
) -> Result<f64> {
    if !(mu_ref >= 0.0 && mu_ref.is_finite()) {
        return Err(Error::Domain(format!("reference noise must be >= 0, got {mu_ref}")));
    }
    let new = bose_factor(side, t_new, detuning_hz)?;
    let old = bose_factor(side, t_ref, detuning_hz)?;
    if t_new == t_ref {
        return Ok(mu_ref);
    }
    Ok(mu_ref * new / old)
}
