//! Per-arm loss budget, gated detector parameters and the pump/signal/idler
//! frequency plan.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Binary (click / no-click) gated detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Probability of a click given one incident photon.
    pub efficiency: f64,
    /// Dark-count probability per gated slot.
    pub dark_count_per_gate: f64,
    /// Gate repetition rate (Hz); one double-pulse frame per gate.
    pub gate_rate_hz: f64,
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Config(format!(
                "detector efficiency must be in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(0.0..1.0).contains(&self.dark_count_per_gate) {
            return Err(Error::Config(format!(
                "dark count per gate must be in [0, 1), got {}",
                self.dark_count_per_gate
            )));
        }
        if !(self.gate_rate_hz > 0.0 && self.gate_rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "gate rate must be > 0 Hz, got {}",
                self.gate_rate_hz
            )));
        }
        Ok(())
    }
}

/// Source-to-detector loss budget for one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Lumped filter and interferometer loss (dB).
    pub fixed_loss_db: f64,
    /// Transmission span (km).
    pub fiber_length_km: f64,
    /// Span attenuation (dB/km).
    pub fiber_loss_db_per_km: f64,
    pub detector: DetectorParams,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fixed_loss_db", self.fixed_loss_db),
            ("fiber_length_km", self.fiber_length_km),
            ("fiber_loss_db_per_km", self.fiber_loss_db_per_km),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        self.detector.validate()
    }

    pub fn total_loss_db(&self) -> f64 {
        self.fixed_loss_db + self.fiber_length_km * self.fiber_loss_db_per_km
    }
}

/// Probability that a photon leaving the source produces a click: detector
/// efficiency times the optical transmission of the whole arm.
pub fn transmittance(c: &ChannelParams) -> f64 {
    c.detector.efficiency * db_to_linear(c.total_loss_db())
}

/// Power transmission for a loss given in dB.
pub fn db_to_linear(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Pump frequency and the symmetric signal/idler offset.
///
/// Frequencies are kept as whole hertz so that `2 * pump == signal + idler`
/// holds exactly in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pump_hz: f64,
    offset_hz: f64,
}

impl FrequencyPlan {
    pub fn new(pump_hz: f64, offset_hz: f64) -> Result<Self> {
        let pump_hz = pump_hz.round();
        let offset_hz = offset_hz.round();
        if !(pump_hz > 0.0 && pump_hz < 2f64.powi(52)) {
            return Err(Error::Config(format!("pump frequency out of range: {pump_hz} Hz")));
        }
        if !(offset_hz > 0.0 && offset_hz < pump_hz) {
            return Err(Error::Config(format!(
                "channel offset must be in (0, pump), got {offset_hz} Hz"
            )));
        }
        Ok(Self { pump_hz, offset_hz })
    }

    pub fn from_pump_wavelength_nm(wavelength_nm: f64, offset_hz: f64) -> Result<Self> {
        if !(wavelength_nm > 0.0) {
            return Err(Error::Config(format!("wavelength must be > 0, got {wavelength_nm} nm")));
        }
        Self::new(SPEED_OF_LIGHT / (wavelength_nm * 1e-9), offset_hz)
    }

    pub fn pump_hz(&self) -> f64 {
        self.pump_hz
    }

    pub fn offset_hz(&self) -> f64 {
        self.offset_hz
    }

    /// Signal channel, on the anti-Stokes (blue) side of the pump.
    pub fn signal_hz(&self) -> f64 {
        self.pump_hz + self.offset_hz
    }

    /// Idler channel, on the Stokes (red) side of the pump.
    pub fn idler_hz(&self) -> f64 {
        self.pump_hz - self.offset_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel(fixed: f64, km: f64, eta: f64) -> ChannelParams {
        ChannelParams {
            fixed_loss_db: fixed,
            fiber_length_km: km,
            fiber_loss_db_per_km: 0.2,
            detector: DetectorParams { efficiency: eta, dark_count_per_gate: 4e-5, gate_rate_hz: 4e6 },
        }
    }

    #[test]
    fn lossless_unit_efficiency() {
        assert_eq!(transmittance(&channel(0.0, 0.0, 1.0)), 1.0);
    }

    #[test]
    fn signal_arm_budget() {
        assert!((transmittance(&channel(8.0, 0.0, 0.08)) - 0.01268).abs() < 1e-5);
        assert!((transmittance(&channel(8.0, 30.0, 0.08)) - 0.003185).abs() < 1e-5);
        let direct = 0.08 * 10f64.powf(-1.4);
        assert!((transmittance(&channel(8.0, 30.0, 0.08)) - direct).abs() < 1e-15);
    }

    #[test]
    fn invalid_channels() {
        assert!(channel(-1.0, 0.0, 0.1).validate().is_err());
        assert!(channel(1.0, -3.0, 0.1).validate().is_err());
        assert!(channel(1.0, 0.0, 1.5).validate().is_err());
        let mut c = channel(1.0, 0.0, 0.1);
        c.detector.dark_count_per_gate = 1.0;
        assert!(c.validate().is_err());
        c.detector.dark_count_per_gate = 0.0;
        c.detector.gate_rate_hz = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn frequency_plan_conserves_energy() {
        let plan = FrequencyPlan::from_pump_wavelength_nm(1551.1, 400e9).unwrap();
        assert_eq!(2.0 * plan.pump_hz(), plan.signal_hz() + plan.idler_hz());
        assert!((plan.pump_hz() - 193.28e12).abs() < 0.01e12);
        assert!(FrequencyPlan::new(1e14, 2e14).is_err());
    }
}
