//! Closed-form per-frame count probabilities, two-photon interference
//! visibility and the inverse estimate of the correlated pair number.
//!
//! All rates here are probabilities per frame (one double pulse per gate).
//! Multiply by the gate rate to get Hz.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean photon numbers per pulse at the source output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceBrightness {
    /// Correlated pairs per pulse.
    pub mu_c: f64,
    /// Uncorrelated (Raman) noise photons per pulse in the signal channel.
    pub mu_ns: f64,
    /// Uncorrelated (Raman) noise photons per pulse in the idler channel.
    pub mu_ni: f64,
}

impl SourceBrightness {
    pub fn new(mu_c: f64, mu_ns: f64, mu_ni: f64) -> Result<Self> {
        let b = Self { mu_c, mu_ns, mu_ni };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_c", self.mu_c), ("mu_ns", self.mu_ns), ("mu_ni", self.mu_ni)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Total signal photons per pulse, correlated plus noise.
    pub fn mu_s(&self) -> f64 {
        self.mu_c + self.mu_ns
    }

    /// Total idler photons per pulse, correlated plus noise.
    pub fn mu_i(&self) -> f64 {
        self.mu_c + self.mu_ni
    }
}

/// Correlated coincidence probability per frame at constructive interference:
/// `(mu_c / 4) alpha_s alpha_i`.
pub fn correlated_rate(mu_c: f64, alpha_s: f64, alpha_i: f64) -> f64 {
    mu_c / 4.0 * alpha_s * alpha_i
}

/// Accidental coincidence probability per frame from totals `mu_s`, `mu_i`.
pub fn accidental_rate_from_totals(
    mu_s: f64,
    mu_i: f64,
    alpha_s: f64,
    alpha_i: f64,
    d_s: f64,
    d_i: f64,
) -> f64 {
    (mu_s * alpha_s / 2.0 + d_s) * (mu_i * alpha_i / 2.0 + d_i)
}

/// Accidental coincidence probability per frame, without the small-dark-count
/// approximation.
pub fn accidental_rate(b: &SourceBrightness, alpha_s: f64, alpha_i: f64, d_s: f64, d_i: f64) -> f64 {
    accidental_rate_from_totals(b.mu_s(), b.mu_i(), alpha_s, alpha_i, d_s, d_i)
}

/// Fringe contrast `R_c / (R_c + 2 R_acc)`.
pub fn visibility(r_c: f64, r_acc: f64) -> Result<f64> {
    if !(r_c >= 0.0 && r_acc >= 0.0) {
        return Err(Error::Domain(format!("rates must be >= 0, got r_c={r_c}, r_acc={r_acc}")));
    }
    if r_c == 0.0 && r_acc == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok(r_c / (r_c + 2.0 * r_acc))
}

/// Middle-slot coincidence probability at total analyzer phase `theta`:
/// `R_acc + (R_c / 2)(1 + cos(theta - phi))`.
pub fn fringe_rate(r_c: f64, r_acc: f64, theta: f64, phi: f64) -> f64 {
    r_acc + 0.5 * r_c * (1.0 + (theta - phi).cos())
}

/// Margin above the `1/sqrt(2)` visibility needed for a Bell violation.
pub fn bell_violation_margin(v: f64) -> f64 {
    v - FRAC_1_SQRT_2
}

/// Singles rate (Hz) of the port-a detector: two pulses per frame each reach
/// port a with probability 1/2, plus one dark-count opportunity per gate.
pub fn singles_rate(mu_x: f64, alpha_x: f64, d_x: f64, gate_rate_hz: f64) -> f64 {
    (mu_x * alpha_x + d_x) * gate_rate_hz
}

/// Solve for `mu_c` reproducing `v_measured`, with the measured totals
/// `mu_s`, `mu_i` (hence the accidental rate) held fixed.
///
/// Visibility is increasing in `mu_c`, so plain bisection on `[0, 1]` is
/// used and run down to adjacent floats.
pub fn estimate_mu_c(
    v_measured: f64,
    mu_s: f64,
    mu_i: f64,
    alpha_s: f64,
    alpha_i: f64,
    d_s: f64,
    d_i: f64,
) -> Result<f64> {
    if !(v_measured > 0.0 && v_measured < 1.0) {
        if v_measured == 1.0 {
            return Err(Error::NoSolution(
                "unit visibility requires zero accidental coincidences".into(),
            ));
        }
        return Err(Error::Domain(format!("visibility must be in (0, 1), got {v_measured}")));
    }
    if !(mu_s > 0.0 && mu_i > 0.0) {
        return Err(Error::Domain(format!("mu_s and mu_i must be > 0, got {mu_s}, {mu_i}")));
    }
    if !(alpha_s > 0.0 && alpha_i > 0.0) {
        return Err(Error::Domain("transmittances must be > 0".into()));
    }
    let r_acc = accidental_rate_from_totals(mu_s, mu_i, alpha_s, alpha_i, d_s, d_i);
    let v_of = |mu_c: f64| visibility(correlated_rate(mu_c, alpha_s, alpha_i), r_acc);

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if v_of(hi)? < v_measured {
        return Err(Error::NoSolution(format!(
            "visibility {v_measured} exceeds the model maximum {} at mu_c = 1",
            v_of(hi)?
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if v_of(mid)? < v_measured {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v_lo = v_of(lo)?;
    let v_hi = v_of(hi)?;
    Ok(if (v_measured - v_lo).abs() <= (v_hi - v_measured).abs() { lo } else { hi })
}
