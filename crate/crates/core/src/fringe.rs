//! Phase sweeps of the middle-slot coincidence rate and the sinusoidal
//! visibility fit.
//!
//! The fit is linear least squares on `y = C + A cos(theta) + B sin(theta)`.
//! The visibility `sqrt(A^2 + B^2) / C` is the `(max - min) / (max + min)`
//! contrast of the fitted curve, and `theta0 = atan2(B, A)`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{derive_seed, simulate_with, Engine, Scenario};
use crate::rates::{accidental_rate, correlated_rate, fringe_rate, singles_rate};
use crate::timebin_state::PhaseConfig;

/// One sweep point. Rates are probabilities per frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    /// Total analyzer phase `theta_s + theta_i` (rad).
    pub theta: f64,
    /// Middle-slot coincidence probability per frame.
    pub coincidence_per_frame: f64,
    pub sigma: f64,
    pub singles_signal_hz: f64,
    pub singles_idler_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeCurve {
    points: Vec<FringePoint>,
    pub metadata: String,
}

impl FringeCurve {
    /// Requires a non-empty, strictly increasing phase axis and non-negative sigmas.
    pub fn new(points: Vec<FringePoint>, metadata: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("fringe curve needs at least one point".into()));
        }
        for w in points.windows(2) {
            if !(w[1].theta > w[0].theta) {
                return Err(Error::Config(format!(
                    "phases must be strictly increasing: {} then {}",
                    w[0].theta, w[1].theta
                )));
            }
        }
        if let Some(p) = points.iter().find(|p| !(p.sigma >= 0.0) || !p.coincidence_per_frame.is_finite()) {
            return Err(Error::Config(format!("invalid point at theta = {}", p.theta)));
        }
        Ok(Self { points, metadata: metadata.into() })
    }

    pub fn points(&self) -> &[FringePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coincidences normalized by signal (start) clicks instead of frames.
    pub fn per_start_pulse(&self, gate_rate_hz: f64) -> Result<FringeCurve> {
        let points = self
            .points
            .iter()
            .map(|p| {
                let starts_per_frame = p.singles_signal_hz / gate_rate_hz;
                if !(starts_per_frame > 0.0) {
                    return Err(Error::DegenerateFit(format!(
                        "no start pulses at theta = {}",
                        p.theta
                    )));
                }
                Ok(FringePoint {
                    coincidence_per_frame: p.coincidence_per_frame / starts_per_frame,
                    sigma: p.sigma / starts_per_frame,
                    ..*p
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FringeCurve::new(points, format!("{} (per start pulse)", self.metadata))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Analytic,
    MonteCarlo,
}

/// `n` equally spaced phases over one period starting at 0.
pub fn equally_spaced_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect()
}

pub fn sweep(s: &Scenario, thetas: &[f64], mode: SweepMode) -> Result<FringeCurve> {
    sweep_with(s, thetas, mode, Engine::default())
}

/// Sweep the total analyzer phase by moving the idler analyzer with the
/// signal analyzer fixed. Monte Carlo point `k` uses seed
/// `derive_seed(s.seed, k)`.
pub fn sweep_with(s: &Scenario, thetas: &[f64], mode: SweepMode, engine: Engine) -> Result<FringeCurve> {
    s.validate()?;
    if thetas.is_empty() {
        return Err(Error::Config("sweep needs at least one phase".into()));
    }
    let at = |theta: f64| {
        s.with_phases(PhaseConfig { theta_i: theta - s.phases.theta_s, ..s.phases })
    };
    let gate_s = s.signal_channel.detector.gate_rate_hz;
    let gate_i = s.idler_channel.detector.gate_rate_hz;
    let points = match mode {
        SweepMode::Analytic => {
            let (alpha_s, alpha_i) = (s.alpha_s(), s.alpha_i());
            let (d_s, d_i) = (
                s.signal_channel.detector.dark_count_per_gate,
                s.idler_channel.detector.dark_count_per_gate,
            );
            let r_c = correlated_rate(s.brightness.mu_c, alpha_s, alpha_i);
            let r_acc = accidental_rate(&s.brightness, alpha_s, alpha_i, d_s, d_i);
            let singles_s = singles_rate(s.brightness.mu_s(), alpha_s, d_s, gate_s);
            let singles_i = singles_rate(s.brightness.mu_i(), alpha_i, d_i, gate_i);
            thetas
                .iter()
                .map(|&theta| FringePoint {
                    theta,
                    coincidence_per_frame: fringe_rate(r_c, r_acc, theta, s.phases.phi),
                    sigma: 0.0,
                    singles_signal_hz: singles_s,
                    singles_idler_hz: singles_i,
                })
                .collect()
        }
        SweepMode::MonteCarlo => thetas
            .par_iter()
            .enumerate()
            .map(|(k, &theta)| {
                let point = Scenario { seed: derive_seed(s.seed, k as u64), ..at(theta) };
                let t = simulate_with(&point, engine)?;
                let frames = t.frames_run as f64;
                let count = t.coincidence((2, 2)) as f64;
                Ok(FringePoint {
                    theta,
                    coincidence_per_frame: count / frames,
                    sigma: count.sqrt() / frames,
                    singles_signal_hz: t.singles_signal_total() as f64 / frames * gate_s,
                    singles_idler_hz: t.singles_idler_total() as f64 / frames * gate_i,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let label = match mode {
        SweepMode::Analytic => "analytic".to_string(),
        SweepMode::MonteCarlo => format!("montecarlo frames={} seed={}", s.frames, s.seed),
    };
    FringeCurve::new(points, label)
}

/// Result of a sinusoidal fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub visibility: f64,
    pub theta0: f64,
    /// Mean level `C` of the fitted curve.
    pub offset: f64,
    pub fit_sigma_v: f64,
}

pub fn fit_visibility(curve: &FringeCurve) -> Result<FringeFit> {
    let pts: Vec<(f64, f64, f64)> = curve
        .points()
        .iter()
        .map(|p| (p.theta, p.coincidence_per_frame, p.sigma))
        .collect();
    fit_points(&pts)
}

/// Weighted fit of `(theta, y, sigma)` triples.
///
/// Points are weighted by `1 / sigma^2`. If every sigma is zero the fit is
/// unweighted and `fit_sigma_v` is zero. Zero-sigma points in an otherwise
/// weighted set get the weight of the best-measured point.
pub fn fit_points(points: &[(f64, f64, f64)]) -> Result<FringeFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    let first = points[0].0.rem_euclid(std::f64::consts::TAU);
    if points.iter().all(|p| {
        let d = (p.0.rem_euclid(std::f64::consts::TAU) - first).abs();
        d < 1e-12 || (std::f64::consts::TAU - d) < 1e-12
    }) {
        return Err(Error::DegenerateFit("all phases coincide modulo 2 pi".into()));
    }

    let min_sigma = points.iter().map(|p| p.2).filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    let weighted = min_sigma.is_finite();
    let weight = |sigma: f64| {
        if !weighted {
            1.0
        } else {
            let s = if sigma > 0.0 { sigma } else { min_sigma };
            1.0 / (s * s)
        }
    };

    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for &(theta, y, sigma) in points {
        let row = Vector3::new(1.0, theta.cos(), theta.sin());
        let w = weight(sigma);
        normal += w * row * row.transpose();
        rhs += w * y * row;
    }
    let cov = normal
        .try_inverse()
        .ok_or_else(|| Error::DegenerateFit("singular normal equations".into()))?;
    let beta = cov * rhs;
    let (c, a, b) = (beta[0], beta[1], beta[2]);
    if !(c > 0.0) {
        return Err(Error::DegenerateFit(format!("fitted mean level {c} is not positive")));
    }
    let amp = a.hypot(b);
    let visibility = amp / c;
    let theta0 = b.atan2(a);

    let fit_sigma_v = if weighted {
        // Gradient of sqrt(A^2 + B^2) / C with respect to (C, A, B).
        let grad = if amp > 0.0 {
            Vector3::new(-amp / (c * c), a / (c * amp), b / (c * amp))
        } else {
            Vector3::zeros()
        };
        let var = if amp > 0.0 {
            (grad.transpose() * cov * grad)[0]
        } else {
            (cov[(1, 1)] + cov[(2, 2)]) / (c * c)
        };
        var.max(0.0).sqrt()
    } else {
        0.0
    };

    Ok(FringeFit { visibility, theta0, offset: c, fit_sigma_v })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, v: f64, theta0: f64, n: usize) -> Vec<(f64, f64, f64)> {
        equally_spaced_phases(n)
            .into_iter()
            .map(|t| (t, c * (1.0 + v * (t - theta0).cos()), 0.0))
            .collect()
    }

    #[test]
    fn noiseless_round_trip() {
        let fit = fit_points(&synthetic(2.0, 0.5, 1.0, 12)).unwrap();
        assert!((fit.visibility - 0.5).abs() < 1e-9);
        assert!((fit.theta0 - 1.0).abs() < 1e-9);
        assert!((fit.offset - 2.0).abs() < 1e-9);
        assert_eq!(fit.fit_sigma_v, 0.0);
    }

    #[test]
    fn flat_curve_has_zero_visibility() {
        let fit = fit_points(&synthetic(3.0, 0.0, 0.0, 8)).unwrap();
        assert!(fit.visibility.abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_points(&[(0.0, 1.0, 0.0), (1.0, 2.0, 0.0)]),
            Err(Error::DegenerateFit(_))
        ));
        let same = [(0.5, 1.0, 0.0), (0.5 + std::f64::consts::TAU, 2.0, 0.0), (0.5, 3.0, 0.0)];
        assert!(matches!(fit_points(&same), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn curve_invariants() {
        let p = |theta| FringePoint {
            theta,
            coincidence_per_frame: 1.0,
            sigma: 0.0,
            singles_signal_hz: 1.0,
            singles_idler_hz: 1.0,
        };
        assert!(FringeCurve::new(vec![], "x").is_err());
        assert!(FringeCurve::new(vec![p(1.0), p(1.0)], "x").is_err());
        assert!(FringeCurve::new(vec![p(1.0), p(0.5)], "x").is_err());
        let mut bad = p(2.0);
        bad.sigma = -1.0;
        assert!(FringeCurve::new(vec![p(1.0), bad], "x").is_err());
        assert_eq!(FringeCurve::new(vec![p(0.0), p(1.0)], "x").unwrap().len(), 2);
    }

    #[test]
    fn weighted_sigma_scales_with_noise() {
        let mut pts = synthetic(100.0, 0.8, 0.0, 12);
        for p in &mut pts {
            p.2 = 1.0;
        }
        let s1 = fit_points(&pts).unwrap().fit_sigma_v;
        for p in &mut pts {
            p.2 = 2.0;
        }
        let s2 = fit_points(&pts).unwrap().fit_sigma_v;
        assert!(s1 > 0.0);
        assert!((s2 / s1 - 2.0).abs() < 1e-9);
    }
}
