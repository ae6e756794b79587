//! Command implementations. Each returns its rendered output so the binary
//! only has to route text to stdout, stderr or files.

use serde::Serialize;

use super::format::{to_json, write_csv};
use super::CliError;
use crate::fringe::{equally_spaced_phases, fit_visibility, sweep_with, FringeCurve, SweepMode};
use crate::montecarlo::{Engine, Scenario};
use crate::raman::{bose_factor, RamanParams, RamanSide};
use crate::rates::{accidental_rate, bell_violation_margin, correlated_rate, estimate_mu_c, singles_rate, visibility};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RamanRow {
    pub temperature_k: f64,
    pub stokes: f64,
    pub anti_stokes: f64,
    /// Stokes mean relative to the reference temperature.
    pub stokes_ratio: f64,
    pub anti_stokes_ratio: f64,
}

/// Stokes and anti-Stokes means at each temperature, with ratios to the
/// reference temperature (the last listed one when `reference_k` is `None`).
pub fn raman_table(temps: &[f64], base: RamanParams, reference_k: Option<f64>) -> Result<Vec<RamanRow>, CliError> {
    let reference = reference_k
        .or_else(|| temps.last().copied())
        .ok_or_else(|| CliError::usage("at least one temperature is required"))?;
    let usage = |e: crate::Error| CliError::usage(e.to_string());
    let at = |t: f64| -> Result<(f64, f64), CliError> {
        let p = base.with_temperature(t);
        p.validate().map_err(usage)?;
        Ok((
            p.prefactor() * bose_factor(RamanSide::Stokes, t, p.detuning_hz).map_err(usage)?,
            p.prefactor() * bose_factor(RamanSide::AntiStokes, t, p.detuning_hz).map_err(usage)?,
        ))
    };
    let ref_s = bose_factor(RamanSide::Stokes, reference, base.detuning_hz).map_err(usage)?;
    let ref_as = bose_factor(RamanSide::AntiStokes, reference, base.detuning_hz).map_err(usage)?;
    temps
        .iter()
        .map(|&t| {
            let (stokes, anti_stokes) = at(t)?;
            Ok(RamanRow {
                temperature_k: t,
                stokes,
                anti_stokes,
                stokes_ratio: bose_factor(RamanSide::Stokes, t, base.detuning_hz).map_err(usage)? / ref_s,
                anti_stokes_ratio: bose_factor(RamanSide::AntiStokes, t, base.detuning_hz).map_err(usage)?
                    / ref_as,
            })
        })
        .collect()
}

pub fn render_raman_table(rows: &[RamanRow]) -> String {
    let mut out = format!(
        "{:>12} {:>14} {:>14} {:>12} {:>12}\n",
        "T_K", "n_stokes", "n_anti_stokes", "ratio_s", "ratio_as"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>12.3} {:>14.6e} {:>14.6e} {:>12.4} {:>12.4}\n",
            r.temperature_k, r.stokes, r.anti_stokes, r.stokes_ratio, r.anti_stokes_ratio
        ));
    }
    out
}

pub fn render_raman_csv(rows: &[RamanRow]) -> String {
    use super::format::{round_sig, CSV_DIGITS};
    let mut out = String::from("temperature_k,n_stokes,n_anti_stokes,ratio_stokes,ratio_anti_stokes\n");
    for r in rows {
        let cells = [r.temperature_k, r.stokes, r.anti_stokes, r.stokes_ratio, r.anti_stokes_ratio]
            .map(|x| round_sig(x, CSV_DIGITS).to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticSummary {
    pub r_c_hz: f64,
    pub r_acc_hz: f64,
    pub visibility: f64,
    pub bell_margin: f64,
    pub singles_signal_hz: f64,
    pub singles_idler_hz: f64,
    pub mu_s: f64,
    pub mu_i: f64,
}

/// Rates at constructive interference, converted to Hz with the signal
/// detector's gate rate.
pub fn analytic_summary(s: &Scenario) -> Result<AnalyticSummary, CliError> {
    s.validate().map_err(CliError::from)?;
    let (alpha_s, alpha_i) = (s.alpha_s(), s.alpha_i());
    let ds = &s.signal_channel.detector;
    let di = &s.idler_channel.detector;
    let r_c = correlated_rate(s.brightness.mu_c, alpha_s, alpha_i);
    let r_acc = accidental_rate(&s.brightness, alpha_s, alpha_i, ds.dark_count_per_gate, di.dark_count_per_gate);
    let v = visibility(r_c, r_acc)?;
    Ok(AnalyticSummary {
        r_c_hz: r_c * ds.gate_rate_hz,
        r_acc_hz: r_acc * ds.gate_rate_hz,
        visibility: v,
        bell_margin: bell_violation_margin(v),
        singles_signal_hz: singles_rate(s.brightness.mu_s(), alpha_s, ds.dark_count_per_gate, ds.gate_rate_hz),
        singles_idler_hz: singles_rate(s.brightness.mu_i(), alpha_i, di.dark_count_per_gate, di.gate_rate_hz),
        mu_s: s.brightness.mu_s(),
        mu_i: s.brightness.mu_i(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub mode: SweepMode,
    pub points: usize,
    pub frames_per_point: Option<u64>,
    pub seed: Option<u64>,
    pub visibility: f64,
    pub theta0: f64,
    pub offset: f64,
    pub fit_sigma_v: f64,
    /// Fit of coincidences normalized per start (signal) click.
    pub visibility_per_start_pulse: f64,
    pub analytic_visibility: f64,
}

pub const MIN_SWEEP_POINTS: usize = 5;

pub fn run_sweep(s: &Scenario, points: usize, mode: SweepMode, engine: Engine) -> Result<(FringeCurve, SweepSummary), CliError> {
    if points < MIN_SWEEP_POINTS {
        return Err(CliError::usage(format!("--points must be >= {MIN_SWEEP_POINTS}, got {points}")));
    }
    s.validate().map_err(CliError::from)?;
    let curve = sweep_with(s, &equally_spaced_phases(points), mode, engine)?;
    let fit = fit_visibility(&curve)?;
    let per_start = fit_visibility(&curve.per_start_pulse(s.signal_channel.detector.gate_rate_hz)?)?;
    let analytic = analytic_summary(s)?;
    let mc = mode == SweepMode::MonteCarlo;
    Ok((
        curve,
        SweepSummary {
            mode,
            points,
            frames_per_point: mc.then_some(s.frames),
            seed: mc.then_some(s.seed),
            visibility: fit.visibility,
            theta0: fit.theta0,
            offset: fit.offset,
            fit_sigma_v: fit.fit_sigma_v,
            visibility_per_start_pulse: per_start.visibility,
            analytic_visibility: analytic.visibility,
        },
    ))
}

/// Rendered CSV and JSON of a sweep.
pub fn sweep_outputs(s: &Scenario, points: usize, mode: SweepMode, engine: Engine) -> Result<(String, String), CliError> {
    let (curve, summary) = run_sweep(s, points, mode, engine)?;
    Ok((write_csv(&curve), to_json(&summary)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub mu_c_hat: f64,
}

/// Estimate `mu_c` from a visibility, holding the scenario's totals
/// `mu_s = mu_c + mu_ns` and `mu_i = mu_c + mu_ni` fixed.
pub fn estimate(v: f64, s: &Scenario) -> Result<EstimateSummary, CliError> {
    if !(v > 0.0 && v < 1.0) {
        return Err(CliError::usage(format!("visibility must be in (0, 1), got {v}")));
    }
    s.validate().map_err(CliError::from)?;
    let mu_c_hat = estimate_mu_c(
        v,
        s.brightness.mu_s(),
        s.brightness.mu_i(),
        s.alpha_s(),
        s.alpha_i(),
        s.signal_channel.detector.dark_count_per_gate,
        s.idler_channel.detector.dark_count_per_gate,
    )?;
    Ok(EstimateSummary { mu_c_hat })
}
