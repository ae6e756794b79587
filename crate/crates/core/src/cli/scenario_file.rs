//! TOML scenario files.
//!
//! ```toml
//! [source]            # either explicit noise ...
//! mu_c = 0.04
//! mu_noise_signal = 0.01
//! mu_noise_idler = 0.02
//!
//! # ... or noise measured at a reference temperature and rescaled:
//! # [source.raman]
//! # reference_temperature_k = 293.0
//! # temperature_k = 77.0
//! # detuning_ghz = 400.0
//! # mu_noise_signal_ref = 0.03   # anti-Stokes side
//! # mu_noise_idler_ref = 0.04    # Stokes side
//!
//! [phases]            # optional, radians, default 0
//! phi = 0.0
//! theta_s = 0.0
//! theta_i = 0.0
//!
//! [signal]            # same keys for [idler]
//! fixed_loss_db = 8.0
//! fiber_length_km = 0.0
//! fiber_loss_db_per_km = 0.2
//! efficiency = 0.08
//! dark_per_gate = 4e-5
//!
//! [run]
//! frames = 10_000_000
//! seed = 2006
//! gate_rate_hz = 4e6
//! ```

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::link::{ChannelParams, DetectorParams};
use crate::montecarlo::Scenario;
use crate::raman::{scale_noise_to_temperature, RamanSide};
use crate::rates::SourceBrightness;
use crate::timebin_state::PhaseConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioErrorKind {
    /// Syntax errors, unknown or missing keys, wrong types.
    Parse,
    /// Well-formed values that break a model invariant.
    Invariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub kind: ScenarioErrorKind,
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.origin, line, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    source: SourceSection,
    #[serde(default)]
    phases: PhasesSection,
    signal: ChannelSection,
    idler: ChannelSection,
    run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    mu_c: f64,
    mu_noise_signal: Option<f64>,
    mu_noise_idler: Option<f64>,
    raman: Option<RamanSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RamanSection {
    reference_temperature_k: f64,
    temperature_k: f64,
    detuning_ghz: f64,
    mu_noise_signal_ref: f64,
    mu_noise_idler_ref: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhasesSection {
    #[serde(default)]
    phi: f64,
    #[serde(default)]
    theta_s: f64,
    #[serde(default)]
    theta_i: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    fixed_loss_db: f64,
    fiber_length_km: f64,
    fiber_loss_db_per_km: f64,
    efficiency: f64,
    dark_per_gate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    frames: u64,
    seed: u64,
    gate_rate_hz: f64,
}

/// Line (1-based) of `key` inside `[table]`, found by a plain text scan.
fn locate(src: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            continue;
        }
        if current == table {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(n + 1);
                }
            }
        }
    }
    None
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

struct Checker<'a> {
    src: &'a str,
    origin: &'a str,
}

impl Checker<'_> {
    fn fail(&self, kind: ScenarioErrorKind, table: &str, key: &str, message: String) -> ScenarioError {
        ScenarioError {
            kind,
            origin: self.origin.to_string(),
            line: locate(self.src, table, key),
            message: format!("[{table}] {key}: {message}"),
        }
    }

    fn check(&self, ok: bool, table: &str, key: &str, value: f64, rule: &str) -> Result<(), ScenarioError> {
        if ok {
            Ok(())
        } else {
            Err(self.fail(ScenarioErrorKind::Invariant, table, key, format!("{value} violates {rule}")))
        }
    }

    fn non_negative(&self, table: &str, key: &str, v: f64) -> Result<(), ScenarioError> {
        self.check(v >= 0.0 && v.is_finite(), table, key, v, ">= 0")
    }

    fn positive(&self, table: &str, key: &str, v: f64) -> Result<(), ScenarioError> {
        self.check(v > 0.0 && v.is_finite(), table, key, v, "> 0")
    }

    fn channel(&self, table: &str, c: &ChannelSection, gate_rate_hz: f64) -> Result<ChannelParams, ScenarioError> {
        self.non_negative(table, "fixed_loss_db", c.fixed_loss_db)?;
        self.non_negative(table, "fiber_length_km", c.fiber_length_km)?;
        self.non_negative(table, "fiber_loss_db_per_km", c.fiber_loss_db_per_km)?;
        self.check((0.0..=1.0).contains(&c.efficiency), table, "efficiency", c.efficiency, "0 <= efficiency <= 1")?;
        self.check(
            (0.0..1.0).contains(&c.dark_per_gate),
            table,
            "dark_per_gate",
            c.dark_per_gate,
            "0 <= dark_per_gate < 1",
        )?;
        Ok(ChannelParams {
            fixed_loss_db: c.fixed_loss_db,
            fiber_length_km: c.fiber_length_km,
            fiber_loss_db_per_km: c.fiber_loss_db_per_km,
            detector: DetectorParams {
                efficiency: c.efficiency,
                dark_count_per_gate: c.dark_per_gate,
                gate_rate_hz,
            },
        })
    }

    fn brightness(&self, s: &SourceSection) -> Result<SourceBrightness, ScenarioError> {
        self.non_negative("source", "mu_c", s.mu_c)?;
        let (mu_ns, mu_ni) = match (s.mu_noise_signal, s.mu_noise_idler, &s.raman) {
            (Some(ns), Some(ni), None) => {
                self.non_negative("source", "mu_noise_signal", ns)?;
                self.non_negative("source", "mu_noise_idler", ni)?;
                (ns, ni)
            }
            (None, None, Some(r)) => {
                let t = "source.raman";
                self.positive(t, "reference_temperature_k", r.reference_temperature_k)?;
                self.positive(t, "temperature_k", r.temperature_k)?;
                self.positive(t, "detuning_ghz", r.detuning_ghz)?;
                self.non_negative(t, "mu_noise_signal_ref", r.mu_noise_signal_ref)?;
                self.non_negative(t, "mu_noise_idler_ref", r.mu_noise_idler_ref)?;
                let scale = |mu, side| {
                    scale_noise_to_temperature(
                        mu,
                        r.reference_temperature_k,
                        r.temperature_k,
                        r.detuning_ghz * 1e9,
                        side,
                    )
                    .map_err(|e| self.fail(ScenarioErrorKind::Invariant, t, "temperature_k", e.to_string()))
                };
                // The signal channel sits above the pump frequency.
                (
                    scale(r.mu_noise_signal_ref, RamanSide::AntiStokes)?,
                    scale(r.mu_noise_idler_ref, RamanSide::Stokes)?,
                )
            }
            _ => {
                return Err(self.fail(
                    ScenarioErrorKind::Parse,
                    "source",
                    "mu_c",
                    "give either mu_noise_signal and mu_noise_idler, or a [source.raman] table".into(),
                ))
            }
        };
        Ok(SourceBrightness { mu_c: s.mu_c, mu_ns, mu_ni })
    }
}

/// Parse and validate scenario text. `origin` names the source in diagnostics.
pub fn parse_scenario(src: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(src).map_err(|e| ScenarioError {
        kind: ScenarioErrorKind::Parse,
        origin: origin.to_string(),
        line: e.span().map(|s| line_of_offset(src, s.start)),
        message: e.message().to_string(),
    })?;
    let ck = Checker { src, origin };

    let brightness = ck.brightness(&file.source)?;
    for (key, v) in [("phi", file.phases.phi), ("theta_s", file.phases.theta_s), ("theta_i", file.phases.theta_i)] {
        ck.check(v.is_finite(), "phases", key, v, "finite")?;
    }
    ck.check(file.run.frames >= 1, "run", "frames", file.run.frames as f64, "frames >= 1")?;
    ck.positive("run", "gate_rate_hz", file.run.gate_rate_hz)?;

    let scenario = Scenario {
        brightness,
        phases: PhaseConfig::new(file.phases.phi, file.phases.theta_s, file.phases.theta_i),
        signal_channel: ck.channel("signal", &file.signal, file.run.gate_rate_hz)?,
        idler_channel: ck.channel("idler", &file.idler, file.run.gate_rate_hz)?,
        frames: file.run.frames,
        seed: file.run.seed,
    };
    scenario.validate().map_err(|e| ScenarioError {
        kind: ScenarioErrorKind::Invariant,
        origin: origin.to_string(),
        line: None,
        message: e.to_string(),
    })?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let origin = path.display().to_string();
    let src = std::fs::read_to_string(path).map_err(|e| ScenarioError {
        kind: ScenarioErrorKind::Parse,
        origin: origin.clone(),
        line: None,
        message: e.to_string(),
    })?;
    parse_scenario(&src, &origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::presets::{preset_source, PRESET_NAMES};

    #[test]
    fn presets_parse() {
        for name in PRESET_NAMES {
            let s = parse_scenario(preset_source(name).unwrap(), name).unwrap();
            assert!((s.brightness.mu_s() - 0.05).abs() < 1e-12, "{name}");
            assert!((s.brightness.mu_i() - 0.06).abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_line() {
        let src = preset_source("cooled").unwrap().replace("efficiency = 0.08", "efficency = 0.08");
        let err = parse_scenario(&src, "bad.toml").unwrap_err();
        assert_eq!(err.kind, ScenarioErrorKind::Parse);
        let expected = src.lines().position(|l| l.starts_with("efficency")).unwrap() + 1;
        assert_eq!(err.line, Some(expected), "{err}");
    }

    #[test]
    fn invariant_violation_reports_line() {
        let src = preset_source("cooled").unwrap().replace("dark_per_gate = 5e-5", "dark_per_gate = 1.5");
        let err = parse_scenario(&src, "bad.toml").unwrap_err();
        assert_eq!(err.kind, ScenarioErrorKind::Invariant);
        let expected = src.lines().position(|l| l.starts_with("dark_per_gate = 1.5")).unwrap() + 1;
        assert_eq!(err.line, Some(expected));
        assert!(err.to_string().starts_with(&format!("bad.toml:{expected}: [idler] dark_per_gate")));

        let zero = preset_source("cooled").unwrap().replace("frames = 10_000_000", "frames = 0");
        assert_eq!(parse_scenario(&zero, "z").unwrap_err().kind, ScenarioErrorKind::Invariant);
    }

    #[test]
    fn raman_source_rescales_noise() {
        let src = preset_source("uncooled").unwrap().replace(
            "mu_noise_signal = 0.03\nmu_noise_idler = 0.04\n",
            "[source.raman]\nreference_temperature_k = 293.0\ntemperature_k = 77.0\n\
             detuning_ghz = 400.0\nmu_noise_signal_ref = 0.03\nmu_noise_idler_ref = 0.04\n",
        );
        let s = parse_scenario(&src, "raman").unwrap();
        assert!((s.brightness.mu_ns / 0.03 - 0.24).abs() < 0.005);
        assert!((s.brightness.mu_ni / 0.04 - 0.29).abs() < 0.005);
    }

    #[test]
    fn mixed_source_forms_are_rejected() {
        let src = preset_source("cooled").unwrap().replace("mu_noise_idler = 0.02\n", "");
        assert_eq!(parse_scenario(&src, "x").unwrap_err().kind, ScenarioErrorKind::Parse);
    }
}
