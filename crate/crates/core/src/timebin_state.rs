//! Amplitude algebra for the time-bin entangled pair and the two 1-bit-delay
//! Mach-Zehnder analyzers.
//!
//! The source emits `(|1>_s|1>_i + e^{i phi}|2>_s|2>_i) / sqrt(2)`. Each
//! analyzer maps an input slot `k` to
//! `(|k,a> - |k,b> + e^{i theta}|k+1,a> + e^{i theta}|k+1,b>) / 2`.
//! Joint amplitudes are built by tensoring those branches, and probabilities
//! are only taken at the very end.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of output time slots reachable from input slots {1, 2}.
pub const OUTPUT_SLOTS: usize = 3;
/// Distinct single-photon outcomes: 3 slots x 2 ports.
pub const SINGLE_OUTCOMES: usize = OUTPUT_SLOTS * 2;

/// Source and analyzer phases, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseConfig {
    /// Relative phase between the two pump pulses' contributions (twice the pump phase difference).
    pub phi: f64,
    /// Signal analyzer path phase.
    pub theta_s: f64,
    /// Idler analyzer path phase.
    pub theta_i: f64,
}

impl PhaseConfig {
    pub fn new(phi: f64, theta_s: f64, theta_i: f64) -> Self {
        Self { phi, theta_s, theta_i }
    }

    /// `theta_s + theta_i`, the only analyzer combination the coincidences see.
    pub fn theta_total(&self) -> f64 {
        self.theta_s + self.theta_i
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi.is_finite() && self.theta_s.is_finite() && self.theta_i.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("phases must be finite: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Port {
    A,
    B,
}

/// Detection slot (1..=3) and analyzer port of one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SingleOutcome {
    slot: u8,
    port: Port,
}

impl SingleOutcome {
    pub fn new(slot: u8, port: Port) -> Result<Self> {
        if (1..=OUTPUT_SLOTS as u8).contains(&slot) {
            Ok(Self { slot, port })
        } else {
            Err(Error::Domain(format!("output slot must be in 1..=3, got {slot}")))
        }
    }

    pub fn slot(&self) -> u8 {
        self.slot
    }

    pub fn port(&self) -> Port {
        self.port
    }

    /// Dense index in `0..6`: `(slot - 1) * 2 + port`.
    pub fn index(&self) -> usize {
        (self.slot as usize - 1) * 2 + if self.port == Port::A { 0 } else { 1 }
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < SINGLE_OUTCOMES, "outcome index {index} out of range");
        Self {
            slot: (index / 2) as u8 + 1,
            port: if index.is_multiple_of(2) { Port::A } else { Port::B },
        }
    }

    pub fn all() -> impl Iterator<Item = SingleOutcome> {
        (0..SINGLE_OUTCOMES).map(Self::from_index)
    }
}

fn check_input_slot(input_slot: u8) -> Result<()> {
    if input_slot == 1 || input_slot == 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("input slot must be 1 or 2, got {input_slot}")))
    }
}

/// The four analyzer branches of a photon entering in `input_slot`.
fn analyzer_branches(input_slot: u8, theta: f64) -> [(SingleOutcome, Complex64); 4] {
    let half = Complex64::new(0.5, 0.0);
    let delayed = Complex64::from_polar(0.5, theta);
    let k = input_slot;
    [
        (SingleOutcome { slot: k, port: Port::A }, half),
        (SingleOutcome { slot: k, port: Port::B }, -half),
        (SingleOutcome { slot: k + 1, port: Port::A }, delayed),
        (SingleOutcome { slot: k + 1, port: Port::B }, delayed),
    ]
}

/// Amplitudes of one photon after its analyzer, indexed by [`SingleOutcome::index`].
pub fn single_photon_amplitudes(input_slot: u8, theta: f64) -> Result<[Complex64; SINGLE_OUTCOMES]> {
    check_input_slot(input_slot)?;
    let mut amps = [Complex64::new(0.0, 0.0); SINGLE_OUTCOMES];
    for (outcome, amp) in analyzer_branches(input_slot, theta) {
        amps[outcome.index()] += amp;
    }
    Ok(amps)
}

/// Outcome probabilities of a single photon entering the analyzer in `input_slot`.
pub fn single_photon_distribution(input_slot: u8, theta: f64) -> Result<[f64; SINGLE_OUTCOMES]> {
    Ok(single_photon_amplitudes(input_slot, theta)?.map(|a| a.norm_sqr()))
}

/// Two-photon amplitudes after both analyzers, `[signal][idler]`.
pub fn joint_amplitudes(pc: &PhaseConfig) -> [[Complex64; SINGLE_OUTCOMES]; SINGLE_OUTCOMES] {
    let components = [
        (1u8, Complex64::new(FRAC_1_SQRT_2, 0.0)),
        (2u8, Complex64::from_polar(FRAC_1_SQRT_2, pc.phi)),
    ];
    let mut amps = [[Complex64::new(0.0, 0.0); SINGLE_OUTCOMES]; SINGLE_OUTCOMES];
    for (slot, coeff) in components {
        for (os, a_s) in analyzer_branches(slot, pc.theta_s) {
            for (oi, a_i) in analyzer_branches(slot, pc.theta_i) {
                amps[os.index()][oi.index()] += coeff * a_s * a_i;
            }
        }
    }
    amps
}

/// Probability distribution over the 36 (signal outcome, idler outcome) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcomeDistribution {
    probabilities: [[f64; SINGLE_OUTCOMES]; SINGLE_OUTCOMES],
}

impl JointOutcomeDistribution {
    pub fn get(&self, signal: SingleOutcome, idler: SingleOutcome) -> f64 {
        self.probabilities[signal.index()][idler.index()]
    }

    /// Dense `[signal][idler]` table indexed by [`SingleOutcome::index`].
    pub fn table(&self) -> &[[f64; SINGLE_OUTCOMES]; SINGLE_OUTCOMES] {
        &self.probabilities
    }

    pub fn iter(&self) -> impl Iterator<Item = (SingleOutcome, SingleOutcome, f64)> + '_ {
        SingleOutcome::all().flat_map(move |s| {
            SingleOutcome::all().map(move |i| (s, i, self.get(s, i)))
        })
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().flatten().sum()
    }

    pub fn signal_marginal(&self) -> [f64; SINGLE_OUTCOMES] {
        self.probabilities.map(|row| row.iter().sum())
    }

    pub fn idler_marginal(&self) -> [f64; SINGLE_OUTCOMES] {
        let mut m = [0.0; SINGLE_OUTCOMES];
        for row in &self.probabilities {
            for (acc, p) in m.iter_mut().zip(row) {
                *acc += p;
            }
        }
        m
    }
}

pub fn joint_outcome_distribution(pc: &PhaseConfig) -> JointOutcomeDistribution {
    let amps = joint_amplitudes(pc);
    JointOutcomeDistribution {
        probabilities: amps.map(|row| row.map(|a| a.norm_sqr())),
    }
}

/// Probability that both photons land in the middle slot on the given ports.
///
/// Equal ports give `(1 + cos(theta_s + theta_i - phi)) / 16`, unequal ports
/// the complementary `(1 - cos(...)) / 16`.
pub fn coincidence_probability_slot2(pc: &PhaseConfig, port_s: Port, port_i: Port) -> f64 {
    let s = SingleOutcome { slot: 2, port: port_s };
    let i = SingleOutcome { slot: 2, port: port_i };
    joint_amplitudes(pc)[s.index()][i.index()].norm_sqr()
}
