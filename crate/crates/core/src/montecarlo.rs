//! Seeded gate-by-gate Monte Carlo of the two-arm experiment.
//!
//! Each frame (one detector gate, one double pump pulse) draws correlated
//! pairs, Raman noise photons and dark counts, routes photons through the
//! analyzers, thins them by the arm transmittance and records which of the
//! three output slots fire on each port-a detector.
//!
//! Two engines realize the same frame distribution:
//!
//! - [`Engine::Direct`] follows the physical steps literally for every frame.
//! - [`Engine::Sparse`] (the default) thins every source down to the events
//!   that can make a port-a click, which by the Poisson colouring theorem are
//!   independent Poisson streams. It then jumps straight from one non-empty
//!   frame to the next with a geometric gap. Dark counts become Poisson
//!   events of mean `-ln(1 - d)`, which click with probability exactly `d`.
//!
//! Frames are grouped into fixed blocks of [`BLOCK_FRAMES`]. Block `b` draws
//! from a ChaCha8 stream `b` keyed by the scenario seed, so every frame's
//! randomness depends only on `(seed, frame index)` and tallies are identical
//! for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{transmittance, ChannelParams};
use crate::rates::SourceBrightness;
use crate::timebin_state::{
    joint_outcome_distribution, single_photon_distribution, PhaseConfig, Port, SingleOutcome,
    OUTPUT_SLOTS, SINGLE_OUTCOMES,
};

/// Frames per RNG stream. Part of the reproducibility contract: changing it
/// changes every tally.
pub const BLOCK_FRAMES: u64 = 1 << 16;

/// Everything needed to run one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub brightness: SourceBrightness,
    pub phases: PhaseConfig,
    pub signal_channel: ChannelParams,
    pub idler_channel: ChannelParams,
    /// Number of simulated gates.
    pub frames: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Config("frames must be >= 1".into()));
        }
        self.brightness.validate()?;
        self.phases.validate()?;
        self.signal_channel.validate()?;
        self.idler_channel.validate()
    }

    pub fn alpha_s(&self) -> f64 {
        transmittance(&self.signal_channel)
    }

    pub fn alpha_i(&self) -> f64 {
        transmittance(&self.idler_channel)
    }

    pub fn with_phases(self, phases: PhaseConfig) -> Self {
        Self { phases, ..self }
    }
}

/// Start-stop histogram and singles of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TallyCounters {
    /// Signal (start) detector clicks per output slot.
    pub singles_signal: [u64; OUTPUT_SLOTS],
    /// Idler (stop) detector clicks per output slot.
    pub singles_idler: [u64; OUTPUT_SLOTS],
    /// `[signal slot][idler slot]` same-frame coincidences.
    pub coincidences: [[u64; OUTPUT_SLOTS]; OUTPUT_SLOTS],
    pub frames_run: u64,
}

impl TallyCounters {
    pub fn merge(mut self, other: Self) -> Self {
        for j in 0..OUTPUT_SLOTS {
            self.singles_signal[j] += other.singles_signal[j];
            self.singles_idler[j] += other.singles_idler[j];
            for k in 0..OUTPUT_SLOTS {
                self.coincidences[j][k] += other.coincidences[j][k];
            }
        }
        self.frames_run += other.frames_run;
        self
    }

    pub fn singles_signal_total(&self) -> u64 {
        self.singles_signal.iter().sum()
    }

    pub fn singles_idler_total(&self) -> u64 {
        self.singles_idler.iter().sum()
    }

    /// Coincidence count for 1-based `(signal slot, idler slot)`.
    pub fn coincidence(&self, slot_pair: (u8, u8)) -> u64 {
        self.coincidences[slot_pair.0 as usize - 1][slot_pair.1 as usize - 1]
    }

    /// Record one frame given the 3-bit click masks of both detectors.
    fn record(&mut self, signal_mask: u8, idler_mask: u8) {
        for j in 0..OUTPUT_SLOTS {
            let s = (signal_mask >> j) & 1 == 1;
            self.singles_signal[j] += s as u64;
            self.singles_idler[j] += ((idler_mask >> j) & 1) as u64;
            if s {
                for k in 0..OUTPUT_SLOTS {
                    self.coincidences[j][k] += ((idler_mask >> k) & 1) as u64;
                }
            }
        }
    }
}

/// Coincidence rate (Hz) of a 1-based slot pair.
pub fn coincidence_rate_hz(t: &TallyCounters, slot_pair: (u8, u8), gate_rate_hz: f64) -> Result<f64> {
    if t.frames_run == 0 {
        return Err(Error::Config("tally has no frames".into()));
    }
    if !(1..=3).contains(&slot_pair.0) || !(1..=3).contains(&slot_pair.1) {
        return Err(Error::Domain(format!("slot pair out of range: {slot_pair:?}")));
    }
    Ok(t.coincidence(slot_pair) as f64 / t.frames_run as f64 * gate_rate_hz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Skip empty frames using thinned Poisson streams.
    #[default]
    Sparse,
    /// Draw every source in every frame.
    Direct,
}

/// SplitMix64 mix of a base seed with an index, for per-point sub-seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn slot_bit(o: SingleOutcome) -> u8 {
    1 << (o.slot() - 1)
}

/// Run the simulation with the default engine.
pub fn simulate(s: &Scenario) -> Result<TallyCounters> {
    simulate_with(s, Engine::Sparse)
}

pub fn simulate_with(s: &Scenario, engine: Engine) -> Result<TallyCounters> {
    s.validate()?;
    let blocks = s.frames.div_ceil(BLOCK_FRAMES);
    let block_len = |b: u64| BLOCK_FRAMES.min(s.frames - b * BLOCK_FRAMES);
    let tally = match engine {
        Engine::Direct => {
            let model = DirectModel::new(s)?;
            (0..blocks)
                .into_par_iter()
                .map(|b| model.run_block(&mut block_rng(s.seed, b), block_len(b)))
                .reduce(TallyCounters::default, TallyCounters::merge)
        }
        Engine::Sparse => {
            let model = SparseModel::new(s)?;
            (0..blocks)
                .into_par_iter()
                .map(|b| model.run_block(&mut block_rng(s.seed, b), block_len(b)))
                .reduce(TallyCounters::default, TallyCounters::merge)
        }
    };
    Ok(tally)
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean)
        .map(Some)
        .map_err(|e| Error::Config(format!("poisson mean {mean}: {e}")))
}

fn draw_count<R: Rng>(d: &Option<Poisson<f64>>, rng: &mut R) -> u64 {
    d.as_ref().map_or(0, |d| d.sample(rng) as u64)
}

/// Inverse-CDF draw from a discrete table of cumulative weights.
fn pick(cumulative: &[f64], u: f64) -> usize {
    let target = u * cumulative[cumulative.len() - 1];
    cumulative
        .iter()
        .position(|&c| target < c)
        .unwrap_or(cumulative.len() - 1)
}

fn cumulate(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    weights
        .into_iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

struct Arm {
    alpha: f64,
    dark: f64,
    noise: Option<Poisson<f64>>,
}

/// Literal per-frame realization.
struct DirectModel {
    pairs: Option<Poisson<f64>>,
    joint_cumulative: Vec<f64>,
    signal: Arm,
    idler: Arm,
    /// Cumulative outcome tables for a noise photon entering slot 1 and 2.
    noise_cumulative: [[Vec<f64>; 2]; 2],
}

impl DirectModel {
    fn new(s: &Scenario) -> Result<Self> {
        let joint = joint_outcome_distribution(&s.phases);
        let single = |theta: f64| -> Result<[Vec<f64>; 2]> {
            Ok([
                cumulate(single_photon_distribution(1, theta)?),
                cumulate(single_photon_distribution(2, theta)?),
            ])
        };
        Ok(Self {
            // Two pulses per frame, mu_c pairs each.
            pairs: poisson(2.0 * s.brightness.mu_c)?,
            joint_cumulative: cumulate(joint.table().iter().flatten().copied()),
            signal: Arm {
                alpha: s.alpha_s(),
                dark: s.signal_channel.detector.dark_count_per_gate,
                noise: poisson(s.brightness.mu_ns)?,
            },
            idler: Arm {
                alpha: s.alpha_i(),
                dark: s.idler_channel.detector.dark_count_per_gate,
                noise: poisson(s.brightness.mu_ni)?,
            },
            noise_cumulative: [single(s.phases.theta_s)?, single(s.phases.theta_i)?],
        })
    }

    fn detect<R: Rng>(o: SingleOutcome, alpha: f64, rng: &mut R) -> u8 {
        // The transmittance draw is made for every photon to keep the stream layout fixed.
        let survives = rng.random::<f64>() < alpha;
        if o.port() == Port::A && survives {
            slot_bit(o)
        } else {
            0
        }
    }

    fn arm_noise_and_darks<R: Rng>(arm: &Arm, cumulative: &[Vec<f64>; 2], rng: &mut R) -> u8 {
        let mut mask = 0;
        for table in cumulative {
            for _ in 0..draw_count(&arm.noise, rng) {
                let o = SingleOutcome::from_index(pick(table, rng.random()));
                mask |= Self::detect(o, arm.alpha, rng);
            }
        }
        for j in 0..OUTPUT_SLOTS {
            if rng.random::<f64>() < arm.dark {
                mask |= 1 << j;
            }
        }
        mask
    }

    fn run_block<R: Rng>(&self, rng: &mut R, frames: u64) -> TallyCounters {
        let mut tally = TallyCounters { frames_run: frames, ..Default::default() };
        for _ in 0..frames {
            let (mut sm, mut im) = (0u8, 0u8);
            for _ in 0..draw_count(&self.pairs, rng) {
                let idx = pick(&self.joint_cumulative, rng.random());
                let os = SingleOutcome::from_index(idx / SINGLE_OUTCOMES);
                let oi = SingleOutcome::from_index(idx % SINGLE_OUTCOMES);
                sm |= Self::detect(os, self.signal.alpha, rng);
                im |= Self::detect(oi, self.idler.alpha, rng);
            }
            sm |= Self::arm_noise_and_darks(&self.signal, &self.noise_cumulative[0], rng);
            im |= Self::arm_noise_and_darks(&self.idler, &self.noise_cumulative[1], rng);
            tally.record(sm, im);
        }
        tally
    }
}

/// A thinned event stream: Poisson rate per frame and the clicks it causes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventClass {
    pub rate: f64,
    pub signal_mask: u8,
    pub idler_mask: u8,
}

/// Thinned per-frame event classes for a scenario. Classes that cannot
/// produce a port-a click are dropped.
pub fn event_classes(s: &Scenario) -> Result<Vec<EventClass>> {
    let alpha_s = s.alpha_s();
    let alpha_i = s.alpha_i();
    let mut classes = Vec::new();

    // Pairs: index 0 = not detected, 1..=3 = detected in that slot.
    let mut pair = [[0.0f64; 4]; 4];
    for (os, oi, p) in joint_outcome_distribution(&s.phases).iter() {
        let ps = if os.port() == Port::A { alpha_s } else { 0.0 };
        let pi = if oi.port() == Port::A { alpha_i } else { 0.0 };
        let (js, ji) = (os.slot() as usize, oi.slot() as usize);
        pair[js][ji] += p * ps * pi;
        pair[js][0] += p * ps * (1.0 - pi);
        pair[0][ji] += p * (1.0 - ps) * pi;
    }
    let pair_rate = 2.0 * s.brightness.mu_c;
    for (js, row) in pair.iter().enumerate() {
        for (ji, &p) in row.iter().enumerate() {
            if p > 0.0 {
                classes.push(EventClass {
                    rate: pair_rate * p,
                    signal_mask: if js > 0 { 1 << (js - 1) } else { 0 },
                    idler_mask: if ji > 0 { 1 << (ji - 1) } else { 0 },
                });
            }
        }
    }

    let arms = [
        (s.brightness.mu_ns, alpha_s, s.phases.theta_s, &s.signal_channel, true),
        (s.brightness.mu_ni, alpha_i, s.phases.theta_i, &s.idler_channel, false),
    ];
    for (mu_n, alpha, theta, channel, is_signal) in arms {
        let d1 = single_photon_distribution(1, theta)?;
        let d2 = single_photon_distribution(2, theta)?;
        let dark_rate = -(-channel.detector.dark_count_per_gate).ln_1p();
        for slot in 1..=OUTPUT_SLOTS as u8 {
            let idx = SingleOutcome::new(slot, Port::A)?.index();
            let rate = mu_n * alpha * (d1[idx] + d2[idx]) + dark_rate;
            if rate > 0.0 {
                let mask = 1 << (slot - 1);
                classes.push(EventClass {
                    rate,
                    signal_mask: if is_signal { mask } else { 0 },
                    idler_mask: if is_signal { 0 } else { mask },
                });
            }
        }
    }
    Ok(classes)
}

struct SparseModel {
    classes: Vec<EventClass>,
    cumulative: Vec<f64>,
    total_rate: f64,
    /// Probability that a frame holds at least one event.
    p_nonempty: f64,
    gap: Option<Geometric>,
    dense: Option<Poisson<f64>>,
}

impl SparseModel {
    /// Above this total rate almost every frame is non-empty and per-frame
    /// Poisson draws are cheaper than gap sampling.
    const DENSE_RATE: f64 = 1.0;

    fn new(s: &Scenario) -> Result<Self> {
        let classes = event_classes(s)?;
        let cumulative = cumulate(classes.iter().map(|c| c.rate));
        let total_rate: f64 = cumulative.last().copied().unwrap_or(0.0);
        let p_nonempty = -(-total_rate).exp_m1();
        let (gap, dense) = if total_rate == 0.0 {
            (None, None)
        } else if total_rate < Self::DENSE_RATE {
            let g = Geometric::new(p_nonempty)
                .map_err(|e| Error::Config(format!("geometric p {p_nonempty}: {e}")))?;
            (Some(g), None)
        } else {
            (None, poisson(total_rate)?)
        };
        Ok(Self { classes, cumulative, total_rate, p_nonempty, gap, dense })
    }

    /// Event count of a frame known to be non-empty (zero-truncated Poisson).
    fn truncated_count<R: Rng>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let mut k = 1u64;
        let mut term = self.total_rate * (-self.total_rate).exp() / self.p_nonempty;
        let mut cdf = term;
        while u >= cdf && k < 10_000 {
            k += 1;
            term *= self.total_rate / k as f64;
            if term == 0.0 {
                break;
            }
            cdf += term;
        }
        k
    }

    fn frame<R: Rng>(&self, tally: &mut TallyCounters, events: u64, rng: &mut R) {
        let (mut sm, mut im) = (0u8, 0u8);
        for _ in 0..events {
            let c = &self.classes[pick(&self.cumulative, rng.random())];
            sm |= c.signal_mask;
            im |= c.idler_mask;
        }
        tally.record(sm, im);
    }

    fn run_block<R: Rng>(&self, rng: &mut R, frames: u64) -> TallyCounters {
        let mut tally = TallyCounters { frames_run: frames, ..Default::default() };
        if let Some(gap) = &self.gap {
            let mut pos = 0u64;
            loop {
                pos = pos.saturating_add(gap.sample(rng));
                if pos >= frames {
                    break;
                }
                let n = self.truncated_count(rng);
                self.frame(&mut tally, n, rng);
                pos += 1;
            }
        } else if let Some(dense) = &self.dense {
            for _ in 0..frames {
                let n = dense.sample(rng) as u64;
                if n > 0 {
                    self.frame(&mut tally, n, rng);
                }
            }
        }
        // Empty frames record nothing.
        tally
    }
}
