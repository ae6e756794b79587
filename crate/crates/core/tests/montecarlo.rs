//! Statistical checks of the Monte Carlo against closed-form oracles and
//! between its two engines.

use std::f64::consts::PI;

use proptest::prelude::*;

use timebin_sim::cli::presets::preset_source;
use timebin_sim::cli::scenario_file::parse_scenario;
use timebin_sim::fringe::{equally_spaced_phases, fit_visibility, sweep, SweepMode};
use timebin_sim::link::{ChannelParams, DetectorParams};
use timebin_sim::montecarlo::{simulate, simulate_with, Engine, Scenario, TallyCounters};
use timebin_sim::rates::{accidental_rate, correlated_rate, fringe_rate, visibility, SourceBrightness};
use timebin_sim::timebin_state::PhaseConfig;

fn preset(name: &str) -> Scenario {
    parse_scenario(preset_source(name).unwrap(), name).unwrap()
}

fn analytic_rates(s: &Scenario) -> (f64, f64) {
    let (a_s, a_i) = (s.alpha_s(), s.alpha_i());
    (
        correlated_rate(s.brightness.mu_c, a_s, a_i),
        accidental_rate(
            &s.brightness,
            a_s,
            a_i,
            s.signal_channel.detector.dark_count_per_gate,
            s.idler_channel.detector.dark_count_per_gate,
        ),
    )
}

/// Deviation in units of the Poisson sigma of the expected count (floored at
/// one count so near-empty cells are not judged on a vanishing sigma).
fn pull(count: u64, expected_per_frame: f64, frames: u64) -> f64 {
    let expected = expected_per_frame * frames as f64;
    (count as f64 - expected) / expected.max(1.0).sqrt()
}

type Observable = (&'static str, fn(&TallyCounters) -> u64);

fn at_total_phase(s: Scenario, theta: f64) -> Scenario {
    s.with_phases(PhaseConfig { theta_i: theta - s.phases.theta_s, ..s.phases })
}

#[test]
fn cooled_constructive_and_destructive_match_rates() {
    let base = Scenario { frames: 100_000_000, ..preset("cooled") };
    let (r_c, r_acc) = analytic_rates(&base);

    let constructive = simulate(&at_total_phase(base, base.phases.phi)).unwrap();
    let z = pull(constructive.coincidence((2, 2)), r_c + r_acc, base.frames);
    assert!(z.abs() < 3.0, "constructive pull {z}");

    let destructive = simulate(&at_total_phase(base, base.phases.phi + PI)).unwrap();
    let z = pull(destructive.coincidence((2, 2)), r_acc, base.frames);
    assert!(z.abs() < 3.0, "destructive pull {z}");
}

#[test]
fn direct_engine_matches_rates_at_constructive_phase() {
    let s = Scenario { frames: 20_000_000, ..preset("cooled") };
    let (r_c, r_acc) = analytic_rates(&s);
    let t = simulate_with(&s, Engine::Direct).unwrap();
    let z = pull(t.coincidence((2, 2)), r_c + r_acc, s.frames);
    assert!(z.abs() < 4.0, "pull {z}");
}

fn bright_scenario(phases: PhaseConfig, seed: u64) -> Scenario {
    let ch = |eta, dark| ChannelParams {
        fixed_loss_db: 1.0,
        fiber_length_km: 0.0,
        fiber_loss_db_per_km: 0.2,
        detector: DetectorParams { efficiency: eta, dark_count_per_gate: dark, gate_rate_hz: 4e6 },
    };
    Scenario {
        brightness: SourceBrightness::new(0.3, 0.2, 0.1).unwrap(),
        phases,
        signal_channel: ch(0.6, 0.02),
        idler_channel: ch(0.5, 0.01),
        frames: 1_000_000,
        seed,
    }
}

fn two_sample_z(a: u64, b: u64) -> f64 {
    if a + b == 0 {
        0.0
    } else {
        (a as f64 - b as f64) / ((a + b) as f64).sqrt()
    }
}

fn all_counts(t: &TallyCounters) -> Vec<u64> {
    let mut v: Vec<u64> = t.coincidences.iter().flatten().copied().collect();
    v.extend(t.singles_signal);
    v.extend(t.singles_idler);
    v
}

/// The sparse engine is a re-sampling of the direct one; at high rates
/// (multi-photon saturation, many dark counts) every cell must agree.
#[test]
fn sparse_and_direct_engines_agree_at_high_rates() {
    for (k, pc) in [PhaseConfig::new(0.0, 0.0, 0.0), PhaseConfig::new(0.4, 1.3, 2.0)].into_iter().enumerate() {
        let sparse = simulate_with(&bright_scenario(pc, 11 + k as u64), Engine::Sparse).unwrap();
        let direct = simulate_with(&bright_scenario(pc, 97 + k as u64), Engine::Direct).unwrap();
        for (a, b) in all_counts(&sparse).into_iter().zip(all_counts(&direct)) {
            let z = two_sample_z(a, b);
            assert!(z.abs() < 5.0, "sparse {a} vs direct {b}: z = {z}");
        }
    }
}

/// Noise and darks only: slot j of the signal detector fires with
/// probability 1 - (1 - d) exp(-mu_ns alpha w_j), with w = (1/4, 1/2, 1/4)
/// the port-a weight of the slot summed over both input pulses.
#[test]
fn noise_only_singles_match_exact_click_probability() {
    let mut s = bright_scenario(PhaseConfig::default(), 5);
    s.brightness = SourceBrightness::new(0.0, 0.4, 0.0).unwrap();
    let alpha = s.alpha_s();
    let d = s.signal_channel.detector.dark_count_per_gate;
    for engine in [Engine::Sparse, Engine::Direct] {
        let t = simulate_with(&s, engine).unwrap();
        for (j, w) in [0.25, 0.5, 0.25].into_iter().enumerate() {
            let p = 1.0 - (1.0 - d) * (-0.4 * alpha * w).exp();
            let n = s.frames as f64;
            let z = (t.singles_signal[j] as f64 - n * p) / (n * p * (1.0 - p)).sqrt();
            assert!(z.abs() < 4.0, "{engine:?} slot {}: z = {z}", j + 1);
        }
    }
}

#[test]
fn tallies_are_identical_across_worker_counts() {
    let s = Scenario { frames: 3_000_000, ..preset("uncooled") };
    let run = |threads: usize, engine: Engine| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_with(&s, engine).unwrap())
    };
    for engine in [Engine::Sparse, Engine::Direct] {
        let one = run(1, engine);
        assert_eq!(one, run(4, engine));
        assert_eq!(one, run(8, engine));
    }
}

#[test]
fn outer_slots_and_singles_are_phase_independent() {
    let s = Scenario { frames: 20_000_000, ..preset("cooled") };
    let thetas = equally_spaced_phases(12);
    let tallies: Vec<TallyCounters> = thetas
        .iter()
        .enumerate()
        .map(|(k, &t)| simulate(&Scenario { seed: 1000 + k as u64, ..at_total_phase(s, t) }).unwrap())
        .collect();
    let observables: [Observable; 4] = [
        ("(1,1)", |t| t.coincidence((1, 1))),
        ("(3,3)", |t| t.coincidence((3, 3))),
        ("signal singles", |t| t.singles_signal_total()),
        ("idler singles", |t| t.singles_idler_total()),
    ];
    for (name, f) in observables {
        let counts: Vec<u64> = tallies.iter().map(f).collect();
        let max = *counts.iter().max().unwrap();
        let min = *counts.iter().min().unwrap();
        let sigma = ((max + min) as f64).sqrt().max(1.0);
        assert!(((max - min) as f64) < 4.0 * sigma, "{name}: max {max} min {min}");
    }
    // The middle slot is not phase independent.
    let mid: Vec<u64> = tallies.iter().map(|t| t.coincidence((2, 2))).collect();
    assert!(mid[0] > 5 * mid[6], "{mid:?}");
}

#[test]
fn more_loss_means_fewer_counts() {
    let base = bright_scenario(PhaseConfig::default(), 3);
    let means: Vec<(u64, u64, u64)> = [0.0, 3.0, 6.0]
        .into_iter()
        .enumerate()
        .map(|(k, loss)| {
            let mut s = Scenario { frames: 10_000_000, seed: 50 + k as u64, ..base };
            s.signal_channel.fixed_loss_db = loss;
            s.idler_channel.fixed_loss_db = loss;
            let t = simulate(&s).unwrap();
            (t.singles_signal_total(), t.singles_idler_total(), t.coincidence((2, 2)))
        })
        .collect();
    for w in means.windows(2) {
        for (hi, lo) in [(w[0].0, w[1].0), (w[0].1, w[1].1), (w[0].2, w[1].2)] {
            let z = two_sample_z(hi, lo);
            assert!(z > 4.0, "{hi} -> {lo} not a 4-sigma decrease");
        }
    }
}

#[test]
fn monte_carlo_visibility_is_covered_by_fit_sigma() {
    let base = preset("cooled");
    let (r_c, r_acc) = analytic_rates(&base);
    let v_true = visibility(r_c, r_acc).unwrap();
    let thetas = equally_spaced_phases(12);
    let covered = (0..100u64)
        .filter(|&rep| {
            let s = Scenario { seed: 0xC0FFEE + rep, ..base };
            let fit = fit_visibility(&sweep(&s, &thetas, SweepMode::MonteCarlo).unwrap()).unwrap();
            (fit.visibility - v_true).abs() <= 3.0 * fit.fit_sigma_v
        })
        .count();
    assert!(covered >= 99, "covered {covered}/100");
}

fn realistic_scenario() -> impl Strategy<Value = Scenario> {
    let ch = (3.0..15.0f64, 0.02..0.2f64, 0.0..1e-4f64).prop_map(|(loss, eta, dark)| ChannelParams {
        fixed_loss_db: loss,
        fiber_length_km: 0.0,
        fiber_loss_db_per_km: 0.2,
        detector: DetectorParams { efficiency: eta, dark_count_per_gate: dark, gate_rate_hz: 4e6 },
    });
    (
        (0.005..0.1f64, 0.0..0.1f64, 0.0..0.1f64),
        (-PI..PI, -PI..PI, -PI..PI),
        ch.clone(),
        ch,
        any::<u64>(),
    )
        .prop_map(|(mu, ph, sig, idl, seed)| Scenario {
            brightness: SourceBrightness::new(mu.0, mu.1, mu.2).unwrap(),
            phases: PhaseConfig::new(ph.0, ph.1, ph.2),
            signal_channel: sig,
            idler_channel: idl,
            frames: 10_000_000,
            seed,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn middle_slot_rate_matches_fringe_formula(s in realistic_scenario()) {
        let (r_c, r_acc) = analytic_rates(&s);
        let expected = fringe_rate(r_c, r_acc, s.phases.theta_total(), s.phases.phi);
        let t = simulate(&s).unwrap();
        let z = pull(t.coincidence((2, 2)), expected, s.frames);
        prop_assert!(z.abs() < 4.0, "pull {}", z);
    }
}
