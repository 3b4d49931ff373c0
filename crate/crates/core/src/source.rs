//! SPDC emission statistics for CW and pulsed pumps, pair separation,
//! and the coincidence-based conversion-efficiency estimator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::constants::{PLANCK, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("invalid source config: {0}")]
    InvalidConfig(String),
    #[error("efficiency estimate undefined: coincidence rate is zero")]
    UndefinedEstimate,
    #[error("negative rate passed to estimator: {0}")]
    NegativeRate(f64),
}

/// Per-pulse pair-number statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairStatistics {
    /// Multimode parametric fluorescence (default).
    #[default]
    Poisson,
    /// Single-mode (Bose-Einstein) statistics, for sensitivity studies.
    Thermal,
}

/// Pump operating mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpMode {
    Cw,
    Pulsed {
        repetition_rate_hz: f64,
        pulse_duration_s: f64,
    },
}

/// Source configuration: conversion efficiency and pump parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceConfig {
    /// Conversion efficiency η, pairs per pump photon.
    pub efficiency: f64,
    /// Pump power, W (mean power for pulsed operation).
    pub pump_power_w: f64,
    /// Pump wavelength, m.
    pub pump_wavelength_m: f64,
    pub mode: PumpMode,
    pub statistics: PairStatistics,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<(), SourceError> {
        if !(0.0..1.0).contains(&self.efficiency) {
            return Err(SourceError::InvalidConfig(format!(
                "efficiency must be in [0, 1), got {}",
                self.efficiency
            )));
        }
        if !(self.pump_power_w >= 0.0) {
            return Err(SourceError::InvalidConfig(format!(
                "pump power must be nonnegative, got {}",
                self.pump_power_w
            )));
        }
        if !(self.pump_wavelength_m > 0.0) {
            return Err(SourceError::InvalidConfig(format!(
                "pump wavelength must be positive, got {}",
                self.pump_wavelength_m
            )));
        }
        if let PumpMode::Pulsed {
            repetition_rate_hz,
            pulse_duration_s,
        } = self.mode
        {
            if !(repetition_rate_hz > 0.0) {
                return Err(SourceError::InvalidConfig(
                    "repetition rate must be positive".to_string(),
                ));
            }
            if !(pulse_duration_s > 0.0 && pulse_duration_s < 1.0 / repetition_rate_hz) {
                return Err(SourceError::InvalidConfig(
                    "pulse duration must be positive and below the pulse period".to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Pair creation rate η·N_P for CW operation, pairs/s.
    pub fn pair_rate_hz(&self) -> f64 {
        self.efficiency * pump_photon_rate(self.pump_power_w, self.pump_wavelength_m)
    }

    /// Mean pairs per pulse µ = η · photons-per-pulse (pulsed only).
    pub fn mean_pairs_per_pulse(&self) -> Option<f64> {
        match self.mode {
            PumpMode::Pulsed {
                repetition_rate_hz, ..
            } => Some(
                self.efficiency
                    * photons_per_pulse(
                        self.pump_power_w,
                        repetition_rate_hz,
                        self.pump_wavelength_m,
                    ),
            ),
            PumpMode::Cw => None,
        }
    }
}

/// A created photon pair: emission time, pulse of origin (−1 for CW)
/// and a stream-unique id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEvent {
    pub time_s: f64,
    pub pulse_index: i64,
    pub pair_id: u64,
}

/// One photon of a pair en route to a detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Photon {
    pub time_s: f64,
    pub pair_id: u64,
}

/// Number of pump photons injected per second: N_P = P·λ/(h·c).
pub fn pump_photon_rate(power_w: f64, wavelength_m: f64) -> f64 {
    power_w * wavelength_m / (PLANCK * SPEED_OF_LIGHT)
}

/// Pump photons per pulse for a pulsed pump of the given mean power.
pub fn photons_per_pulse(mean_power_w: f64, repetition_rate_hz: f64, wavelength_m: f64) -> f64 {
    pump_photon_rate(mean_power_w, wavelength_m) / repetition_rate_hz
}

/// Conversion efficiency from net count rates and pump parameters:
///
/// ```text
/// η = S1·S2/(2·R_C) · h·c/(P_P·λ_P)
/// ```
///
/// The factor 2 accounts for the pairs that are not split at the 50/50
/// beam-splitter. All rates must be net (noise-subtracted).
pub fn estimate_efficiency(
    s1_hz: f64,
    s2_hz: f64,
    rc_hz: f64,
    pump_power_w: f64,
    pump_wavelength_m: f64,
) -> Result<f64, SourceError> {
    for r in [s1_hz, s2_hz, rc_hz] {
        if r < 0.0 {
            return Err(SourceError::NegativeRate(r));
        }
    }
    if rc_hz == 0.0 {
        return Err(SourceError::UndefinedEstimate);
    }
    let n_p = pump_photon_rate(pump_power_w, pump_wavelength_m);
    Ok(s1_hz * s2_hz / (2.0 * rc_hz) / n_p)
}

/// How far to generate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    /// CW: simulated duration in seconds.
    Duration(f64),
    /// Pulsed: number of pump pulses.
    Pulses(u64),
}

/// Derive a stream-independent sub-seed for a chunk (splitmix64 step).
pub fn chunk_seed(master: u64, chunk: u64) -> u64 {
    let mut z = master.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(chunk.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn sample_pair_count<R: Rng>(rng: &mut R, mean: f64, statistics: PairStatistics) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match statistics {
        PairStatistics::Poisson => Poisson::new(mean).expect("positive mean").sample(rng) as u64,
        PairStatistics::Thermal => {
            // Bose-Einstein: P(n) = µⁿ/(1+µ)^(n+1); inverse CDF
            let u: f64 = rng.random();
            (u.ln() / (mean / (1.0 + mean)).ln()).floor() as u64
        }
    }
}

/// Generate a time-ordered emission stream.
///
/// CW: a homogeneous Poisson process at rate η·N_P. Pulsed: per-pulse
/// pair counts drawn from the configured statistics with mean
/// µ = η·photons-per-pulse, emission times uniform within the pulse
/// window. Deterministic given the seed.
pub fn generate_emissions(
    config: &SourceConfig,
    extent: Extent,
    seed: u64,
) -> Result<Vec<PairEvent>, SourceError> {
    config.validate()?;
    match (config.mode, extent) {
        (PumpMode::Cw, Extent::Duration(duration_s)) => {
            Ok(generate_cw_window(config, 0.0, duration_s, 0, seed))
        }
        (PumpMode::Pulsed { .. }, Extent::Pulses(n)) => {
            Ok(generate_pulse_range(config, 0, n, seed))
        }
        (PumpMode::Cw, Extent::Pulses(_)) => Err(SourceError::InvalidConfig(
            "CW source needs a duration extent".to_string(),
        )),
        (PumpMode::Pulsed { .. }, Extent::Duration(d)) => {
            let PumpMode::Pulsed {
                repetition_rate_hz, ..
            } = config.mode
            else {
                unreachable!()
            };
            Ok(generate_pulse_range(
                config,
                0,
                (d * repetition_rate_hz).floor() as u64,
                seed,
            ))
        }
    }
}

/// CW emissions restricted to the window `[t0, t1)`. Pair ids start at
/// `first_pair_id`. Disjoint windows with sub-seeds derived via
/// [`chunk_seed`] can be generated concurrently and concatenated.
pub fn generate_cw_window(
    config: &SourceConfig,
    t0_s: f64,
    t1_s: f64,
    first_pair_id: u64,
    seed: u64,
) -> Vec<PairEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = config.pair_rate_hz();
    let span = t1_s - t0_s;
    if rate <= 0.0 || span <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(rate * span)
        .expect("positive mean")
        .sample(&mut rng) as usize;
    let mut times: Vec<f64> = (0..n).map(|_| t0_s + rng.random::<f64>() * span).collect();
    times.sort_by(f64::total_cmp);
    times
        .into_iter()
        .enumerate()
        .map(|(i, time_s)| PairEvent {
            time_s,
            pulse_index: -1,
            pair_id: first_pair_id + i as u64,
        })
        .collect()
}

/// Pulsed emissions for pulses `[first_pulse, first_pulse + n)`.
/// Deterministic per (seed); disjoint ranges may be generated with
/// sub-seeds and concatenated in pulse order.
pub fn generate_pulse_range(
    config: &SourceConfig,
    first_pulse: u64,
    n_pulses: u64,
    seed: u64,
) -> Vec<PairEvent> {
    let PumpMode::Pulsed {
        repetition_rate_hz,
        pulse_duration_s,
    } = config.mode
    else {
        return Vec::new();
    };
    let mu = config.mean_pairs_per_pulse().unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = 1.0 / repetition_rate_hz;
    let mut events = Vec::new();
    let mut pair_id = 0u64;
    for p in 0..n_pulses {
        let pulse = first_pulse + p;
        let count = sample_pair_count(&mut rng, mu, config.statistics);
        if count == 0 {
            continue;
        }
        let start = pulse as f64 * period;
        let mut times: Vec<f64> = (0..count)
            .map(|_| start + rng.random::<f64>() * pulse_duration_s)
            .collect();
        times.sort_by(f64::total_cmp);
        for time_s in times {
            events.push(PairEvent {
                time_s,
                pulse_index: pulse as i64,
                pair_id,
            });
            pair_id += 1;
        }
    }
    events
}

/// Route each photon of each pair independently to arm 1 or arm 2 with
/// probability 1/2 (50/50 fiber beam-splitter). A pair splits to
/// different arms with probability 1/2.
pub fn split_pairs(events: &[PairEvent], seed: u64) -> (Vec<Photon>, Vec<Photon>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arm1 = Vec::new();
    let mut arm2 = Vec::new();
    for e in events {
        for _ in 0..2 {
            let photon = Photon {
                time_s: e.time_s,
                pair_id: e.pair_id,
            };
            if rng.random::<bool>() {
                arm1.push(photon);
            } else {
                arm2.push(photon);
            }
        }
    }
    (arm1, arm2)
}

/// Deterministic signal/idler separation: every pair contributes
/// exactly one photon to each arm (e.g. wavelength-division splitting
/// of a non-degenerate source).
pub fn separate_pairs_deterministic(events: &[PairEvent]) -> (Vec<Photon>, Vec<Photon>) {
    let photons: Vec<Photon> = events
        .iter()
        .map(|e| Photon {
            time_s: e.time_s,
            pair_id: e.pair_id,
        })
        .collect();
    (photons.clone(), photons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cw_config(efficiency: f64) -> SourceConfig {
        SourceConfig {
            efficiency,
            pump_power_w: 1e-6,
            pump_wavelength_m: 657e-9,
            mode: PumpMode::Cw,
            statistics: PairStatistics::Poisson,
        }
    }

    fn pulsed_config(mu: f64) -> SourceConfig {
        // express µ through efficiency at fixed pump parameters
        let photons = photons_per_pulse(1e-6, 80e6, 657e-9);
        SourceConfig {
            efficiency: mu / photons,
            pump_power_w: 1e-6,
            pump_wavelength_m: 657e-9,
            mode: PumpMode::Pulsed {
                repetition_rate_hz: 80e6,
                pulse_duration_s: 400e-12,
            },
            statistics: PairStatistics::Poisson,
        }
    }

    #[test]
    fn pump_photon_rate_reference_value() {
        // 1 µW at 657 nm: 1e-6·657e-9/(hc) = 3.307e12 /s
        assert_relative_eq!(
            pump_photon_rate(1e-6, 657e-9),
            3.307e12,
            max_relative = 2e-4
        );
        assert_eq!(pump_photon_rate(0.0, 657e-9), 0.0);
    }

    #[test]
    fn pump_photon_rate_is_linear_in_power() {
        let one = pump_photon_rate(1e-6, 657e-9);
        let two = pump_photon_rate(2e-6, 657e-9);
        assert_abs_diff_eq!(two, 2.0 * one);
    }

    #[test]
    fn photons_per_pulse_reference_values() {
        assert_relative_eq!(
            photons_per_pulse(4e-6, 80e6, 657e-9),
            1.654e5,
            max_relative = 2e-4
        );
        assert_eq!(photons_per_pulse(0.0, 80e6, 657e-9), 0.0);
        // power needed for 10⁶ photons per pulse
        assert_relative_eq!(
            photons_per_pulse(24.2e-6, 80e6, 657e-9),
            1.0e6,
            max_relative = 1e-3
        );
    }

    #[test]
    fn estimate_efficiency_paper_numbers() {
        // S1 = S2 = 150 kHz, R_C = 1500 Hz, 1 µW at 657 nm
        let eta = estimate_efficiency(1.5e5, 1.5e5, 1.5e3, 1e-6, 657e-9).unwrap();
        assert_relative_eq!(eta, 2.27e-6, max_relative = 2e-3);
    }

    #[test]
    fn estimate_efficiency_scaling_invariance() {
        let base = estimate_efficiency(1.5e5, 1.5e5, 1.5e3, 1e-6, 657e-9).unwrap();
        let scaled = estimate_efficiency(3.0e5, 3.0e5, 6.0e3, 1e-6, 657e-9).unwrap();
        assert_relative_eq!(base, scaled, max_relative = 1e-12);
    }

    #[test]
    fn estimate_efficiency_errors() {
        assert!(matches!(
            estimate_efficiency(1.0, 1.0, 0.0, 1e-6, 657e-9),
            Err(SourceError::UndefinedEstimate)
        ));
        assert!(matches!(
            estimate_efficiency(-1.0, 1.0, 1.0, 1e-6, 657e-9),
            Err(SourceError::NegativeRate(_))
        ));
    }

    #[test]
    fn zero_efficiency_emits_nothing() {
        let events = generate_emissions(&cw_config(0.0), Extent::Duration(1e-3), 7).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn cw_count_matches_poisson_moments() {
        // rate 6.6e6 /s for 1 ms → 6600 ± 3·√6600
        let cfg = cw_config(6.6e6 / pump_photon_rate(1e-6, 657e-9));
        let events = generate_emissions(&cfg, Extent::Duration(1e-3), 42).unwrap();
        let n = events.len() as f64;
        assert!((n - 6600.0).abs() < 3.0 * 6600f64.sqrt(), "count {n}");
        assert!(events.windows(2).all(|w| w[0].time_s <= w[1].time_s));
    }

    #[test]
    fn pulsed_mean_matches_poisson_moments() {
        let cfg = pulsed_config(2.0);
        let n_pulses = 100_000u64;
        let events = generate_emissions(&cfg, Extent::Pulses(n_pulses), 3).unwrap();
        let mean = events.len() as f64 / n_pulses as f64;
        let tol = 3.0 * (2.0 / n_pulses as f64).sqrt();
        assert!((mean - 2.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn pulsed_times_confined_to_pulse_windows() {
        let cfg = pulsed_config(1.5);
        let events = generate_emissions(&cfg, Extent::Pulses(10_000), 5).unwrap();
        let period = 1.0 / 80e6;
        for e in &events {
            let start = e.pulse_index as f64 * period;
            assert!(e.time_s >= start && e.time_s < start + 400e-12);
        }
    }

    #[test]
    fn thermal_statistics_have_larger_variance() {
        let mut cfg = pulsed_config(1.0);
        cfg.statistics = PairStatistics::Thermal;
        let events = generate_emissions(&cfg, Extent::Pulses(200_000), 11).unwrap();
        let mut per_pulse = vec![0u32; 200_000];
        for e in &events {
            per_pulse[e.pulse_index as usize] += 1;
        }
        let n = per_pulse.len() as f64;
        let mean = per_pulse.iter().map(|&c| c as f64).sum::<f64>() / n;
        let var = per_pulse
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        // Bose-Einstein: var = µ(1+µ) = 2 at µ = 1 (Poisson would be 1)
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert!((var - 2.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn split_fractions_are_binomial() {
        let events: Vec<PairEvent> = (0..1_000_000u64)
            .map(|i| PairEvent {
                time_s: i as f64 * 1e-7,
                pulse_index: -1,
                pair_id: i,
            })
            .collect();
        let (arm1, arm2) = split_pairs(&events, 9);
        assert_eq!(arm1.len() + arm2.len(), 2 * events.len());
        // count split pairs
        let mut arm1_count = vec![0u8; events.len()];
        for p in &arm1 {
            arm1_count[p.pair_id as usize] += 1;
        }
        let split = arm1_count.iter().filter(|&&c| c == 1).count() as f64;
        let frac = split / events.len() as f64;
        assert!((frac - 0.5).abs() < 0.0015, "split fraction {frac}");
        let both1 = arm1_count.iter().filter(|&&c| c == 2).count() as f64 / events.len() as f64;
        assert!((both1 - 0.25).abs() < 0.0015, "both-arm1 fraction {both1}");
    }

    #[test]
    fn split_empty_input() {
        let (a, b) = split_pairs(&[], 1);
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let cfg = pulsed_config(1.0);
        let a = generate_emissions(&cfg, Extent::Pulses(10_000), 77).unwrap();
        let b = generate_emissions(&cfg, Extent::Pulses(10_000), 77).unwrap();
        assert_eq!(a, b);
        let c = generate_emissions(&cfg, Extent::Pulses(10_000), 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = cw_config(2e-6);
        cfg.efficiency = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = pulsed_config(1.0);
        cfg.mode = PumpMode::Pulsed {
            repetition_rate_hz: 80e6,
            pulse_duration_s: 20e-9, // exceeds the 12.5 ns period
        };
        assert!(cfg.validate().is_err());
    }
}
