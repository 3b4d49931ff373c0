//! Detector and counting-electronics models: Geiger-mode APD response,
//! start-stop TAC histogramming, and SCA windowed coincidence counting.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::source::Photon;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("invalid detector spec: {0}")]
    InvalidSpec(String),
    #[error("arrival stream is not time-sorted at index {0}")]
    UnsortedInput(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("window [{lo} s, {hi} s) outside histogram range [{min} s, {max} s)")]
    WindowOutOfRange {
        lo: f64,
        hi: f64,
        min: f64,
        max: f64,
    },
}

/// Single-photon detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    /// Quantum efficiency η_q in [0, 1].
    pub quantum_efficiency: f64,
    /// Dark count rate, Hz.
    pub dark_rate_hz: f64,
    /// Non-paralyzable dead time, s.
    pub dead_time_s: f64,
    /// Gaussian timing jitter sigma, s.
    pub jitter_sigma_s: f64,
}

impl DetectorSpec {
    /// Noiseless, lossless, infinitely fast detector.
    pub fn ideal() -> Self {
        DetectorSpec {
            quantum_efficiency: 1.0,
            dark_rate_hz: 0.0,
            dead_time_s: 0.0,
            jitter_sigma_s: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(DetectError::InvalidSpec(format!(
                "quantum efficiency must be in [0, 1], got {}",
                self.quantum_efficiency
            )));
        }
        for (name, v) in [
            ("dark rate", self.dark_rate_hz),
            ("dead time", self.dead_time_s),
            ("jitter sigma", self.jitter_sigma_s),
        ] {
            if !(v >= 0.0) {
                return Err(DetectError::InvalidSpec(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A registered detector click.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub time_s: f64,
    pub origin: DetectionOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionOrigin {
    Photon { pair_id: u64 },
    Dark,
}

/// Binned start-stop time-difference counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Time of the left edge of bin 0, s.
    pub origin_s: f64,
    pub bin_width_s: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(origin_s: f64, bin_width_s: f64, n_bins: usize) -> Self {
        assert!(bin_width_s > 0.0 && n_bins >= 1);
        Histogram {
            origin_s,
            bin_width_s,
            counts: vec![0; n_bins],
        }
    }

    /// Left edge of bin `i`, s.
    pub fn bin_start_s(&self, i: usize) -> f64 {
        self.origin_s + i as f64 * self.bin_width_s
    }

    pub fn bin_center_s(&self, i: usize) -> f64 {
        self.bin_start_s(i) + 0.5 * self.bin_width_s
    }

    pub fn end_s(&self) -> f64 {
        self.origin_s + self.counts.len() as f64 * self.bin_width_s
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Record a time difference; out-of-range values are dropped.
    pub fn record(&mut self, dt_s: f64) {
        let idx = (dt_s - self.origin_s) / self.bin_width_s;
        if idx >= 0.0 && idx < self.counts.len() as f64 {
            self.counts[idx as usize] += 1;
        }
    }

    /// Merge another histogram with identical binning. Associative and
    /// commutative.
    pub fn merge(&mut self, other: &Histogram) -> Result<(), DetectError> {
        if self.origin_s != other.origin_s
            || self.bin_width_s != other.bin_width_s
            || self.counts.len() != other.counts.len()
        {
            return Err(DetectError::InvalidConfig(
                "cannot merge histograms with different binning".to_string(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

/// SCA coincidence window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceWindow {
    pub center_s: f64,
    pub width_s: f64,
}

impl CoincidenceWindow {
    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.width_s > 0.0) {
            return Err(DetectError::InvalidConfig(format!(
                "window width must be positive, got {}",
                self.width_s
            )));
        }
        Ok(())
    }

    pub fn lo_s(&self) -> f64 {
        self.center_s - 0.5 * self.width_s
    }

    pub fn hi_s(&self) -> f64 {
        self.center_s + 0.5 * self.width_s
    }

    pub fn contains(&self, dt_s: f64) -> bool {
        dt_s >= self.lo_s() && dt_s < self.hi_s()
    }
}

fn check_sorted(arrivals: &[Photon]) -> Result<(), DetectError> {
    for (i, w) in arrivals.windows(2).enumerate() {
        if w[1].time_s < w[0].time_s {
            return Err(DetectError::UnsortedInput(i + 1));
        }
    }
    Ok(())
}

/// Thinning, dark counts and jitter for a time slice `[t0, t1)`,
/// without dead time. Chunks over disjoint slices can run concurrently
/// with sub-seeds; outputs concatenate in time order.
pub fn respond_window(
    arrivals: &[Photon],
    spec: &DetectorSpec,
    t0_s: f64,
    t1_s: f64,
    seed: u64,
) -> Result<Vec<DetectionEvent>, DetectError> {
    spec.validate()?;
    check_sorted(arrivals)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events: Vec<DetectionEvent> = Vec::new();
    for a in arrivals {
        if rng.random::<f64>() < spec.quantum_efficiency {
            events.push(DetectionEvent {
                time_s: a.time_s,
                origin: DetectionOrigin::Photon { pair_id: a.pair_id },
            });
        }
    }
    let span = t1_s - t0_s;
    if spec.dark_rate_hz > 0.0 && span > 0.0 {
        let n = Poisson::new(spec.dark_rate_hz * span)
            .expect("positive mean")
            .sample(&mut rng) as usize;
        for _ in 0..n {
            events.push(DetectionEvent {
                time_s: t0_s + rng.random::<f64>() * span,
                origin: DetectionOrigin::Dark,
            });
        }
    }
    if spec.jitter_sigma_s > 0.0 {
        let normal = Normal::new(0.0, spec.jitter_sigma_s).expect("positive sigma");
        for e in &mut events {
            e.time_s += normal.sample(&mut rng);
        }
    }
    events.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    Ok(events)
}

/// Non-paralyzable dead time: events within `dead_time_s` after an
/// accepted event are discarded.
pub fn apply_dead_time(events: &[DetectionEvent], dead_time_s: f64) -> Vec<DetectionEvent> {
    if dead_time_s <= 0.0 {
        return events.to_vec();
    }
    let mut out = Vec::with_capacity(events.len());
    let mut last_accepted = f64::NEG_INFINITY;
    for e in events {
        if e.time_s - last_accepted >= dead_time_s {
            out.push(*e);
            last_accepted = e.time_s;
        }
    }
    out
}

/// Full detector response: Bernoulli thinning at η_q, dark counts as a
/// homogeneous Poisson process over `[0, duration)`, Gaussian jitter,
/// then non-paralyzable dead-time pruning. Deterministic per seed.
pub fn detect(
    arrivals: &[Photon],
    spec: &DetectorSpec,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<DetectionEvent>, DetectError> {
    let events = respond_window(arrivals, spec, 0.0, duration_s, seed)?;
    Ok(apply_dead_time(&events, spec.dead_time_s))
}

/// Pair starts with stops: for each start (in time order) the first
/// unconsumed stop with `0 ≤ t_stop − t_start < range` is taken; each
/// stop pairs with at most one start. Returns the time differences.
pub fn pair_start_stop(starts: &[f64], stops: &[f64], range_s: f64) -> Vec<f64> {
    let mut deltas = Vec::new();
    let mut j = 0usize;
    for &t_start in starts {
        while j < stops.len() && stops[j] < t_start {
            j += 1;
        }
        if j < stops.len() && stops[j] - t_start < range_s {
            deltas.push(stops[j] - t_start);
            j += 1;
        }
    }
    deltas
}

fn check_times_sorted(times: &[f64]) -> Result<(), DetectError> {
    for (i, w) in times.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(DetectError::UnsortedInput(i + 1));
        }
    }
    Ok(())
}

/// Start-stop TAC: single-stop, non-retriggering semantics over sorted
/// start and stop streams, histogrammed over `[0, range)`.
pub fn tac(
    starts: &[f64],
    stops: &[f64],
    range_s: f64,
    bin_width_s: f64,
) -> Result<Histogram, DetectError> {
    if bin_width_s >= range_s {
        return Err(DetectError::InvalidConfig(format!(
            "bin width {bin_width_s} s must be below the range {range_s} s"
        )));
    }
    check_times_sorted(starts)?;
    check_times_sorted(stops)?;
    let n_bins = (range_s / bin_width_s).ceil() as usize;
    let mut h = Histogram::new(0.0, bin_width_s, n_bins);
    for dt in pair_start_stop(starts, stops, range_s) {
        h.record(dt);
    }
    Ok(h)
}

/// SCA rate from a histogram: counts in bins whose center lies inside
/// the window, divided by the duration.
pub fn sca(
    histogram: &Histogram,
    window: &CoincidenceWindow,
    duration_s: f64,
) -> Result<f64, DetectError> {
    window.validate()?;
    if window.lo_s() < histogram.origin_s || window.hi_s() > histogram.end_s() {
        return Err(DetectError::WindowOutOfRange {
            lo: window.lo_s(),
            hi: window.hi_s(),
            min: histogram.origin_s,
            max: histogram.end_s(),
        });
    }
    let mut counts = 0u64;
    for (i, &c) in histogram.counts.iter().enumerate() {
        if window.contains(histogram.bin_center_s(i)) {
            counts += c;
        }
    }
    Ok(counts as f64 / duration_s)
}

/// SCA rate directly from paired time differences.
pub fn sca_deltas(
    deltas: &[f64],
    window: &CoincidenceWindow,
    duration_s: f64,
) -> Result<f64, DetectError> {
    window.validate()?;
    let counts = deltas.iter().filter(|&&dt| window.contains(dt)).count();
    Ok(counts as f64 / duration_s)
}

/// Times of the photon-or-dark clicks in a detection stream.
pub fn event_times(events: &[DetectionEvent]) -> Vec<f64> {
    events.iter().map(|e| e.time_s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn photons(times_s: &[f64]) -> Vec<Photon> {
        times_s
            .iter()
            .enumerate()
            .map(|(i, &time_s)| Photon {
                time_s,
                pair_id: i as u64,
            })
            .collect()
    }

    #[test]
    fn ideal_detector_is_identity() {
        let arrivals = photons(&[1e-9, 2e-9, 5e-9]);
        let out = detect(&arrivals, &DetectorSpec::ideal(), 1e-6, 1).unwrap();
        assert_eq!(out.len(), 3);
        for (e, a) in out.iter().zip(&arrivals) {
            assert_eq!(e.time_s, a.time_s);
            assert!(matches!(e.origin, DetectionOrigin::Photon { .. }));
        }
    }

    #[test]
    fn zero_efficiency_leaves_only_dark_counts() {
        let arrivals = photons(&(0..1000).map(|i| i as f64 * 1e-6).collect::<Vec<_>>());
        let spec = DetectorSpec {
            quantum_efficiency: 0.0,
            dark_rate_hz: 1e5,
            dead_time_s: 0.0,
            jitter_sigma_s: 0.0,
        };
        let out = detect(&arrivals, &spec, 1e-2, 2).unwrap();
        assert!(out.iter().all(|e| e.origin == DetectionOrigin::Dark));
        let n = out.len() as f64;
        // Poisson(1000) within 5 sigma
        assert!((n - 1000.0).abs() < 5.0 * 1000f64.sqrt(), "dark count {n}");
    }

    #[test]
    fn thinning_matches_binomial_oracle() {
        let n = 1_000_000usize;
        let arrivals = photons(&(0..n).map(|i| i as f64 * 1e-8).collect::<Vec<_>>());
        let spec = DetectorSpec {
            quantum_efficiency: 0.1,
            ..DetectorSpec::ideal()
        };
        let out = detect(&arrivals, &spec, 1e-2, 3).unwrap();
        let accepted = out.len() as f64;
        let sigma = (n as f64 * 0.1 * 0.9).sqrt();
        assert!((accepted - 1e5).abs() < 3.0 * sigma, "accepted {accepted}");
    }

    #[test]
    fn dead_time_prunes_nonparalyzable() {
        let arrivals = photons(&[0.0, 0.5e-6, 1.2e-6, 1.3e-6, 3.0e-6]);
        let spec = DetectorSpec {
            dead_time_s: 1e-6,
            ..DetectorSpec::ideal()
        };
        let out = detect(&arrivals, &spec, 1e-5, 4).unwrap();
        let times: Vec<f64> = out.iter().map(|e| e.time_s).collect();
        // 0.5 µs blocked by 0.0; 1.2 accepted; 1.3 blocked by 1.2
        assert_eq!(times, vec![0.0, 1.2e-6, 3.0e-6]);
    }

    #[test]
    fn dead_time_output_is_monotone_nonincreasing() {
        let arrivals = photons(&(0..10_000).map(|i| (i as f64) * 7e-8).collect::<Vec<_>>());
        let mut prev = usize::MAX;
        for dead in [0.0, 1e-8, 1e-7, 1e-6, 1e-5] {
            let spec = DetectorSpec {
                dead_time_s: dead,
                ..DetectorSpec::ideal()
            };
            let n = detect(&arrivals, &spec, 1e-3, 5).unwrap().len();
            assert!(n <= prev, "count increased at dead time {dead}");
            prev = n;
        }
    }

    #[test]
    fn unsorted_input_rejected() {
        let arrivals = photons(&[1e-9, 0.5e-9]);
        assert!(matches!(
            detect(&arrivals, &DetectorSpec::ideal(), 1e-6, 6),
            Err(DetectError::UnsortedInput(1))
        ));
    }

    #[test]
    fn tac_single_pair() {
        let h = tac(&[0.0], &[5e-9], 50e-9, 1e-9).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts[5], 1);
    }

    #[test]
    fn tac_empty_stops() {
        let h = tac(&[0.0, 1e-9, 2e-9], &[], 50e-9, 1e-9).unwrap();
        assert_eq!(h.total(), 0);
    }

    #[test]
    fn tac_first_stop_wins_and_stops_consumed_once() {
        // one start, two candidate stops: earliest wins
        let d = pair_start_stop(&[0.0], &[3e-9, 7e-9], 50e-9);
        assert_eq!(d, vec![3e-9]);
        // two starts, one stop: first start consumes it
        let d = pair_start_stop(&[0.0, 1e-9], &[5e-9], 50e-9);
        assert_eq!(d, vec![5e-9]);
        // negative differences never pair
        let d = pair_start_stop(&[10e-9], &[5e-9], 50e-9);
        assert!(d.is_empty());
    }

    #[test]
    fn tac_conserves_counts() {
        let starts: Vec<f64> = (0..500).map(|i| i as f64 * 1e-7).collect();
        let stops: Vec<f64> = (0..300).map(|i| 2e-9 + i as f64 * 1.7e-7).collect();
        let h = tac(&starts, &stops, 50e-9, 1e-9).unwrap();
        assert!(h.total() <= 300);
    }

    #[test]
    fn tac_rejects_bin_width_at_or_above_range() {
        assert!(matches!(
            tac(&[0.0], &[1e-9], 1e-9, 1e-9),
            Err(DetectError::InvalidConfig(_))
        ));
    }

    #[test]
    fn sca_full_range_equals_total_over_duration() {
        let mut h = Histogram::new(0.0, 1e-9, 50);
        for dt in [1.5e-9, 20.2e-9, 20.7e-9, 44.0e-9] {
            h.record(dt);
        }
        let window = CoincidenceWindow {
            center_s: 25e-9,
            width_s: 50e-9,
        };
        let rate = sca(&h, &window, 2.0).unwrap();
        assert_abs_diff_eq!(rate, 4.0 / 2.0);
    }

    #[test]
    fn sca_zero_count_window() {
        let mut h = Histogram::new(0.0, 1e-9, 50);
        h.record(40e-9);
        let window = CoincidenceWindow {
            center_s: 10e-9,
            width_s: 4e-9,
        };
        assert_eq!(sca(&h, &window, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn sca_window_outside_range_rejected() {
        let h = Histogram::new(0.0, 1e-9, 50);
        let window = CoincidenceWindow {
            center_s: 60e-9,
            width_s: 4e-9,
        };
        assert!(matches!(
            sca(&h, &window, 1.0),
            Err(DetectError::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn dark_only_histogram_is_flat() {
        // uncorrelated dark counts on both detectors: flat TAC histogram
        let spec = DetectorSpec {
            quantum_efficiency: 0.0,
            dark_rate_hz: 2e5,
            dead_time_s: 0.0,
            jitter_sigma_s: 0.0,
        };
        let duration = 50.0;
        let d1 = detect(&[], &spec, duration, 10).unwrap();
        let d2 = detect(&[], &spec, duration, 11).unwrap();
        let h = tac(&event_times(&d1), &event_times(&d2), 50e-9, 5e-9).unwrap();
        let total = h.total() as f64;
        let mean = total / h.counts.len() as f64;
        for &c in &h.counts {
            let dev = (c as f64 - mean).abs();
            assert!(dev < 5.0 * mean.sqrt(), "bin {c} vs mean {mean}");
        }
    }

    #[test]
    fn histogram_merge_is_commutative() {
        let mut a = Histogram::new(0.0, 1e-9, 10);
        let mut b = Histogram::new(0.0, 1e-9, 10);
        a.record(1.5e-9);
        b.record(7.2e-9);
        b.record(1.6e-9);
        let mut ab = a.clone();
        ab.merge(&b).unwrap();
        let mut ba = b.clone();
        ba.merge(&a).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.total(), 3);
    }
}
