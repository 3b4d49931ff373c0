//! Analytic path-amplitude engine for photon-pair interference through
//! unbalanced interferometers.
//!
//! Each photon propagating through an unbalanced interferometer is
//! expanded into a short-arm and a long-arm path carrying a delay, a
//! phase and a complex amplitude. Pairs of paths interfere when their
//! full physical time signature is identical:
//!
//! - with a pulsed pump the pulse train provides a clock, so the
//!   signature is the pair of pump-referenced detection times;
//! - with a CW pump (a single trivial pump path, coherence exceeding
//!   the imbalance) the absolute emission time is unobservable and the
//!   signature reduces to the detection-time difference.
//!
//! The post-selection mode only controls how coherent groups are
//! mapped into observed bins; it never changes which paths interfere.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("invalid interferometer spec: {0}")]
    InvalidSpec(String),
    #[error("path list is empty")]
    EmptyPaths,
    #[error("interferometer imbalances are not all equal: {0}")]
    UnequalImbalances(String),
    #[error("bin key {0} not present in the outcome set")]
    UnknownBin(String),
    #[error("three-fold referencing requires a pulsed pump (multiple pump paths)")]
    NoTimeReference,
}

/// Which output port of the final coupler is monitored. The minus port
/// adds a π phase to the long-arm route (50/50 coupler unitarity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputPort {
    #[default]
    Plus,
    Minus,
}

/// An equally unbalanced Mach-Zehnder analyzer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerSpec {
    /// Arm imbalance ΔT, seconds. Must be positive.
    pub imbalance_s: f64,
    /// Phase accumulated in the long arm, radians.
    pub phase_rad: f64,
    /// Short-arm transmission probability amplitude, in [0, 1].
    pub transmission_short: f64,
    /// Long-arm transmission probability amplitude, in [0, 1].
    pub transmission_long: f64,
    /// Per-pass transmission probability, in [0, 1]. 1 = lossless.
    pub loss: f64,
    /// Monitored output port.
    pub port: OutputPort,
}

impl InterferometerSpec {
    /// Ideal lossless 50/50 device with the given imbalance and phase.
    pub fn ideal(imbalance_s: f64, phase_rad: f64) -> Self {
        InterferometerSpec {
            imbalance_s,
            phase_rad,
            transmission_short: 1.0,
            transmission_long: 1.0,
            loss: 1.0,
            port: OutputPort::Plus,
        }
    }

    pub fn with_port(mut self, port: OutputPort) -> Self {
        self.port = port;
        self
    }

    pub fn with_phase(mut self, phase_rad: f64) -> Self {
        self.phase_rad = phase_rad;
        self
    }

    pub fn validate(&self) -> Result<(), PathError> {
        if !(self.imbalance_s > 0.0) {
            return Err(PathError::InvalidSpec(format!(
                "imbalance must be positive, got {}",
                self.imbalance_s
            )));
        }
        if !self.phase_rad.is_finite() {
            return Err(PathError::InvalidSpec("phase must be finite".to_string()));
        }
        for (name, v) in [
            ("transmission_short", self.transmission_short),
            ("transmission_long", self.transmission_long),
            ("loss", self.loss),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PathError::InvalidSpec(format!(
                    "{name} must be in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One route of a photon through the optical network: accumulated
/// delay, accumulated phase, complex amplitude and arm-choice label.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonPath {
    /// Sum of arm delays, seconds (non-negative multiple of ΔT).
    pub delay_s: f64,
    /// Sum of arm phases, radians.
    pub phase_rad: f64,
    /// Complex amplitude, modulus ≤ 1. Includes the phase.
    pub amplitude: Complex64,
    /// Ordered arm-choice label, e.g. "s" or "l".
    pub label: String,
}

impl PhotonPath {
    /// Trivial path: no delay, no phase, unit amplitude. Models a CW
    /// pump with coherence exceeding every imbalance.
    pub fn trivial() -> Self {
        PhotonPath {
            delay_s: 0.0,
            phase_rad: 0.0,
            amplitude: Complex64::new(1.0, 0.0),
            label: "cw".to_string(),
        }
    }
}

/// Expand a photon entering `spec` into its short and long paths for
/// the monitored output port.
///
/// Amplitude moduli are `t_arm/2` for 50/50 couplers, times the loss
/// amplitude; the long path carries the interferometer phase (plus π
/// on the minus port).
pub fn propagate(spec: &InterferometerSpec) -> Result<Vec<PhotonPath>, PathError> {
    spec.validate()?;
    let loss_amp = spec.loss.sqrt();
    let port_sign = match spec.port {
        OutputPort::Plus => 1.0,
        OutputPort::Minus => -1.0,
    };
    let short = PhotonPath {
        delay_s: 0.0,
        phase_rad: 0.0,
        amplitude: Complex64::new(0.5 * spec.transmission_short * loss_amp, 0.0),
        label: "s".to_string(),
    };
    let long_mod = 0.5 * spec.transmission_long * loss_amp * port_sign;
    let long = PhotonPath {
        delay_s: spec.imbalance_s,
        phase_rad: spec.phase_rad,
        amplitude: Complex64::from_polar(long_mod.abs(), spec.phase_rad)
            * if long_mod < 0.0 { -1.0 } else { 1.0 },
        label: "l".to_string(),
    };
    Ok(vec![short, long])
}

/// Pump paths for a pulsed pump sent through its own interferometer
/// with equal 1/√2 short/long amplitudes and relative phase
/// `pump_phase_rad` (maximally entangled time bins).
pub fn pulsed_pump_paths(imbalance_s: f64, pump_phase_rad: f64) -> Vec<PhotonPath> {
    vec![
        PhotonPath {
            delay_s: 0.0,
            phase_rad: 0.0,
            amplitude: Complex64::new(FRAC_1_SQRT_2, 0.0),
            label: "s".to_string(),
        },
        PhotonPath {
            delay_s: imbalance_s,
            phase_rad: pump_phase_rad,
            amplitude: Complex64::from_polar(FRAC_1_SQRT_2, pump_phase_rad),
            label: "l".to_string(),
        },
    ]
}

/// Post-selection mode: how coherent groups map to observed bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observables {
    /// Two-detector start-stop measurement: bins keyed by the
    /// detection-time difference t_A − t_B only.
    TwoFoldDifference,
    /// Three-fold coincidence with the pump pulse as time reference:
    /// bins keyed by (t_A − t_P, t_B − t_P).
    ThreeFoldReferenced,
}

/// Observed-bin key in units of the common imbalance ΔT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BinKey {
    /// t_A − t_B = k·ΔT.
    Difference(i64),
    /// (t_A, t_B) = (j·ΔT, k·ΔT), pump-referenced.
    Referenced(i64, i64),
}

impl std::fmt::Display for BinKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BinKey::Difference(d) => write!(f, "difference({d})"),
            BinKey::Referenced(a, b) => write!(f, "referenced({a},{b})"),
        }
    }
}

/// One observed bin: its time signature, total probability, and the
/// path-label triples that feed it.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub key: BinKey,
    /// Observable delays, seconds (difference, or the referenced pair).
    pub time_signature: Vec<f64>,
    pub probability: f64,
    /// Contributing labels, "pump-a-b".
    pub contributing_labels: Vec<String>,
}

/// Infer the common imbalance from all nonzero delays and check every
/// delay is an integer multiple of it.
fn common_imbalance(paths: &[&PhotonPath]) -> Result<f64, PathError> {
    let mut dt = f64::INFINITY;
    for p in paths {
        if p.delay_s > 0.0 {
            dt = dt.min(p.delay_s);
        }
    }
    if !dt.is_finite() {
        // all delays zero: any unit works
        return Ok(1.0);
    }
    for p in paths {
        let k = p.delay_s / dt;
        if (k - k.round()).abs() > 1e-6 {
            return Err(PathError::UnequalImbalances(format!(
                "delay {} s is not a multiple of {} s",
                p.delay_s, dt
            )));
        }
    }
    Ok(dt)
}

/// Form all (pump, A, B) path triples, group them by full physical
/// time signature (coherent sum), then map the groups into observed
/// bins according to `observables` (incoherent sum within a bin).
///
/// `dephasing` in [0, 1] multiplies every interference cross-term;
/// 1.0 is fully coherent.
pub fn joint_outcomes(
    pump_paths: &[PhotonPath],
    paths_a: &[PhotonPath],
    paths_b: &[PhotonPath],
    observables: Observables,
    dephasing: f64,
) -> Result<Vec<JointOutcome>, PathError> {
    if pump_paths.is_empty() || paths_a.is_empty() || paths_b.is_empty() {
        return Err(PathError::EmptyPaths);
    }
    let cw_pump = pump_paths.len() == 1;
    if cw_pump && observables == Observables::ThreeFoldReferenced {
        return Err(PathError::NoTimeReference);
    }

    let all: Vec<&PhotonPath> = pump_paths
        .iter()
        .chain(paths_a.iter())
        .chain(paths_b.iter())
        .collect();
    let dt = common_imbalance(&all)?;
    let steps = |delay: f64| (delay / dt).round() as i64;

    // Coherent grouping by full physical time signature.
    // Pulsed pump: (t_A, t_B) in units of ΔT, pulse-referenced.
    // CW pump: t_A − t_B only (no absolute reference).
    let mut groups: BTreeMap<(i64, i64), (Complex64, f64, Vec<String>)> = BTreeMap::new();
    for p in pump_paths {
        for a in paths_a {
            for b in paths_b {
                let ta = steps(p.delay_s + a.delay_s);
                let tb = steps(p.delay_s + b.delay_s);
                let sig = if cw_pump { (ta - tb, 0) } else { (ta, tb) };
                let amp = p.amplitude * a.amplitude * b.amplitude;
                let entry = groups
                    .entry(sig)
                    .or_insert_with(|| (Complex64::new(0.0, 0.0), 0.0, Vec::new()));
                entry.0 += amp;
                entry.1 += amp.norm_sqr();
                entry
                    .2
                    .push(format!("{}P-{}A-{}B", p.label, a.label, b.label));
            }
        }
    }

    // Map coherent groups into observed bins.
    let mut bins: BTreeMap<BinKey, (f64, Vec<f64>, Vec<String>)> = BTreeMap::new();
    for (&(x, y), (sum_amp, sum_sq, labels)) in &groups {
        // cross-terms scaled by the dephasing parameter
        let prob = dephasing * sum_amp.norm_sqr() + (1.0 - dephasing) * sum_sq;
        let (key, signature) = match (observables, cw_pump) {
            (Observables::TwoFoldDifference, true) => (BinKey::Difference(x), vec![x as f64 * dt]),
            (Observables::TwoFoldDifference, false) => {
                (BinKey::Difference(x - y), vec![(x - y) as f64 * dt])
            }
            (Observables::ThreeFoldReferenced, _) => {
                (BinKey::Referenced(x, y), vec![x as f64 * dt, y as f64 * dt])
            }
        };
        let entry = bins
            .entry(key)
            .or_insert_with(|| (0.0, signature, Vec::new()));
        entry.0 += prob;
        entry.2.extend(labels.iter().cloned());
    }

    Ok(bins
        .into_iter()
        .map(
            |(key, (probability, time_signature, contributing_labels))| JointOutcome {
                key,
                time_signature,
                probability,
                contributing_labels,
            },
        )
        .collect())
}

/// Pump model for a complete interference setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pump {
    /// CW pump with coherence exceeding the analyzer imbalance.
    Cw,
    /// Pulsed pump behind its own interferometer of the same
    /// imbalance, with relative phase `phase_rad`.
    Pulsed { phase_rad: f64 },
}

/// A full two-analyzer interference setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub pump: Pump,
    pub analyzer_a: InterferometerSpec,
    pub analyzer_b: InterferometerSpec,
    /// Scalar visibility-degradation factor in [0, 1]; multiplies
    /// every interference cross-term. 1.0 = fully coherent.
    pub dephasing: f64,
}

impl Setup {
    pub fn validate(&self) -> Result<(), PathError> {
        self.analyzer_a.validate()?;
        self.analyzer_b.validate()?;
        if !(0.0..=1.0).contains(&self.dephasing) {
            return Err(PathError::InvalidSpec(format!(
                "dephasing must be in [0, 1], got {}",
                self.dephasing
            )));
        }
        let da = self.analyzer_a.imbalance_s;
        let db = self.analyzer_b.imbalance_s;
        if (da - db).abs() > 1e-9 * da.max(db) {
            return Err(PathError::UnequalImbalances(format!(
                "analyzer imbalances {da} s and {db} s differ"
            )));
        }
        Ok(())
    }

    /// Observed bins for this setup under the given post-selection.
    pub fn outcomes(&self, observables: Observables) -> Result<Vec<JointOutcome>, PathError> {
        self.validate()?;
        let pump = match self.pump {
            Pump::Cw => vec![PhotonPath::trivial()],
            Pump::Pulsed { phase_rad } => pulsed_pump_paths(self.analyzer_a.imbalance_s, phase_rad),
        };
        let a = propagate(&self.analyzer_a)?;
        let b = propagate(&self.analyzer_b)?;
        joint_outcomes(&pump, &a, &b, observables, self.dephasing)
    }

    /// Probability of one observed bin.
    pub fn bin_probability(&self, observables: Observables, key: BinKey) -> Result<f64, PathError> {
        let outcomes = self.outcomes(observables)?;
        outcomes
            .iter()
            .find(|o| o.key == key)
            .map(|o| o.probability)
            .ok_or_else(|| PathError::UnknownBin(key.to_string()))
    }
}

/// Probability of `key` at each phase of the grid, applied to analyzer
/// A's phase. Exact analytic values, no sampling noise.
pub fn visibility_scan(
    setup: &Setup,
    observables: Observables,
    phase_grid: &[f64],
    key: BinKey,
) -> Result<Vec<(f64, f64)>, PathError> {
    let mut out = Vec::with_capacity(phase_grid.len());
    for &phi in phase_grid {
        let mut s = setup.clone();
        s.analyzer_a = s.analyzer_a.with_phase(phi);
        out.push((phi, s.bin_probability(observables, key)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    const DT: f64 = 1e-9;

    fn franson(phi_a: f64, phi_b: f64) -> Setup {
        Setup {
            pump: Pump::Cw,
            analyzer_a: InterferometerSpec::ideal(DT, phi_a),
            analyzer_b: InterferometerSpec::ideal(DT, phi_b),
            dephasing: 1.0,
        }
    }

    fn timebin(phi_p: f64, phi_a: f64, phi_b: f64) -> Setup {
        Setup {
            pump: Pump::Pulsed { phase_rad: phi_p },
            analyzer_a: InterferometerSpec::ideal(DT, phi_a),
            analyzer_b: InterferometerSpec::ideal(DT, phi_b),
            dephasing: 1.0,
        }
    }

    #[test]
    fn propagate_ideal_splitter() {
        let paths = propagate(&InterferometerSpec::ideal(DT, 0.0)).unwrap();
        assert_eq!(paths.len(), 2);
        assert_abs_diff_eq!(paths[0].delay_s, 0.0);
        assert_abs_diff_eq!(paths[0].amplitude.norm(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(paths[1].delay_s, DT);
        assert_abs_diff_eq!(paths[1].amplitude.norm(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(paths[1].amplitude.arg(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn propagate_accumulates_phase() {
        let paths = propagate(&InterferometerSpec::ideal(DT, PI)).unwrap();
        let long = &paths[1];
        // 1/2 · e^{iπ}
        assert_abs_diff_eq!(long.amplitude.re, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(long.amplitude.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn propagate_unbalanced_transmissions() {
        let spec = InterferometerSpec {
            transmission_short: 0.6_f64.sqrt(),
            transmission_long: 0.4_f64.sqrt(),
            ..InterferometerSpec::ideal(DT, 0.0)
        };
        let paths = propagate(&spec).unwrap();
        assert_relative_eq!(
            paths[0].amplitude.norm(),
            0.6_f64.sqrt() / 2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            paths[1].amplitude.norm(),
            0.4_f64.sqrt() / 2.0,
            max_relative = 1e-12
        );
        // per monitored port: (0.6 + 0.4)/4 = 0.25; both ports: 0.5
        let total: f64 = paths.iter().map(|p| p.amplitude.norm_sqr()).sum();
        assert_relative_eq!(total, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn propagate_rejects_invalid_spec() {
        let mut spec = InterferometerSpec::ideal(DT, 0.0);
        spec.imbalance_s = -1.0;
        assert!(propagate(&spec).is_err());
        let mut spec = InterferometerSpec::ideal(DT, 0.0);
        spec.transmission_long = 1.5;
        assert!(propagate(&spec).is_err());
    }

    #[test]
    fn franson_central_and_side_bins() {
        // hand enumeration of ss, sl, ls, ll with amplitudes 1/4:
        // central = |1/4 + e^{iΣ}/4|² = (1 + cos Σ)/8, sides 1/16
        for (pa, pb) in [(0.0, 0.0), (0.3, 0.7), (1.2, -0.4)] {
            let s = franson(pa, pb);
            let central = s
                .bin_probability(Observables::TwoFoldDifference, BinKey::Difference(0))
                .unwrap();
            assert_relative_eq!(central, (1.0 + (pa + pb).cos()) / 8.0, max_relative = 1e-12);
            for side in [-1, 1] {
                let p = s
                    .bin_probability(Observables::TwoFoldDifference, BinKey::Difference(side))
                    .unwrap();
                assert_relative_eq!(p, 1.0 / 16.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn franson_destructive_at_phase_sum_pi() {
        let s = franson(PI / 3.0, PI - PI / 3.0);
        let central = s
            .bin_probability(Observables::TwoFoldDifference, BinKey::Difference(0))
            .unwrap();
        assert_abs_diff_eq!(central, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn franson_phase_sum_law() {
        // central bin invariant under (φA, φB) → (φA + δ, φB − δ)
        let base = franson(0.4, 0.9)
            .bin_probability(Observables::TwoFoldDifference, BinKey::Difference(0))
            .unwrap();
        for delta in [0.1, 1.0, -2.5, PI] {
            let shifted = franson(0.4 + delta, 0.9 - delta)
                .bin_probability(Observables::TwoFoldDifference, BinKey::Difference(0))
                .unwrap();
            assert_relative_eq!(shifted, base, max_relative = 1e-12);
        }
    }

    #[test]
    fn timebin_two_fold_central_visibility_half() {
        // 1/16 + (1 + cos(φP − φA − φB))/16: max 3/16, min 1/16
        let probe = |pp: f64| {
            timebin(pp, 0.0, 0.0)
                .bin_probability(Observables::TwoFoldDifference, BinKey::Difference(0))
                .unwrap()
        };
        assert_relative_eq!(probe(0.0), 3.0 / 16.0, max_relative = 1e-12);
        assert_abs_diff_eq!(probe(PI), 1.0 / 16.0, epsilon = 1e-15);
        let (max, min) = (probe(0.0), probe(PI));
        let vis = (max - min) / (max + min);
        assert_abs_diff_eq!(vis, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn timebin_three_fold_selected_bin_visibility_one() {
        // bin (ΔT, ΔT) holds only lP-sA-sB and sP-lA-lB
        let probe = |pp: f64| {
            timebin(pp, 0.0, 0.0)
                .bin_probability(Observables::ThreeFoldReferenced, BinKey::Referenced(1, 1))
                .unwrap()
        };
        assert_relative_eq!(probe(0.0), 1.0 / 8.0, max_relative = 1e-12);
        assert_abs_diff_eq!(probe(PI), 0.0, epsilon = 1e-15);
        let outcomes = timebin(0.3, 0.0, 0.0)
            .outcomes(Observables::ThreeFoldReferenced)
            .unwrap();
        let sel = outcomes
            .iter()
            .find(|o| o.key == BinKey::Referenced(1, 1))
            .unwrap();
        let mut labels = sel.contributing_labels.clone();
        labels.sort();
        assert_eq!(labels, vec!["lP-sA-sB", "sP-lA-lB"]);
    }

    #[test]
    fn timebin_central_two_fold_has_four_contributions() {
        let outcomes = timebin(0.0, 0.0, 0.0)
            .outcomes(Observables::TwoFoldDifference)
            .unwrap();
        let central = outcomes
            .iter()
            .find(|o| o.key == BinKey::Difference(0))
            .unwrap();
        let mut labels = central.contributing_labels.clone();
        labels.sort();
        assert_eq!(labels, vec!["lP-lA-lB", "lP-sA-sB", "sP-lA-lB", "sP-sA-sB"]);
    }

    #[test]
    fn lossless_outcomes_normalize_over_ports() {
        // summing over all analyzer output-port combinations gives 1
        for (pump, obs) in [
            (Pump::Cw, Observables::TwoFoldDifference),
            (
                Pump::Pulsed { phase_rad: 0.7 },
                Observables::TwoFoldDifference,
            ),
            (
                Pump::Pulsed { phase_rad: 0.7 },
                Observables::ThreeFoldReferenced,
            ),
        ] {
            let mut total = 0.0;
            for pa in [OutputPort::Plus, OutputPort::Minus] {
                for pb in [OutputPort::Plus, OutputPort::Minus] {
                    let s = Setup {
                        pump,
                        analyzer_a: InterferometerSpec::ideal(DT, 0.8).with_port(pa),
                        analyzer_b: InterferometerSpec::ideal(DT, -0.3).with_port(pb),
                        dephasing: 1.0,
                    };
                    total += s
                        .outcomes(obs)
                        .unwrap()
                        .iter()
                        .map(|o| o.probability)
                        .sum::<f64>();
                }
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dephasing_scales_fringe_only() {
        let mut s = timebin(0.0, 0.0, 0.0);
        s.dephasing = 0.84;
        let max = s
            .bin_probability(Observables::ThreeFoldReferenced, BinKey::Referenced(1, 1))
            .unwrap();
        let mut s2 = timebin(PI, 0.0, 0.0);
        s2.dephasing = 0.84;
        let min = s2
            .bin_probability(Observables::ThreeFoldReferenced, BinKey::Referenced(1, 1))
            .unwrap();
        let vis = (max - min) / (max + min);
        assert_relative_eq!(vis, 0.84, max_relative = 1e-12);
    }

    #[test]
    fn unequal_imbalances_rejected() {
        let s = Setup {
            pump: Pump::Cw,
            analyzer_a: InterferometerSpec::ideal(DT, 0.0),
            analyzer_b: InterferometerSpec::ideal(2.0 * DT, 0.0),
            dephasing: 1.0,
        };
        assert!(matches!(
            s.outcomes(Observables::TwoFoldDifference),
            Err(PathError::UnequalImbalances(_))
        ));
    }

    #[test]
    fn three_fold_needs_pulsed_pump() {
        let s = franson(0.0, 0.0);
        assert!(matches!(
            s.outcomes(Observables::ThreeFoldReferenced),
            Err(PathError::NoTimeReference)
        ));
    }

    #[test]
    fn visibility_scan_franson_values() {
        let s = franson(0.0, 0.0);
        let scan = visibility_scan(
            &s,
            Observables::TwoFoldDifference,
            &[0.0, PI / 2.0, PI],
            BinKey::Difference(0),
        )
        .unwrap();
        let expected = [0.25, 0.125, 0.0];
        for ((_, p), e) in scan.iter().zip(expected) {
            assert_abs_diff_eq!(*p, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn visibility_scan_side_bin_constant() {
        let s = franson(0.0, 0.0);
        let scan = visibility_scan(
            &s,
            Observables::TwoFoldDifference,
            &[0.0, 1.0, 2.0, 3.0],
            BinKey::Difference(1),
        )
        .unwrap();
        for (_, p) in scan {
            assert_relative_eq!(p, 1.0 / 16.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn visibility_scan_timebin_three_fold() {
        let s = timebin(0.0, 0.0, 0.0);
        let scan = visibility_scan(
            &s,
            Observables::ThreeFoldReferenced,
            &[0.0, PI],
            BinKey::Referenced(1, 1),
        )
        .unwrap();
        assert_abs_diff_eq!(scan[0].1, 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(scan[1].1, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn visibility_scan_unknown_bin_errors() {
        let s = franson(0.0, 0.0);
        assert!(matches!(
            visibility_scan(
                &s,
                Observables::TwoFoldDifference,
                &[0.0],
                BinKey::Difference(7)
            ),
            Err(PathError::UnknownBin(_))
        ));
    }
}
