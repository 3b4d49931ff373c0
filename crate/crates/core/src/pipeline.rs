//! End-to-end simulation pipelines: chunked Monte-Carlo runs tying the
//! source, detector and counting models together, with an optional
//! data-parallel execution mode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::detect::{
    apply_dead_time, respond_window, sca, tac, CoincidenceWindow, DetectError, DetectionEvent,
    DetectorSpec, Histogram,
};
use crate::pathcalc::{BinKey, Observables, PathError, Setup};
use crate::source::{
    chunk_seed, estimate_efficiency, generate_cw_window, generate_pulse_range,
    separate_pairs_deterministic, split_pairs, PumpMode, SourceConfig, SourceError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Chunk scheduling for Monte-Carlo pipelines. Both modes produce
/// bit-identical results for the same seed; `Parallel` spreads chunks
/// over a thread pool when the `parallel` feature is enabled and falls
/// back to sequential execution otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether the parallel backend is compiled in.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Apply `f` to every chunk index in `0..n_chunks`, preserving chunk
/// order in the output.
pub fn map_chunks<T, F>(execution: Execution, n_chunks: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if execution == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n_chunks).into_par_iter().map(f).collect();
        }
    }
    let _ = execution;
    (0..n_chunks).map(f).collect()
}

/// Fold an arm transmission into the detector's Bernoulli thinning:
/// a photon is registered with probability t·η_q.
fn effective_detector(
    spec: &DetectorSpec,
    transmission: f64,
) -> Result<DetectorSpec, PipelineError> {
    if !(transmission > 0.0 && transmission <= 1.0) {
        return Err(PipelineError::InvalidScenario(format!(
            "arm transmission must be in (0, 1], got {transmission}"
        )));
    }
    Ok(DetectorSpec {
        quantum_efficiency: spec.quantum_efficiency * transmission,
        ..*spec
    })
}

/// CW pair source, 50/50 splitter, two detectors, start-stop TAC and
/// an SCA coincidence window.
#[derive(Debug, Clone, PartialEq)]
pub struct CwCoincidenceScenario {
    pub source: SourceConfig,
    pub detector1: DetectorSpec,
    pub detector2: DetectorSpec,
    /// Per-arm collection/filter transmission probabilities in (0, 1].
    pub transmission1: f64,
    pub transmission2: f64,
    /// Electronic delay added to the stop channel so the coincidence
    /// peak sits inside the TAC range, s.
    pub stop_delay_s: f64,
    /// TAC conversion range, s.
    pub tac_range_s: f64,
    pub bin_width_s: f64,
    pub window: CoincidenceWindow,
    pub duration_s: f64,
    /// Number of Monte-Carlo chunks; part of the deterministic contract.
    pub chunks: u64,
    pub seed: u64,
}

/// Pulsed pair source with deterministic signal/idler separation, two
/// detection channels and a start-stop TAC.
#[derive(Debug, Clone, PartialEq)]
pub struct PulsedCoincidenceScenario {
    pub source: SourceConfig,
    pub detector1: DetectorSpec,
    pub detector2: DetectorSpec,
    /// Per-arm collection/filter transmission probabilities in (0, 1].
    pub transmission1: f64,
    pub transmission2: f64,
    pub stop_delay_s: f64,
    pub tac_range_s: f64,
    pub bin_width_s: f64,
    pub n_pulses: u64,
    pub chunks: u64,
    pub seed: u64,
}

/// Counting summary of a coincidence run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceResult {
    /// Registered singles rate on channel 1, Hz.
    pub singles1_hz: f64,
    pub singles2_hz: f64,
    /// SCA coincidence rate inside the window, Hz.
    pub coincidence_hz: f64,
    /// Accidental-coincidence estimate S1·S2·τ_window, Hz.
    pub accidental_hz: f64,
    /// Conversion-efficiency estimate from the count rates, when the
    /// coincidence rate is nonzero.
    pub efficiency_estimate: Option<f64>,
    pub histogram: Histogram,
    pub duration_s: f64,
}

/// Per-chunk output of the coincidence pipelines: the detection event
/// streams of the two channels, or the first error the chunk hit.
type ChunkStreams = Result<(Vec<DetectionEvent>, Vec<DetectionEvent>), PipelineError>;

fn sort_and_prune(mut events: Vec<DetectionEvent>, dead_time_s: f64) -> Vec<DetectionEvent> {
    events.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    apply_dead_time(&events, dead_time_s)
}

fn click_times(events: &[DetectionEvent]) -> Vec<f64> {
    events.iter().map(|e| e.time_s).collect()
}

/// Run the CW coincidence pipeline. The duration is split into
/// `chunks` disjoint windows generated with independent sub-seeds;
/// detector dead time is applied globally after the chunks merge, so
/// the result does not depend on the execution mode.
pub fn run_cw_coincidence(
    scenario: &CwCoincidenceScenario,
    execution: Execution,
) -> Result<CoincidenceResult, PipelineError> {
    scenario.source.validate()?;
    scenario.detector1.validate()?;
    scenario.detector2.validate()?;
    if scenario.source.mode != PumpMode::Cw {
        return Err(PipelineError::InvalidScenario(
            "cw_coincidence needs a CW source".to_string(),
        ));
    }
    if scenario.chunks == 0 || !(scenario.duration_s > 0.0) {
        return Err(PipelineError::InvalidScenario(
            "need a positive duration and at least one chunk".to_string(),
        ));
    }
    let det1 = effective_detector(&scenario.detector1, scenario.transmission1)?;
    let det2 = effective_detector(&scenario.detector2, scenario.transmission2)?;
    let chunk_span = scenario.duration_s / scenario.chunks as f64;
    let chunk_outputs: Vec<ChunkStreams> = map_chunks(execution, scenario.chunks, |c| {
        let t0 = c as f64 * chunk_span;
        let t1 = t0 + chunk_span;
        let pairs = generate_cw_window(
            &scenario.source,
            t0,
            t1,
            c << 40,
            chunk_seed(scenario.seed, 4 * c),
        );
        let (arm1, arm2) = split_pairs(&pairs, chunk_seed(scenario.seed, 4 * c + 1));
        let d1 = respond_window(&arm1, &det1, t0, t1, chunk_seed(scenario.seed, 4 * c + 2))?;
        let d2 = respond_window(&arm2, &det2, t0, t1, chunk_seed(scenario.seed, 4 * c + 3))?;
        Ok((d1, d2))
    });
    let mut stream1 = Vec::new();
    let mut stream2 = Vec::new();
    for r in chunk_outputs {
        let (d1, d2) = r?;
        stream1.extend(d1);
        stream2.extend(d2);
    }
    let clicks1 = sort_and_prune(stream1, scenario.detector1.dead_time_s);
    let clicks2 = sort_and_prune(stream2, scenario.detector2.dead_time_s);
    finish_coincidence_run(
        scenario.source.pump_power_w,
        scenario.source.pump_wavelength_m,
        &click_times(&clicks1),
        &click_times(&clicks2),
        scenario.stop_delay_s,
        scenario.tac_range_s,
        scenario.bin_width_s,
        Some(&scenario.window),
        scenario.duration_s,
    )
}

/// Run the pulsed coincidence pipeline. Pulses are generated in
/// `chunks` disjoint ranges; each pair sends one photon to each channel
/// (deterministic separation), the stop channel gets an electronic
/// delay, and a single global TAC histograms the differences.
pub fn run_pulsed_coincidence(
    scenario: &PulsedCoincidenceScenario,
    execution: Execution,
) -> Result<CoincidenceResult, PipelineError> {
    scenario.source.validate()?;
    scenario.detector1.validate()?;
    scenario.detector2.validate()?;
    let PumpMode::Pulsed {
        repetition_rate_hz, ..
    } = scenario.source.mode
    else {
        return Err(PipelineError::InvalidScenario(
            "pulsed_coincidence needs a pulsed source".to_string(),
        ));
    };
    if scenario.chunks == 0 || scenario.n_pulses == 0 {
        return Err(PipelineError::InvalidScenario(
            "need at least one pulse and one chunk".to_string(),
        ));
    }
    let det1 = effective_detector(&scenario.detector1, scenario.transmission1)?;
    let det2 = effective_detector(&scenario.detector2, scenario.transmission2)?;
    let per_chunk = scenario.n_pulses / scenario.chunks;
    let remainder = scenario.n_pulses % scenario.chunks;
    let period = 1.0 / repetition_rate_hz;
    let chunk_outputs: Vec<ChunkStreams> = map_chunks(execution, scenario.chunks, |c| {
        let first = c * per_chunk + c.min(remainder);
        let count = per_chunk + u64::from(c < remainder);
        let pairs = generate_pulse_range(
            &scenario.source,
            first,
            count,
            chunk_seed(scenario.seed, 3 * c),
        );
        let (arm1, arm2) = separate_pairs_deterministic(&pairs);
        let t0 = first as f64 * period;
        let t1 = (first + count) as f64 * period;
        let d1 = respond_window(&arm1, &det1, t0, t1, chunk_seed(scenario.seed, 3 * c + 1))?;
        let d2 = respond_window(&arm2, &det2, t0, t1, chunk_seed(scenario.seed, 3 * c + 2))?;
        Ok((d1, d2))
    });
    let mut stream1 = Vec::new();
    let mut stream2 = Vec::new();
    for r in chunk_outputs {
        let (d1, d2) = r?;
        stream1.extend(d1);
        stream2.extend(d2);
    }
    let clicks1 = sort_and_prune(stream1, scenario.detector1.dead_time_s);
    let clicks2 = sort_and_prune(stream2, scenario.detector2.dead_time_s);
    let duration = scenario.n_pulses as f64 * period;
    finish_coincidence_run(
        scenario.source.pump_power_w,
        scenario.source.pump_wavelength_m,
        &click_times(&clicks1),
        &click_times(&clicks2),
        scenario.stop_delay_s,
        scenario.tac_range_s,
        scenario.bin_width_s,
        None,
        duration,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_coincidence_run(
    pump_power_w: f64,
    pump_wavelength_m: f64,
    starts: &[f64],
    stops_raw: &[f64],
    stop_delay_s: f64,
    tac_range_s: f64,
    bin_width_s: f64,
    window: Option<&CoincidenceWindow>,
    duration_s: f64,
) -> Result<CoincidenceResult, PipelineError> {
    let stops: Vec<f64> = stops_raw.iter().map(|t| t + stop_delay_s).collect();
    let histogram = tac(starts, &stops, tac_range_s, bin_width_s)?;
    let singles1_hz = starts.len() as f64 / duration_s;
    let singles2_hz = stops.len() as f64 / duration_s;
    let (coincidence_hz, accidental_hz) = match window {
        Some(w) => (
            sca(&histogram, w, duration_s)?,
            singles1_hz * singles2_hz * w.width_s,
        ),
        None => (
            histogram.total() as f64 / duration_s,
            singles1_hz * singles2_hz * tac_range_s,
        ),
    };
    // the estimator wants net rates: remove the flat accidental
    // background from the windowed coincidence rate
    let net_coincidence_hz = (coincidence_hz - accidental_hz).max(0.0);
    let efficiency_estimate = estimate_efficiency(
        singles1_hz,
        singles2_hz,
        net_coincidence_hz,
        pump_power_w,
        pump_wavelength_m,
    )
    .ok();
    Ok(CoincidenceResult {
        singles1_hz,
        singles2_hz,
        coincidence_hz,
        accidental_hz,
        efficiency_estimate,
        histogram,
        duration_s,
    })
}

/// A sampled interference fringe scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// (phase on analyzer A, sampled counts) per grid point.
    pub scan: Vec<(f64, f64)>,
    /// Exact analytic bin probability per grid point.
    pub analytic: Vec<(f64, f64)>,
    /// Mean accidental counts injected per point.
    pub accidentals_per_point: f64,
}

/// Sample fringe counts at each phase of the grid: counts are Poisson
/// with mean `pairs_per_point · p(φ) + accidentals_per_point`, where
/// p(φ) is the analytic bin probability from the path calculus.
/// Deterministic per seed; grid points sample independent sub-streams.
#[allow(clippy::too_many_arguments)]
pub fn run_phase_scan(
    setup: &Setup,
    observables: Observables,
    key: BinKey,
    phases: &[f64],
    pairs_per_point: f64,
    accidentals_per_point: f64,
    seed: u64,
    execution: Execution,
) -> Result<ScanResult, PipelineError> {
    setup.validate()?;
    if !(pairs_per_point >= 0.0) || !(accidentals_per_point >= 0.0) {
        return Err(PipelineError::InvalidScenario(
            "pairs and accidentals per point must be nonnegative".to_string(),
        ));
    }
    let analytic = crate::pathcalc::visibility_scan(setup, observables, phases, key)?;
    let sampled: Vec<Result<f64, PipelineError>> =
        map_chunks(execution, phases.len() as u64, |i| {
            let (_, p) = analytic[i as usize];
            let mean = pairs_per_point * p + accidentals_per_point;
            if mean <= 0.0 {
                return Ok(0.0);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(chunk_seed(seed, i));
            let n = Poisson::new(mean)
                .map_err(|_| {
                    PipelineError::InvalidScenario(format!("invalid Poisson mean {mean}"))
                })?
                .sample(&mut rng);
            Ok(n)
        });
    let mut scan = Vec::with_capacity(phases.len());
    for (i, r) in sampled.into_iter().enumerate() {
        scan.push((phases[i], r?));
    }
    Ok(ScanResult {
        scan,
        analytic,
        accidentals_per_point,
    })
}
