//! Scenario execution and report generation.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use photonpair::analyze::{
    bell_significance, find_peaks, fit_visibility, infer_mu, subtract_accidentals, AnalyzeError,
};
use photonpair::io::{
    read_histogram_csv, read_scan_csv, write_histogram_csv, write_report, write_scan_csv,
    write_spectrum_csv, IoError,
};
use photonpair::pathcalc::{BinKey, Observables};
use photonpair::pipeline::{
    run_cw_coincidence, run_phase_scan, run_pulsed_coincidence, CoincidenceResult, PipelineError,
};
use photonpair::qpm::{pdc_spectrum, solve_poling_period, QpmError};
use photonpair::Execution;

use crate::config::{ConfigError, InterferenceScenario, QpmDesign, RawConfig, Scenario};

/// Top-level error, carrying the process exit code.
#[derive(Debug)]
pub enum AppError {
    /// Invalid configuration or arguments → exit 2.
    Config(String),
    /// Unreadable input or unwritable output → exit 3.
    Io(String),
    /// Solver or numeric failure → exit 4.
    Numeric(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Io(_) => 3,
            AppError::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Io(m) | AppError::Numeric(m) => m,
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(format!("config error: {e}"))
    }
}

impl From<IoError> for AppError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::File { .. } => AppError::Io(format!("i/o error: {e}")),
            IoError::Parse { .. } => AppError::Config(format!("parse error: {e}")),
        }
    }
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Source(_) | PipelineError::InvalidScenario(_) => {
                AppError::Config(format!("config error: {e}"))
            }
            PipelineError::Detect(_) | PipelineError::Path(_) => {
                AppError::Numeric(format!("numeric error: {e}"))
            }
        }
    }
}

impl From<QpmError> for AppError {
    fn from(e: QpmError) -> Self {
        AppError::Numeric(format!("solver error: {e}"))
    }
}

impl From<AnalyzeError> for AppError {
    fn from(e: AnalyzeError) -> Self {
        AppError::Numeric(format!("analysis error: {e}"))
    }
}

fn ensure_dir(dir: &Path) -> Result<(), AppError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| AppError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn write_manifest(
    dir: &Path,
    kind: &str,
    config_text: &str,
    seed: Option<u64>,
) -> Result<(), AppError> {
    let digest = Sha256::digest(config_text.as_bytes());
    let mut hex = String::new();
    for b in digest {
        write!(hex, "{b:02x}").unwrap();
    }
    let mut fields = vec![
        ("kind", kind.to_string()),
        ("config_sha256", hex),
        ("version", env!("CARGO_PKG_VERSION").to_string()),
    ];
    if let Some(s) = seed {
        fields.push(("seed", s.to_string()));
    }
    write_report(&dir.join("manifest.txt"), &fields)?;
    Ok(())
}

fn coincidence_report(dir: &Path, r: &CoincidenceResult) -> Result<(), AppError> {
    write_histogram_csv(&dir.join("histogram.csv"), &r.histogram)?;
    let mut fields = vec![
        ("singles1_hz", r.singles1_hz.to_string()),
        ("singles2_hz", r.singles2_hz.to_string()),
        ("coincidence_hz", r.coincidence_hz.to_string()),
        ("accidental_hz", r.accidental_hz.to_string()),
        ("duration_s", r.duration_s.to_string()),
    ];
    match r.efficiency_estimate {
        Some(eta) => fields.push(("eta_estimate", eta.to_string())),
        None => fields.push(("eta_estimate", "undefined".to_string())),
    }
    write_report(&dir.join("report.txt"), &fields)?;
    Ok(())
}

fn run_interference(
    s: &InterferenceScenario,
    dir: &Path,
    execution: Execution,
) -> Result<(), AppError> {
    let (observables, key) = if s.three_fold {
        (Observables::ThreeFoldReferenced, BinKey::Referenced(1, 1))
    } else {
        (Observables::TwoFoldDifference, BinKey::Difference(0))
    };
    let phases: Vec<f64> = (0..s.phase_points)
        .map(|i| i as f64 * 2.0 * std::f64::consts::PI / s.phase_points as f64)
        .collect();
    let r = run_phase_scan(
        &s.setup,
        observables,
        key,
        &phases,
        s.pairs_per_point,
        s.accidentals_per_point,
        s.seed,
        execution,
    )?;
    write_scan_csv(&dir.join("scan.csv"), &r.scan)?;
    let raw = fit_visibility(&r.scan)?;
    let mut fields = vec![
        ("V_raw", raw.visibility.to_string()),
        ("sigma_raw", raw.sigma.to_string()),
    ];
    if s.accidentals_per_point > 0.0 {
        // subtract exactly the configured accidental mean per point
        let net = subtract_accidentals(&r.scan, s.accidentals_per_point, 1.0, 1.0, 1.0)?;
        fields.push(("V_net", net.visibility.to_string()));
        fields.push(("sigma_net", net.sigma.to_string()));
        let bell = bell_significance(net.visibility, net.sigma)?;
        fields.push(("bell_sigma", bell.significance.to_string()));
        fields.push(("S_chsh", bell.s_chsh.to_string()));
    } else {
        let bell = bell_significance(raw.visibility, raw.sigma.max(1e-12))?;
        fields.push(("bell_sigma", bell.significance.to_string()));
        fields.push(("S_chsh", bell.s_chsh.to_string()));
    }
    write_report(&dir.join("report.txt"), &fields)?;
    Ok(())
}

fn run_qpm_design(q: &QpmDesign, dir: &Path) -> Result<(), AppError> {
    let signal = q.signal_m.unwrap_or(2.0 * q.pump_m);
    let period_m = solve_poling_period(&q.model, q.pump_m, signal, q.temperature_c)?;
    let spec = photonpair::qpm::PolingSpec {
        period_m,
        length_m: q.length_m,
        temperature_c: q.temperature_c,
    };
    let grid = photonpair::qpm::linspace(
        signal - q.grid_halfwidth_m,
        signal + q.grid_halfwidth_m,
        q.grid_points,
    );
    let spectrum = pdc_spectrum(&q.model, &spec, q.pump_m, &grid)?;
    write_spectrum_csv(&dir.join("spectrum.csv"), &spectrum)?;
    let fields = vec![
        ("model", q.model.name()),
        ("period_um", (period_m * 1e6).to_string()),
        ("temperature_c", q.temperature_c.to_string()),
        ("length_cm", (q.length_m * 1e2).to_string()),
        ("fwhm_nm", (spectrum.fwhm_m * 1e9).to_string()),
    ];
    write_report(&dir.join("report.txt"), &fields)?;
    Ok(())
}

/// Execute `run <config> --out <dir>`.
pub fn run_command(
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
    execution: Execution,
) -> Result<(), AppError> {
    let raw = RawConfig::load(config_path)?;
    let scenario = crate::config::parse_scenario(&raw, seed_override)?;
    ensure_dir(out_dir)?;
    match &scenario {
        Scenario::CwCoincidence(s) => {
            let r = run_cw_coincidence(s, execution)?;
            coincidence_report(out_dir, &r)?;
            write_manifest(out_dir, "cw_coincidence", &raw.text, Some(s.seed))?;
        }
        Scenario::PulsedCoincidence(s) => {
            let r = run_pulsed_coincidence(s, execution)?;
            coincidence_report(out_dir, &r)?;
            write_manifest(out_dir, "pulsed_coincidence", &raw.text, Some(s.seed))?;
        }
        Scenario::Interference(s) => {
            run_interference(s, out_dir, execution)?;
            let kind = match s.setup.pump {
                photonpair::pathcalc::Pump::Cw => "franson",
                photonpair::pathcalc::Pump::Pulsed { .. } => "timebin",
            };
            write_manifest(out_dir, kind, &raw.text, Some(s.seed))?;
        }
        Scenario::QpmDesign(q) => {
            run_qpm_design(q, out_dir)?;
            write_manifest(out_dir, "qpm_design", &raw.text, None)?;
        }
    }
    Ok(())
}

/// Options for `analyze`.
pub struct AnalyzeOptions {
    /// Expected peak spacing for histogram inputs, s.
    pub spacing_s: f64,
    /// Optional accidental-subtraction parameters for scan inputs:
    /// (S1 Hz, S2 Hz, window s, duration s).
    pub accidentals: Option<(f64, f64, f64, f64)>,
}

/// Execute `analyze <input> --out <report>`: histogram inputs get peak
/// extraction and µ-inference, scan inputs get a visibility fit with
/// optional accidental subtraction and a Bell-significance summary.
pub fn analyze_command(
    input: &Path,
    report_path: &Path,
    options: &AnalyzeOptions,
) -> Result<(), AppError> {
    let first_line = std::fs::read_to_string(input)
        .map_err(|e| AppError::Io(format!("cannot read {}: {e}", input.display())))?
        .lines()
        .next()
        .unwrap_or_default()
        .trim()
        .to_string();
    let fields = match first_line.as_str() {
        "bin_start_ns,counts" => {
            let h = read_histogram_csv(input)?;
            let peaks = find_peaks(&h, options.spacing_s)?;
            let mut fields = vec![("n_peaks", peaks.peaks.len().to_string())];
            if peaks.is_empty() {
                fields.push(("peaks", "none".to_string()));
            } else {
                let positions: Vec<String> = peaks
                    .peaks
                    .iter()
                    .map(|p| (p.position_s * 1e9).to_string())
                    .collect();
                fields.push(("peak_positions_ns", positions.join(" ")));
                if let Some(sp) = peaks.mean_spacing_s() {
                    fields.push(("mean_spacing_ns", (sp * 1e9).to_string()));
                }
                if peaks.peaks.len() >= 2 {
                    let est = infer_mu(&peaks)?;
                    fields.push(("r", est.ratio.to_string()));
                    fields.push(("mu", est.mu.to_string()));
                }
            }
            fields
        }
        "phase_rad,counts" => {
            let scan = read_scan_csv(input)?;
            let raw = fit_visibility(&scan)?;
            let mut fields = vec![
                ("V_raw", raw.visibility.to_string()),
                ("sigma_raw", raw.sigma.to_string()),
            ];
            let (v, sigma) = match options.accidentals {
                Some((s1, s2, window, duration)) => {
                    let net = subtract_accidentals(&scan, s1, s2, window, duration)?;
                    fields.push(("V_net", net.visibility.to_string()));
                    fields.push(("sigma_net", net.sigma.to_string()));
                    if net.clamped {
                        fields.push(("warning", "subtraction clamped points at zero".to_string()));
                    }
                    (net.visibility, net.sigma)
                }
                None => (raw.visibility, raw.sigma),
            };
            let bell = bell_significance(v, sigma.max(1e-12))?;
            fields.push(("bell_sigma", bell.significance.to_string()));
            fields.push(("S_chsh", bell.s_chsh.to_string()));
            fields
        }
        other => {
            return Err(AppError::Config(format!(
                "{}: unrecognized input header '{other}' (expected a histogram or scan CSV)",
                input.display()
            )))
        }
    };
    if let Some(parent) = report_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_report(report_path, &fields)?;
    Ok(())
}

/// Options for the `qpm` subcommand.
pub struct QpmOptions {
    pub model: String,
    pub pump_nm: f64,
    pub signal_nm: Option<f64>,
    pub temperature_c: f64,
    pub length_cm: f64,
    pub grid_points: usize,
    pub grid_halfwidth_nm: f64,
}

/// Execute `qpm ... --out <dir>`.
pub fn qpm_command(options: &QpmOptions, out_dir: &Path) -> Result<(), AppError> {
    let model = match options.model.as_str() {
        "lithium_niobate" => photonpair::qpm::DispersionModel::lithium_niobate_waveguide(),
        "toy" => photonpair::qpm::DispersionModel::toy(),
        "constant" => photonpair::qpm::DispersionModel::Constant { n: 2.2 },
        other => {
            return Err(AppError::Config(format!(
                "unknown dispersion model '{other}' (expected lithium_niobate, toy or constant)"
            )))
        }
    };
    let design = QpmDesign {
        model,
        pump_m: options.pump_nm * 1e-9,
        signal_m: options.signal_nm.map(|s| s * 1e-9),
        temperature_c: options.temperature_c,
        length_m: options.length_cm * 1e-2,
        grid_points: options.grid_points,
        grid_halfwidth_m: options.grid_halfwidth_nm * 1e-9,
    };
    ensure_dir(out_dir)?;
    run_qpm_design(&design, out_dir)?;
    let pseudo_config = format!(
        "model = {}\npump_nm = {}\ntemperature_c = {}\nlength_cm = {}\n",
        options.model, options.pump_nm, options.temperature_c, options.length_cm
    );
    write_manifest(out_dir, "qpm_design", &pseudo_config, None)?;
    Ok(())
}
