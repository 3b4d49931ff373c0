//! Flat `key = value` configuration files with dotted section
//! prefixes. Times are given in ns, powers in µW and wavelengths in
//! nm; everything converts to SI base units at parse time.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use photonpair::detect::{CoincidenceWindow, DetectorSpec};
use photonpair::pathcalc::{InterferometerSpec, Pump, Setup};
use photonpair::pipeline::{CwCoincidenceScenario, PulsedCoincidenceScenario};
use photonpair::qpm::DispersionModel;
use photonpair::source::{PairStatistics, PumpMode, SourceConfig};

const NS: f64 = 1e-9;
const NM: f64 = 1e-9;
const UW: f64 = 1e-6;

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(message: impl Into<String>) -> ConfigError {
    ConfigError {
        message: message.into(),
    }
}

/// Raw key/value view of a config file, tracking which keys were read
/// so unknown keys can be reported.
pub struct RawConfig {
    values: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
    /// Exact file bytes, for digesting into the run manifest.
    pub text: String,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!(
                    "line {lineno}: expected 'key = value', found '{line}'"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(err(format!("line {lineno}: empty key")));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(err(format!("line {lineno}: duplicate key '{key}'")));
            }
        }
        Ok(RawConfig {
            values,
            used: Default::default(),
            text: text.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<RawConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        RawConfig::parse(&text)
    }

    fn get(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key).map(String::as_str);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .ok_or_else(|| err(format!("missing required key '{key}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.require(key)?
            .parse()
            .map_err(|e| err(format!("key '{key}': not a number ({e})")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|e| err(format!("key '{key}': not a number ({e})"))),
            None => Ok(default),
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.require(key)?
            .parse()
            .map_err(|e| err(format!("key '{key}': not an integer ({e})")))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|e| err(format!("key '{key}': not an integer ({e})"))),
            None => Ok(default),
        }
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    /// Error if any key was never consumed (catches typos).
    pub fn check_unknown(&self) -> Result<(), ConfigError> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.values.keys().filter(|k| !used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(err(format!(
                "unknown key(s): {}",
                unknown
                    .iter()
                    .map(|k| format!("'{k}'"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

/// A fully parsed scenario, ready to run.
#[derive(Debug)]
pub enum Scenario {
    CwCoincidence(CwCoincidenceScenario),
    PulsedCoincidence(PulsedCoincidenceScenario),
    /// Fringe scan for a Franson (CW pump) or time-bin (pulsed pump)
    /// interference setup.
    Interference(InterferenceScenario),
    QpmDesign(QpmDesign),
}

#[derive(Debug)]
pub struct InterferenceScenario {
    pub setup: Setup,
    /// `two_fold` or `three_fold` post-selection.
    pub three_fold: bool,
    pub phase_points: usize,
    pub pairs_per_point: f64,
    pub accidentals_per_point: f64,
    /// Singles rates and window reported alongside the scan so the
    /// analysis stage can subtract accidentals.
    pub seed: u64,
}

#[derive(Debug)]
pub struct QpmDesign {
    pub model: DispersionModel,
    pub pump_m: f64,
    pub signal_m: Option<f64>,
    pub temperature_c: f64,
    pub length_m: f64,
    pub grid_points: usize,
    pub grid_halfwidth_m: f64,
}

fn parse_detector(cfg: &RawConfig, section: &str) -> Result<DetectorSpec, ConfigError> {
    Ok(DetectorSpec {
        quantum_efficiency: cfg.f64(&format!("{section}.quantum_efficiency"))?,
        dark_rate_hz: cfg.f64_or(&format!("{section}.dark_rate_hz"), 0.0)?,
        dead_time_s: cfg.f64_or(&format!("{section}.dead_time_ns"), 0.0)? * NS,
        jitter_sigma_s: cfg.f64_or(&format!("{section}.jitter_sigma_ns"), 0.0)? * NS,
    })
}

fn parse_statistics(cfg: &RawConfig) -> Result<PairStatistics, ConfigError> {
    match cfg.string_or("source.statistics", "poisson").as_str() {
        "poisson" => Ok(PairStatistics::Poisson),
        "thermal" => Ok(PairStatistics::Thermal),
        other => Err(err(format!(
            "key 'source.statistics': expected 'poisson' or 'thermal', found '{other}'"
        ))),
    }
}

fn parse_source(cfg: &RawConfig, pulsed: bool) -> Result<SourceConfig, ConfigError> {
    let mode = if pulsed {
        PumpMode::Pulsed {
            repetition_rate_hz: cfg.f64("source.repetition_rate_MHz")? * 1e6,
            pulse_duration_s: cfg.f64("source.pulse_duration_ns")? * NS,
        }
    } else {
        PumpMode::Cw
    };
    Ok(SourceConfig {
        efficiency: cfg.f64("source.efficiency")?,
        pump_power_w: cfg.f64("source.pump_power_uW")? * UW,
        pump_wavelength_m: cfg.f64("source.pump_wavelength_nm")? * NM,
        mode,
        statistics: parse_statistics(cfg)?,
    })
}

fn parse_seed(cfg: &RawConfig, seed_override: Option<u64>) -> Result<u64, ConfigError> {
    match seed_override {
        Some(s) => {
            // consume the config key if present so it is not "unknown"
            let _ = cfg.u64_or("seed", 0);
            Ok(s)
        }
        None => cfg.u64("seed"),
    }
}

/// Parse a scenario config, optionally overriding the seed.
pub fn parse_scenario(
    cfg: &RawConfig,
    seed_override: Option<u64>,
) -> Result<Scenario, ConfigError> {
    let kind = cfg.require("kind")?.to_string();
    let scenario = match kind.as_str() {
        "cw_coincidence" => Scenario::CwCoincidence(CwCoincidenceScenario {
            source: parse_source(cfg, false)?,
            detector1: parse_detector(cfg, "detector1")?,
            detector2: parse_detector(cfg, "detector2")?,
            transmission1: cfg.f64_or("arm1.transmission", 1.0)?,
            transmission2: cfg.f64_or("arm2.transmission", 1.0)?,
            stop_delay_s: cfg.f64("tac.stop_delay_ns")? * NS,
            tac_range_s: cfg.f64("tac.range_ns")? * NS,
            bin_width_s: cfg.f64("tac.bin_width_ns")? * NS,
            window: CoincidenceWindow {
                center_s: cfg.f64("window.center_ns")? * NS,
                width_s: cfg.f64("window.width_ns")? * NS,
            },
            duration_s: cfg.f64("run.duration_s")?,
            chunks: cfg.u64_or("run.chunks", 32)?,
            seed: parse_seed(cfg, seed_override)?,
        }),
        "pulsed_coincidence" => Scenario::PulsedCoincidence(PulsedCoincidenceScenario {
            source: parse_source(cfg, true)?,
            detector1: parse_detector(cfg, "detector1")?,
            detector2: parse_detector(cfg, "detector2")?,
            transmission1: cfg.f64_or("arm1.transmission", 1.0)?,
            transmission2: cfg.f64_or("arm2.transmission", 1.0)?,
            stop_delay_s: cfg.f64("tac.stop_delay_ns")? * NS,
            tac_range_s: cfg.f64("tac.range_ns")? * NS,
            bin_width_s: cfg.f64("tac.bin_width_ns")? * NS,
            n_pulses: cfg.u64("run.pulses")?,
            chunks: cfg.u64_or("run.chunks", 32)?,
            seed: parse_seed(cfg, seed_override)?,
        }),
        "franson" | "timebin" => {
            let imbalance = cfg.f64("analyzer.imbalance_ns")? * NS;
            let pump = if kind == "timebin" {
                Pump::Pulsed {
                    phase_rad: cfg.f64_or("pump.phase_rad", 0.0)?,
                }
            } else {
                Pump::Cw
            };
            let three_fold = match cfg.string_or("observables", "two_fold").as_str() {
                "two_fold" => false,
                "three_fold" => true,
                other => {
                    return Err(err(format!(
                        "key 'observables': expected 'two_fold' or 'three_fold', found '{other}'"
                    )))
                }
            };
            if three_fold && kind == "franson" {
                return Err(err(
                    "key 'observables': three_fold needs a pulsed pump (kind = timebin)",
                ));
            }
            Scenario::Interference(InterferenceScenario {
                setup: Setup {
                    pump,
                    analyzer_a: InterferometerSpec::ideal(
                        imbalance,
                        cfg.f64_or("analyzer_a.phase_rad", 0.0)?,
                    ),
                    analyzer_b: InterferometerSpec::ideal(
                        imbalance,
                        cfg.f64_or("analyzer_b.phase_rad", 0.0)?,
                    ),
                    dephasing: cfg.f64_or("dephasing", 1.0)?,
                },
                three_fold,
                phase_points: cfg.u64_or("scan.points", 16)? as usize,
                pairs_per_point: cfg.f64("scan.pairs_per_point")?,
                accidentals_per_point: cfg.f64_or("scan.accidentals_per_point", 0.0)?,
                seed: parse_seed(cfg, seed_override)?,
            })
        }
        "qpm_design" => {
            let model = match cfg.string_or("qpm.model", "lithium_niobate").as_str() {
                "lithium_niobate" => DispersionModel::lithium_niobate_waveguide(),
                "toy" => DispersionModel::toy(),
                "constant" => DispersionModel::Constant {
                    n: cfg.f64_or("qpm.index", 2.2)?,
                },
                other => Err(err(format!(
                    "key 'qpm.model': unknown model '{other}' (expected lithium_niobate, toy or constant)"
                )))?,
            };
            Scenario::QpmDesign(QpmDesign {
                model,
                pump_m: cfg.f64("qpm.pump_nm")? * NM,
                signal_m: match cfg.get("qpm.signal_nm") {
                    Some(v) => Some(
                        v.parse::<f64>()
                            .map_err(|e| err(format!("key 'qpm.signal_nm': {e}")))?
                            * NM,
                    ),
                    None => None,
                },
                temperature_c: cfg.f64_or("qpm.temperature_c", 100.0)?,
                length_m: cfg.f64("qpm.length_cm")? * 1e-2,
                grid_points: cfg.u64_or("qpm.grid_points", 2001)? as usize,
                grid_halfwidth_m: cfg.f64_or("qpm.grid_halfwidth_nm", 100.0)? * NM,
            })
        }
        other => {
            return Err(err(format!(
                "key 'kind': unknown scenario kind '{other}' (expected cw_coincidence, \
                 pulsed_coincidence, franson, timebin or qpm_design)"
            )))
        }
    };
    cfg.check_unknown()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CW: &str = "\
kind = cw_coincidence
seed = 42
source.efficiency = 2e-6
source.pump_power_uW = 1
source.pump_wavelength_nm = 657
detector1.quantum_efficiency = 0.1
detector1.dead_time_ns = 500
detector2.quantum_efficiency = 0.1
detector2.dead_time_ns = 500
arm1.transmission = 0.23
arm2.transmission = 0.23
tac.stop_delay_ns = 25
tac.range_ns = 50
tac.bin_width_ns = 0.5
window.center_ns = 25
window.width_ns = 4
run.duration_s = 10
run.chunks = 32
";

    #[test]
    fn cw_config_parses_with_unit_conversion() {
        let raw = RawConfig::parse(CW).unwrap();
        let Scenario::CwCoincidence(s) = parse_scenario(&raw, None).unwrap() else {
            panic!("wrong kind");
        };
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12 * b.abs();
        assert_eq!(s.seed, 42);
        assert!(close(s.source.pump_power_w, 1e-6));
        assert!(close(s.source.pump_wavelength_m, 657e-9));
        assert!(close(s.detector1.dead_time_s, 500e-9));
        assert!(close(s.tac_range_s, 50e-9));
        assert!(close(s.window.width_s, 4e-9));
    }

    #[test]
    fn seed_override_wins() {
        let raw = RawConfig::parse(CW).unwrap();
        let Scenario::CwCoincidence(s) = parse_scenario(&raw, Some(7)).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn unknown_key_is_reported_by_name() {
        let text = format!("{CW}typo.key = 1\n");
        let raw = RawConfig::parse(&text).unwrap();
        let e = parse_scenario(&raw, None).unwrap_err();
        assert!(e.message.contains("typo.key"), "{}", e.message);
    }

    #[test]
    fn missing_key_is_reported_by_name() {
        let text = CW.replace("tac.range_ns = 50\n", "");
        let raw = RawConfig::parse(&text).unwrap();
        let e = parse_scenario(&raw, None).unwrap_err();
        assert!(e.message.contains("tac.range_ns"), "{}", e.message);
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = format!("{CW}seed = 43\n");
        assert!(RawConfig::parse(&text).is_err());
    }

    #[test]
    fn franson_config_parses() {
        let text = "\
kind = franson
seed = 1
analyzer.imbalance_ns = 1.2
analyzer_b.phase_rad = 0.3
dephasing = 0.97
scan.points = 24
scan.pairs_per_point = 1e6
scan.accidentals_per_point = 500
";
        let raw = RawConfig::parse(text).unwrap();
        let Scenario::Interference(s) = parse_scenario(&raw, None).unwrap() else {
            panic!("wrong kind");
        };
        assert!(!s.three_fold);
        assert_eq!(s.phase_points, 24);
        assert_eq!(s.setup.analyzer_b.phase_rad, 0.3);
        assert_eq!(s.setup.analyzer_a.imbalance_s, 1.2e-9);
    }

    #[test]
    fn franson_rejects_three_fold() {
        let text = "\
kind = franson
seed = 1
analyzer.imbalance_ns = 1.2
observables = three_fold
scan.pairs_per_point = 1e6
";
        let raw = RawConfig::parse(text).unwrap();
        assert!(parse_scenario(&raw, None).is_err());
    }

    #[test]
    fn qpm_config_parses() {
        let text = "\
kind = qpm_design
qpm.model = lithium_niobate
qpm.pump_nm = 657
qpm.temperature_c = 100
qpm.length_cm = 3.2
";
        let raw = RawConfig::parse(text).unwrap();
        let Scenario::QpmDesign(q) = parse_scenario(&raw, None).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(q.pump_m, 657e-9);
        assert_eq!(q.length_m, 3.2e-2);
        assert_eq!(q.grid_points, 2001);
    }
}
