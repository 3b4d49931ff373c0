//! Quasi-phase-matching calculations.
//!
//! Collinear scalar form only: the phase mismatch of a first-order
//! grating is
//!
//! ```text
//! Δk = 2π·[n(λp)/λp − n(λs)/λs − n(λi)/λi] − 2π/Λ
//! ```
//!
//! with the idler wavelength fixed by energy conservation,
//! `1/λi = 1/λp − 1/λs`. The relative down-conversion intensity at a
//! signal wavelength is `sinc²(Δk·L/2)`.
//!
//! The built-in lithium-niobate model uses the Jundt (1997) Sellmeier
//! parameterization of the extraordinary index of congruent LiNbO3
//! plus a uniform waveguide index offset (see `docs/dispersion.md` for
//! coefficients and provenance).

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpmError {
    /// Signal wavelength at or below the pump: no idler satisfies
    /// energy conservation.
    #[error("energy conservation violated: signal {signal_m} m must exceed pump {pump_m} m")]
    EnergyConservation { pump_m: f64, signal_m: f64 },
    /// Wavelength outside the declared domain of the dispersion model.
    #[error("wavelength {wavelength_m} m outside domain [{min_m}, {max_m}] m of model {model}")]
    OutsideDomain {
        wavelength_m: f64,
        min_m: f64,
        max_m: f64,
        model: String,
    },
    /// Carrier mismatch is negative: no positive poling period exists.
    #[error("carrier mismatch {carrier_rad_per_m} rad/m is negative: no positive poling period")]
    NoPositivePeriod { carrier_rad_per_m: f64 },
    /// Carrier mismatch is zero (e.g. dispersionless degenerate
    /// input): no finite poling period is needed or defined.
    #[error("carrier mismatch is zero: no finite poling period")]
    NoFinitePeriod,
    #[error("invalid poling spec: {0}")]
    InvalidSpec(String),
    /// The grid was too coarse to bracket the half-maximum; the
    /// partial spectrum is attached.
    #[error("grid too coarse to determine FWHM")]
    FwhmUndefined { points: Vec<SpectrumPoint> },
}

/// Refractive-index model: a named effective-index function of
/// wavelength and temperature plus a uniform waveguide offset.
#[derive(Debug, Clone, PartialEq)]
pub enum DispersionModel {
    /// Wavelength- and temperature-independent index.
    Constant { n: f64 },
    /// Toy model `n(λ) = base + scale·(λ/µm)⁻²`, strongly dispersive.
    InverseSquare { base: f64, scale: f64 },
    /// Congruent lithium niobate, extraordinary axis (Jundt 1997),
    /// plus the uniform waveguide index offset `delta_n`.
    LithiumNiobateE { delta_n: f64 },
}

impl DispersionModel {
    /// Toy model used throughout the test suite: `n = 2.2 + 0.5/λ²`.
    pub fn toy() -> Self {
        DispersionModel::InverseSquare {
            base: 2.2,
            scale: 0.5,
        }
    }

    /// Built-in waveguide model with the nominal +0.03 index offset.
    pub fn lithium_niobate_waveguide() -> Self {
        DispersionModel::LithiumNiobateE { delta_n: 0.03 }
    }

    pub fn name(&self) -> String {
        match self {
            DispersionModel::Constant { n } => format!("constant:{n}"),
            DispersionModel::InverseSquare { .. } => "toy".to_string(),
            DispersionModel::LithiumNiobateE { .. } => "ln-waveguide".to_string(),
        }
    }

    /// Declared wavelength domain, meters.
    pub fn domain_m(&self) -> (f64, f64) {
        match self {
            DispersionModel::Constant { .. } | DispersionModel::InverseSquare { .. } => {
                (100e-9, 5000e-9)
            }
            // Sellmeier fit range of the Jundt coefficients.
            DispersionModel::LithiumNiobateE { .. } => (400e-9, 5000e-9),
        }
    }

    /// Effective refractive index at `wavelength_m` and `temperature_c`.
    pub fn index(&self, wavelength_m: f64, temperature_c: f64) -> Result<f64, QpmError> {
        let (min_m, max_m) = self.domain_m();
        if !(wavelength_m >= min_m && wavelength_m <= max_m) {
            return Err(QpmError::OutsideDomain {
                wavelength_m,
                min_m,
                max_m,
                model: self.name(),
            });
        }
        Ok(match self {
            DispersionModel::Constant { n } => *n,
            DispersionModel::InverseSquare { base, scale } => {
                let um = wavelength_m * 1e6;
                base + scale / (um * um)
            }
            DispersionModel::LithiumNiobateE { delta_n } => {
                jundt_ne(wavelength_m * 1e6, temperature_c) + delta_n
            }
        })
    }
}

/// Extraordinary index of congruent LiNbO3 after Jundt, Opt. Lett. 22,
/// 1553 (1997). `lambda_um` in micrometers, `temperature_c` in °C.
fn jundt_ne(lambda_um: f64, temperature_c: f64) -> f64 {
    let f = (temperature_c - 24.5) * (temperature_c + 570.82);
    let l2 = lambda_um * lambda_um;
    let n2 = 5.35583
        + 4.629e-7 * f
        + (0.100473 + 3.862e-8 * f) / (l2 - (0.20692 - 0.89e-8 * f).powi(2))
        + (100.2156 + 2.657e-5 * f) / (l2 - 11.34927_f64.powi(2))
        - 1.5334e-2 * l2;
    n2.sqrt()
}

/// First-order poling grating and crystal geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolingSpec {
    /// Poling period Λ, m.
    pub period_m: f64,
    /// Crystal length L, m.
    pub length_m: f64,
    /// Operating temperature, °C.
    pub temperature_c: f64,
}

impl PolingSpec {
    pub fn validate(&self) -> Result<(), QpmError> {
        if !(self.period_m > 0.0) {
            return Err(QpmError::InvalidSpec(format!(
                "poling period must be positive, got {}",
                self.period_m
            )));
        }
        if !(self.length_m > 0.0) {
            return Err(QpmError::InvalidSpec(format!(
                "crystal length must be positive, got {}",
                self.length_m
            )));
        }
        Ok(())
    }
}

/// One sample of a relative down-conversion spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub wavelength_m: f64,
    /// Relative intensity, normalized to a maximum of 1.
    pub intensity: f64,
}

/// Relative spectrum plus its full width at half maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
    pub fwhm_m: f64,
}

/// Idler wavelength conjugate to `(pump, signal)` under energy
/// conservation: `1/λi = 1/λp − 1/λs`.
pub fn conjugate_wavelength(pump_m: f64, signal_m: f64) -> Result<f64, QpmError> {
    if !(pump_m > 0.0) || signal_m <= pump_m {
        return Err(QpmError::EnergyConservation { pump_m, signal_m });
    }
    Ok(1.0 / (1.0 / pump_m - 1.0 / signal_m))
}

/// Carrier (grating-free) phase mismatch `k_p − k_s − k_i` in rad/m.
pub fn carrier_mismatch(
    model: &DispersionModel,
    temperature_c: f64,
    pump_m: f64,
    signal_m: f64,
) -> Result<f64, QpmError> {
    let idler_m = conjugate_wavelength(pump_m, signal_m)?;
    let n_p = model.index(pump_m, temperature_c)?;
    let n_s = model.index(signal_m, temperature_c)?;
    let n_i = model.index(idler_m, temperature_c)?;
    Ok(2.0 * PI * (n_p / pump_m - n_s / signal_m - n_i / idler_m))
}

/// Collinear scalar phase mismatch including the first-order grating
/// vector, `Δk = (k_p − k_s − k_i) − 2π/Λ`, rad/m.
pub fn phase_mismatch(
    model: &DispersionModel,
    spec: &PolingSpec,
    pump_m: f64,
    signal_m: f64,
) -> Result<f64, QpmError> {
    spec.validate()?;
    Ok(carrier_mismatch(model, spec.temperature_c, pump_m, signal_m)? - 2.0 * PI / spec.period_m)
}

/// Threshold below which the carrier mismatch is treated as exactly
/// zero (no finite poling period). In rad/m; corresponds to periods
/// beyond ~60 km.
const CARRIER_EPS: f64 = 1e-4;

/// Poling period quasi-phase-matching `(pump, signal)` at the given
/// temperature: `Λ = 2π / (k_p − k_s − k_i)`.
pub fn solve_poling_period(
    model: &DispersionModel,
    pump_m: f64,
    signal_m: f64,
    temperature_c: f64,
) -> Result<f64, QpmError> {
    let carrier = carrier_mismatch(model, temperature_c, pump_m, signal_m)?;
    if carrier.abs() < CARRIER_EPS {
        return Err(QpmError::NoFinitePeriod);
    }
    if carrier < 0.0 {
        return Err(QpmError::NoPositivePeriod {
            carrier_rad_per_m: carrier,
        });
    }
    Ok(2.0 * PI / carrier)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Relative down-conversion spectrum `sinc²(Δk(λ)·L/2)` over the given
/// signal-wavelength grid, normalized to a maximum of 1, with the FWHM
/// obtained by linear interpolation between the grid points that
/// bracket the half maximum.
pub fn pdc_spectrum(
    model: &DispersionModel,
    spec: &PolingSpec,
    pump_m: f64,
    grid_m: &[f64],
) -> Result<Spectrum, QpmError> {
    spec.validate()?;
    if grid_m.len() < 3 {
        return Err(QpmError::InvalidSpec(
            "spectrum grid needs at least 3 points".to_string(),
        ));
    }
    let mut points = Vec::with_capacity(grid_m.len());
    for &lambda in grid_m {
        let dk = phase_mismatch(model, spec, pump_m, lambda)?;
        let s = sinc(dk * spec.length_m / 2.0);
        points.push(SpectrumPoint {
            wavelength_m: lambda,
            intensity: s * s,
        });
    }
    let max = points
        .iter()
        .map(|p| p.intensity)
        .fold(f64::NEG_INFINITY, f64::max);
    for p in &mut points {
        p.intensity /= max;
    }

    let fwhm_m = match fwhm_by_interpolation(&points) {
        Some(w) => w,
        None => return Err(QpmError::FwhmUndefined { points }),
    };
    Ok(Spectrum { points, fwhm_m })
}

/// Half-maximum crossings nearest the peak, linearly interpolated.
/// Returns `None` when either side of the main lobe is not bracketed.
fn fwhm_by_interpolation(points: &[SpectrumPoint]) -> Option<f64> {
    let peak = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.intensity.total_cmp(&b.1.intensity))?
        .0;
    let cross = |i: usize, j: usize| -> f64 {
        let (a, b) = (&points[i], &points[j]);
        let t = (0.5 - a.intensity) / (b.intensity - a.intensity);
        a.wavelength_m + t * (b.wavelength_m - a.wavelength_m)
    };
    let mut left = None;
    for i in (1..=peak).rev() {
        if points[i - 1].intensity < 0.5 && points[i].intensity >= 0.5 {
            left = Some(cross(i - 1, i));
            break;
        }
    }
    let mut right = None;
    for i in peak..points.len() - 1 {
        if points[i].intensity >= 0.5 && points[i + 1].intensity < 0.5 {
            right = Some(cross(i + 1, i));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    }
}

/// Evenly spaced wavelength grid, inclusive of both ends.
pub fn linspace(min_m: f64, max_m: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (max_m - min_m) / (n - 1) as f64;
    (0..n).map(|i| min_m + i as f64 * step).collect()
}
