//! Statistical recovery of physical quantities from coincidence
//! histograms and phase scans: peak extraction, mean pairs per pulse,
//! fringe visibilities (raw and accidental-subtracted), and Bell-test
//! significance.

use thiserror::Error;

use crate::detect::Histogram;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(
        "peak ratio r = {0} is >= 1; mean-pair inversion undefined (saturated or non-Poisson data)"
    )]
    RatioOutOfDomain(f64),
    #[error("need the central peak and at least one satellite, found {0} peak(s)")]
    TooFewPeaks(usize),
    #[error("degenerate design matrix; phases do not constrain the fit")]
    DegenerateFit,
}

/// One histogram peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Position of the peak maximum (bin center), s.
    pub position_s: f64,
    /// Integrated counts over ± spacing/4 around the maximum.
    pub area: f64,
}

/// Peaks found in a coincidence histogram, in increasing position order.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    /// Expected peak-to-peak spacing used for the search, s.
    pub expected_spacing_s: f64,
}

impl PeakSet {
    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Mean spacing between neighboring peaks, s. `None` with fewer
    /// than two peaks.
    pub fn mean_spacing_s(&self) -> Option<f64> {
        if self.peaks.len() < 2 {
            return None;
        }
        let span = self.peaks.last().unwrap().position_s - self.peaks[0].position_s;
        Some(span / (self.peaks.len() - 1) as f64)
    }
}

/// Locate local maxima above a Poisson noise floor and integrate their
/// areas. The floor is `median + 5·sqrt(median)` of the bin counts; the
/// area window is ± spacing/4 around each maximum.
pub fn find_peaks(h: &Histogram, expected_spacing_s: f64) -> Result<PeakSet, AnalyzeError> {
    if expected_spacing_s <= 2.0 * h.bin_width_s {
        return Err(AnalyzeError::InvalidInput(format!(
            "expected spacing {expected_spacing_s} s must exceed two bin widths ({} s)",
            2.0 * h.bin_width_s
        )));
    }
    let mut sorted: Vec<u64> = h.counts.clone();
    sorted.sort_unstable();
    let median = sorted[sorted.len() / 2] as f64;
    let floor = median + 5.0 * median.sqrt();

    let n = h.counts.len();
    let half_window = (expected_spacing_s / 4.0 / h.bin_width_s).round() as i64;
    // exclude bins closer than spacing/2 to a previously accepted peak
    let exclusion = (expected_spacing_s / 2.0 / h.bin_width_s).round() as i64;

    // candidate maxima ordered by height so taller peaks claim their
    // neighborhoods first
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h.counts[b].cmp(&h.counts[a]).then(a.cmp(&b)));

    let mut taken = vec![false; n];
    let mut peaks: Vec<Peak> = Vec::new();
    for i in order {
        let c = h.counts[i] as f64;
        if c <= floor {
            break;
        }
        if taken[i] {
            continue;
        }
        let left = if i > 0 { h.counts[i - 1] } else { 0 };
        let right = if i + 1 < n { h.counts[i + 1] } else { 0 };
        if h.counts[i] < left || h.counts[i] < right {
            continue;
        }
        let lo = (i as i64 - half_window).max(0) as usize;
        let hi = ((i as i64 + half_window) as usize).min(n - 1);
        let area: u64 = h.counts[lo..=hi].iter().sum();
        peaks.push(Peak {
            position_s: h.bin_center_s(i),
            area: area as f64,
        });
        let xlo = (i as i64 - exclusion).max(0) as usize;
        let xhi = ((i as i64 + exclusion) as usize).min(n - 1);
        for t in &mut taken[xlo..=xhi] {
            *t = true;
        }
    }
    peaks.sort_by(|a, b| a.position_s.total_cmp(&b.position_s));
    Ok(PeakSet {
        peaks,
        expected_spacing_s,
    })
}

/// Mean pairs per pulse inferred from a satellite/central area ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuEstimate {
    /// Mean satellite area / central peak area.
    pub ratio: f64,
    /// Mean pairs per pulse, µ = r/(1−r).
    pub mu: f64,
}

/// Infer the mean pair number per pulse from a pulsed coincidence
/// histogram. The central peak is the one with the largest area;
/// satellites are everything else. With Poisson pair statistics and
/// small detection probabilities the satellite/central ratio is
/// r = µ/(1+µ), inverted here as µ = r/(1−r).
pub fn infer_mu(peaks: &PeakSet) -> Result<MuEstimate, AnalyzeError> {
    if peaks.peaks.len() < 2 {
        return Err(AnalyzeError::TooFewPeaks(peaks.peaks.len()));
    }
    let central_idx = peaks
        .peaks
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.area.total_cmp(&b.area))
        .map(|(i, _)| i)
        .unwrap();
    let central = peaks.peaks[central_idx].area;
    if central <= 0.0 {
        return Err(AnalyzeError::InvalidInput(
            "central peak has zero area".to_string(),
        ));
    }
    let satellites: Vec<f64> = peaks
        .peaks
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != central_idx)
        .map(|(_, p)| p.area)
        .collect();
    let ratio = satellites.iter().sum::<f64>() / satellites.len() as f64 / central;
    if ratio >= 1.0 {
        return Err(AnalyzeError::RatioOutOfDomain(ratio));
    }
    Ok(MuEstimate {
        ratio,
        mu: ratio / (1.0 - ratio),
    })
}

/// Sinusoidal fringe fit R(Φ) = R₀·(1 + V·cos(Φ + Φ₀)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityFit {
    /// Fringe visibility, in [0, 1] for physical data.
    pub visibility: f64,
    /// Standard error of the visibility from the fit covariance.
    pub sigma: f64,
    /// Phase offset Φ₀, rad.
    pub phase_offset_rad: f64,
    /// Baseline R₀, counts.
    pub baseline: f64,
    /// Set when accidental subtraction clamped negative points to zero.
    pub clamped: bool,
}

/// Solve the symmetric 3×3 normal equations by Gaussian elimination
/// with partial pivoting; returns the solution and the inverse matrix.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Result<([f64; 3], [[f64; 3]; 3]), AnalyzeError> {
    // augment with b and the identity to get both x and A⁻¹
    let mut m = [[0.0f64; 7]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
        m[i][4 + i] = 1.0;
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-12 {
            return Err(AnalyzeError::DegenerateFit);
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for v in &mut m[col] {
            *v /= p;
        }
        for row in 0..3 {
            if row != col {
                let f = m[row][col];
                let pivot_row = m[col];
                for (v, p) in m[row].iter_mut().zip(pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    let x = [m[0][3], m[1][3], m[2][3]];
    let mut inv = [[0.0f64; 3]; 3];
    for i in 0..3 {
        inv[i].copy_from_slice(&m[i][4..7]);
    }
    Ok((x, inv))
}

/// Weighted least-squares fit of R(Φ) = a₀ + a₁cosΦ + a₂sinΦ with
/// Poisson weights 1/max(counts, 1), reported as R₀·(1 + V·cos(Φ+Φ₀))
/// with V = √(a₁²+a₂²)/a₀ and a delta-method standard error.
pub fn fit_visibility(scan: &[(f64, f64)]) -> Result<VisibilityFit, AnalyzeError> {
    if scan.len() < 4 {
        return Err(AnalyzeError::InvalidInput(format!(
            "need at least 4 scan points, got {}",
            scan.len()
        )));
    }
    let phases: Vec<f64> = scan.iter().map(|&(p, _)| p).collect();
    let span = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - phases.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < std::f64::consts::PI {
        return Err(AnalyzeError::InvalidInput(format!(
            "phase span {span:.3} rad must cover at least pi"
        )));
    }
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(phi, counts) in scan {
        let w = 1.0 / counts.max(1.0);
        let basis = [1.0, phi.cos(), phi.sin()];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += w * basis[i] * basis[j];
            }
            atb[i] += w * basis[i] * counts;
        }
    }
    let ([a0, a1, a2], cov) = solve3(ata, atb)?;
    if a0 <= 0.0 {
        return Err(AnalyzeError::InvalidInput(format!(
            "fitted baseline {a0} is not positive"
        )));
    }
    let amp = (a1 * a1 + a2 * a2).sqrt();
    let visibility = amp / a0;
    // delta method: V = sqrt(a1²+a2²)/a0, gradient dotted with the
    // parameter covariance (A'WA)⁻¹
    let grad = if amp > 0.0 {
        [-amp / (a0 * a0), a1 / (amp * a0), a2 / (amp * a0)]
    } else {
        [0.0, 1.0 / a0, 1.0 / a0]
    };
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }
    Ok(VisibilityFit {
        visibility,
        sigma: var.max(0.0).sqrt(),
        phase_offset_rad: (-a2).atan2(a1),
        baseline: a0,
        clamped: false,
    })
}

/// Subtract a flat accidental-coincidence background from a phase scan
/// and refit. The accidental rate for uncorrelated singles streams is
/// R_acc = S1·S2·τ; each point loses R_acc·duration counts, clamped at
/// zero (flagged) if subtraction overshoots.
pub fn subtract_accidentals(
    scan: &[(f64, f64)],
    singles1_hz: f64,
    singles2_hz: f64,
    window_s: f64,
    duration_s: f64,
) -> Result<VisibilityFit, AnalyzeError> {
    for (name, v) in [
        ("singles rate 1", singles1_hz),
        ("singles rate 2", singles2_hz),
        ("window", window_s),
        ("duration", duration_s),
    ] {
        if !(v >= 0.0) {
            return Err(AnalyzeError::InvalidInput(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    let accidentals = singles1_hz * singles2_hz * window_s * duration_s;
    let mut clamped = false;
    let net: Vec<(f64, f64)> = scan
        .iter()
        .map(|&(phi, counts)| {
            let c = counts - accidentals;
            if c < 0.0 {
                clamped = true;
                (phi, 0.0)
            } else {
                (phi, c)
            }
        })
        .collect();
    let mut fit = fit_visibility(&net)?;
    fit.clamped = clamped;
    Ok(fit)
}

/// Net visibility from the raw value and the accidental/signal rate
/// ratio: V_net = V_raw·(R_sig + R_acc)/R_sig. Closed-form counterpart
/// of [`subtract_accidentals`] for flat backgrounds.
pub fn net_visibility(
    v_raw: f64,
    signal_rate_hz: f64,
    accidental_rate_hz: f64,
) -> Result<f64, AnalyzeError> {
    if !(signal_rate_hz > 0.0) {
        return Err(AnalyzeError::InvalidInput(format!(
            "signal rate must be positive, got {signal_rate_hz}"
        )));
    }
    if !(accidental_rate_hz >= 0.0) {
        return Err(AnalyzeError::InvalidInput(format!(
            "accidental rate must be nonnegative, got {accidental_rate_hz}"
        )));
    }
    Ok(v_raw * (signal_rate_hz + accidental_rate_hz) / signal_rate_hz)
}

/// Bell-test summary for a two-photon fringe visibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellReport {
    /// Standard deviations above the local-realism visibility bound
    /// 1/√2.
    pub significance: f64,
    /// CHSH parameter S = 2√2·V; S > 2 violates the inequality.
    pub s_chsh: f64,
}

/// Significance of a Bell-inequality violation: (V − 1/√2)/σ_V, plus
/// the CHSH S parameter implied by the visibility.
pub fn bell_significance(visibility: f64, sigma: f64) -> Result<BellReport, AnalyzeError> {
    if !(sigma > 0.0) {
        return Err(AnalyzeError::InvalidInput(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let bound = std::f64::consts::FRAC_1_SQRT_2;
    Ok(BellReport {
        significance: (visibility - bound) / sigma,
        s_chsh: 2.0 * std::f64::consts::SQRT_2 * visibility,
    })
}
