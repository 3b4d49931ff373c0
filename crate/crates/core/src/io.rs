//! CSV and report-file readers/writers for histograms, phase scans and
//! spectra. Formats are plain text with a single header line so output
//! stays diff-friendly and language-neutral.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::detect::Histogram;
use crate::qpm::Spectrum;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        /// 1-based line number.
        line: usize,
        message: String,
    },
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

const NS: f64 = 1e-9;

/// Write a coincidence histogram as `bin_start_ns,counts` rows.
pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<(), IoError> {
    let mut out = String::from("bin_start_ns,counts\n");
    for (i, &c) in h.counts.iter().enumerate() {
        out.push_str(&format!("{},{}\n", h.bin_start_s(i) / NS, c));
    }
    fs::write(path, out).map_err(|e| file_err(path, e))
}

/// Read a histogram written by [`write_histogram_csv`]. Bin width and
/// origin are recovered from the first two rows; at least two rows are
/// required.
pub fn read_histogram_csv(path: &Path) -> Result<Histogram, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut rows: Vec<(f64, u64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim() != "bin_start_ns,counts" {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected header 'bin_start_ns,counts', found '{line}'"),
                ));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(2, ',');
        let start: f64 = fields
            .next()
            .unwrap()
            .trim()
            .parse()
            .map_err(|e| parse_err(path, lineno, format!("bad bin start: {e}")))?;
        let counts: u64 = fields
            .next()
            .ok_or_else(|| parse_err(path, lineno, "missing counts column"))?
            .trim()
            .parse()
            .map_err(|e| parse_err(path, lineno, format!("bad counts: {e}")))?;
        rows.push((start, counts));
    }
    if rows.len() < 2 {
        return Err(parse_err(
            path,
            rows.len() + 1,
            format!("need at least 2 data rows, found {}", rows.len()),
        ));
    }
    let bin_width_s = (rows[1].0 - rows[0].0) * NS;
    if !(bin_width_s > 0.0) {
        return Err(parse_err(path, 3, "bin starts must be strictly increasing"));
    }
    Ok(Histogram {
        origin_s: rows[0].0 * NS,
        bin_width_s,
        counts: rows.into_iter().map(|(_, c)| c).collect(),
    })
}

/// Write a fringe scan as `phase_rad,counts` rows.
pub fn write_scan_csv(path: &Path, scan: &[(f64, f64)]) -> Result<(), IoError> {
    let mut out = String::from("phase_rad,counts\n");
    for &(phi, counts) in scan {
        out.push_str(&format!("{phi},{counts}\n"));
    }
    fs::write(path, out).map_err(|e| file_err(path, e))
}

/// Read a fringe scan written by [`write_scan_csv`].
pub fn read_scan_csv(path: &Path) -> Result<Vec<(f64, f64)>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut scan = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim() != "phase_rad,counts" {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected header 'phase_rad,counts', found '{line}'"),
                ));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(2, ',');
        let phi: f64 = fields
            .next()
            .unwrap()
            .trim()
            .parse()
            .map_err(|e| parse_err(path, lineno, format!("bad phase: {e}")))?;
        let counts: f64 = fields
            .next()
            .ok_or_else(|| parse_err(path, lineno, "missing counts column"))?
            .trim()
            .parse()
            .map_err(|e| parse_err(path, lineno, format!("bad counts: {e}")))?;
        scan.push((phi, counts));
    }
    Ok(scan)
}

/// Write a down-conversion spectrum as `wavelength_nm,intensity` rows.
pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> Result<(), IoError> {
    let mut out = String::from("wavelength_nm,intensity\n");
    for p in &spectrum.points {
        out.push_str(&format!("{},{}\n", p.wavelength_m / NS, p.intensity));
    }
    fs::write(path, out).map_err(|e| file_err(path, e))
}

/// Write a report of `key = value` lines, in the given order.
pub fn write_report(path: &Path, fields: &[(&str, String)]) -> Result<(), IoError> {
    let mut f = fs::File::create(path).map_err(|e| file_err(path, e))?;
    for (k, v) in fields {
        writeln!(f, "{k} = {v}").map_err(|e| file_err(path, e))?;
    }
    Ok(())
}
