use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::calibration::{CalibrationData, Level};
use super::peaks::{bin_levels_db, calibrate_peaks, detect_peaks, estimate_noise_floor, Peak, PeakConfig};
use crate::error::{Error, Result};
use crate::spectral::{Spectrum, SpectrumKind, Unit, WavelengthGrid};
use crate::trace::{BroadbandScan, OtdrTrace};

/// Peaks and floor at one scan wavelength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavelengthAnalysis {
    pub wavelength_nm: f64,
    /// Detector efficiency below 1 %: numbers are indicative only.
    pub approximate: bool,
    pub noise_floor_db: Level,
    pub peaks: Vec<Peak>,
}

impl WavelengthAnalysis {
    /// Highest peak reflectance, -inf without peaks.
    pub fn max_reflectance_db(&self) -> f64 {
        self.peaks
            .iter()
            .filter_map(|p| p.reflectance_db.and_then(Level::db))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectanceMap {
    pub grid: WavelengthGrid,
    pub per_wavelength: Vec<WavelengthAnalysis>,
    /// Max peak reflectance per wavelength (-inf where nothing was found).
    pub worst_case: Spectrum,
    /// Noise-equivalent reflectance (-inf where below floor).
    pub noise_floor: Spectrum,
    /// Per-bin levels, wavelengths × bins (NaN for empty bins).
    pub heatmap: Vec<Vec<f64>>,
    /// Distance at the start of each heatmap column.
    pub distances_m: Vec<f64>,
}

pub fn analyze_trace(trace: &OtdrTrace, cal: &CalibrationData, config: &PeakConfig) -> Result<WavelengthAnalysis> {
    let mut peaks = detect_peaks(trace, config);
    calibrate_peaks(&mut peaks, trace, cal)?;
    let floor = estimate_noise_floor(trace, &peaks, cal)?;
    Ok(WavelengthAnalysis {
        wavelength_nm: trace.wavelength_nm(),
        approximate: cal.is_approximate(),
        noise_floor_db: floor,
        peaks,
    })
}

/// Runs peak detection and calibration at every wavelength. Calibrations are
/// matched to traces by wavelength.
pub fn build_reflectance_map(
    scan: &BroadbandScan,
    cals: &[CalibrationData],
    config: &PeakConfig,
) -> Result<ReflectanceMap> {
    let paired: Vec<(&OtdrTrace, &CalibrationData)> = scan
        .traces
        .iter()
        .map(|t| {
            cals.iter()
                .find(|c| c.wavelength_nm == t.wavelength_nm())
                .map(|c| (t, c))
                .ok_or_else(|| Error::config(format!("no calibration for {} nm", t.wavelength_nm())))
        })
        .collect::<Result<_>>()?;

    let results: Vec<(WavelengthAnalysis, Vec<f64>)> = paired
        .par_iter()
        .map(|(t, c)| {
            let run = || -> Result<_> { Ok((analyze_trace(t, c, config)?, bin_levels_db(t, c)?)) };
            run().map_err(|e| Error::at_wavelength(t.wavelength_nm(), e))
        })
        .collect::<Result<_>>()?;

    let (per_wavelength, heatmap): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let worst = per_wavelength.iter().map(|a| a.max_reflectance_db()).collect();
    let floor = per_wavelength
        .iter()
        .map(|a| a.noise_floor_db.db().unwrap_or(f64::NEG_INFINITY))
        .collect();
    let distances_m = match scan.traces.first() {
        Some(t) => (0..t.len()).map(|b| t.distance_map().distance_of(b)).collect(),
        None => Vec::new(),
    };
    // dB "reflectance" of detector-level quantities can exceed 0 dB when the
    // calibration is off; keep them as generic dB spectra.
    Ok(ReflectanceMap {
        grid: scan.grid.clone(),
        worst_case: Spectrum::new(scan.grid.clone(), worst, Unit::Db, SpectrumKind::Other)?,
        noise_floor: Spectrum::new(scan.grid.clone(), floor, Unit::Db, SpectrumKind::Other)?,
        per_wavelength,
        heatmap,
        distances_m,
    })
}

impl ReflectanceMap {
    /// The worst-case curve as a reflectance spectrum for the leakage bound.
    pub fn worst_case_reflectance(&self) -> Result<Spectrum> {
        Spectrum::new(
            self.grid.clone(),
            self.worst_case.values().iter().map(|v| v.min(0.0)).collect(),
            Unit::Db,
            SpectrumKind::Reflectance,
        )
    }

    /// CSV matrix: header row of distances, one row per wavelength.
    pub fn write_heatmap_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "wavelength_nm")?;
        for d in &self.distances_m {
            write!(w, ",{d}")?;
        }
        writeln!(w)?;
        for (wl, row) in self.grid.points().iter().zip(&self.heatmap) {
            write!(w, "{wl}")?;
            for v in row {
                if v.is_finite() {
                    write!(w, ",{v:.4}")?;
                } else {
                    write!(w, ",nan")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_heatmap_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_heatmap_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}
