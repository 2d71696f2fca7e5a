//! Spectrum CSV files: header `wavelength_nm,value`, one row per grid point.
//! Unit and kind are not stored in the CSV; they come from a [`SpectrumMeta`]
//! sidecar or from the caller.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Spectrum, SpectrumKind, Unit, WavelengthGrid};
use crate::error::{Error, Result};

pub const SPECTRUM_HEADER: [&str; 2] = ["wavelength_nm", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub unit: Unit,
    pub kind: SpectrumKind,
}

/// Conventional sidecar location: `foo.csv` → `foo.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn read_spectrum_csv(path: &Path, unit: Unit, kind: SpectrumKind) -> Result<Spectrum> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_spectrum_csv(file, path, unit, kind)
}

/// Parses CSV text; `origin` is only used to label errors.
pub fn parse_spectrum_csv(reader: impl Read, origin: &Path, unit: Unit, kind: SpectrumKind) -> Result<Spectrum> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.len() != 2 || headers.get(0) != Some(SPECTRUM_HEADER[0]) || headers.get(1) != Some(SPECTRUM_HEADER[1]) {
        return Err(parse_err(
            1,
            format!(
                "expected header 'wavelength_nm,value', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut wavelengths: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = &record[i];
            raw.parse::<f64>()
                .map_err(|_| parse_err(line, format!("{name} '{raw}' is not a number")))
        };
        let wl = field(0, "wavelength")?;
        let v = field(1, "value")?;
        if let Some(&prev) = wavelengths.last() {
            if wl == prev {
                return Err(parse_err(line, format!("duplicate wavelength {wl} nm")));
            }
            if wl < prev {
                return Err(parse_err(
                    line,
                    format!("wavelength {wl} nm follows {prev} nm (unsorted)"),
                ));
            }
        }
        wavelengths.push(wl);
        values.push(v);
    }
    let grid = WavelengthGrid::new(wavelengths).map_err(|e| parse_err(0, e.to_string()))?;
    Spectrum::new(grid, values, unit, kind).map_err(|e| parse_err(0, e.to_string()))
}

pub fn write_spectrum_csv(spectrum: &Spectrum, mut writer: impl Write) -> std::io::Result<()> {
    writeln!(writer, "{}", SPECTRUM_HEADER.join(","))?;
    for (wl, v) in spectrum.iter() {
        writeln!(writer, "{wl},{v}")?;
    }
    Ok(())
}

pub fn save_spectrum_csv(spectrum: &Spectrum, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_spectrum_csv(spectrum, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
