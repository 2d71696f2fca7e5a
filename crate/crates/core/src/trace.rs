//! Time-binned photon-count histograms and the bin ↔ distance map.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{PhysicalConstants, WavelengthGrid};

pub const TRACE_CSV_HEADER: &str = "bin_index,time_s,distance_m,counts";

/// Speed of light used for every time ↔ distance conversion in traces.
pub fn light_speed() -> f64 {
    PhysicalConstants::codata().light_speed()
}

/// Number of bins needed to cover one pulse period (last bin may be partial).
pub fn bins_per_period(f_pulse_hz: f64, bin_width_s: f64) -> usize {
    let x = 1.0 / (f_pulse_hz * bin_width_s);
    let r = x.round();
    if (x - r).abs() < 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// One-way fiber distance for a round-trip delay: l = t·c/(2·n_g).
pub fn distance_from_delay(t_s: f64, group_index: f64) -> Result<f64> {
    if !(t_s >= 0.0) || t_s.is_infinite() {
        return Err(Error::domain(format!("delay must be non-negative, got {t_s} s")));
    }
    if !(group_index > 0.0) {
        return Err(Error::domain(format!(
            "group index must be positive, got {group_index}"
        )));
    }
    Ok(t_s * light_speed() / (2.0 * group_index))
}

/// Round-trip delay of a reflection at distance `l`.
pub fn delay_from_distance(distance_m: f64, group_index: f64) -> f64 {
    2.0 * distance_m * group_index / light_speed()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceMap {
    pub bin_width_s: f64,
    pub group_index: f64,
}

impl DistanceMap {
    pub fn new(bin_width_s: f64, group_index: f64) -> Self {
        Self {
            bin_width_s,
            group_index,
        }
    }

    /// Distance covered by one bin.
    pub fn bin_length_m(&self) -> f64 {
        self.bin_width_s * light_speed() / (2.0 * self.group_index)
    }

    /// floor(2·l·n_g / (c·Δt)); values within 1e-9 of an integer snap to it.
    pub fn bin_of(&self, distance_m: f64) -> usize {
        let x = delay_from_distance(distance_m, self.group_index) / self.bin_width_s;
        let r = x.round();
        let b = if (x - r).abs() < 1e-9 { r } else { x.floor() };
        b.max(0.0) as usize
    }

    /// Distance at the start of bin `b`.
    pub fn distance_of(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_length_m()
    }

    /// Distance at a fractional bin coordinate (bin start = integer).
    pub fn distance_at(&self, bin_coord: f64) -> f64 {
        bin_coord * self.bin_length_m()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionMode {
    #[default]
    MonteCarlo,
    Analytic,
}

impl std::str::FromStr for AcquisitionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" | "monte_carlo" | "monte-carlo" => Ok(Self::MonteCarlo),
            "analytic" => Ok(Self::Analytic),
            other => Err(Error::config(format!("unknown mode '{other}' (expected mc|analytic)"))),
        }
    }
}

/// Acquisition settings that travel with a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub wavelength_nm: f64,
    pub bin_width_s: f64,
    pub duration_s: f64,
    pub f_pulse_hz: f64,
    pub att_in_db: f64,
    pub att_out_db: f64,
    pub group_index: f64,
    pub dead_time_s: f64,
    pub mode: AcquisitionMode,
}

/// Photon counts per time bin over one pulse period. Monte-Carlo traces hold
/// integer counts; analytic traces hold expected counts.
#[derive(Debug, Clone, PartialEq)]
pub struct OtdrTrace {
    pub meta: TraceMeta,
    pub counts: Vec<f64>,
}

impl OtdrTrace {
    pub fn new(meta: TraceMeta, counts: Vec<f64>) -> Result<Self> {
        if !(meta.duration_s > 0.0 && meta.bin_width_s > 0.0 && meta.f_pulse_hz > 0.0) {
            return Err(Error::validation(
                "trace needs positive duration, bin width and pulse rate",
            ));
        }
        if counts.is_empty() {
            return Err(Error::validation("trace has no bins"));
        }
        if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::validation(format!(
                "trace count {c} is not a non-negative number"
            )));
        }
        Ok(Self { meta, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.meta.wavelength_nm
    }

    pub fn distance_map(&self) -> DistanceMap {
        DistanceMap::new(self.meta.bin_width_s, self.meta.group_index)
    }

    pub fn total_counts(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Counts per second in each bin.
    pub fn rates(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c / self.meta.duration_s).collect()
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        let map = self.distance_map();
        for (b, c) in self.counts.iter().enumerate() {
            let t = b as f64 * self.meta.bin_width_s;
            writeln!(w, "{b},{t:e},{},{c}", map.distance_of(b))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Reads counts from trace CSV; acquisition settings come from `meta`.
    pub fn read_csv(reader: impl Read, origin: &Path, meta: TraceMeta) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
        if header.iter().collect::<Vec<_>>().join(",") != TRACE_CSV_HEADER {
            return Err(parse_err(1, format!("expected header '{TRACE_CSV_HEADER}'")));
        }
        let mut counts = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| parse_err(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let idx: usize = rec[0]
                .parse()
                .map_err(|_| parse_err(line, format!("bad bin index '{}'", &rec[0])))?;
            if idx != counts.len() {
                return Err(parse_err(line, format!("bin index {idx} out of sequence")));
            }
            let c: f64 = rec[3]
                .parse()
                .map_err(|_| parse_err(line, format!("bad count '{}'", &rec[3])))?;
            counts.push(c);
        }
        Self::new(meta, counts).map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn load_csv(path: &Path, meta: TraceMeta) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f, path, meta)
    }
}

/// One trace per wavelength of a scan, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadbandScan {
    pub grid: WavelengthGrid,
    pub traces: Vec<OtdrTrace>,
}

impl BroadbandScan {
    pub fn new(grid: WavelengthGrid, traces: Vec<OtdrTrace>) -> Result<Self> {
        if grid.len() != traces.len() {
            return Err(Error::validation(format!(
                "scan has {} traces for {} wavelengths",
                traces.len(),
                grid.len()
            )));
        }
        for (wl, t) in grid.points().iter().zip(&traces) {
            if *wl != t.wavelength_nm() {
                return Err(Error::validation(format!(
                    "trace at {} nm stored under {wl} nm",
                    t.wavelength_nm()
                )));
            }
        }
        Ok(Self { grid, traces })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TraceMeta {
        TraceMeta {
            wavelength_nm: 1550.0,
            bin_width_s: 150e-12,
            duration_s: 1.0,
            f_pulse_hz: 5e5,
            att_in_db: -40.0,
            att_out_db: 0.0,
            group_index: 1.468,
            dead_time_s: 2e-6,
            mode: AcquisitionMode::MonteCarlo,
        }
    }

    #[test]
    fn delay_distance_examples() {
        assert_eq!(distance_from_delay(0.0, 1.468).unwrap(), 0.0);
        // 1e-7 · 299792458 / 2.936
        assert!((distance_from_delay(1e-7, 1.468).unwrap() - 10.210_914_782_016_35).abs() < 1e-9);
        assert!((delay_from_distance(9.0, 1.468) - 8.814_097_651_515_97e-8).abs() < 1e-18);
        assert!(distance_from_delay(-1e-9, 1.468).is_err());
    }

    #[test]
    fn bins_per_period_counts_partial_bin() {
        assert_eq!(bins_per_period(5e5, 150e-12), 13334);
        assert_eq!(bins_per_period(1e6, 1e-9), 1000);
    }

    #[test]
    fn bin_map_matches_reference_position() {
        let map = DistanceMap::new(150e-12, 1.468);
        assert_eq!(map.bin_of(9.0), 587);
        assert!((map.bin_length_m() - 0.015_316_372_173_024_52).abs() < 1e-12);
        for b in 0..20_000 {
            assert_eq!(map.bin_of(map.distance_of(b)), b);
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = OtdrTrace::new(meta(), vec![0.0, 3.0, 12.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = OtdrTrace::read_csv(buf.as_slice(), Path::new("t.csv"), meta()).unwrap();
        assert_eq!(back, t);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(TRACE_CSV_HEADER));
    }

    #[test]
    fn csv_errors_name_line() {
        let bad = format!("{TRACE_CSV_HEADER}\n0,0,0,1\n1,0,0,x\n");
        match OtdrTrace::read_csv(bad.as_bytes(), Path::new("t.csv"), meta()) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_negative_counts() {
        assert!(OtdrTrace::new(meta(), vec![1.0, -1.0]).is_err());
    }
}
