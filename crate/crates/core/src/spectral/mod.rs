//! Wavelength-indexed spectra, dB arithmetic and physical constants.
//!
//! Every spectrum is defined on a strictly increasing [`WavelengthGrid`] and
//! sampled by piecewise-linear interpolation. Queries outside the grid are an
//! error; nothing is extrapolated.

mod constants;
pub mod io;

pub use constants::{photon_energy_j, ConstantsSet, PhysicalConstants};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower edge of the accepted wavelength window in nm.
pub const MIN_WAVELENGTH_NM: f64 = 200.0;
/// Upper edge of the accepted wavelength window in nm.
pub const MAX_WAVELENGTH_NM: f64 = 2500.0;

/// 10^(dB/10).
pub fn db_to_linear(value_db: f64) -> Result<f64> {
    if value_db.is_nan() || value_db == f64::INFINITY {
        return Err(Error::domain(format!("cannot convert {value_db} dB to linear")));
    }
    Ok(10f64.powf(value_db / 10.0))
}

/// 10·log10(x). Zero maps to -inf dB.
pub fn linear_to_db(value: f64) -> Result<f64> {
    if !(value >= 0.0) || value.is_infinite() {
        return Err(Error::domain(format!("cannot convert {value} to dB")));
    }
    Ok(10.0 * value.log10())
}

/// Power in dBm (referenced to 1 mW) to watts.
pub fn dbm_to_watts(value_dbm: f64) -> Result<f64> {
    Ok(1e-3 * db_to_linear(value_dbm)?)
}

pub fn watts_to_dbm(watts: f64) -> Result<f64> {
    linear_to_db(watts * 1e3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavelengthGrid {
    points_nm: Vec<f64>,
}

impl WavelengthGrid {
    pub fn new(points_nm: Vec<f64>) -> Result<Self> {
        if points_nm.is_empty() {
            return Err(Error::validation("wavelength grid is empty"));
        }
        for (i, &p) in points_nm.iter().enumerate() {
            if !p.is_finite() || !(MIN_WAVELENGTH_NM..=MAX_WAVELENGTH_NM).contains(&p) {
                return Err(Error::validation(format!(
                    "grid point {p} nm is outside [{MIN_WAVELENGTH_NM}, {MAX_WAVELENGTH_NM}] nm"
                )));
            }
            if i > 0 && p <= points_nm[i - 1] {
                return Err(Error::validation(format!(
                    "grid is not strictly increasing at {p} nm (previous {} nm)",
                    points_nm[i - 1]
                )));
            }
        }
        Ok(Self { points_nm })
    }

    /// `start, start+step, ...` up to and including `stop` (within 1e-9 nm).
    pub fn uniform(start_nm: f64, stop_nm: f64, step_nm: f64) -> Result<Self> {
        if !(step_nm > 0.0) || !(stop_nm >= start_nm) {
            return Err(Error::validation(format!(
                "bad uniform grid {start_nm}..{stop_nm} step {step_nm}"
            )));
        }
        let n = ((stop_nm - start_nm) / step_nm + 1e-9).floor() as usize + 1;
        Self::new((0..n).map(|i| start_nm + i as f64 * step_nm).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points_nm
    }

    pub fn len(&self) -> usize {
        self.points_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points_nm.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points_nm[0]
    }

    pub fn max(&self) -> f64 {
        self.points_nm[self.points_nm.len() - 1]
    }

    pub fn contains(&self, wavelength_nm: f64) -> bool {
        wavelength_nm >= self.min() && wavelength_nm <= self.max()
    }

    /// Range shared by all grids, or `None` when they do not overlap.
    pub fn overlap<'a>(grids: impl IntoIterator<Item = &'a WavelengthGrid>) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for g in grids {
            lo = lo.max(g.min());
            hi = hi.min(g.max());
        }
        (lo <= hi && lo.is_finite()).then_some((lo, hi))
    }

    /// Union of the nodes of all grids lying inside `[lo, hi]`.
    pub fn merged_within<'a>(grids: impl IntoIterator<Item = &'a WavelengthGrid>, lo: f64, hi: f64) -> Result<Self> {
        let mut pts: Vec<f64> = grids
            .into_iter()
            .flat_map(|g| g.points().iter().copied())
            .filter(|&p| p >= lo && p <= hi)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Self::new(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[serde(rename = "dB")]
    Db,
    #[serde(rename = "dBm")]
    Dbm,
    Linear,
    Fraction,
}

impl Unit {
    pub fn is_log(self) -> bool {
        matches!(self, Unit::Db | Unit::Dbm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Reflectance,
    Transmittance,
    Efficiency,
    Power,
    Other,
}

/// Values aligned to a wavelength grid. dB-valued spectra may hold `-inf`
/// (nothing transmitted or reflected); NaN is never allowed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: Vec<f64>,
    unit: Unit,
    kind: SpectrumKind,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>, unit: Unit, kind: SpectrumKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::validation(format!(
                "spectrum has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        for (&wl, &v) in grid.points().iter().zip(&values) {
            let bad = |why: &str| Error::validation(format!("{kind:?} value {v} at {wl} nm {why}"));
            if v.is_nan() || v == f64::INFINITY {
                return Err(bad("is not a number"));
            }
            if unit.is_log() {
                if unit == Unit::Db
                    && matches!(kind, SpectrumKind::Reflectance | SpectrumKind::Transmittance)
                    && v > 0.0
                {
                    return Err(bad("exceeds 0 dB (would imply gain)"));
                }
            } else {
                if v.is_infinite() || v < 0.0 {
                    return Err(bad("must be finite and non-negative"));
                }
                if (unit == Unit::Fraction || kind == SpectrumKind::Efficiency) && v > 1.0 {
                    return Err(bad("exceeds 1"));
                }
            }
        }
        Ok(Self {
            grid,
            values,
            unit,
            kind,
        })
    }

    pub fn from_points(points: &[(f64, f64)], unit: Unit, kind: SpectrumKind) -> Result<Self> {
        let grid = WavelengthGrid::new(points.iter().map(|p| p.0).collect())?;
        Self::new(grid, points.iter().map(|p| p.1).collect(), unit, kind)
    }

    /// A wavelength-independent spectrum spanning the whole accepted window.
    pub fn constant(value: f64, unit: Unit, kind: SpectrumKind) -> Result<Self> {
        Self::from_points(&[(MIN_WAVELENGTH_NM, value), (MAX_WAVELENGTH_NM, value)], unit, kind)
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.points().iter().copied().zip(self.values.iter().copied())
    }

    /// Linear interpolation between neighbouring nodes, exact at nodes.
    ///
    /// When one neighbour of a log-unit spectrum is `-inf`, interpolation
    /// happens in the linear power domain instead.
    pub fn sample(&self, wavelength_nm: f64) -> Result<f64> {
        if !self.grid.contains(wavelength_nm) || wavelength_nm.is_nan() {
            return Err(Error::OutOfRange {
                value: wavelength_nm,
                lo: self.grid.min(),
                hi: self.grid.max(),
            });
        }
        let pts = self.grid.points();
        let idx = pts.partition_point(|&p| p < wavelength_nm);
        if pts[idx] == wavelength_nm {
            return Ok(self.values[idx]);
        }
        let (x0, x1) = (pts[idx - 1], pts[idx]);
        let (y0, y1) = (self.values[idx - 1], self.values[idx]);
        let t = (wavelength_nm - x0) / (x1 - x0);
        if self.unit.is_log() && (y0.is_infinite() || y1.is_infinite()) {
            let l0 = db_to_linear(y0)?;
            let l1 = db_to_linear(y1)?;
            return linear_to_db(l0 + t * (l1 - l0));
        }
        Ok(y0 + t * (y1 - y0))
    }

    pub fn resample(&self, grid: &WavelengthGrid) -> Result<Spectrum> {
        let values = grid
            .points()
            .iter()
            .map(|&wl| self.sample(wl))
            .collect::<Result<Vec<_>>>()?;
        Spectrum::new(grid.clone(), values, self.unit, self.kind)
    }

    /// Applies `f` to every value, keeping grid, unit and kind.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Spectrum> {
        Spectrum::new(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
            self.unit,
            self.kind,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn refl(points: &[(f64, f64)]) -> Spectrum {
        Spectrum::from_points(points, Unit::Db, SpectrumKind::Reflectance).unwrap()
    }

    #[test]
    fn db_conversions() {
        assert_eq!(db_to_linear(0.0).unwrap(), 1.0);
        assert!((db_to_linear(-50.0).unwrap() - 1e-5).abs() < 1e-20);
        let w = dbm_to_watts(-259.0).unwrap();
        // 10^(-25.9) mW, evaluated at 50 digits
        assert!(((w - 1.258_925_411_794_167_2e-29) / w).abs() < 1e-12);
        assert_eq!(linear_to_db(0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(db_to_linear(f64::NEG_INFINITY).unwrap(), 0.0);
        assert!(db_to_linear(f64::NAN).is_err());
        assert!(linear_to_db(-1.0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(WavelengthGrid::new(vec![]).is_err());
        assert!(WavelengthGrid::new(vec![1100.0, 1100.0]).is_err());
        assert!(WavelengthGrid::new(vec![1200.0, 1100.0]).is_err());
        assert!(WavelengthGrid::new(vec![100.0, 1100.0]).is_err());
        let g = WavelengthGrid::uniform(1100.0, 1800.0, 25.0).unwrap();
        assert_eq!(g.len(), 29);
        assert_eq!(g.max(), 1800.0);
    }

    #[test]
    fn sample_nodes_midpoints_and_range() {
        let s = refl(&[(1100.0, -40.0), (1200.0, -42.0)]);
        assert_eq!(s.sample(1100.0).unwrap(), -40.0);
        assert_eq!(s.sample(1200.0).unwrap(), -42.0);
        assert!((s.sample(1150.0).unwrap() + 41.0).abs() < 1e-12);
        assert!(matches!(s.sample(1099.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.sample(1200.5), Err(Error::OutOfRange { .. })));

        let c = Spectrum::constant(-7.5, Unit::Db, SpectrumKind::Transmittance).unwrap();
        for wl in [200.0, 1234.5, 2500.0] {
            assert_eq!(c.sample(wl).unwrap(), -7.5);
        }
    }

    #[test]
    fn sample_with_infinite_node_stays_finite_between() {
        let s = refl(&[(1100.0, f64::NEG_INFINITY), (1200.0, -40.0)]);
        assert_eq!(s.sample(1100.0).unwrap(), f64::NEG_INFINITY);
        let mid = s.sample(1150.0).unwrap();
        assert!((mid - (-43.010_299_956_639_81)).abs() < 1e-9);
    }

    #[test]
    fn spectrum_invariants() {
        let g = || WavelengthGrid::new(vec![1500.0, 1600.0]).unwrap();
        assert!(Spectrum::new(g(), vec![-1.0], Unit::Db, SpectrumKind::Reflectance).is_err());
        assert!(Spectrum::new(g(), vec![-1.0, 0.5], Unit::Db, SpectrumKind::Reflectance).is_err());
        assert!(Spectrum::new(g(), vec![0.1, 1.2], Unit::Fraction, SpectrumKind::Efficiency).is_err());
        assert!(Spectrum::new(g(), vec![0.1, -0.2], Unit::Linear, SpectrumKind::Other).is_err());
        assert!(Spectrum::new(g(), vec![f64::NAN, 0.0], Unit::Dbm, SpectrumKind::Power).is_err());
        assert!(Spectrum::new(g(), vec![40.0, 10.0], Unit::Dbm, SpectrumKind::Power).is_ok());
    }

    #[test]
    fn overlap_and_merge() {
        let a = WavelengthGrid::new(vec![1100.0, 1300.0, 1500.0]).unwrap();
        let b = WavelengthGrid::new(vec![1250.0, 1400.0, 1700.0]).unwrap();
        assert_eq!(WavelengthGrid::overlap([&a, &b]), Some((1250.0, 1500.0)));
        let m = WavelengthGrid::merged_within([&a, &b], 1250.0, 1500.0).unwrap();
        assert_eq!(m.points(), &[1250.0, 1300.0, 1400.0, 1500.0]);
        let c = WavelengthGrid::new(vec![1600.0, 1700.0]).unwrap();
        assert_eq!(WavelengthGrid::overlap([&a, &c]), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn db_round_trip(x in -300.0f64..=0.0) {
                let back = linear_to_db(db_to_linear(x).unwrap()).unwrap();
                prop_assert!((back - x).abs() <= 1e-10);
            }

            #[test]
            fn interpolation_stays_between_monotone_nodes(
                start in -80.0f64..-20.0,
                steps in proptest::collection::vec(0.0f64..5.0, 2..12),
                frac in 0.0f64..1.0,
                seg in 0usize..11,
            ) {
                let mut v = start;
                let pts: Vec<(f64, f64)> = steps.iter().enumerate().map(|(i, d)| {
                    v = (v + d).min(0.0);
                    (1100.0 + 25.0 * i as f64, v)
                }).collect();
                let s = refl(&pts);
                let k = seg % (pts.len() - 1);
                let wl = pts[k].0 + frac * 25.0;
                let y = s.sample(wl).unwrap();
                prop_assert!(y >= pts[k].1 - 1e-12 && y <= pts[k + 1].1 + 1e-12);
            }

            #[test]
            fn energy_times_wavelength_is_hc(wl in 200.0f64..2500.0) {
                for c in [PhysicalConstants::codata(), PhysicalConstants::paper_rounded()] {
                    let e = photon_energy_j(wl, &c).unwrap();
                    let hc = c.planck() * c.light_speed();
                    prop_assert!(((e * wl * 1e-9 - hc) / hc).abs() < 1e-12);
                }
            }
        }
    }
}
