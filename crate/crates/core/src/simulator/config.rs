//! Serde descriptions of layouts, detectors and acquisitions as they appear
//! in JSON config files. Spectra may be given as a constant, inline
//! `[wavelength_nm, value]` pairs, or a CSV path relative to the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    default_rayleigh, mzi_components, AcquisitionConfig, FiberComponent, FiberLayout, Gate, SpadModel,
    DEFAULT_BIN_WIDTH_S, DEFAULT_GROUP_INDEX, DEFAULT_PULSE_FWHM_S,
};
use crate::error::{Error, Result};
use crate::spectral::io::read_spectrum_csv;
use crate::spectral::{Spectrum, SpectrumKind, Unit, WavelengthGrid};
use crate::trace::AcquisitionMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpectrumSource {
    Constant(f64),
    Points(Vec<(f64, f64)>),
    Csv { csv: PathBuf },
}

impl SpectrumSource {
    pub fn resolve(&self, base_dir: &Path, unit: Unit, kind: SpectrumKind) -> Result<Spectrum> {
        match self {
            SpectrumSource::Constant(v) => Spectrum::constant(*v, unit, kind),
            SpectrumSource::Points(p) => Spectrum::from_points(p, unit, kind),
            SpectrumSource::Csv { csv } => read_spectrum_csv(&base_dir.join(csv), unit, kind),
        }
    }

    fn db(&self, base_dir: &Path, kind: SpectrumKind) -> Result<Spectrum> {
        self.resolve(base_dir, Unit::Db, kind)
    }
}

fn zero_db() -> SpectrumSource {
    SpectrumSource::Constant(0.0)
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub label: String,
    pub position_m: f64,
    pub reflectance_db: SpectrumSource,
    #[serde(default = "zero_db")]
    pub insertion_loss_db: SpectrumSource,
    /// Expands into the three-peak pattern of an unbalanced interferometer
    /// with this one-way path difference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mzi_delta_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSpec {
    #[serde(default = "default_group_index")]
    pub group_index: f64,
    pub total_length_m: f64,
    #[serde(default)]
    pub components: Vec<ComponentSpec>,
    /// Backscatter reflectance per bin; the built-in λ⁻⁴ model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rayleigh_db: Option<SpectrumSource>,
    #[serde(default = "yes")]
    pub backscatter: bool,
}

fn default_group_index() -> f64 {
    DEFAULT_GROUP_INDEX
}

impl LayoutSpec {
    pub fn build(&self, base_dir: &Path) -> Result<FiberLayout> {
        let mut components = Vec::new();
        for c in &self.components {
            let context = |e: Error| Error::config(format!("component '{}': {e}", c.label));
            let refl = c
                .reflectance_db
                .db(base_dir, SpectrumKind::Reflectance)
                .map_err(context)?;
            let loss = c
                .insertion_loss_db
                .db(base_dir, SpectrumKind::Transmittance)
                .map_err(context)?;
            match c.mzi_delta_m {
                Some(delta) => components.extend(mzi_components(&c.label, c.position_m, delta, &refl)?),
                None => components.push(FiberComponent::new(c.label.clone(), c.position_m, refl, loss)?),
            }
        }
        let rayleigh = match &self.rayleigh_db {
            Some(src) => src.db(base_dir, SpectrumKind::Reflectance)?,
            None => default_rayleigh(),
        };
        let layout = FiberLayout::new(components, self.total_length_m, self.group_index, rayleigh)?;
        Ok(if self.backscatter {
            layout
        } else {
            layout.without_backscatter()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpadSpec {
    /// Fractions; the built-in InGaAs curve when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum_efficiency: Option<SpectrumSource>,
    #[serde(default = "default_dead_time")]
    pub dead_time_s: f64,
    #[serde(default = "default_dark_rate")]
    pub dark_rate_cps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<Gate>,
}

fn default_dead_time() -> f64 {
    2e-6
}

fn default_dark_rate() -> f64 {
    1700.0
}

impl Default for SpadSpec {
    fn default() -> Self {
        Self {
            quantum_efficiency: None,
            dead_time_s: default_dead_time(),
            dark_rate_cps: default_dark_rate(),
            gate: None,
        }
    }
}

impl SpadSpec {
    pub fn build(&self, base_dir: &Path) -> Result<SpadModel> {
        let base = SpadModel::ingaas_default();
        let qe = match &self.quantum_efficiency {
            Some(src) => src.resolve(base_dir, Unit::Fraction, SpectrumKind::Efficiency)?,
            None => base.quantum_efficiency,
        };
        SpadModel::new(qe, self.dead_time_s, self.dark_rate_cps, self.gate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionSpec {
    pub f_pulse_hz: f64,
    pub bin_width_s: f64,
    pub duration_s: f64,
    pub att_in_db: f64,
    pub att_out_db: f64,
    pub input_photons_per_pulse: f64,
    pub circulator_t12_db: SpectrumSource,
    pub circulator_t23_db: SpectrumSource,
    pub pulse_fwhm_s: f64,
    pub seed: u64,
    pub mode: AcquisitionMode,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        let d = AcquisitionConfig::default();
        Self {
            f_pulse_hz: d.f_pulse_hz,
            bin_width_s: DEFAULT_BIN_WIDTH_S,
            duration_s: d.duration_s,
            att_in_db: d.att_in_db,
            att_out_db: d.att_out_db,
            input_photons_per_pulse: d.input_photons_per_pulse,
            circulator_t12_db: SpectrumSource::Constant(d.circulator_t12.values()[0]),
            circulator_t23_db: SpectrumSource::Constant(d.circulator_t23.values()[0]),
            pulse_fwhm_s: DEFAULT_PULSE_FWHM_S,
            seed: d.seed,
            mode: d.mode,
        }
    }
}

impl AcquisitionSpec {
    pub fn build(&self, base_dir: &Path) -> Result<AcquisitionConfig> {
        let cfg = AcquisitionConfig {
            f_pulse_hz: self.f_pulse_hz,
            bin_width_s: self.bin_width_s,
            duration_s: self.duration_s,
            att_in_db: self.att_in_db,
            att_out_db: self.att_out_db,
            input_photons_per_pulse: self.input_photons_per_pulse,
            circulator_t12: self.circulator_t12_db.db(base_dir, SpectrumKind::Transmittance)?,
            circulator_t23: self.circulator_t23_db.db(base_dir, SpectrumKind::Transmittance)?,
            pulse_fwhm_s: self.pulse_fwhm_s,
            seed: self.seed,
            mode: self.mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Uniform { start_nm: f64, stop_nm: f64, step_nm: f64 },
    Points(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Uniform {
            start_nm: 1100.0,
            stop_nm: 1800.0,
            step_nm: 25.0,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<WavelengthGrid> {
        match self {
            GridSpec::Uniform {
                start_nm,
                stop_nm,
                step_nm,
            } => WavelengthGrid::uniform(*start_nm, *stop_nm, *step_nm),
            GridSpec::Points(p) => WavelengthGrid::new(p.clone()),
        }
    }
}
