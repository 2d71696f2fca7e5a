//! Pipeline config file. Every section is optional; missing sections take
//! the library defaults. Relative paths resolve against the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thaspec::analysis::PeakConfig;
use thaspec::connector::{PhaseConvention, DEFAULT_N_CORE};
use thaspec::security::DEFAULT_F_EVE_HZ;
use thaspec::simulator::config::{AcquisitionSpec, GridSpec, LayoutSpec, SpadSpec, SpectrumSource};
use thaspec::spectral::ConstantsSet;
use thaspec::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayoutSource {
    File(PathBuf),
    Inline(LayoutSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakSection {
    pub snr_threshold: f64,
    pub merge_radius_s: f64,
    pub baseline_window: usize,
}

impl Default for PeakSection {
    fn default() -> Self {
        let d = PeakConfig::default();
        Self {
            snr_threshold: d.snr_threshold,
            merge_radius_s: d.merge_radius_s,
            baseline_window: d.baseline_window,
        }
    }
}

impl From<&PeakSection> for PeakConfig {
    fn from(p: &PeakSection) -> Self {
        PeakConfig {
            snr_threshold: p.snr_threshold,
            merge_radius_s: p.merge_radius_s,
            baseline_window: p.baseline_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecuritySection {
    /// dBm, scalar or spectrum.
    pub p_max_dbm: Option<SpectrumSource>,
    pub transmittance_db: Option<SpectrumSource>,
    pub qber: f64,
    pub f_eve_hz: f64,
    pub constants: ConstantsSet,
}

impl Default for SecuritySection {
    fn default() -> Self {
        Self {
            p_max_dbm: None,
            transmittance_db: None,
            qber: 0.0,
            f_eve_hz: DEFAULT_F_EVE_HZ,
            constants: ConstantsSet::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectorSection {
    pub n_core: f64,
    pub exact: bool,
    pub convention: PhaseConvention,
}

impl Default for ConnectorSection {
    fn default() -> Self {
        Self {
            n_core: DEFAULT_N_CORE,
            exact: true,
            convention: PhaseConvention::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelitySection {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub max_mu: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// μ values at which the optimal pure states are checked for equality.
    pub optimal_mus: Vec<f64>,
}

impl Default for FidelitySection {
    fn default() -> Self {
        Self {
            dims: vec![2, 4, 8],
            trials: 1000,
            max_mu: 0.5,
            tolerance: 1e-9,
            seed: 0,
            optimal_mus: vec![0.01, 0.1, 0.25, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub layout: Option<LayoutSource>,
    pub spad: SpadSpec,
    pub acquisition: AcquisitionSpec,
    pub grid: GridSpec,
    pub peaks: PeakSection,
    pub security: SecuritySection,
    pub connector: ConnectorSection,
    pub fidelity: FidelitySection,
    /// Expected component positions used to label detected peaks.
    pub labels: Vec<(String, f64)>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            layout: None,
            spad: SpadSpec::default(),
            acquisition: AcquisitionSpec::default(),
            grid: GridSpec::default(),
            peaks: PeakSection::default(),
            security: SecuritySection::default(),
            connector: ConnectorSection::default(),
            fidelity: FidelitySection::default(),
            labels: Vec::new(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = read_json(path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// The config at `path`, or defaults relative to the working directory.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    /// The layout spec, reading it from its own file when referenced. The
    /// returned directory is where the layout's relative paths resolve.
    pub fn layout_spec(&self) -> Result<(LayoutSpec, PathBuf)> {
        match &self.layout {
            None => Err(Error::Config("config has no layout".into())),
            Some(LayoutSource::Inline(spec)) => Ok((spec.clone(), self.base_dir.clone())),
            Some(LayoutSource::File(p)) => {
                let path = self.base_dir.join(p);
                let spec = read_json(&path)?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                Ok((spec, dir))
            }
        }
    }
}
