use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thaspec::analysis::{build_reflectance_map, label_peaks, CalibrationData, PeakConfig};
use thaspec::connector::{fit_connector, save_model_vs_data_csv, FitOptions, PhaseConvention};
use thaspec::fidelity::{optimal_tha_states, run_bound_suite, sqrt_fidelity, DensityMatrix};
use thaspec::security::{broadband_leakage, LeakageParams, PowerLimit, SecurityBudget};
use thaspec::simulator::config::{LayoutSpec, SpadSpec, SpectrumSource};
use thaspec::simulator::{
    check_operating_point, expected_bin_rates, reference_calibrations, simulate_scan, OperatingPoint,
};
use thaspec::spectral::io::{read_spectrum_csv, save_spectrum_csv, sidecar_path, SpectrumMeta};
use thaspec::spectral::{ConstantsSet, PhysicalConstants, Spectrum, SpectrumKind, Unit, WavelengthGrid};
use thaspec::trace::{AcquisitionMode, BroadbandScan, OtdrTrace, TraceMeta};
use thaspec::{Error, Result};

use crate::config::PipelineConfig;

pub const MANIFEST: &str = "manifest.json";

/// Conventions a reader needs to interpret any output file.
#[derive(Debug, Clone, Serialize)]
pub struct Assumptions {
    pub tool: String,
    pub f_eve_hz: f64,
    pub qber: f64,
    pub constants: ConstantsSet,
    pub distance_light_speed: &'static str,
    pub reflectance_formula: &'static str,
    pub attenuation_convention: &'static str,
    pub dead_time_model: &'static str,
    pub connector_phase: PhaseConvention,
}

impl Assumptions {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            tool: format!("thaspec {}", env!("CARGO_PKG_VERSION")),
            f_eve_hz: cfg.security.f_eve_hz,
            qber: cfg.security.qber,
            constants: cfg.security.constants,
            distance_light_speed: "299792458 m/s (exact), l = t*c/(2*n_g)",
            reflectance_formula: "R = 10*log10(N_out/N_in) + att_in - att_out - t12 - t23",
            attenuation_convention: "all attenuations and transmittances are signed dB values <= 0; \
                att_in is the VOA setting for the reference rate N_in, att_out the setting during the trace",
            dead_time_model: "non-paralyzable; rates corrected by 1/(1 - m*tau)",
            connector_phase: cfg.connector.convention,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

fn trace_file_name(wavelength_nm: f64) -> String {
    format!("trace_{wavelength_nm:.2}nm.csv")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub wavelength_nm: f64,
    pub file: String,
    pub meta: TraceMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatingEntry {
    pub wavelength_nm: f64,
    pub max_rate_cps: f64,
    pub rate_ok: bool,
    pub rate_slack_cps: f64,
    pub dead_time_ok: bool,
    pub dead_time_slack_s: f64,
}

impl OperatingEntry {
    fn new(wavelength_nm: f64, op: &OperatingPoint) -> Self {
        Self {
            wavelength_nm,
            max_rate_cps: op.max_rate_cps,
            rate_ok: op.rate_ok,
            rate_slack_cps: op.rate_slack_cps,
            dead_time_ok: op.dead_time_ok,
            dead_time_slack_s: op.dead_time_slack_s,
        }
    }
}

/// Everything `analyze` needs to read a scan directory back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanManifest {
    pub mode: AcquisitionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid_nm: Vec<f64>,
    pub traces: Vec<TraceEntry>,
    pub calibrations: Vec<CalibrationData>,
    pub operating_points: Vec<OperatingEntry>,
    #[serde(default)]
    pub layout: Option<LayoutSpec>,
    #[serde(default)]
    pub spad: Option<SpadSpec>,
    #[serde(default)]
    pub acquisition: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    assumptions: Assumptions,
    #[serde(flatten)]
    manifest: &'a ScanManifest,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<AcquisitionMode>,
    pub f_eve_hz: Option<f64>,
    pub qber: Option<f64>,
    pub constants: Option<ConstantsSet>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(s) = self.seed {
            cfg.acquisition.seed = s;
            cfg.fidelity.seed = s;
        }
        if let Some(m) = self.mode {
            cfg.acquisition.mode = m;
        }
        if let Some(f) = self.f_eve_hz {
            cfg.security.f_eve_hz = f;
        }
        if let Some(q) = self.qber {
            cfg.security.qber = q;
        }
        if let Some(c) = self.constants {
            cfg.security.constants = c;
        }
    }
}

pub struct SimulateSummary {
    pub traces: usize,
    pub warnings: Vec<String>,
}

/// Simulates a scan and writes per-wavelength trace CSVs plus the manifest.
pub fn simulate(cfg: &PipelineConfig, out: &Path) -> Result<SimulateSummary> {
    let (layout_spec, layout_dir) = cfg.layout_spec()?;
    let layout = layout_spec.build(&layout_dir)?;
    let spad = cfg.spad.build(&cfg.base_dir)?;
    let acq = cfg.acquisition.build(&cfg.base_dir)?;
    let grid = cfg.grid.build()?;

    let mut operating = Vec::new();
    let mut warnings = Vec::new();
    for &wl in grid.points() {
        let rates = expected_bin_rates(&layout, &spad, &acq, wl).map_err(|e| wrap(wl, e))?;
        let op = check_operating_point(&acq, &spad, wl, rates.peak())?;
        if !op.rate_ok {
            warnings.push(format!(
                "{wl} nm: peak rate {:.0} cps exceeds the efficiency-times-pulse-rate limit {:.0} cps",
                op.max_rate_cps, op.rate_limit_cps
            ));
        }
        if !op.dead_time_ok {
            warnings.push(format!("{wl} nm: dead time exceeds the pulse period"));
        }
        operating.push(OperatingEntry::new(wl, &op));
    }

    let scan = simulate_scan(&layout, &spad, &acq, &grid)?;
    let calibrations = reference_calibrations(&spad, &acq, &grid)?;

    let trace_dir = out.join("traces");
    ensure_dir(&trace_dir)?;
    let mut entries = Vec::new();
    for t in &scan.traces {
        let name = trace_file_name(t.wavelength_nm());
        t.save_csv(&trace_dir.join(&name))?;
        entries.push(TraceEntry {
            wavelength_nm: t.wavelength_nm(),
            file: format!("traces/{name}"),
            meta: t.meta,
        });
    }

    let analytic = acq.mode == AcquisitionMode::Analytic;
    let mut acq_echo = serde_json::to_value(&cfg.acquisition).map_err(|e| Error::Numerical(e.to_string()))?;
    if analytic {
        if let Some(obj) = acq_echo.as_object_mut() {
            obj.remove("seed");
        }
    }
    let manifest = ScanManifest {
        mode: acq.mode,
        seed: (!analytic).then_some(acq.seed),
        grid_nm: grid.points().to_vec(),
        traces: entries,
        calibrations,
        operating_points: operating,
        layout: Some(layout_spec),
        spad: Some(cfg.spad.clone()),
        acquisition: Some(acq_echo),
    };
    write_json(
        &out.join(MANIFEST),
        &ManifestFile {
            assumptions: Assumptions::from_config(cfg),
            manifest: &manifest,
        },
    )?;
    Ok(SimulateSummary {
        traces: scan.traces.len(),
        warnings,
    })
}

fn wrap(wavelength_nm: f64, e: Error) -> Error {
    Error::AtWavelength {
        wavelength_nm,
        source: Box::new(e),
    }
}

pub fn load_scan(dir: &Path) -> Result<(BroadbandScan, Vec<CalibrationData>)> {
    let manifest: ScanManifest = read_json(&dir.join(MANIFEST))?;
    let traces = manifest
        .traces
        .iter()
        .map(|e| OtdrTrace::load_csv(&dir.join(&e.file), e.meta))
        .collect::<Result<Vec<_>>>()?;
    let grid = WavelengthGrid::new(manifest.grid_nm.clone())?;
    Ok((BroadbandScan::new(grid, traces)?, manifest.calibrations))
}

#[derive(Serialize)]
struct PeakReport<'a> {
    assumptions: Assumptions,
    peak_config: PeakConfig,
    wavelengths: &'a [thaspec::analysis::WavelengthAnalysis],
}

pub struct AnalyzeSummary {
    pub wavelengths: usize,
    pub peaks: usize,
    pub worst_case_db: f64,
    pub worst_case_nm: f64,
}

/// Builds the reflectance map of a scan directory.
pub fn analyze(cfg: &PipelineConfig, scan_dir: &Path, out: &Path) -> Result<AnalyzeSummary> {
    let (scan, cals) = load_scan(scan_dir)?;
    let peak_cfg = PeakConfig::from(&cfg.peaks);
    let mut map = build_reflectance_map(&scan, &cals, &peak_cfg)?;
    if !cfg.labels.is_empty() {
        let tol = scan
            .traces
            .first()
            .map(|t| 2.0 * t.distance_map().bin_length_m())
            .unwrap_or(0.0);
        for wa in map.per_wavelength.iter_mut() {
            label_peaks(&mut wa.peaks, &cfg.labels, tol);
        }
    }

    ensure_dir(out)?;
    map.save_heatmap_csv(&out.join("heatmap.csv"))?;
    write_json(
        &out.join("peaks.json"),
        &PeakReport {
            assumptions: Assumptions::from_config(cfg),
            peak_config: peak_cfg,
            wavelengths: &map.per_wavelength,
        },
    )?;
    let worst = map.worst_case_reflectance()?;
    let worst_path = out.join("worst_case.csv");
    save_spectrum_csv(&worst, &worst_path)?;
    write_json(
        &sidecar_path(&worst_path),
        &SpectrumMeta {
            unit: Unit::Db,
            kind: SpectrumKind::Reflectance,
        },
    )?;
    save_spectrum_csv(&map.noise_floor, &out.join("noise_floor.csv"))?;

    let (worst_nm, worst_db) = worst.iter().fold(
        (f64::NAN, f64::NEG_INFINITY),
        |acc, (wl, v)| if v > acc.1 { (wl, v) } else { acc },
    );
    Ok(AnalyzeSummary {
        wavelengths: map.per_wavelength.len(),
        peaks: map.per_wavelength.iter().map(|w| w.peaks.len()).sum(),
        worst_case_db: worst_db,
        worst_case_nm: worst_nm,
    })
}

#[derive(Serialize)]
struct FitReport<'a> {
    assumptions: Assumptions,
    spectrum: String,
    fit: &'a thaspec::connector::FitResult,
}

/// Fits the connector model to a dB reflectance CSV.
pub fn fit(cfg: &PipelineConfig, spectrum: &Path, out: &Path) -> Result<thaspec::connector::FitResult> {
    let data = read_spectrum_csv(spectrum, Unit::Db, SpectrumKind::Reflectance)?;
    let opts = FitOptions {
        n_core: cfg.connector.n_core,
        exact: cfg.connector.exact,
        convention: cfg.connector.convention,
    };
    let result = fit_connector(&data, opts)?;
    ensure_dir(out)?;
    write_json(
        &out.join("fit.json"),
        &FitReport {
            assumptions: Assumptions::from_config(cfg),
            spectrum: spectrum.display().to_string(),
            fit: &result,
        },
    )?;
    save_model_vs_data_csv(&data, &result, &out.join("model_vs_data.csv"))?;
    Ok(result)
}

#[derive(Debug, Clone, Default)]
pub struct SecurityInputs {
    pub reflectance: Option<PathBuf>,
    pub p_max_dbm: Option<f64>,
    pub transmittance_db: Option<f64>,
}

#[derive(Serialize)]
struct SecurityReportFile<'a> {
    assumptions: Assumptions,
    reflectance: String,
    report: &'a thaspec::security::LeakageReport,
}

/// Leakage bound over the reflectance spectrum and the configured budget.
pub fn security_report(
    cfg: &PipelineConfig,
    inputs: &SecurityInputs,
    out: &Path,
) -> Result<thaspec::security::LeakageReport> {
    let refl_path = inputs
        .reflectance
        .clone()
        .ok_or_else(|| Error::Config("security-report needs a reflectance spectrum (--reflectance)".into()))?;
    let reflectance = read_spectrum_csv(&refl_path, Unit::Db, SpectrumKind::Reflectance)?;
    let base = &cfg.base_dir;
    let p_max = match (inputs.p_max_dbm, &cfg.security.p_max_dbm) {
        (Some(p), _) => PowerLimit::Scalar(p),
        (None, Some(SpectrumSource::Constant(p))) => PowerLimit::Scalar(*p),
        (None, Some(src)) => PowerLimit::Spectrum(src.resolve(base, Unit::Dbm, SpectrumKind::Power)?),
        (None, None) => {
            return Err(Error::Config(
                "no power limit (--p-max-dbm or security.p_max_dbm)".into(),
            ))
        }
    };
    let transmittance: Spectrum = match (inputs.transmittance_db, &cfg.security.transmittance_db) {
        (Some(t), _) => Spectrum::constant(t, Unit::Db, SpectrumKind::Transmittance)?,
        (None, Some(src)) => src.resolve(base, Unit::Db, SpectrumKind::Transmittance)?,
        (None, None) => {
            return Err(Error::Config(
                "no transmittance (--transmittance-db or security.transmittance_db)".into(),
            ))
        }
    };
    let params = LeakageParams::new(cfg.security.qber, cfg.security.f_eve_hz)?;
    let budget = SecurityBudget::new(p_max, transmittance, reflectance, params)?;
    let report = broadband_leakage(&budget, &PhysicalConstants::from_set(cfg.security.constants))?;

    ensure_dir(out)?;
    let csv_path = out.join("leakage.csv");
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(io_err(&csv_path))?;
    std::fs::write(&csv_path, buf).map_err(io_err(&csv_path))?;
    write_json(
        &out.join("security_report.json"),
        &SecurityReportFile {
            assumptions: Assumptions::from_config(cfg),
            reflectance: refl_path.display().to_string(),
            report: &report,
        },
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimalCheck {
    pub mu: f64,
    pub eta: f64,
    pub bound: f64,
    pub deviation: f64,
}

#[derive(Serialize)]
struct FidelityFile<'a> {
    assumptions: Assumptions,
    seed: u64,
    dims: &'a [usize],
    trials_per_dim: usize,
    max_mu: f64,
    tolerance: f64,
    violations: usize,
    min_gap: f64,
    optimal: &'a [OptimalCheck],
}

pub struct FidelitySummary {
    pub violations: usize,
    pub min_gap: f64,
    pub optimal: Vec<OptimalCheck>,
}

/// Runs the random-state bound suite and the optimal-state equality check.
pub fn verify_fidelity(cfg: &PipelineConfig, out: &Path) -> Result<FidelitySummary> {
    let f = &cfg.fidelity;
    let report = run_bound_suite(&f.dims, f.trials, f.max_mu, f.seed, f.tolerance)?;
    let dim = f.dims.iter().copied().max().unwrap_or(2).max(2);
    let optimal = f
        .optimal_mus
        .iter()
        .map(|&mu| {
            let (x0, x1) = optimal_tha_states(mu, dim)?;
            let eta = sqrt_fidelity(&DensityMatrix::from_pure(&x0)?, &DensityMatrix::from_pure(&x1)?)?;
            let bound = 1.0 - 2.0 * mu;
            Ok(OptimalCheck {
                mu,
                eta,
                bound,
                deviation: (eta - bound).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    ensure_dir(out)?;
    write_json(
        &out.join("fidelity.json"),
        &FidelityFile {
            assumptions: Assumptions::from_config(cfg),
            seed: f.seed,
            dims: &f.dims,
            trials_per_dim: f.trials,
            max_mu: f.max_mu,
            tolerance: f.tolerance,
            violations: report.violations,
            min_gap: report.min_gap,
            optimal: &optimal,
        },
    )?;
    let csv_path = out.join("fidelity_trials.csv");
    let mut text = String::from("dim,trial,mu,p0,eta,bound_vacuum,bound_mu\n");
    for r in &report.records {
        let x = &r.result;
        text.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{:e}\n",
            r.dim, r.trial, x.mu, x.p0, x.eta, x.bound_a8, x.bound_mu
        ));
    }
    std::fs::write(&csv_path, text).map_err(io_err(&csv_path))?;
    Ok(FidelitySummary {
        violations: report.violations,
        min_gap: report.min_gap,
        optimal,
    })
}
