//! Synthetic photon-counting OTDR traces.
//!
//! The light path for a reflection at distance l is
//! source → VOA (`att_out_db`) → circulator 1→2 → fiber (one-way loss) →
//! reflector → fiber → circulator 2→3 → SPAD. The reference rate used for
//! calibration is taken with the VOA at `att_in_db` connected straight to the
//! SPAD.

pub mod config;
mod monte_carlo;
mod rates;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::CalibrationData;
use crate::error::{Error, Result};
use crate::spectral::{db_to_linear, Spectrum, SpectrumKind, Unit, WavelengthGrid};
use crate::trace::{bins_per_period, light_speed, AcquisitionMode, BroadbandScan, OtdrTrace, TraceMeta};

pub use rates::{expected_bin_rates, BinRates};

pub const DEFAULT_GROUP_INDEX: f64 = 1.468;
pub const GROUP_INDEX_RANGE: (f64, f64) = (1.4, 1.6);
pub const DEFAULT_BIN_WIDTH_S: f64 = 150e-12;
pub const DEFAULT_PULSE_FWHM_S: f64 = 300e-12;
pub const DEFAULT_SAFETY: f64 = 0.9;

/// Backscatter reflectance per time bin at 1550 nm; scales as λ⁻⁴.
pub const RAYLEIGH_DB_AT_1550: f64 = -80.0;

/// Quantum efficiency of the default InGaAs SPAD, (nm, fraction).
pub const DEFAULT_QE_TABLE: [(f64, f64); 15] = [
    (1100.0, 0.008),
    (1150.0, 0.02),
    (1200.0, 0.04),
    (1250.0, 0.06),
    (1300.0, 0.08),
    (1350.0, 0.09),
    (1400.0, 0.095),
    (1450.0, 0.1),
    (1500.0, 0.1),
    (1550.0, 0.1),
    (1600.0, 0.095),
    (1650.0, 0.08),
    (1700.0, 0.05),
    (1750.0, 0.02),
    (1800.0, 0.008),
];

fn flat_db(value: f64, kind: SpectrumKind) -> Result<Spectrum> {
    Spectrum::constant(value, Unit::Db, kind)
}

fn require_db(s: &Spectrum, kind: SpectrumKind, what: &str) -> Result<()> {
    if s.unit() != Unit::Db || s.kind() != kind {
        return Err(Error::validation(format!(
            "{what} must be a dB {kind:?} spectrum, got {:?} {:?}",
            s.unit(),
            s.kind()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberComponent {
    pub label: String,
    pub position_m: f64,
    pub reflectance: Spectrum,
    /// One-way loss for light passing the component.
    pub insertion_loss: Spectrum,
}

impl FiberComponent {
    pub fn new(
        label: impl Into<String>,
        position_m: f64,
        reflectance: Spectrum,
        insertion_loss: Spectrum,
    ) -> Result<Self> {
        let label = label.into();
        if !(position_m >= 0.0) || position_m.is_infinite() {
            return Err(Error::validation(format!(
                "component '{label}' has position {position_m} m"
            )));
        }
        require_db(&reflectance, SpectrumKind::Reflectance, "reflectance")?;
        require_db(&insertion_loss, SpectrumKind::Transmittance, "insertion loss")?;
        Ok(Self {
            label,
            position_m,
            reflectance,
            insertion_loss,
        })
    }

    /// Wavelength-flat reflector with no insertion loss.
    pub fn reflector(label: impl Into<String>, position_m: f64, reflectance_db: f64) -> Result<Self> {
        Self::new(
            label,
            position_m,
            flat_db(reflectance_db, SpectrumKind::Reflectance)?,
            flat_db(0.0, SpectrumKind::Transmittance)?,
        )
    }
}

/// The three reflections an unbalanced MZI produces for a reflector behind
/// it: short-short, the two equal mixed paths, and long-long, spaced by half
/// the one-way path difference `delta_m`.
pub fn mzi_components(
    label: &str,
    position_m: f64,
    delta_m: f64,
    reflectance: &Spectrum,
) -> Result<Vec<FiberComponent>> {
    let weighted = |w: f64| {
        let shift = 10.0 * w.log10();
        reflectance.map_values(|v| v + shift)
    };
    let none = flat_db(0.0, SpectrumKind::Transmittance)?;
    Ok(vec![
        FiberComponent::new(format!("{label}/short"), position_m, weighted(0.25)?, none.clone())?,
        FiberComponent::new(
            format!("{label}/mixed"),
            position_m + delta_m / 2.0,
            weighted(0.5)?,
            none.clone(),
        )?,
        FiberComponent::new(format!("{label}/long"), position_m + delta_m, weighted(0.25)?, none)?,
    ])
}

/// Backscatter reflectance per bin, −80 dB at 1550 nm scaled by λ⁻⁴.
pub fn default_rayleigh() -> Spectrum {
    let points: Vec<(f64, f64)> = (0..=46)
        .map(|i| {
            let wl = 200.0 + 50.0 * i as f64;
            (wl, RAYLEIGH_DB_AT_1550 + 40.0 * (1550.0 / wl).log10())
        })
        .collect();
    Spectrum::from_points(&points, Unit::Db, SpectrumKind::Reflectance).expect("static table is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberLayout {
    components: Vec<FiberComponent>,
    total_length_m: f64,
    group_index: f64,
    rayleigh: Spectrum,
}

impl FiberLayout {
    pub fn new(
        mut components: Vec<FiberComponent>,
        total_length_m: f64,
        group_index: f64,
        rayleigh: Spectrum,
    ) -> Result<Self> {
        if !(total_length_m >= 0.0) || total_length_m.is_infinite() {
            return Err(Error::validation(format!("total length {total_length_m} m")));
        }
        let (lo, hi) = GROUP_INDEX_RANGE;
        if !(lo..=hi).contains(&group_index) {
            return Err(Error::validation(format!(
                "group index {group_index} outside [{lo}, {hi}]"
            )));
        }
        require_db(&rayleigh, SpectrumKind::Reflectance, "Rayleigh backscatter")?;
        if let Some(c) = components.iter().find(|c| c.position_m > total_length_m) {
            return Err(Error::validation(format!(
                "component '{}' at {} m lies past the fiber end at {total_length_m} m",
                c.label, c.position_m
            )));
        }
        components.sort_by(|a, b| a.position_m.total_cmp(&b.position_m));
        Ok(Self {
            components,
            total_length_m,
            group_index,
            rayleigh,
        })
    }

    /// Default group index and backscatter.
    pub fn standard(components: Vec<FiberComponent>, total_length_m: f64) -> Result<Self> {
        Self::new(components, total_length_m, DEFAULT_GROUP_INDEX, default_rayleigh())
    }

    pub fn without_backscatter(self) -> Self {
        Self {
            rayleigh: flat_db(f64::NEG_INFINITY, SpectrumKind::Reflectance).expect("valid"),
            ..self
        }
    }

    pub fn components(&self) -> &[FiberComponent] {
        &self.components
    }

    pub fn total_length_m(&self) -> f64 {
        self.total_length_m
    }

    pub fn group_index(&self) -> f64 {
        self.group_index
    }

    pub fn rayleigh(&self) -> &Spectrum {
        &self.rayleigh
    }

    /// Longest distance whose echo returns within one pulse period.
    pub fn unambiguous_range_m(&self, f_pulse_hz: f64) -> f64 {
        light_speed() / (2.0 * self.group_index * f_pulse_hz)
    }

    /// Errors if any echo would fold into the next pulse period.
    pub fn check_range(&self, f_pulse_hz: f64) -> Result<()> {
        let max_m = self.unambiguous_range_m(f_pulse_hz);
        if let Some(c) = self.components.iter().find(|c| c.position_m >= max_m) {
            return Err(Error::RangeAmbiguity {
                label: c.label.clone(),
                position_m: c.position_m,
                max_m,
            });
        }
        if self.total_length_m >= max_m {
            return Err(Error::RangeAmbiguity {
                label: "fiber end".into(),
                position_m: self.total_length_m,
                max_m,
            });
        }
        Ok(())
    }

    /// One-way loss in dB accumulated before `position_m` (components at
    /// exactly that position are not passed).
    pub fn path_loss_db(&self, position_m: f64, wavelength_nm: f64) -> Result<f64> {
        let mut loss = 0.0;
        for c in self.components.iter().take_while(|c| c.position_m < position_m) {
            loss += c.insertion_loss.sample(wavelength_nm)?;
        }
        Ok(loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub delay_s: f64,
    pub width_s: f64,
}

impl Gate {
    pub fn contains(&self, t_s: f64) -> bool {
        t_s >= self.delay_s && t_s < self.delay_s + self.width_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpadModel {
    pub quantum_efficiency: Spectrum,
    pub dead_time_s: f64,
    pub dark_rate_cps: f64,
    pub gate: Option<Gate>,
}

impl SpadModel {
    pub fn new(quantum_efficiency: Spectrum, dead_time_s: f64, dark_rate_cps: f64, gate: Option<Gate>) -> Result<Self> {
        if quantum_efficiency.unit() != Unit::Fraction || quantum_efficiency.kind() != SpectrumKind::Efficiency {
            return Err(Error::validation(
                "quantum efficiency must be a fraction-valued efficiency spectrum",
            ));
        }
        if !(dead_time_s >= 0.0) || dead_time_s.is_infinite() {
            return Err(Error::validation(format!("dead time {dead_time_s} s")));
        }
        if !(dark_rate_cps >= 0.0) || dark_rate_cps.is_infinite() {
            return Err(Error::validation(format!("dark rate {dark_rate_cps} cps")));
        }
        if let Some(g) = gate {
            if !(g.width_s > 0.0) || !(g.delay_s >= 0.0) {
                return Err(Error::validation("gate needs delay ≥ 0 and width > 0"));
            }
        }
        Ok(Self {
            quantum_efficiency,
            dead_time_s,
            dark_rate_cps,
            gate,
        })
    }

    /// Free-running InGaAs SPAD: 2 μs dead time, 1700 cps dark rate, about
    /// 10 % efficiency at 1550 nm falling below 1 % at 1100 and 1800 nm.
    pub fn ingaas_default() -> Self {
        let qe = Spectrum::from_points(&DEFAULT_QE_TABLE, Unit::Fraction, SpectrumKind::Efficiency)
            .expect("static table is valid");
        Self::new(qe, 2e-6, 1700.0, None).expect("valid defaults")
    }

    pub fn efficiency(&self, wavelength_nm: f64) -> Result<f64> {
        self.quantum_efficiency.sample(wavelength_nm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionConfig {
    pub f_pulse_hz: f64,
    pub bin_width_s: f64,
    pub duration_s: f64,
    /// VOA setting for the reference measurement.
    pub att_in_db: f64,
    /// VOA setting while recording traces.
    pub att_out_db: f64,
    pub input_photons_per_pulse: f64,
    pub circulator_t12: Spectrum,
    pub circulator_t23: Spectrum,
    pub pulse_fwhm_s: f64,
    pub seed: u64,
    pub mode: AcquisitionMode,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            f_pulse_hz: 5e5,
            bin_width_s: DEFAULT_BIN_WIDTH_S,
            duration_s: 60.0,
            att_in_db: -50.0,
            att_out_db: 0.0,
            input_photons_per_pulse: 3e5,
            circulator_t12: flat_db(-0.8, SpectrumKind::Transmittance).expect("valid"),
            circulator_t23: flat_db(-0.8, SpectrumKind::Transmittance).expect("valid"),
            pulse_fwhm_s: DEFAULT_PULSE_FWHM_S,
            seed: 0,
            mode: AcquisitionMode::MonteCarlo,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f_pulse_hz", self.f_pulse_hz),
            ("bin_width_s", self.bin_width_s),
            ("duration_s", self.duration_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || v.is_infinite() {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.bin_width_s * self.f_pulse_hz > 1.0 {
            return Err(Error::validation("bin width exceeds the pulse period"));
        }
        for (name, v) in [("att_in_db", self.att_in_db), ("att_out_db", self.att_out_db)] {
            if !(v <= 0.0) {
                return Err(Error::validation(format!("{name} must be ≤ 0 dB, got {v}")));
            }
        }
        if !(self.input_photons_per_pulse >= 0.0) || self.input_photons_per_pulse.is_infinite() {
            return Err(Error::validation("input photons per pulse must be finite and ≥ 0"));
        }
        if !(self.pulse_fwhm_s >= 0.0) || self.pulse_fwhm_s.is_infinite() {
            return Err(Error::validation("pulse FWHM must be finite and ≥ 0"));
        }
        require_db(&self.circulator_t12, SpectrumKind::Transmittance, "circulator 1→2")?;
        require_db(&self.circulator_t23, SpectrumKind::Transmittance, "circulator 2→3")?;
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        bins_per_period(self.f_pulse_hz, self.bin_width_s)
    }

    pub fn period_s(&self) -> f64 {
        1.0 / self.f_pulse_hz
    }
}

/// Detector operating-point diagnosis. Slack is limit minus actual, so
/// negative slack means violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub max_rate_cps: f64,
    pub rate_limit_cps: f64,
    pub rate_slack_cps: f64,
    pub rate_ok: bool,
    pub dead_time_s: f64,
    pub dead_time_limit_s: f64,
    pub dead_time_slack_s: f64,
    pub dead_time_ok: bool,
}

impl OperatingPoint {
    pub fn ok(&self) -> bool {
        self.rate_ok && self.dead_time_ok
    }
}

const BOUNDARY_RTOL: f64 = 1e-12;

fn within(actual: f64, limit: f64) -> bool {
    actual <= limit + BOUNDARY_RTOL * limit.abs()
}

/// Checks the peak count rate against η·f (at most one detection per pulse)
/// and the dead time against the pulse period.
pub fn check_operating_point(
    config: &AcquisitionConfig,
    spad: &SpadModel,
    wavelength_nm: f64,
    expected_max_rate_cps: f64,
) -> Result<OperatingPoint> {
    let eta = spad.efficiency(wavelength_nm)?;
    let rate_limit = eta * config.f_pulse_hz;
    let dt_limit = config.period_s();
    Ok(OperatingPoint {
        max_rate_cps: expected_max_rate_cps,
        rate_limit_cps: rate_limit,
        rate_slack_cps: rate_limit - expected_max_rate_cps,
        rate_ok: within(expected_max_rate_cps, rate_limit),
        dead_time_s: spad.dead_time_s,
        dead_time_limit_s: dt_limit,
        dead_time_slack_s: dt_limit - spad.dead_time_s,
        dead_time_ok: within(spad.dead_time_s, dt_limit),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttenuationAdvice {
    /// Recommended trace VOA setting.
    pub att_out_db: f64,
    /// Change relative to the configured setting.
    pub extra_db: f64,
    pub target_cps: f64,
    pub predicted_peak_cps: f64,
    /// Even an open VOA keeps the peak below the target.
    pub already_compliant: bool,
}

/// Least attenuation whose predicted peak bin rate stays within
/// `safety`·η·f.
pub fn auto_attenuation(
    layout: &FiberLayout,
    spad: &SpadModel,
    config: &AcquisitionConfig,
    wavelength_nm: f64,
    safety: f64,
) -> Result<AttenuationAdvice> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::validation(format!(
            "safety factor must be in (0, 1], got {safety}"
        )));
    }
    let rates = expected_bin_rates(layout, spad, config, wavelength_nm)?;
    let target = safety * spad.efficiency(wavelength_nm)? * config.f_pulse_hz;
    let signal_max = rates.reflected.iter().copied().fold(0.0, f64::max);
    let dark_max = rates.dark.iter().copied().fold(0.0, f64::max);
    if dark_max >= target {
        return Err(Error::config(format!(
            "dark counts alone ({dark_max} cps per bin) exceed the target {target} cps"
        )));
    }
    let (att, compliant) = if signal_max == 0.0 {
        (0.0, true)
    } else {
        let wanted = config.att_out_db + 10.0 * ((target - dark_max) / signal_max).log10();
        if wanted >= 0.0 {
            (0.0, true)
        } else {
            (wanted, false)
        }
    };
    let extra = att - config.att_out_db;
    Ok(AttenuationAdvice {
        att_out_db: att,
        extra_db: extra,
        target_cps: target,
        predicted_peak_cps: signal_max * db_to_linear(extra)? + dark_max,
        already_compliant: compliant,
    })
}

/// Reference rate with the VOA at `att_in_db` feeding the SPAD directly, and
/// the loss budget needed to invert a trace at this wavelength.
pub fn reference_calibration(
    spad: &SpadModel,
    config: &AcquisitionConfig,
    wavelength_nm: f64,
) -> Result<CalibrationData> {
    config.validate()?;
    let eta = spad.efficiency(wavelength_nm)?;
    let n_in = config.f_pulse_hz * eta * config.input_photons_per_pulse * db_to_linear(config.att_in_db)?;
    Ok(CalibrationData {
        wavelength_nm,
        n_in_cps: n_in,
        att_in_db: config.att_in_db,
        att_out_db: config.att_out_db,
        t12_db: config.circulator_t12.sample(wavelength_nm)?,
        t23_db: config.circulator_t23.sample(wavelength_nm)?,
        dead_time_s: spad.dead_time_s,
        quantum_efficiency: Some(eta),
    })
}

fn trace_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn simulate_stream(
    layout: &FiberLayout,
    spad: &SpadModel,
    config: &AcquisitionConfig,
    wavelength_nm: f64,
    stream: u64,
) -> Result<OtdrTrace> {
    let rates = expected_bin_rates(layout, spad, config, wavelength_nm)?;
    let counts = match config.mode {
        AcquisitionMode::Analytic => {
            let total: f64 = rates.reflected.iter().chain(&rates.dark).sum();
            let factor = config.duration_s / (1.0 + total * spad.dead_time_s);
            rates.total().into_iter().map(|r| r * factor).collect()
        }
        AcquisitionMode::MonteCarlo => {
            let mut rng = trace_rng(config.seed, stream);
            monte_carlo::acquire(&rates, spad, config, &mut rng)?
        }
    };
    let meta = TraceMeta {
        wavelength_nm,
        bin_width_s: config.bin_width_s,
        duration_s: config.duration_s,
        f_pulse_hz: config.f_pulse_hz,
        att_in_db: config.att_in_db,
        att_out_db: config.att_out_db,
        group_index: layout.group_index(),
        dead_time_s: spad.dead_time_s,
        mode: config.mode,
    };
    OtdrTrace::new(meta, counts)
}

/// One trace at one wavelength. Monte-Carlo traces are a pure function of
/// `config.seed`.
pub fn simulate_trace(
    layout: &FiberLayout,
    spad: &SpadModel,
    config: &AcquisitionConfig,
    wavelength_nm: f64,
) -> Result<OtdrTrace> {
    simulate_stream(layout, spad, config, wavelength_nm, 0)
}

/// Traces for every grid wavelength; trace `i` draws from RNG stream `i`.
pub fn simulate_scan(
    layout: &FiberLayout,
    spad: &SpadModel,
    config: &AcquisitionConfig,
    grid: &WavelengthGrid,
) -> Result<BroadbandScan> {
    let traces = grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, &wl)| simulate_stream(layout, spad, config, wl, i as u64).map_err(|e| Error::at_wavelength(wl, e)))
        .collect::<Result<Vec<_>>>()?;
    BroadbandScan::new(grid.clone(), traces)
}

/// Reference calibrations for every grid wavelength.
pub fn reference_calibrations(
    spad: &SpadModel,
    config: &AcquisitionConfig,
    grid: &WavelengthGrid,
) -> Result<Vec<CalibrationData>> {
    grid.points()
        .iter()
        .map(|&wl| reference_calibration(spad, config, wl).map_err(|e| Error::at_wavelength(wl, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spad(eta: f64, dead: f64, dark: f64) -> SpadModel {
        let qe = Spectrum::constant(eta, Unit::Fraction, SpectrumKind::Efficiency).unwrap();
        SpadModel::new(qe, dead, dark, None).unwrap()
    }

    #[test]
    fn dead_time_boundary_has_zero_slack() {
        let cfg = AcquisitionConfig::default();
        let op = check_operating_point(&cfg, &spad(0.1, 2e-6, 0.0), 1550.0, 0.0).unwrap();
        assert!(op.dead_time_ok);
        assert!(op.dead_time_slack_s.abs() < 1e-18);

        let fast = AcquisitionConfig {
            f_pulse_hz: 1e6,
            ..AcquisitionConfig::default()
        };
        let op = check_operating_point(&fast, &spad(0.1, 2e-6, 0.0), 1550.0, 0.0).unwrap();
        assert!(!op.dead_time_ok && !op.ok());
    }

    #[test]
    fn rate_boundary_has_zero_slack() {
        let cfg = AcquisitionConfig::default();
        let op = check_operating_point(&cfg, &spad(0.1, 2e-6, 0.0), 1550.0, 50_000.0).unwrap();
        assert!(op.rate_ok && op.ok());
        assert!(op.rate_slack_cps.abs() < 1e-6);
        let op = check_operating_point(&cfg, &spad(0.1, 2e-6, 0.0), 1550.0, 50_001.0).unwrap();
        assert!(!op.rate_ok);
    }

    #[test]
    fn layout_rejects_out_of_range_parameters() {
        let c = FiberComponent::reflector("c", 20.0, -50.0).unwrap();
        assert!(FiberLayout::standard(vec![c.clone()], 10.0).is_err());
        assert!(FiberLayout::new(vec![], 10.0, 1.3, default_rayleigh()).is_err());
        assert!(FiberComponent::reflector("bad", 1.0, 3.0).is_err());
    }

    #[test]
    fn range_ambiguity_names_component() {
        let far = FiberComponent::reflector("far", 250.0, -50.0).unwrap();
        let layout = FiberLayout::standard(vec![far], 260.0).unwrap();
        match layout.check_range(5e5) {
            Err(Error::RangeAmbiguity { label, .. }) => assert_eq!(label, "far"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn path_loss_accumulates_upstream_components() {
        let lossy = FiberComponent::new(
            "splice",
            2.0,
            flat_db(-60.0, SpectrumKind::Reflectance).unwrap(),
            flat_db(-0.5, SpectrumKind::Transmittance).unwrap(),
        )
        .unwrap();
        let layout = FiberLayout::standard(vec![lossy.clone(), lossy], 10.0).unwrap();
        assert_eq!(layout.path_loss_db(2.0, 1550.0).unwrap(), 0.0);
        assert_eq!(layout.path_loss_db(5.0, 1550.0).unwrap(), -1.0);
    }

    #[test]
    fn rayleigh_default_scales_as_inverse_fourth_power() {
        let r = default_rayleigh();
        assert!((r.sample(1550.0).unwrap() + 80.0).abs() < 1e-12);
        let expected = -80.0 + 40.0 * (1550.0f64 / 1100.0).log10();
        assert!((r.sample(1100.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn mzi_triplet_weights() {
        let r = flat_db(-50.0, SpectrumKind::Reflectance).unwrap();
        let comps = mzi_components("mzi", 5.0, 0.4, &r).unwrap();
        let pos: Vec<f64> = comps.iter().map(|c| c.position_m).collect();
        assert_eq!(pos, vec![5.0, 5.2, 5.4]);
        let mid = db_to_linear(comps[1].reflectance.sample(1550.0).unwrap()).unwrap();
        let side = db_to_linear(comps[0].reflectance.sample(1550.0).unwrap()).unwrap();
        assert!((mid - 2.0 * side).abs() < 1e-18);
    }
}
