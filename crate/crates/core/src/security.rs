//! Trojan-horse leakage bounds.
//!
//! Eve's returned power follows from a dB budget (input power limit, two-way
//! transmittance of the defence components, reflectance of the device), is
//! converted into a mean photon number per pulse, and bounds the Holevo
//! quantity through the binary entropy of `(1 − η·ε)/2`.
//!
//! For the tiny photon numbers of interest (μ ~ 1e-16) the fidelity bound
//! η = 1 − 2μ cannot be stored in an `f64` without losing μ entirely, so the
//! bound is evaluated on the complements `1 − η` and `1 − ε`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{dbm_to_watts, ConstantsSet, PhysicalConstants, Spectrum, SpectrumKind, Unit, WavelengthGrid};

/// Default repetition rate assumed for Eve's pulses.
pub const DEFAULT_F_EVE_HZ: f64 = 5e5;

/// h(x) = −x·log2(x) − (1−x)·log2(1−x), with h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    let ln2 = std::f64::consts::LN_2;
    Ok(-x * x.log2() - (1.0 - x) * (-x).ln_1p() / ln2)
}

/// η ≥ 1 − 2μ, clamped at −1.
pub fn eta_lower_bound(mu_eve: f64) -> Result<f64> {
    check_mu(mu_eve)?;
    Ok((1.0 - 2.0 * mu_eve).max(-1.0))
}

/// ε = 1 − 2Q.
pub fn epsilon_from_qber(q: f64) -> Result<f64> {
    check_qber(q)?;
    Ok(1.0 - 2.0 * q)
}

/// h((1 − η·ε)/2) for plain overlap values.
///
/// Prefer [`holevo_bound_from_deficits`] when η or ε is within ~1e-8 of one.
pub fn holevo_bound(eta: f64, epsilon: f64) -> Result<f64> {
    for (name, v) in [("eta", eta), ("epsilon", epsilon)] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} = {v} outside [-1, 1]")));
        }
    }
    holevo_bound_from_deficits(1.0 - eta, 1.0 - epsilon)
}

/// h((1 − η·ε)/2) with η = 1 − `eta_deficit`, ε = 1 − `epsilon_deficit`.
///
/// Uses 1 − η·ε = a + b − a·b, which has no cancellation when a, b → 0.
pub fn holevo_bound_from_deficits(eta_deficit: f64, epsilon_deficit: f64) -> Result<f64> {
    for (name, v) in [("1 - eta", eta_deficit), ("1 - epsilon", epsilon_deficit)] {
        if !(0.0..=2.0).contains(&v) {
            return Err(Error::domain(format!("{name} = {v} outside [0, 2]")));
        }
    }
    let (a, b) = (eta_deficit, epsilon_deficit);
    let x = ((a + b - a * b) / 2.0).clamp(0.0, 1.0);
    binary_entropy(x)
}

/// Holevo bound for mean returned photon number μ and QBER Q, i.e.
/// h(μ + Q − 2μQ) for μ ≤ 1/2.
///
/// Beyond μ = 1/2 the fidelity bound 1 − 2μ is negative while the fidelity
/// itself is not, so η is floored at 0 there and the bound saturates at 1 bit.
pub fn holevo_bound_from_mu(mu_eve: f64, q: f64) -> Result<f64> {
    check_mu(mu_eve)?;
    check_qber(q)?;
    let eta_deficit = (2.0 * mu_eve).min(1.0);
    holevo_bound_from_deficits(eta_deficit, 2.0 * q)
}

/// μ = P·λ / (f·h·c) with P converted from dBm to watts.
pub fn mu_eve_from_power(
    p_eve_dbm: f64,
    wavelength_nm: f64,
    f_eve_hz: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if !(f_eve_hz.is_finite() && f_eve_hz > 0.0) {
        return Err(Error::domain(format!("f_Eve must be positive, got {f_eve_hz} Hz")));
    }
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(Error::domain(format!(
            "wavelength must be positive, got {wavelength_nm} nm"
        )));
    }
    let watts = dbm_to_watts(p_eve_dbm)?;
    Ok(watts * wavelength_nm * 1e-9 / (f_eve_hz * constants.planck() * constants.light_speed()))
}

/// P_Eve[dBm] = P_max[dBm] + T[dB] + R[dB].
pub fn eve_power(p_max_dbm: f64, t_db: f64, r_db: f64) -> Result<f64> {
    if p_max_dbm.is_nan() || p_max_dbm == f64::INFINITY {
        return Err(Error::validation(format!("P_max = {p_max_dbm} dBm is not usable")));
    }
    for (name, v) in [("transmittance", t_db), ("reflectance", r_db)] {
        if v.is_nan() || v > 0.0 {
            return Err(Error::validation(format!(
                "{name} {v} dB is positive (would imply gain)"
            )));
        }
    }
    Ok(p_max_dbm + t_db + r_db)
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || mu.is_infinite() {
        return Err(Error::domain(format!(
            "mean photon number {mu} must be finite and >= 0"
        )));
    }
    Ok(())
}

fn check_qber(q: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::domain(format!("QBER {q} outside [0, 0.5]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageParams {
    pub qber: f64,
    pub f_eve_hz: f64,
}

impl LeakageParams {
    pub fn new(qber: f64, f_eve_hz: f64) -> Result<Self> {
        check_qber(qber)?;
        if !(f_eve_hz.is_finite() && f_eve_hz > 0.0) {
            return Err(Error::domain(format!("f_Eve must be positive, got {f_eve_hz} Hz")));
        }
        Ok(Self { qber, f_eve_hz })
    }
}

impl Default for LeakageParams {
    fn default() -> Self {
        Self {
            qber: 0.0,
            f_eve_hz: DEFAULT_F_EVE_HZ,
        }
    }
}

/// Eve's maximum acceptable input power, flat or wavelength dependent.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerLimit {
    Scalar(f64),
    Spectrum(Spectrum),
}

impl PowerLimit {
    fn at(&self, wavelength_nm: f64) -> Result<f64> {
        match self {
            PowerLimit::Scalar(p) => Ok(*p),
            PowerLimit::Spectrum(s) => s.sample(wavelength_nm),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SecurityBudget {
    p_max_dbm: PowerLimit,
    transmittance_db: Spectrum,
    reflectance_db: Spectrum,
    params: LeakageParams,
}

impl SecurityBudget {
    pub fn new(
        p_max_dbm: PowerLimit,
        transmittance_db: Spectrum,
        reflectance_db: Spectrum,
        params: LeakageParams,
    ) -> Result<Self> {
        for (name, s) in [("transmittance", &transmittance_db), ("reflectance", &reflectance_db)] {
            if s.unit() != Unit::Db {
                return Err(Error::validation(format!("{name} spectrum must be in dB")));
            }
            if let Some((wl, v)) = s.iter().find(|&(_, v)| v > 0.0) {
                return Err(Error::validation(format!("{name} {v} dB at {wl} nm exceeds 0 dB")));
            }
        }
        if let PowerLimit::Spectrum(s) = &p_max_dbm {
            if s.unit() != Unit::Dbm {
                return Err(Error::validation("power-limit spectrum must be in dBm"));
            }
        }
        Ok(Self {
            p_max_dbm,
            transmittance_db,
            reflectance_db,
            params,
        })
    }

    pub fn params(&self) -> &LeakageParams {
        &self.params
    }

    pub fn reflectance(&self) -> &Spectrum {
        &self.reflectance_db
    }

    pub fn transmittance(&self) -> &Spectrum {
        &self.transmittance_db
    }

    /// Nodes of every input spectrum within the range they all cover.
    pub fn evaluation_grid(&self) -> Result<WavelengthGrid> {
        let mut grids = vec![self.transmittance_db.grid(), self.reflectance_db.grid()];
        if let PowerLimit::Spectrum(s) = &self.p_max_dbm {
            grids.push(s.grid());
        }
        let (lo, hi) = WavelengthGrid::overlap(grids.iter().copied())
            .ok_or_else(|| Error::config("input spectra share no common wavelength range"))?;
        WavelengthGrid::merged_within(grids, lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageRecord {
    pub wavelength_nm: f64,
    pub p_eve_dbm: f64,
    pub mu_eve: f64,
    pub eta_lb: f64,
    pub chi_upper: f64,
}

/// Input assumptions echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageAssumptions {
    pub f_eve_hz: f64,
    pub qber: f64,
    pub constants: ConstantsSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    pub records: Vec<LeakageRecord>,
    pub worst_case: LeakageRecord,
    pub assumptions: LeakageAssumptions,
}

pub const LEAKAGE_CSV_HEADER: &str = "wavelength_nm,p_eve_dbm,mu_eve,chi_bits";

impl LeakageReport {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "{LEAKAGE_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{:e},{:e}",
                r.wavelength_nm, r.p_eve_dbm, r.mu_eve, r.chi_upper
            )?;
        }
        Ok(())
    }
}

/// Evaluates the leakage chain at one wavelength.
pub fn leakage_at(
    wavelength_nm: f64,
    p_max_dbm: f64,
    t_db: f64,
    r_db: f64,
    params: &LeakageParams,
    constants: &PhysicalConstants,
) -> Result<LeakageRecord> {
    let p_eve_dbm = eve_power(p_max_dbm, t_db, r_db)?;
    let mu_eve = mu_eve_from_power(p_eve_dbm, wavelength_nm, params.f_eve_hz, constants)?;
    Ok(LeakageRecord {
        wavelength_nm,
        p_eve_dbm,
        mu_eve,
        eta_lb: eta_lower_bound(mu_eve)?,
        chi_upper: holevo_bound_from_mu(mu_eve, params.qber)?,
    })
}

/// Per-wavelength leakage over the common range of the budget's spectra,
/// with the worst case (ties go to the lowest wavelength).
pub fn broadband_leakage(budget: &SecurityBudget, constants: &PhysicalConstants) -> Result<LeakageReport> {
    let grid = budget.evaluation_grid()?;
    let records = grid
        .points()
        .par_iter()
        .map(|&wl| {
            leakage_at(
                wl,
                budget.p_max_dbm.at(wl)?,
                budget.transmittance_db.sample(wl)?,
                budget.reflectance_db.sample(wl)?,
                &budget.params,
                constants,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut worst = records[0];
    for r in &records[1..] {
        if r.chi_upper > worst.chi_upper {
            worst = *r;
        }
    }
    Ok(LeakageReport {
        records,
        worst_case: worst,
        assumptions: LeakageAssumptions {
            f_eve_hz: budget.params.f_eve_hz,
            qber: budget.params.qber,
            constants: constants.set(),
        },
    })
}

/// Convenience for flat spectra in tests and examples.
pub fn flat_db(value: f64, kind: SpectrumKind) -> Result<Spectrum> {
    Spectrum::constant(value, Unit::Db, kind)
}
