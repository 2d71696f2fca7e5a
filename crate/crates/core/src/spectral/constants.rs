use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which set of physical constants a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantsSet {
    /// Exact SI values.
    #[default]
    Codata,
    /// h = 6.63e-34 J/Hz and c = 3e8 m/s, the rounded values used in the
    /// published leakage numbers.
    Paper,
}

impl std::fmt::Display for ConstantsSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstantsSet::Codata => f.write_str("codata"),
            ConstantsSet::Paper => f.write_str("paper"),
        }
    }
}

impl std::str::FromStr for ConstantsSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "codata" => Ok(ConstantsSet::Codata),
            "paper" => Ok(ConstantsSet::Paper),
            other => Err(Error::config(format!(
                "unknown constants set '{other}' (expected codata|paper)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    planck_j_per_hz: f64,
    light_speed_m_per_s: f64,
    set: ConstantsSet,
}

impl PhysicalConstants {
    pub const fn codata() -> Self {
        Self {
            planck_j_per_hz: 6.626_070_15e-34,
            light_speed_m_per_s: 2.997_924_58e8,
            set: ConstantsSet::Codata,
        }
    }

    pub const fn paper_rounded() -> Self {
        Self {
            planck_j_per_hz: 6.63e-34,
            light_speed_m_per_s: 3e8,
            set: ConstantsSet::Paper,
        }
    }

    pub const fn from_set(set: ConstantsSet) -> Self {
        match set {
            ConstantsSet::Codata => Self::codata(),
            ConstantsSet::Paper => Self::paper_rounded(),
        }
    }

    pub fn planck(&self) -> f64 {
        self.planck_j_per_hz
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed_m_per_s
    }

    pub fn set(&self) -> ConstantsSet {
        self.set
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::codata()
    }
}

/// Photon energy E = h·c/λ in joules.
pub fn photon_energy_j(wavelength_nm: f64, constants: &PhysicalConstants) -> Result<f64> {
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(Error::domain(format!(
            "wavelength must be positive, got {wavelength_nm} nm"
        )));
    }
    Ok(constants.planck() * constants.light_speed() / (wavelength_nm * 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn photon_energy_rounded_constants() {
        let c = PhysicalConstants::paper_rounded();
        // 6.63e-34 * 3e8 / 1.575e-6 and / 1.625e-6
        assert!(rel(photon_energy_j(1575.0, &c).unwrap(), 1.262_857_142_857_143e-19) < 1e-12);
        assert!(rel(photon_energy_j(1625.0, &c).unwrap(), 1.224e-19) < 1e-12);
    }

    #[test]
    fn doubling_wavelength_halves_energy() {
        let c = PhysicalConstants::codata();
        let e1 = photon_energy_j(800.0, &c).unwrap();
        let e2 = photon_energy_j(1600.0, &c).unwrap();
        assert!(rel(e1, 2.0 * e2) < 1e-14);
    }

    #[test]
    fn non_positive_wavelength_is_domain_error() {
        let c = PhysicalConstants::codata();
        assert!(matches!(photon_energy_j(0.0, &c), Err(Error::Domain(_))));
        assert!(matches!(photon_energy_j(-5.0, &c), Err(Error::Domain(_))));
        assert!(photon_energy_j(f64::NAN, &c).is_err());
    }

    #[test]
    fn constants_set_parses() {
        assert_eq!("paper".parse::<ConstantsSet>().unwrap(), ConstantsSet::Paper);
        assert_eq!("CODATA".parse::<ConstantsSet>().unwrap(), ConstantsSet::Codata);
        assert!("si".parse::<ConstantsSet>().is_err());
    }
}
