use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::linear_to_db;

/// Quantum efficiency below which a wavelength's results are flagged
/// approximate.
pub const APPROXIMATE_QE: f64 = 0.01;

/// Reference measurement and loss budget for converting count rates to
/// reflectance at one wavelength. All dB values are ≤ 0 (losses).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationData {
    pub wavelength_nm: f64,
    /// Count rate with the VOA (set to `att_in_db`) connected straight to the
    /// detector.
    pub n_in_cps: f64,
    pub att_in_db: f64,
    /// VOA setting used while recording the trace.
    pub att_out_db: f64,
    pub t12_db: f64,
    pub t23_db: f64,
    /// Detector dead time, used to undo count-rate saturation.
    #[serde(default)]
    pub dead_time_s: f64,
    #[serde(default)]
    pub quantum_efficiency: Option<f64>,
}

impl CalibrationData {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_in_cps > 0.0) || self.n_in_cps.is_infinite() {
            return Err(Error::validation(format!(
                "reference rate must be positive, got {} cps",
                self.n_in_cps
            )));
        }
        for (name, v) in [
            ("att_in_db", self.att_in_db),
            ("att_out_db", self.att_out_db),
            ("t12_db", self.t12_db),
            ("t23_db", self.t23_db),
        ] {
            if !(v <= 0.0) {
                return Err(Error::validation(format!("{name} must be ≤ 0 dB, got {v}")));
            }
        }
        if !(self.dead_time_s >= 0.0) {
            return Err(Error::validation("dead time must be non-negative"));
        }
        Ok(())
    }

    pub fn is_approximate(&self) -> bool {
        self.quantum_efficiency.is_some_and(|q| q < APPROXIMATE_QE)
    }

    /// Converts an observed rate to the true rate of a non-paralyzable
    /// detector given the observed total rate `total_observed_cps`.
    pub fn dead_time_factor(&self, total_observed_cps: f64) -> Result<f64> {
        let busy = total_observed_cps * self.dead_time_s;
        if busy >= 1.0 {
            return Err(Error::Numerical(format!(
                "observed rate {total_observed_cps} cps saturates a {} s dead time",
                self.dead_time_s
            )));
        }
        Ok(1.0 / (1.0 - busy))
    }
}

/// A reflectance estimate, or the marker for "no counts above floor".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Db(f64),
    BelowFloor,
}

impl Level {
    pub fn db(self) -> Option<f64> {
        match self {
            Level::Db(v) => Some(v),
            Level::BelowFloor => None,
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Db(v) => write!(f, "{v:.3} dB"),
            Level::BelowFloor => f.write_str("below floor"),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Level::Db(v) => s.serialize_f64(*v),
            Level::BelowFloor => s.serialize_str("below_floor"),
        }
    }
}

/// R = 10·log10(N_out/N_in) + Att_in − Att_out − T₁₂ − T₂₃ with every
/// attenuation and transmittance taken as a signed (≤ 0) dB value.
///
/// `n_out_cps` must already be corrected for dead time.
pub fn reflectance_from_rate(n_out_cps: f64, cal: &CalibrationData) -> Result<Level> {
    cal.validate()?;
    if !(n_out_cps >= 0.0) || n_out_cps.is_infinite() {
        return Err(Error::domain(format!(
            "count rate must be non-negative, got {n_out_cps}"
        )));
    }
    if n_out_cps == 0.0 {
        return Ok(Level::BelowFloor);
    }
    let ratio_db = linear_to_db(n_out_cps / cal.n_in_cps)?;
    Ok(Level::Db(
        ratio_db + cal.att_in_db - cal.att_out_db - cal.t12_db - cal.t23_db,
    ))
}

/// Reflectance from counts integrated over a peak during `duration_s`.
pub fn estimate_reflectance(peak_counts: f64, duration_s: f64, cal: &CalibrationData) -> Result<Level> {
    if !(duration_s > 0.0) {
        return Err(Error::domain(format!("duration must be positive, got {duration_s}")));
    }
    if !(peak_counts >= 0.0) {
        return Err(Error::domain(format!(
            "peak counts must be non-negative, got {peak_counts}"
        )));
    }
    reflectance_from_rate(peak_counts / duration_s, cal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cal(n_in: f64, att_in: f64, att_out: f64, t12: f64, t23: f64) -> CalibrationData {
        CalibrationData {
            wavelength_nm: 1550.0,
            n_in_cps: n_in,
            att_in_db: att_in,
            att_out_db: att_out,
            t12_db: t12,
            t23_db: t23,
            dead_time_s: 0.0,
            quantum_efficiency: Some(0.1),
        }
    }

    #[test]
    fn identity_is_zero_db() {
        let c = cal(1e4, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(estimate_reflectance(1e4, 1.0, &c).unwrap(), Level::Db(0.0));
    }

    #[test]
    fn signed_losses_enter_as_written() {
        let c = cal(1e6, -30.0, -10.0, -1.0, -1.0);
        let r = estimate_reflectance(1e3 * 2.0, 2.0, &c).unwrap().db().unwrap();
        assert!((r - (-48.0)).abs() < 1e-12, "{r}");
    }

    #[test]
    fn zero_counts_are_below_floor() {
        let c = cal(1e4, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(estimate_reflectance(0.0, 1.0, &c).unwrap(), Level::BelowFloor);
    }

    #[test]
    fn rejects_bad_calibration() {
        assert!(estimate_reflectance(1.0, 1.0, &cal(0.0, 0.0, 0.0, 0.0, 0.0)).is_err());
        assert!(estimate_reflectance(1.0, 1.0, &cal(1.0, 3.0, 0.0, 0.0, 0.0)).is_err());
        assert!(estimate_reflectance(1.0, 0.0, &cal(1.0, 0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn dead_time_factor_matches_non_paralyzable_inverse() {
        let mut c = cal(1.0, 0.0, 0.0, 0.0, 0.0);
        c.dead_time_s = 2e-6;
        // true 50 kcps observes 50e3/(1+0.1)
        let observed = 50e3 / 1.1;
        assert!((observed * c.dead_time_factor(observed).unwrap() - 50e3).abs() < 1e-9);
        assert!(c.dead_time_factor(5e5).unwrap_err().is_numerical());
    }
}
