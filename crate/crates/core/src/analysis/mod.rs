//! Calibrated reflectance from OTDR traces: peak detection, resolution and
//! noise-floor estimates, and broadband reflectance maps.

mod calibration;
mod map;
mod peaks;

pub use crate::trace::distance_from_delay;
pub use calibration::{estimate_reflectance, reflectance_from_rate, CalibrationData, Level, APPROXIMATE_QE};
pub use map::{analyze_trace, build_reflectance_map, ReflectanceMap, WavelengthAnalysis};
pub use peaks::{
    bin_levels_db, calibrate_peaks, detect_peaks, estimate_background_rate, estimate_noise_floor, estimate_resolution,
    label_peaks, running_median, Peak, PeakConfig,
};
