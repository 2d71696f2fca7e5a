use serde::Serialize;

use super::calibration::{reflectance_from_rate, CalibrationData, Level};
use crate::error::{Error, Result};
use crate::simulator::DEFAULT_PULSE_FWHM_S;
use crate::trace::OtdrTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakConfig {
    /// Minimum excess over baseline in Poisson standard deviations.
    pub snr_threshold: f64,
    /// Maxima closer than this (in time) are one peak.
    pub merge_radius_s: f64,
    /// Running-median window for the baseline, in bins (odd).
    pub baseline_window: usize,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            snr_threshold: 5.0,
            merge_radius_s: DEFAULT_PULSE_FWHM_S,
            baseline_window: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peak {
    pub distance_m: f64,
    /// Integration window, half-open bin range.
    pub bin_range: (usize, usize),
    /// Baseline-subtracted counts over the window.
    pub amplitude_counts: f64,
    pub reflectance_db: Option<Level>,
    pub fwhm_m: f64,
    /// Excess of the maximum bin over baseline in variance-stabilised units.
    pub snr_linear: f64,
    /// Window not clipped by a neighbouring peak.
    pub isolated: bool,
    pub label: Option<String>,
}

/// Running median with the window truncated at the trace edges.
pub fn running_median(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut buf = Vec::with_capacity(window);
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            buf.clear();
            buf.extend_from_slice(&x[lo..hi]);
            median_in_place(&mut buf)
        })
        .collect()
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let m = *m;
    if n % 2 == 1 {
        m
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + m)
    }
}

/// Anscombe transform difference: ≈ (x − b)/√b standard deviations for
/// Poisson counts, well behaved near zero.
fn poisson_z(x: f64, baseline: f64) -> f64 {
    2.0 * ((x + 0.375).sqrt() - (baseline.max(0.0) + 0.375).sqrt())
}

/// Fractional bin coordinate (bin centres at b + 0.5) where `net` falls
/// below `level`, walking from `peak` in direction `step`.
fn half_crossing(net: &[f64], peak: usize, level: f64, step: isize) -> f64 {
    let mut i = peak as isize;
    loop {
        let j = i + step;
        if j < 0 || j >= net.len() as isize {
            return i as f64 + 0.5 + 0.5 * step as f64;
        }
        let (a, b) = (net[i as usize], net[j as usize]);
        if b <= level {
            let frac = if a == b {
                0.0
            } else {
                ((a - level) / (a - b)).clamp(0.0, 1.0)
            };
            return i as f64 + 0.5 + frac * step as f64;
        }
        i = j;
    }
}

/// Local maxima standing `snr_threshold` above a running-median baseline,
/// merged within the merge radius, sorted by distance.
///
/// Each peak is integrated over its FWHM widened by one FWHM on both sides
/// (clipped halfway to neighbouring peaks); a FWHM-only window would miss
/// about a quarter of a Gaussian pulse.
pub fn detect_peaks(trace: &OtdrTrace, config: &PeakConfig) -> Vec<Peak> {
    let x = &trace.counts;
    let n = x.len();
    let baseline = running_median(x, config.baseline_window.max(1) | 1);
    let net: Vec<f64> = x.iter().zip(&baseline).map(|(a, b)| a - b).collect();

    // Compare counts per unit time so the short last bin does not fake a
    // maximum next to it. Trace edges never count as maxima: a rising edge
    // there is a truncated slope, not a reflection.
    let period_bins = 1.0 / (trace.meta.f_pulse_hz * trace.meta.bin_width_s);
    let last_fraction = (period_bins - (n - 1) as f64).clamp(1e-9, 1.0);
    let density = |i: usize| if i + 1 == n { x[i] / last_fraction } else { x[i] };
    let mut candidates: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| {
            density(i) > density(i - 1)
                && density(i) >= density(i + 1)
                && poisson_z(x[i], baseline[i]) >= config.snr_threshold
        })
        .collect();

    // half-maximum extent of a group of maxima spanning [first, last]
    let extent = |first: usize, last: usize, best: usize| {
        let level = 0.5 * net[best];
        (
            half_crossing(&net, first, level, -1),
            half_crossing(&net, last, level, 1),
        )
    };
    let merge_bins = config.merge_radius_s / trace.meta.bin_width_s;
    // (first, last, highest) maxima of each merged group
    let mut groups: Vec<(usize, usize, usize)> = Vec::new();
    candidates.sort_unstable();
    for c in candidates {
        if let Some(g) = groups.last_mut() {
            let (_, g_hi) = extent(g.0, g.1, g.2);
            let (c_lo, _) = extent(c, c, c);
            if (c - g.1) as f64 <= merge_bins || c_lo <= g_hi {
                g.1 = c;
                if net[c] > net[g.2] {
                    g.2 = c;
                }
                continue;
            }
        }
        groups.push((c, c, c));
    }

    let map = trace.distance_map();
    let extents: Vec<(f64, f64)> = groups.iter().map(|&(a, b, m)| extent(a, b, m)).collect();
    let mut peaks = Vec::with_capacity(groups.len());
    for (k, &(_, _, i)) in groups.iter().enumerate() {
        let (lo, hi) = extents[k];
        let width = hi - lo;
        let mut w_lo = lo - width;
        let mut w_hi = hi + width;
        let mut isolated = true;
        if k > 0 {
            let mid = 0.5 * (extents[k - 1].1 + lo);
            if mid > w_lo {
                w_lo = mid;
                isolated = false;
            }
        }
        if k + 1 < groups.len() {
            let mid = 0.5 * (hi + extents[k + 1].0);
            if mid < w_hi {
                w_hi = mid;
                isolated = false;
            }
        }
        let b0 = w_lo.floor().max(0.0) as usize;
        let b1 = (w_hi.ceil().max(0.0) as usize).min(n).max(b0 + 1);
        let amplitude: f64 = net[b0..b1].iter().sum();
        let weight: f64 = net[b0..b1].iter().map(|v| v.max(0.0)).sum();
        let centroid = if weight > 0.0 {
            (b0..b1).map(|b| net[b].max(0.0) * (b as f64 + 0.5)).sum::<f64>() / weight
        } else {
            i as f64 + 0.5
        };
        peaks.push(Peak {
            distance_m: map.distance_at(centroid),
            bin_range: (b0, b1),
            amplitude_counts: amplitude,
            reflectance_db: None,
            fwhm_m: map.distance_at(width),
            snr_linear: poisson_z(x[i], baseline[i]),
            isolated,
            label: None,
        });
    }
    peaks
}

/// Observed total count rate and the matching dead-time correction factor.
fn dead_time_factor(trace: &OtdrTrace, cal: &CalibrationData) -> Result<f64> {
    let observed = trace.total_counts() / trace.meta.duration_s;
    cal.dead_time_factor(observed)
}

/// Fills `reflectance_db` from the integrated amplitudes.
pub fn calibrate_peaks(peaks: &mut [Peak], trace: &OtdrTrace, cal: &CalibrationData) -> Result<()> {
    let factor = dead_time_factor(trace, cal)?;
    for p in peaks.iter_mut() {
        let rate = p.amplitude_counts.max(0.0) / trace.meta.duration_s * factor;
        p.reflectance_db = Some(reflectance_from_rate(rate, cal)?);
    }
    Ok(())
}

/// Names each peak after the nearest expected position within `tolerance_m`.
pub fn label_peaks(peaks: &mut [Peak], expected: &[(String, f64)], tolerance_m: f64) {
    for p in peaks.iter_mut() {
        p.label = expected
            .iter()
            .map(|(l, d)| (l, (d - p.distance_m).abs()))
            .filter(|(_, e)| *e <= tolerance_m)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(l, _)| l.clone());
    }
}

/// FWHM in meters of the narrowest isolated peak.
pub fn estimate_resolution(trace: &OtdrTrace, config: &PeakConfig) -> Result<f64> {
    detect_peaks(trace, config)
        .iter()
        .filter(|p| p.isolated)
        .map(|p| p.fwhm_m)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::validation("trace has no isolated peak"))
}

fn peak_free_bins(trace: &OtdrTrace, peaks: &[Peak]) -> Vec<f64> {
    let mut mask = vec![true; trace.len()];
    for p in peaks {
        mask[p.bin_range.0..p.bin_range.1].iter_mut().for_each(|m| *m = false);
    }
    trace
        .counts
        .iter()
        .zip(mask)
        .filter_map(|(c, m)| m.then_some(*c))
        .collect()
}

/// Noise-equivalent reflectance: the median per-bin rate outside peaks,
/// converted like a peak. Zero median is "below floor".
pub fn estimate_noise_floor(trace: &OtdrTrace, peaks: &[Peak], cal: &CalibrationData) -> Result<Level> {
    let mut free = peak_free_bins(trace, peaks);
    if free.is_empty() {
        return Err(Error::validation("trace has no peak-free bins"));
    }
    let median = median_in_place(&mut free);
    let rate = median / trace.meta.duration_s * dead_time_factor(trace, cal)?;
    reflectance_from_rate(rate, cal)
}

/// Total background rate (cps) from the dominant flat level outside peaks:
/// bins within 5σ of the peak-free median, averaged and scaled to a full
/// period. Dark counts dominate this level when the fiber is short.
pub fn estimate_background_rate(trace: &OtdrTrace, peaks: &[Peak], cal: &CalibrationData) -> Result<f64> {
    let mut free = peak_free_bins(trace, peaks);
    if free.is_empty() {
        return Err(Error::validation("trace has no peak-free bins"));
    }
    let median = median_in_place(&mut free);
    let band = 5.0 * (median + 1.0).sqrt();
    let (sum, count) = free
        .iter()
        .filter(|&&c| (c - median).abs() <= band)
        .fold((0.0, 0usize), |(s, k), &c| (s + c, k + 1));
    let per_bin = sum / count as f64;
    let period_bins = 1.0 / (trace.meta.f_pulse_hz * trace.meta.bin_width_s);
    Ok(per_bin * period_bins / trace.meta.duration_s * dead_time_factor(trace, cal)?)
}

/// Per-bin rate in dB relative to the reference, NaN for empty bins.
pub fn bin_levels_db(trace: &OtdrTrace, cal: &CalibrationData) -> Result<Vec<f64>> {
    let factor = dead_time_factor(trace, cal)?;
    trace
        .counts
        .iter()
        .map(
            |&c| match reflectance_from_rate(c / trace.meta.duration_s * factor, cal)? {
                Level::Db(v) => Ok(v),
                Level::BelowFloor => Ok(f64::NAN),
            },
        )
        .collect()
}
