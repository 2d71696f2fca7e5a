use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use super::{AcquisitionConfig, FiberLayout, SpadModel};
use crate::error::Result;
use crate::spectral::db_to_linear;
use crate::trace::delay_from_distance;

/// Gaussian tails beyond this many σ are dropped.
const TAIL_SIGMAS: f64 = 9.0;

/// Expected count rates (cps) per time bin, before dead-time losses.
#[derive(Debug, Clone, PartialEq)]
pub struct BinRates {
    /// Reflections and backscatter; scales linearly with the trace VOA.
    pub reflected: Vec<f64>,
    pub dark: Vec<f64>,
}

impl BinRates {
    pub fn total(&self) -> Vec<f64> {
        self.reflected.iter().zip(&self.dark).map(|(r, d)| r + d).collect()
    }

    pub fn peak(&self) -> f64 {
        self.reflected
            .iter()
            .zip(&self.dark)
            .map(|(r, d)| r + d)
            .fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.dark.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dark.is_empty()
    }
}

fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// ∫Φ(x)dx.
fn phi_integral(x: f64) -> f64 {
    x * phi(x) + (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Bin layout of one pulse period; the last bin may be shorter.
struct Bins {
    n: usize,
    width: f64,
    period: f64,
}

impl Bins {
    fn span(&self, b: usize) -> (f64, f64) {
        let start = b as f64 * self.width;
        (start, ((b + 1) as f64 * self.width).min(self.period))
    }

    /// Bins overlapping [lo, hi) ∩ [0, period).
    fn overlapping(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let lo = lo.max(0.0);
        let hi = hi.min(self.period);
        if lo >= hi {
            return 0..0;
        }
        let first = ((lo / self.width).floor() as usize).min(self.n - 1);
        let last = ((hi / self.width).ceil() as usize).min(self.n);
        first..last
    }

    /// Adds `weight` spread as a Gaussian of width `sigma` centred at `center`;
    /// mass falling outside the period wraps around.
    fn add_pulse(&self, out: &mut [f64], center: f64, sigma: f64, weight: f64) {
        if sigma == 0.0 {
            let t = center.rem_euclid(self.period);
            let b = ((t / self.width).floor() as usize).min(self.n - 1);
            out[b] += weight;
            return;
        }
        for shift in [-self.period, 0.0, self.period] {
            let c = center + shift;
            for b in self.overlapping(c - TAIL_SIGMAS * sigma, c + TAIL_SIGMAS * sigma) {
                let (a, e) = self.span(b);
                out[b] += weight * (phi((e - c) / sigma) - phi((a - c) / sigma));
            }
        }
    }

    /// Adds a constant `density` (per second) over [t0, t1), smeared by the
    /// Gaussian pulse shape.
    fn add_box(&self, out: &mut [f64], t0: f64, t1: f64, sigma: f64, density: f64) {
        if t1 <= t0 || density == 0.0 {
            return;
        }
        for shift in [-self.period, 0.0, self.period] {
            let (s0, s1) = (t0 + shift, t1 + shift);
            let reach = TAIL_SIGMAS * sigma;
            for b in self.overlapping(s0 - reach, s1 + reach) {
                let (a, e) = self.span(b);
                let mass = if sigma == 0.0 {
                    (e.min(s1) - a.max(s0)).max(0.0)
                } else {
                    // ∫_a^e [Φ((t−s0)/σ) − Φ((t−s1)/σ)] dt
                    sigma
                        * (phi_integral((e - s0) / sigma)
                            - phi_integral((a - s0) / sigma)
                            - phi_integral((e - s1) / sigma)
                            + phi_integral((a - s1) / sigma))
                };
                out[b] += density * mass.max(0.0);
            }
        }
    }
}

/// Per-bin expected count rates at one wavelength.
///
/// Each reflector contributes f·η·μ·10^((att_out + 2·path_loss + R + T₁₂ +
/// T₂₃)/10) spread over bins by the Gaussian pulse. Backscatter contributes
/// its per-bin reflectance over the whole fiber, and dark counts add
/// dark_rate·Δt·f to each bin. With a gate, bins starting outside it are zero.
pub fn expected_bin_rates(
    layout: &FiberLayout,
    spad: &SpadModel,
    config: &AcquisitionConfig,
    wavelength_nm: f64,
) -> Result<BinRates> {
    config.validate()?;
    layout.check_range(config.f_pulse_hz)?;
    let bins = Bins {
        n: config.n_bins(),
        width: config.bin_width_s,
        period: config.period_s(),
    };
    let sigma = config.pulse_fwhm_s / (2.0 * SQRT_2 * std::f64::consts::LN_2.sqrt());
    let eta = spad.efficiency(wavelength_nm)?;
    let common_db = config.att_out_db
        + config.circulator_t12.sample(wavelength_nm)?
        + config.circulator_t23.sample(wavelength_nm)?;
    let scale = config.f_pulse_hz * eta * config.input_photons_per_pulse * db_to_linear(common_db)?;
    let n_g = layout.group_index();

    let mut reflected = vec![0.0; bins.n];
    if scale > 0.0 {
        for c in layout.components() {
            let r_db = c.reflectance.sample(wavelength_nm)?;
            let loss = layout.path_loss_db(c.position_m, wavelength_nm)?;
            let w = scale * db_to_linear(r_db + 2.0 * loss)?;
            if w > 0.0 {
                bins.add_pulse(&mut reflected, delay_from_distance(c.position_m, n_g), sigma, w);
            }
        }

        let ray_db = layout.rayleigh().sample(wavelength_nm)?;
        if ray_db > f64::NEG_INFINITY {
            // fiber segments of constant upstream loss
            let mut cuts: Vec<f64> = layout
                .components()
                .iter()
                .map(|c| c.position_m)
                .filter(|&p| p > 0.0 && p < layout.total_length_m())
                .collect();
            cuts.dedup();
            cuts.insert(0, 0.0);
            cuts.push(layout.total_length_m());
            for seg in cuts.windows(2) {
                let loss = layout.path_loss_db(seg[1], wavelength_nm)?;
                let density = scale * db_to_linear(ray_db + 2.0 * loss)? / bins.width;
                bins.add_box(
                    &mut reflected,
                    delay_from_distance(seg[0], n_g),
                    delay_from_distance(seg[1], n_g),
                    sigma,
                    density,
                );
            }
        }
    }

    let mut dark: Vec<f64> = (0..bins.n)
        .map(|b| {
            let (a, e) = bins.span(b);
            spad.dark_rate_cps * (e - a) * config.f_pulse_hz
        })
        .collect();

    if let Some(gate) = spad.gate {
        for b in 0..bins.n {
            if !gate.contains(bins.span(b).0) {
                reflected[b] = 0.0;
                dark[b] = 0.0;
            }
        }
    }
    Ok(BinRates { reflected, dark })
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn spad(eta: f64, dark: f64) -> SpadModel {
        let qe = Spectrum::constant(eta, Unit::Fraction, SpectrumKind::Efficiency).unwrap();
        SpadModel::new(qe, 0.0, dark, None).unwrap()
    }

    fn lossless() -> AcquisitionConfig {
        AcquisitionConfig {
            circulator_t12: flat_db(0.0, SpectrumKind::Transmittance).unwrap(),
            circulator_t23: flat_db(0.0, SpectrumKind::Transmittance).unwrap(),
            ..AcquisitionConfig::default()
        }
    }

    #[test]
    fn gaussian_integral_identity() {
        // d/dx ∫Φ = Φ
        let h = 1e-6;
        for x in [-3.0, -0.4, 0.0, 1.3] {
            let d = (phi_integral(x + h) - phi_integral(x - h)) / (2.0 * h);
            assert!((d - phi(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_dark_free_layout_is_all_zero() {
        let layout = FiberLayout::standard(vec![], 10.0).unwrap().without_backscatter();
        let r = expected_bin_rates(&layout, &spad(0.1, 0.0), &lossless(), 1550.0).unwrap();
        assert_eq!(r.len(), 13334);
        assert!(r.total().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dark_counts_sum_to_dark_rate() {
        let layout = FiberLayout::standard(vec![], 0.0).unwrap();
        let r = expected_bin_rates(&layout, &spad(0.1, 1700.0), &lossless(), 1550.0).unwrap();
        let total: f64 = r.dark.iter().sum();
        assert!((total - 1700.0).abs() < 1e-8, "{total}");
        assert!((r.dark[0] - 1700.0 * 150e-12 * 5e5).abs() < 1e-15);
    }

    #[test]
    fn reflector_lands_in_expected_bin_with_full_mass() {
        let c = FiberComponent::reflector("c", 9.0, -50.0).unwrap();
        let layout = FiberLayout::standard(vec![c], 10.0).unwrap().without_backscatter();
        let cfg = lossless();
        let r = expected_bin_rates(&layout, &spad(0.1, 0.0), &cfg, 1550.0).unwrap();
        let (argmax, _) = r
            .reflected
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(argmax, 587);
        let total: f64 = r.reflected.iter().sum();
        let expected = 5e5 * 0.1 * cfg.input_photons_per_pulse * 1e-5;
        assert!((total / expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn delta_pulse_occupies_one_bin() {
        let c = FiberComponent::reflector("c", 9.0, -50.0).unwrap();
        let layout = FiberLayout::standard(vec![c], 10.0).unwrap().without_backscatter();
        let cfg = AcquisitionConfig {
            pulse_fwhm_s: 0.0,
            ..lossless()
        };
        let r = expected_bin_rates(&layout, &spad(0.1, 0.0), &cfg, 1550.0).unwrap();
        assert_eq!(r.reflected.iter().filter(|&&x| x > 0.0).count(), 1);
        assert!(r.reflected[587] > 0.0);
    }

    #[test]
    fn pulse_at_origin_wraps_into_last_bins() {
        let c = FiberComponent::reflector("c", 0.0, -30.0).unwrap();
        let layout = FiberLayout::standard(vec![c], 1.0).unwrap().without_backscatter();
        let r = expected_bin_rates(&layout, &spad(0.1, 0.0), &lossless(), 1550.0).unwrap();
        let n = r.len();
        assert!(r.reflected[n - 1] > 0.0);
        let total: f64 = r.reflected.iter().sum();
        let expected = 5e5 * 0.1 * lossless().input_photons_per_pulse * 1e-3;
        assert!((total / expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn backscatter_per_bin_matches_coefficient_inside_fiber() {
        let layout = FiberLayout::standard(vec![], 10.0).unwrap();
        let cfg = lossless();
        let r = expected_bin_rates(&layout, &spad(0.1, 0.0), &cfg, 1550.0).unwrap();
        let per_bin = 5e5 * 0.1 * cfg.input_photons_per_pulse * 1e-8;
        assert!((r.reflected[300] / per_bin - 1.0).abs() < 1e-9);
        assert_eq!(r.reflected[2000], 0.0);
    }

    #[test]
    fn gate_blanks_outside_window() {
        let layout = FiberLayout::standard(vec![], 0.0).unwrap();
        let mut s = spad(0.1, 1700.0);
        s.gate = Some(Gate {
            delay_s: 1e-7,
            width_s: 1e-8,
        });
        let r = expected_bin_rates(&layout, &s, &lossless(), 1550.0).unwrap();
        let live = r.dark.iter().filter(|&&d| d > 0.0).count();
        assert!((66..=68).contains(&live), "{live}");
    }

    #[test]
    fn downstream_components_see_double_pass_loss() {
        let splice = FiberComponent::new(
            "splice",
            1.0,
            flat_db(f64::NEG_INFINITY, SpectrumKind::Reflectance).unwrap(),
            flat_db(-1.5, SpectrumKind::Transmittance).unwrap(),
        )
        .unwrap();
        let end = FiberComponent::reflector("end", 9.0, -50.0).unwrap();
        let with = FiberLayout::standard(vec![splice, end.clone()], 10.0)
            .unwrap()
            .without_backscatter();
        let without = FiberLayout::standard(vec![end], 10.0).unwrap().without_backscatter();
        let s = spad(0.1, 0.0);
        let a: f64 = expected_bin_rates(&with, &s, &lossless(), 1550.0)
            .unwrap()
            .reflected
            .iter()
            .sum();
        let b: f64 = expected_bin_rates(&without, &s, &lossless(), 1550.0)
            .unwrap()
            .reflected
            .iter()
            .sum();
        assert!((10.0 * (a / b).log10() + 3.0).abs() < 1e-9);
    }
}
