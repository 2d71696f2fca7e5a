//! Event-driven photon counting. Reflected photons are Bernoulli trials per
//! (pulse, bin); dark counts are a Poisson process in continuous time. All
//! events are merged in time order and passed through a non-paralyzable
//! dead-time filter. Timestamps are integer femtoseconds.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::rates::BinRates;
use super::{AcquisitionConfig, SpadModel};
use crate::error::{Error, Result};

const FS_PER_S: f64 = 1e15;
/// Pulses processed per batch; bounds memory for long acquisitions.
const PULSES_PER_CHUNK: u64 = 1 << 18;

/// Failures before the first success of Bernoulli(p) trials, by inversion.
fn geometric(p: f64, rng: &mut impl Rng) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let g = (u.ln() / (-p).ln_1p()).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

pub(super) fn acquire(
    rates: &BinRates,
    spad: &SpadModel,
    config: &AcquisitionConfig,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let n = rates.len();
    let period_fs = (FS_PER_S / config.f_pulse_hz).round() as u64;
    let bin_fs = (config.bin_width_s * FS_PER_S).round() as u64;
    if period_fs == 0 || bin_fs == 0 {
        return Err(Error::validation("pulse period and bin width must be at least 1 fs"));
    }
    let dead_fs = (spad.dead_time_s * FS_PER_S).round() as u64;
    let n_pulses = (config.duration_s * config.f_pulse_hz).round() as u64;
    let bin_of = |t: u64| (((t % period_fs) / bin_fs) as usize).min(n - 1);

    // (bin start, bin length, per-pulse probability, next firing pulse)
    let mut sources: Vec<(u64, u64, f64, u64)> = Vec::new();
    for (b, &r) in rates.reflected.iter().enumerate() {
        let p = r / config.f_pulse_hz;
        if p > 1.0 {
            return Err(Error::validation(format!(
                "bin {b} expects {p:.3} detections per pulse; increase attenuation"
            )));
        }
        if p > 0.0 {
            let start = (b as u64 * bin_fs).min(period_fs - 1);
            let len = bin_fs.min(period_fs - start).max(1);
            sources.push((start, len, p, 0));
        }
    }
    for s in sources.iter_mut() {
        s.3 = geometric(s.2, rng);
    }

    let dark_exp = if spad.dark_rate_cps > 0.0 {
        Some(Exp::new(spad.dark_rate_cps).map_err(|e| Error::validation(e.to_string()))?)
    } else {
        None
    };
    let mut next_dark_s = dark_exp.map(|d| d.sample(rng));

    let mut counts = vec![0u64; n];
    let mut dead_until = 0u64;
    let mut events: Vec<u64> = Vec::new();
    let mut chunk_start = 0u64;
    while chunk_start < n_pulses {
        let chunk_end = (chunk_start + PULSES_PER_CHUNK).min(n_pulses);
        events.clear();
        for (start, len, p, next) in sources.iter_mut() {
            while *next < chunk_end {
                // arrival times are continuous within the bin
                events.push(*next * period_fs + *start + rng.random_range(0..*len));
                *next = next.saturating_add(1).saturating_add(geometric(*p, rng));
            }
        }
        if let (Some(exp), Some(t)) = (dark_exp.as_ref(), next_dark_s.as_mut()) {
            let end_s = chunk_end as f64 / config.f_pulse_hz;
            while *t < end_s {
                let fs = (*t * FS_PER_S) as u64;
                let live = spad
                    .gate
                    .is_none_or(|g| g.contains(bin_of(fs) as f64 * config.bin_width_s));
                if live {
                    events.push(fs);
                }
                *t += exp.sample(rng);
            }
        }
        events.sort_unstable();
        for &t in &events {
            if t >= dead_until {
                counts[bin_of(t)] += 1;
                dead_until = t + dead_fs;
            }
        }
        chunk_start = chunk_end;
    }
    Ok(counts.into_iter().map(|c| c as f64).collect())
}
