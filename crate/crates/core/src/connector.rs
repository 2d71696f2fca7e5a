//! Damaged-layer Fabry-Perot model of a PC connector and its fit to a
//! measured reflectance spectrum.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Level;
use crate::error::{Error, Result};
use crate::spectral::{Spectrum, Unit};

pub const DEFAULT_N_CORE: f64 = 1.454;
/// Fit box for the damaged-layer index (open interval, kept off the ends).
pub const N_D_BOUNDS: (f64, f64) = (1.46, 1.6);
/// Fit box for the layer thickness in μm; h = 0 reflects nothing, so the
/// lower edge is kept just above zero.
pub const H_UM_BOUNDS: (f64, f64) = (0.0, 0.11);
const H_UM_FLOOR: f64 = 1e-6;
const GRID_STARTS: usize = 10;
const MAX_ITERATIONS: usize = 200;
/// RMS residual above which a fit is reported as failed.
pub const FAILURE_RMS_DB: f64 = 10.0;

/// Round-trip phase convention for the cavity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// 4π·n_d·2h/λ, as the connector literature this model follows writes it.
    #[default]
    DoubledThickness,
    /// 4π·n_d·h/λ, the usual round-trip phase of a layer of thickness h.
    Standard,
}

impl PhaseConvention {
    fn thickness_factor(self) -> f64 {
        match self {
            PhaseConvention::DoubledThickness => 2.0,
            PhaseConvention::Standard => 1.0,
        }
    }
}

/// ((n_core − n_d)/(n_core + n_d))².
pub fn fresnel_r0(n_core: f64, n_d: f64) -> Result<f64> {
    if !(n_core > 1.0 && n_d > 1.0) || n_core.is_infinite() || n_d.is_infinite() {
        return Err(Error::domain(format!(
            "refractive indices must exceed 1, got {n_core} and {n_d}"
        )));
    }
    Ok(((n_core - n_d) / (n_core + n_d)).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectorModel {
    pub n_core: f64,
    pub n_d: f64,
    pub h_um: f64,
    #[serde(default)]
    pub convention: PhaseConvention,
}

impl ConnectorModel {
    pub fn new(n_core: f64, n_d: f64, h_um: f64) -> Result<Self> {
        if !(1.4..=1.5).contains(&n_core) {
            return Err(Error::domain(format!("core index {n_core} outside [1.4, 1.5]")));
        }
        fresnel_r0(n_core, n_d)?;
        if !(h_um >= 0.0) || h_um.is_infinite() {
            return Err(Error::domain(format!("layer thickness must be ≥ 0, got {h_um} μm")));
        }
        Ok(Self {
            n_core,
            n_d,
            h_um,
            convention: PhaseConvention::default(),
        })
    }

    pub fn with_convention(self, convention: PhaseConvention) -> Self {
        Self { convention, ..self }
    }

    /// Cavity phase at `wavelength_nm`.
    pub fn phase(&self, wavelength_nm: f64) -> f64 {
        let h_nm = self.h_um * 1e3;
        4.0 * PI * self.n_d * self.convention.thickness_factor() * h_nm / wavelength_nm
    }

    /// Reflectance in dB; −inf when there is no cavity or no index step.
    pub fn reflectance_db(&self, wavelength_nm: f64, exact: bool) -> Result<f64> {
        if !(wavelength_nm > 0.0) || wavelength_nm.is_infinite() {
            return Err(Error::domain(format!(
                "wavelength must be positive, got {wavelength_nm}"
            )));
        }
        let r0 = fresnel_r0(self.n_core, self.n_d)?;
        let x = self.phase(wavelength_nm);
        // 2R₀(1 − cos x) = 4R₀ sin²(x/2)
        let linear = if exact {
            4.0 * r0 * (0.5 * x).sin().powi(2)
        } else {
            r0 * x * x
        };
        Ok(10.0 * linear.log10())
    }
}

pub fn connector_reflectance_db(model: &ConnectorModel, wavelength_nm: f64, exact: bool) -> Result<Level> {
    let r = model.reflectance_db(wavelength_nm, exact)?;
    Ok(if r == f64::NEG_INFINITY {
        Level::BelowFloor
    } else {
        Level::Db(r)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub model: ConnectorModel,
    pub residual_rms_db: f64,
    /// Parameter covariance [[h, n_d]] from the final Jacobian, scaled by
    /// the residual variance. `None` when singular.
    pub covariance: Option<[[f64; 2]; 2]>,
    /// Correlation between h and n_d; near ±1 means only a combination of
    /// them is determined by the data.
    pub correlation: Option<f64>,
    /// The optimum sits on the edge of the fit box.
    pub at_bound: bool,
    pub used_exact_formula: bool,
    pub starts: usize,
    pub converged_starts: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub n_core: f64,
    pub exact: bool,
    pub convention: PhaseConvention,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_core: DEFAULT_N_CORE,
            exact: true,
            convention: PhaseConvention::default(),
        }
    }
}

/// Maps the unit square onto the (h, n_d) box.
#[derive(Clone, Copy)]
struct Box2 {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Box2 {
    fn fit_box() -> Self {
        Self {
            lo: [H_UM_FLOOR, N_D_BOUNDS.0],
            hi: [H_UM_BOUNDS.1, N_D_BOUNDS.1],
        }
    }

    fn to_physical(self, u: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|i| self.lo[i] + u[i] * (self.hi[i] - self.lo[i]))
    }

    fn span(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }
}

struct Problem<'a> {
    wavelengths: &'a [f64],
    data: &'a [f64],
    opts: FitOptions,
    bounds: Box2,
}

impl Problem<'_> {
    fn model(&self, u: [f64; 2]) -> ConnectorModel {
        let [h, n_d] = self.bounds.to_physical(u);
        ConnectorModel {
            n_core: self.opts.n_core,
            n_d,
            h_um: h,
            convention: self.opts.convention,
        }
    }

    fn residuals(&self, u: [f64; 2]) -> Option<Vec<f64>> {
        let m = self.model(u);
        let r: Vec<f64> = self
            .wavelengths
            .iter()
            .zip(self.data)
            .map(|(&wl, &d)| m.reflectance_db(wl, self.opts.exact).map(|v| v - d).unwrap_or(f64::NAN))
            .collect();
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn cost(r: &[f64]) -> f64 {
        r.iter().map(|v| v * v).sum()
    }

    /// Forward/backward difference Jacobian that stays inside the box.
    fn jacobian(&self, u: [f64; 2], r: &[f64]) -> Option<Vec<[f64; 2]>> {
        let mut jac = vec![[0.0; 2]; r.len()];
        for k in 0..2 {
            let step = 1e-7;
            let mut v = u;
            let sign = if u[k] + step <= 1.0 { 1.0 } else { -1.0 };
            v[k] += sign * step;
            let rv = self.residuals(v)?;
            for (row, (a, b)) in jac.iter_mut().zip(rv.iter().zip(r)) {
                row[k] = (a - b) / (sign * step);
            }
        }
        Some(jac)
    }

    /// Projected Levenberg-Marquardt from `u0`; returns (u, cost, converged).
    fn solve(&self, u0: [f64; 2]) -> Option<([f64; 2], f64, bool)> {
        let mut u = u0;
        let mut r = self.residuals(u)?;
        let mut cost = Self::cost(&r);
        let mut lambda = 1e-3;
        for _ in 0..MAX_ITERATIONS {
            let jac = self.jacobian(u, &r)?;
            let mut jtj = [[0.0; 2]; 2];
            let mut jtr = [0.0; 2];
            for (row, ri) in jac.iter().zip(&r) {
                for a in 0..2 {
                    jtr[a] += row[a] * ri;
                    for b in 0..2 {
                        jtj[a][b] += row[a] * row[b];
                    }
                }
            }
            let mut improved = false;
            while lambda < 1e12 {
                let a = [
                    [jtj[0][0] * (1.0 + lambda) + 1e-30, jtj[0][1]],
                    [jtj[1][0], jtj[1][1] * (1.0 + lambda) + 1e-30],
                ];
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                if det == 0.0 || !det.is_finite() {
                    lambda *= 4.0;
                    continue;
                }
                let delta = [
                    -(a[1][1] * jtr[0] - a[0][1] * jtr[1]) / det,
                    -(a[0][0] * jtr[1] - a[1][0] * jtr[0]) / det,
                ];
                let trial = [0, 1].map(|i| (u[i] + delta[i]).clamp(0.0, 1.0));
                let moved = (trial[0] - u[0]).abs() + (trial[1] - u[1]).abs();
                if moved < 1e-15 {
                    return Some((u, cost, true));
                }
                if let Some(rt) = self.residuals(trial) {
                    let ct = Self::cost(&rt);
                    if ct < cost {
                        let rel = (cost - ct) / cost.max(1e-300);
                        u = trial;
                        r = rt;
                        cost = ct;
                        lambda = (lambda / 3.0).max(1e-12);
                        improved = true;
                        if rel < 1e-14 || cost < 1e-28 {
                            return Some((u, cost, true));
                        }
                        break;
                    }
                }
                lambda *= 4.0;
            }
            if !improved {
                return Some((u, cost, true));
            }
        }
        Some((u, cost, false))
    }

    fn covariance(&self, u: [f64; 2], cost: f64) -> Option<[[f64; 2]; 2]> {
        let r = self.residuals(u)?;
        let jac = self.jacobian(u, &r)?;
        let mut jtj = [[0.0; 2]; 2];
        for row in &jac {
            for a in 0..2 {
                for b in 0..2 {
                    // derivative with respect to physical parameters
                    jtj[a][b] += row[a] / self.bounds.span(a) * row[b] / self.bounds.span(b);
                }
            }
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        let dof = (r.len() as f64 - 2.0).max(1.0);
        let s2 = cost / dof;
        if !(det.abs() > 1e-300) {
            return None;
        }
        let inv = [[jtj[1][1] / det, -jtj[0][1] / det], [-jtj[1][0] / det, jtj[0][0] / det]];
        Some(inv.map(|row| row.map(|v| v * s2)))
    }
}

/// Bounded least squares of the model (in dB) against `reflectance`, from a
/// 10×10 grid of starting points. Ties between starts go to the lower h,
/// then the lower n_d, so the result is deterministic.
pub fn fit_connector(reflectance: &Spectrum, opts: FitOptions) -> Result<FitResult> {
    if reflectance.unit() != Unit::Db {
        return Err(Error::validation("connector fit needs a dB spectrum"));
    }
    if reflectance.grid().len() < 5 {
        return Err(Error::validation(format!(
            "connector fit needs at least 5 points, got {}",
            reflectance.grid().len()
        )));
    }
    if reflectance.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("connector fit needs finite dB values"));
    }
    ConnectorModel::new(opts.n_core, N_D_BOUNDS.0, 0.0)?;
    let problem = Problem {
        wavelengths: reflectance.grid().points(),
        data: reflectance.values(),
        opts,
        bounds: Box2::fit_box(),
    };
    let starts: Vec<[f64; 2]> = (0..GRID_STARTS)
        .flat_map(|i| (0..GRID_STARTS).map(move |j| [(i as f64 + 0.5) / 10.0, (j as f64 + 0.5) / 10.0]))
        .collect();
    let results: Vec<([f64; 2], f64, bool)> = starts.par_iter().filter_map(|&s| problem.solve(s)).collect();
    let converged = results.iter().filter(|r| r.2).count();
    let best = results
        .iter()
        .copied()
        .reduce(|a, b| {
            let tie = (a.1 - b.1).abs() <= 1e-12 * a.1.max(b.1).max(1e-300);
            let b_better = if tie {
                (b.0[0], b.0[1]) < (a.0[0], a.0[1])
            } else {
                b.1 < a.1
            };
            if b_better {
                b
            } else {
                a
            }
        })
        .ok_or_else(|| Error::Numerical("connector fit: every start failed to evaluate".into()))?;

    let (u, cost, _) = best;
    let n = problem.wavelengths.len() as f64;
    let rms = (cost / n).sqrt();
    if !(rms <= FAILURE_RMS_DB) {
        return Err(Error::Numerical(format!(
            "connector fit failed: best RMS residual {rms:.3} dB at h = {:.4} μm, n_d = {:.4} ({converged}/{} starts converged)",
            problem.model(u).h_um,
            problem.model(u).n_d,
            starts.len()
        )));
    }
    let covariance = problem.covariance(u, cost);
    let correlation = covariance
        .map(|c| c[0][1] / (c[0][0] * c[1][1]).sqrt())
        .filter(|v| v.is_finite());
    let edge = 1e-6;
    Ok(FitResult {
        model: problem.model(u),
        residual_rms_db: rms,
        covariance,
        correlation,
        at_bound: u.iter().any(|&x| x <= edge || x >= 1.0 - edge),
        used_exact_formula: opts.exact,
        starts: starts.len(),
        converged_starts: converged,
    })
}

/// `wavelength_nm,measured_db,model_db,residual_db`.
pub fn write_model_vs_data_csv(reflectance: &Spectrum, fit: &FitResult, mut w: impl Write) -> Result<()> {
    let io = |e| Error::io("model-vs-data", e);
    writeln!(w, "wavelength_nm,measured_db,model_db,residual_db").map_err(io)?;
    for (wl, measured) in reflectance.iter() {
        let model = fit.model.reflectance_db(wl, fit.used_exact_formula)?;
        writeln!(w, "{wl},{measured},{model},{}", model - measured).map_err(io)?;
    }
    Ok(())
}

pub fn save_model_vs_data_csv(reflectance: &Spectrum, fit: &FitResult, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_model_vs_data_csv(reflectance, fit, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
