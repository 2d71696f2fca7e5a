//! Phase-coded Trojan-horse states on a truncated Fock space.
//!
//! Eve's returned state for bit 0 is an arbitrary density matrix ρ⁰; for bit 1
//! every coherence ρ_mn picks up the phase e^{i(φ_m − φ_n)}. The square root of
//! the Uhlmann fidelity between the two obeys
//!
//! ```text
//! η = tr √(√ρ¹ ρ⁰ √ρ¹)  ≥  2·p₀ − 1  ≥  1 − 2·μ
//! ```
//!
//! with p₀ the vacuum probability and μ the mean photon number of ρ⁰. This
//! module computes η by eigendecomposition and checks both inequalities.
//!
//! Square roots of rank-deficient states are ill-conditioned: an eigenvalue of
//! 1e-17 left by rounding contributes √1e-17 ≈ 3e-9 to a trace norm. Eigenvalues
//! below [`RANK_CUTOFF`] are therefore treated as exact zeros.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const DEFAULT_DIM: usize = 8;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in [−NEGATIVE_EIGEN_TOL, 0] are clamped to zero; below that the
/// input is rejected.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-10;
pub const RANK_CUTOFF: f64 = 1e-14;
/// Minimum probability mass a state must keep below the truncation.
pub const TAIL_MASS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::validation(format!(
                "density matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dim = m.nrows();
        let mut herm_err: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                herm_err = herm_err.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if herm_err > HERMITIAN_TOL {
            return Err(Error::validation(format!(
                "matrix is not Hermitian (deviation {herm_err:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::validation(format!("trace is {tr}, expected 1")));
        }
        let (vals, _) = hermitian_eigen(&m);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_EIGEN_TOL {
            return Err(Error::validation(format!(
                "matrix is not positive semidefinite (eigenvalue {min:.3e})"
            )));
        }
        Ok(Self { m })
    }

    /// |ψ⟩⟨ψ| for a unit vector ψ.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::validation(format!("state vector has norm {norm}, expected 1")));
        }
        Self::new(psi * psi.adjoint())
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        let mut psi = CVector::zeros(dim);
        if dim == 0 {
            return Err(Error::validation("dimension must be at least 1"));
        }
        psi[0] = Complex64::new(1.0, 0.0);
        Self::from_pure(&psi)
    }

    /// Coherent state |α⟩ truncated to `dim` Fock levels and renormalised.
    /// Fails when more than [`TAIL_MASS_TOL`] of the probability lies above
    /// the truncation.
    pub fn coherent(alpha: Complex64, dim: usize) -> Result<Self> {
        Self::from_pure(&coherent_amplitudes(alpha, dim)?)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// ⟨0|ρ|0⟩.
    pub fn vacuum_probability(&self) -> f64 {
        self.m[(0, 0)].re
    }

    /// Σ m·ρ_mm.
    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.m[(n, n)].re).sum()
    }

    /// Convex combination `(1 − w)·self + w·|0⟩⟨0|`.
    pub fn mix_with_vacuum(&self, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::domain(format!("vacuum weight {w} outside [0, 1]")));
        }
        let mut m = self.m.scale(1.0 - w);
        m[(0, 0)] += Complex64::new(w, 0.0);
        Self::new(m)
    }
}

/// Truncated, renormalised coherent-state amplitudes e^{−|α|²/2} αⁿ/√n!.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Result<CVector> {
    if dim == 0 {
        return Err(Error::validation("dimension must be at least 1"));
    }
    let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    let mut psi = CVector::zeros(dim);
    for n in 0..dim {
        psi[n] = amp;
        amp = amp * alpha / ((n + 1) as f64).sqrt();
    }
    let kept = psi.norm_squared();
    if 1.0 - kept > TAIL_MASS_TOL {
        return Err(Error::validation(format!(
            "coherent state with |alpha|^2 = {} leaves {:.3e} of its probability above {dim} levels",
            alpha.norm_sqr(),
            1.0 - kept
        )));
    }
    Ok(psi.unscale(kept.sqrt()))
}

/// Per-level phases φ_m; stored relative to φ₀ so that φ₀ = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseProfile {
    phases: Vec<f64>,
}

impl PhaseProfile {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() || phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::validation("phase profile must be non-empty and finite"));
        }
        let p0 = phases[0];
        Ok(Self {
            phases: phases.into_iter().map(|p| p - p0).collect(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self { phases: vec![0.0; dim] }
    }

    /// φ_m = m·π: odd photon numbers flip sign.
    pub fn pi_profile(dim: usize) -> Self {
        Self {
            phases: (0..dim).map(|m| m as f64 * std::f64::consts::PI).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// e^{i(φ_m − φ_n)}.
    pub fn factor(&self, m: usize, n: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phases[m] - self.phases[n])
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.len() != dim {
            return Err(Error::validation(format!(
                "phase profile has {} entries for dimension {dim}",
                self.len()
            )));
        }
        Ok(())
    }
}

fn phase_coded(m: &CMatrix, phases: &PhaseProfile) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * phases.factor(i, j))
}

/// ρ¹_mn = ρ⁰_mn · e^{i(φ_m − φ_n)}.
pub fn apply_phase_code(rho0: &DensityMatrix, phases: &PhaseProfile) -> Result<DensityMatrix> {
    phases.check_dim(rho0.dim())?;
    DensityMatrix::new(phase_coded(&rho0.m, phases))
}

/// Eigenvalues (ascending order not guaranteed) and eigenvectors of the
/// Hermitian part of `m`.
fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Eigenpairs of a PSD matrix with negligible eigenvalues dropped.
fn psd_spectrum(m: &CMatrix) -> Result<Vec<(f64, CVector)>> {
    let (vals, vecs) = hermitian_eigen(m);
    let scale = vals.iter().copied().fold(1.0f64, f64::max);
    let mut kept = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        if v < -NEGATIVE_EIGEN_TOL * scale {
            return Err(Error::validation(format!(
                "negative eigenvalue {v:.3e} beyond tolerance"
            )));
        }
        if v > RANK_CUTOFF * scale {
            kept.push((v, vecs.column(k).into_owned()));
        }
    }
    Ok(kept)
}

/// Hermitian PSD square root σ with σ·σ = m.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::validation("matrix square root needs a square matrix"));
    }
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (v, vec) in psd_spectrum(m)? {
        out += (&vec * vec.adjoint()).scale(v.sqrt());
    }
    Ok(out)
}

pub fn matrix_sqrt(rho: &DensityMatrix) -> Result<CMatrix> {
    psd_sqrt(&rho.m)
}

/// Largest entrywise deviation from σ¹_mn = σ⁰_mn·e^{i(φ_m − φ_n)}.
pub fn phase_relation_deviation(sigma0: &CMatrix, sigma1: &CMatrix, phases: &PhaseProfile) -> f64 {
    let expected = phase_coded(sigma0, phases);
    (sigma1 - expected).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// η = tr √(√b·a·√b), computed as the trace norm of √a·√b restricted to
/// the supports of both states.
pub fn sqrt_fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let sa = psd_spectrum(&a.m)?;
    let sb = psd_spectrum(&b.m)?;
    let core = CMatrix::from_fn(sa.len(), sb.len(), |i, j| {
        let overlap = sa[i].1.dotc(&sb[j].1);
        overlap * (sa[i].0 * sb[j].0).sqrt()
    });
    if core.is_empty() {
        return Ok(0.0);
    }
    let svd = core.svd(false, false);
    Ok(svd.singular_values.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityResult {
    pub eta: f64,
    pub p0: f64,
    pub mu: f64,
    /// 2·p₀ − 1.
    pub bound_a8: f64,
    /// 1 − 2·μ.
    pub bound_mu: f64,
}

impl FidelityResult {
    /// η ≥ 2p₀ − 1 ≥ 1 − 2μ, each within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.eta >= self.bound_a8 - tol && self.bound_a8 >= self.bound_mu - tol
    }

    /// η − (1 − 2μ).
    pub fn gap(&self) -> f64 {
        self.eta - self.bound_mu
    }
}

/// Fidelity of ρ⁰ against its π-coded partner, with both lower bounds.
pub fn verify_a8_bound(rho0: &DensityMatrix) -> Result<FidelityResult> {
    verify_bound_with(rho0, &PhaseProfile::pi_profile(rho0.dim()))
}

/// As [`verify_a8_bound`] for an arbitrary phase profile; the bounds hold for
/// any profile.
pub fn verify_bound_with(rho0: &DensityMatrix, phases: &PhaseProfile) -> Result<FidelityResult> {
    let rho1 = apply_phase_code(rho0, phases)?;
    let eta = sqrt_fidelity(rho0, &rho1)?;
    let p0 = rho0.vacuum_probability();
    let mu = rho0.mean_photon_number();
    Ok(FidelityResult {
        eta,
        p0,
        mu,
        bound_a8: 2.0 * p0 - 1.0,
        bound_mu: 1.0 - 2.0 * mu,
    })
}

/// ξ⁰,¹ = √(1−μ)|0⟩ ± √μ|1⟩, padded with zeros to `dim` levels.
pub fn optimal_tha_states(mu: f64, dim: usize) -> Result<(CVector, CVector)> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::domain(format!("mean photon number {mu} outside [0, 1]")));
    }
    if dim < 2 {
        return Err(Error::domain(format!("truncation {dim} below 2 levels")));
    }
    let mut xi0 = CVector::zeros(dim);
    let mut xi1 = CVector::zeros(dim);
    let (c0, c1) = ((1.0 - mu).sqrt(), mu.sqrt());
    xi0[0] = Complex64::new(c0, 0.0);
    xi0[1] = Complex64::new(c1, 0.0);
    xi1[0] = Complex64::new(c0, 0.0);
    xi1[1] = Complex64::new(-c1, 0.0);
    Ok((xi0, xi1))
}

/// Hilbert–Schmidt style random state A·A†/tr with complex Gaussian A of
/// random rank, optionally mixed with vacuum so that its mean photon number
/// does not exceed `max_mu`.
pub fn random_mixed_state<R: Rng + ?Sized>(dim: usize, max_mu: Option<f64>, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::validation("dimension must be at least 1"));
    }
    let rank = rng.random_range(1..=dim);
    let a = CMatrix::from_fn(dim, rank, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut m = &a * a.adjoint();
    let tr = m.trace().re;
    m.unscale_mut(tr);
    // exact Hermitian symmetry before validation
    let m = (&m + m.adjoint()).scale(0.5);
    let rho = DensityMatrix::new(m)?;
    match max_mu {
        Some(target) if rho.mean_photon_number() > target => {
            let w = 1.0 - target / rho.mean_photon_number();
            rho.mix_with_vacuum(w)
        }
        _ => Ok(rho),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub dim: usize,
    pub trial: usize,
    pub result: FidelityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSuiteReport {
    pub seed: u64,
    pub trials_per_dim: usize,
    pub dims: Vec<usize>,
    pub tolerance: f64,
    pub violations: usize,
    /// Smallest η − (1 − 2μ) seen over all random states.
    pub min_gap: f64,
    pub records: Vec<TrialRecord>,
}

/// Per-trial RNG: stream `(dim << 32) | trial` of the master seed.
pub fn trial_rng(seed: u64, dim: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((dim as u64) << 32) | trial as u64);
    rng
}

/// Random states with μ drawn uniformly from (0, `max_mu`], checked against
/// the π-coded bound. Trials run in parallel; records come back in
/// (dim, trial) order.
pub fn run_bound_suite(
    dims: &[usize],
    trials_per_dim: usize,
    max_mu: f64,
    seed: u64,
    tolerance: f64,
) -> Result<BoundSuiteReport> {
    let jobs: Vec<(usize, usize)> = dims
        .iter()
        .flat_map(|&d| (0..trials_per_dim).map(move |t| (d, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(dim, trial)| {
            let mut rng = trial_rng(seed, dim, trial);
            let target = max_mu * (1.0 - rng.random::<f64>());
            let rho = random_mixed_state(dim, Some(target), &mut rng)?;
            Ok(TrialRecord {
                dim,
                trial,
                result: verify_a8_bound(&rho)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = records.iter().filter(|r| !r.result.holds(tolerance)).count();
    let min_gap = records.iter().map(|r| r.result.gap()).fold(f64::INFINITY, f64::min);
    Ok(BoundSuiteReport {
        seed,
        trials_per_dim,
        dims: dims.to_vec(),
        tolerance,
        violations,
        min_gap,
        records,
    })
}
