//! Symmetry-reduced linear stability.
//!
//! With `B = Y(τ)` and `Y(0) = Y₀`, the monodromy factorizes as
//! `X(12τ) = Y₀ W⁶ Y₀ᵀ` where `W = Y₀ᵀ S_fᵀ S_r Y₀ B⁻¹ S_r B`. The average
//! `(W + W⁻¹)/2` is block diagonal `diag(Kᵀ, K)`, and the orbit is linearly
//! stable when the eigenvalues of `K` are real and inside `[-1, 1]`.

use nalgebra::{Complex, Matrix2, Matrix3, Matrix6};

use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::linalg::{blocks, max_abs, symplectic_defect, symplectic_j};
use crate::orbit::SymmetryMatrix;
use crate::shooting::OrbitSolution;
use crate::variational::compute_b;

pub const SYMPLECTIC_TOL: f64 = 1e-6;
pub const STRUCTURE_TOL: f64 = 1e-3;
pub const BLOCK_RESIDUAL_TOL: f64 = 1e-5;
pub const K_ROW_TOL: f64 = 5e-3;
pub const MONODROMY_TOL: f64 = 1e-3;

/// `B⁻¹ = (B₄ᵀ, −B₂ᵀ; −B₃ᵀ, B₁ᵀ)` for symplectic `B`.
pub fn symplectic_inverse(b: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    let defect = symplectic_defect(b);
    if !(defect <= SYMPLECTIC_TOL) {
        return Err(Error::NotSymplectic { defect });
    }
    let [b1, b2, b3, b4] = blocks(b);
    Ok(crate::linalg::from_blocks(
        &b4.transpose(),
        &(-b2.transpose()),
        &(-b3.transpose()),
        &b1.transpose(),
    ))
}

/// `D = −B⁻¹ S_r B`.
pub fn compute_d(b: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    let sr = SymmetryMatrix::time_reversing().entries;
    Ok(-(symplectic_inverse(b)? * sr * b))
}

pub fn compute_w(b: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    compute_w_from(
        b,
        &SymmetryMatrix::time_preserving().entries,
        &SymmetryMatrix::time_reversing().entries,
        &SymmetryMatrix::frame_y0().entries,
    )
}

/// `W` assembled from explicit symmetry and frame matrices.
pub fn compute_w_from(
    b: &Matrix6<f64>,
    sf: &Matrix6<f64>,
    sr: &Matrix6<f64>,
    y0: &Matrix6<f64>,
) -> Result<Matrix6<f64>> {
    let b_inv = symplectic_inverse(b)?;
    Ok(y0.transpose() * sf.transpose() * sr * y0 * b_inv * sr * b)
}

/// `K` from the bottom-right block of `(W + W⁻¹)/2` and the block residual,
/// without the structure check.
pub fn k_block(w: &Matrix6<f64>) -> (Matrix3<f64>, f64) {
    let j = symplectic_j();
    let w_inv = -(j * w.transpose() * j);
    let avg = (w + w_inv) * 0.5;
    let [_, tr, bl, br] = blocks(&avg);
    let residual = max_abs(&tr).max(max_abs(&bl));
    (br, residual)
}

pub fn extract_k(w: &Matrix6<f64>) -> Result<(Matrix3<f64>, f64)> {
    let (k, residual) = k_block(w);
    if !(residual <= STRUCTURE_TOL) {
        return Err(Error::Structure { residual });
    }
    Ok((k, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    LinearlyStable,
    Unstable,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::LinearlyStable => "linearly_stable",
            Verdict::Unstable => "unstable",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Deciding eigenvalues of `K` and the verdict they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSpectrum {
    pub lambda1: Complex<f64>,
    pub lambda2: Complex<f64>,
    pub k_row_residual: f64,
    pub verdict: Verdict,
}

/// Eigenvalues of a real 2×2 matrix, larger real part first.
pub fn eigenvalues_2x2(m: &Matrix2<f64>) -> (Complex<f64>, Complex<f64>) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    if disc >= 0.0 {
        let root = disc.sqrt();
        let q = half_tr + half_tr.signum() * root;
        let det = a * d - b * c;
        let (x, y) = if q == 0.0 {
            (root, -root)
        } else {
            (q, det / q)
        };
        let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
        (Complex::new(hi, 0.0), Complex::new(lo, 0.0))
    } else {
        let im = (-disc).sqrt();
        (Complex::new(half_tr, im), Complex::new(half_tr, -im))
    }
}

pub fn stability_verdict(k: &Matrix3<f64>) -> KSpectrum {
    let k_row_residual = (k[(0, 0)] - 1.0)
        .abs()
        .max(k[(0, 1)].abs())
        .max(k[(0, 2)].abs());
    // k12 = k13 = 0 decouples the structural unit eigenvalue from the lower block.
    let lower = k.fixed_view::<2, 2>(1, 1).into_owned();
    let (lambda1, lambda2) = eigenvalues_2x2(&lower);
    let verdict = if !(k_row_residual <= K_ROW_TOL) || lambda1.im != 0.0 {
        Verdict::Indeterminate
    } else {
        let margin = k_row_residual;
        let largest = lambda1.re.abs().max(lambda2.re.abs());
        if largest < 1.0 - margin {
            Verdict::LinearlyStable
        } else if largest > 1.0 + margin {
            Verdict::Unstable
        } else {
            Verdict::Indeterminate
        }
    };
    KSpectrum {
        lambda1,
        lambda2,
        k_row_residual,
        verdict,
    }
}

/// Chebyshev polynomial `T_n(x)`, so that `cos(nθ) = T_n(cos θ)`.
pub fn chebyshev_t(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyCheck {
    pub spectrum: Vec<Complex<f64>>,
    /// `max | |μ| − 1 |` over the spectrum.
    pub modulus_defect: f64,
    /// Distance from 1 of the two eigenvalues closest to 1.
    pub unit_pair_defect: f64,
    pub passed: bool,
}

/// Spectrum of `X(12τ) = Y₀ W⁶ Y₀ᵀ`.
pub fn monodromy_matrix(w: &Matrix6<f64>) -> Matrix6<f64> {
    let y0 = SymmetryMatrix::frame_y0().entries;
    let w2 = w * w;
    let w6 = w2 * w2 * w2;
    y0 * w6 * y0.transpose()
}

pub fn monodromy_check(w: &Matrix6<f64>) -> MonodromyCheck {
    let x = monodromy_matrix(w);
    let mut spectrum: Vec<Complex<f64>> = x.complex_eigenvalues().iter().copied().collect();
    spectrum.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let modulus_defect = spectrum
        .iter()
        .map(|z| (z.norm() - 1.0).abs())
        .fold(0.0_f64, |a, b| a.max(if b.is_nan() { f64::INFINITY } else { b }));
    let mut dist: Vec<f64> = spectrum.iter().map(|z| (z - 1.0).norm()).collect();
    dist.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let unit_pair_defect = dist.get(1).copied().unwrap_or(f64::INFINITY);
    MonodromyCheck {
        passed: modulus_defect <= MONODROMY_TOL && unit_pair_defect <= MONODROMY_TOL,
        spectrum,
        modulus_defect,
        unit_pair_defect,
    }
}

/// Largest mismatch between the real parts of the non-unit monodromy eigenvalues
/// and `T₆(λ₁)`, `T₆(λ₂)`.
pub fn chebyshev_lift_residual(check: &MonodromyCheck, lambdas: (f64, f64)) -> f64 {
    let mut rest: Vec<Complex<f64>> = check.spectrum.clone();
    rest.sort_by(|a, b| {
        (a - 1.0)
            .norm()
            .partial_cmp(&(b - 1.0).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let rest = &rest[2.min(rest.len())..];
    let targets = [chebyshev_t(6, lambdas.0), chebyshev_t(6, lambdas.1)];
    // Each target must account for exactly one conjugate pair.
    let mut used = [0usize; 2];
    let mut worst = 0.0_f64;
    for z in rest {
        let (idx, d) = targets
            .iter()
            .enumerate()
            .map(|(i, t)| (i, (z.re - t).abs()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        used[idx] += 1;
        worst = worst.max(d);
    }
    if used != [2, 2] && (targets[0] - targets[1]).abs() > worst.max(1e-12) {
        return f64::INFINITY;
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub w: Matrix6<f64>,
    pub k: Matrix3<f64>,
    pub lambda1: Complex<f64>,
    pub lambda2: Complex<f64>,
    pub block_residual: f64,
    pub k_row_residual: f64,
    pub verdict: Verdict,
    pub monodromy: MonodromyCheck,
}

impl StabilityReport {
    pub fn from_w(w: Matrix6<f64>) -> Result<Self> {
        let (k, block_residual) = extract_k(&w)?;
        let spec = stability_verdict(&k);
        let monodromy = monodromy_check(&w);
        let verdict = if block_residual <= BLOCK_RESIDUAL_TOL {
            spec.verdict
        } else {
            Verdict::Indeterminate
        };
        Ok(Self {
            w,
            k,
            lambda1: spec.lambda1,
            lambda2: spec.lambda2,
            block_residual,
            k_row_residual: spec.k_row_residual,
            verdict,
            monodromy,
        })
    }

    pub fn monodromy_spectrum(&self) -> &[Complex<f64>] {
        &self.monodromy.spectrum
    }
}

/// Full pipeline: `B`, `W`, `K`, verdict and monodromy cross-check.
pub fn analyze(sol: &OrbitSolution, cfg: &IntegratorConfig) -> Result<StabilityReport> {
    let b = compute_b(sol, cfg)?;
    StabilityReport::from_w(compute_w(&b)?)
}
