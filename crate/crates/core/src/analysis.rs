//! Recovery diagnostics for a `(target, basis, mask)` triple.
//!
//! "Nonzero" for relative eigenvalues and singular values always means
//! above `rank_tol` times the largest one, so `r_K` and the support depend
//! on `rank_tol`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::conv::{conv_matrix_with_cap, DEFAULT_EXPLICIT_CAP};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::EigenBasis;
use crate::tensor::{DenseTensor, KernelShape, SamplingMask};

pub const POWER_ITER_TOL: f64 = 1e-10;
pub const POWER_ITER_MAX: usize = 10_000;

/// Relative convolution rank and the active column support `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeRank {
    pub rank: usize,
    pub support: Vec<usize>,
    /// `||L0 * kappa_i||_F` for every basis column.
    pub relative_eigenvalues: Vec<f64>,
}

fn check_basis(l0: &DenseTensor, basis: &EigenBasis) -> Result<()> {
    basis.kernel_shape().check_fits(l0.dims())
}

pub fn relative_conv_rank(l0: &DenseTensor, basis: &EigenBasis, rank_tol: f64) -> Result<RelativeRank> {
    check_basis(l0, basis)?;
    let sigma = basis.bank(l0.dims())?.response_norms(l0.values());
    let top = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
    let support: Vec<usize> = if top > 0.0 {
        (0..sigma.len()).filter(|&i| sigma[i] > rank_tol * top).collect()
    } else {
        Vec::new()
    };
    Ok(RelativeRank {
        rank: support.len(),
        support,
        relative_eigenvalues: sigma,
    })
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from the normalized all-ones vector.
pub fn power_iteration(a: &DMatrix<f64>, tol: f64, max_iters: usize) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = a * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// `alpha_K(L0) = ||A_k(L0) K D||`.
pub fn spectral_corr_coeff(l0: &DenseTensor, basis: &EigenBasis, rank_tol: f64) -> Result<f64> {
    let rel = relative_conv_rank(l0, basis, rank_tol)?;
    alpha_for_support(l0, basis, &rel)
}

fn alpha_for_support(l0: &DenseTensor, basis: &EigenBasis, rel: &RelativeRank) -> Result<f64> {
    if rel.rank == 0 {
        return Err(Error::Degenerate(
            "spectral correlation is undefined for relative rank 0".into(),
        ));
    }
    let active = DMatrix::from_fn(basis.k(), rel.rank, |r, c| basis.matrix()[(r, rel.support[c])]);
    let bank = crate::conv::KernelBank::new(l0.dims(), basis.kernel_shape(), &active)?;
    let mut cols = bank.apply(l0.values());
    for (c, mut col) in cols.column_iter_mut().enumerate() {
        col /= rel.relative_eigenvalues[rel.support[c]];
    }
    let gram = cols.tr_mul(&cols);
    Ok(power_iteration(&gram, POWER_ITER_TOL, POWER_ITER_MAX).sqrt())
}

/// `mu_1` of a matrix with orthonormal columns: `(p / r) max_i ||row_i||^2`.
pub fn row_coherence(u: &DMatrix<f64>) -> f64 {
    let (p, r) = u.shape();
    let max_row = u
        .row_iter()
        .map(|row| row.norm_squared())
        .fold(0.0f64, f64::max);
    p as f64 / r as f64 * max_row
}

/// Coherence of the active submatrix `K_I`.
pub fn active_coherence(basis: &EigenBasis, support: &[usize]) -> Result<f64> {
    if support.is_empty() {
        return Err(Error::Degenerate("active support is empty".into()));
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= basis.k()) {
        return Err(Error::InvalidArgument(format!("support index {bad} out of range")));
    }
    let active = DMatrix::from_fn(basis.k(), support.len(), |r, c| basis.matrix()[(r, support[c])]);
    Ok(row_coherence(&active))
}

/// Convolution coherences of a tensor and the conditioning of `A_k(L0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvCoherence {
    pub mu1: f64,
    pub mu2: f64,
    /// `sigma_1 / sigma_r`.
    pub tau: f64,
    /// Convolution rank `r_0`.
    pub rank: usize,
}

pub fn conv_coherence(l0: &DenseTensor, ks: &KernelShape, rank_tol: f64) -> Result<ConvCoherence> {
    conv_coherence_with_cap(l0, ks, rank_tol, DEFAULT_EXPLICIT_CAP)
}

/// Explicit-SVD coherences; gated by the same size cap as `conv_matrix`.
pub fn conv_coherence_with_cap(
    l0: &DenseTensor,
    ks: &KernelShape,
    rank_tol: f64,
    cap: usize,
) -> Result<ConvCoherence> {
    let a = conv_matrix_with_cap(l0, ks, cap)?.matrix;
    let svd = linalg::thin_svd(&a);
    let sigma = &svd.singular_values;
    let top = sigma[0];
    if top == 0.0 {
        return Err(Error::Degenerate("coherence of the zero tensor".into()));
    }
    let r = sigma.iter().take_while(|&&s| s > rank_tol * top).count();
    Ok(ConvCoherence {
        mu1: row_coherence(&svd.u.columns(0, r).into_owned()),
        mu2: row_coherence(&svd.v.columns(0, r).into_owned()),
        tau: top / sigma[r - 1],
        rank: r,
    })
}

/// Quantities the sampling thresholds are written in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdInputs {
    pub m: usize,
    pub k: usize,
    pub rho0: f64,
    pub r_k: usize,
    pub alpha_k: f64,
    pub mu_k_i: f64,
    /// `(mu1, mu2, r0)` when the explicit coherences are available.
    pub coherence: Option<(f64, f64, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub rho_min_noiseless: f64,
    pub rho_min_noisy: f64,
    pub error_bound_factor: f64,
    pub cnnm_bound: Option<f64>,
    pub icnnm_ideal_bound: Option<f64>,
    pub certified_noiseless: bool,
    pub certified_noisy: bool,
}

/// Sampling rate above which exact recovery is guaranteed.
pub fn noiseless_threshold(k: usize, m: usize, alpha: f64, mu: f64, r_k: usize) -> f64 {
    1.0 - k as f64 / ((1.0 + alpha * alpha) * mu * r_k as f64 * m as f64)
}

/// Sampling rate above which the noisy error bound holds.
pub fn noisy_threshold(k: usize, m: usize, alpha: f64, mu: f64, r_k: usize) -> f64 {
    1.0 - 0.64 * k as f64 / ((0.64 + alpha * alpha) * mu * r_k as f64 * m as f64)
}

/// `(18 sqrt(k) + 2) (alpha + sqrt(1 + alpha^2)) / alpha`.
pub fn error_bound_factor(k: usize, alpha: f64) -> f64 {
    (18.0 * (k as f64).sqrt() + 2.0) * (alpha + (1.0 + alpha * alpha).sqrt()) / alpha
}

/// Threshold for the ideal basis (the target's own eigenvectors).
pub fn icnnm_ideal_bound(k: usize, m: usize, mu2: f64, r0: usize) -> f64 {
    1.0 - 0.5 * k as f64 / (mu2 * r0 as f64 * m as f64)
}

/// Threshold of the convolution nuclear norm program.
pub fn cnnm_bound(k: usize, m: usize, mu1: f64, mu2: f64, r0: usize) -> f64 {
    1.0 - 0.25 * k as f64 / (mu1.max(mu2) * r0 as f64 * m as f64)
}

pub fn thresholds(inp: &ThresholdInputs) -> Thresholds {
    let noiseless = noiseless_threshold(inp.k, inp.m, inp.alpha_k, inp.mu_k_i, inp.r_k);
    let noisy = noisy_threshold(inp.k, inp.m, inp.alpha_k, inp.mu_k_i, inp.r_k);
    Thresholds {
        rho_min_noiseless: noiseless,
        rho_min_noisy: noisy,
        error_bound_factor: error_bound_factor(inp.k, inp.alpha_k),
        cnnm_bound: inp
            .coherence
            .map(|(mu1, mu2, r0)| cnnm_bound(inp.k, inp.m, mu1, mu2, r0)),
        icnnm_ideal_bound: inp
            .coherence
            .map(|(_, mu2, r0)| icnnm_ideal_bound(inp.k, inp.m, mu2, r0)),
        certified_noiseless: inp.rho0 > noiseless,
        certified_noisy: inp.rho0 > noisy,
    }
}

/// Everything the recovery guarantees depend on, for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDiagnostics {
    #[serde(rename = "r_K")]
    pub r_k: usize,
    #[serde(rename = "support_I")]
    pub support_i: Vec<usize>,
    #[serde(rename = "alpha_K")]
    pub alpha_k: f64,
    #[serde(rename = "mu_K_I")]
    pub mu_k_i: f64,
    /// Explicit-matrix quantities; `None` above the materialization cap.
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub tau: Option<f64>,
    pub r0: Option<usize>,
    pub rho0: f64,
    pub rho_min_noiseless: f64,
    pub rho_min_noisy: f64,
    pub error_bound_factor: f64,
    pub cnnm_bound: Option<f64>,
    pub icnnm_ideal_bound: Option<f64>,
    pub certified_noiseless: bool,
    pub certified_noisy: bool,
    pub m: usize,
    pub k: usize,
    pub rank_tol: f64,
}

/// Computes all diagnostics; coherences are skipped (left `None`) when
/// `A_k(L0)` would exceed `explicit_cap` entries.
pub fn diagnose(
    l0: &DenseTensor,
    basis: &EigenBasis,
    mask: &SamplingMask,
    rank_tol: f64,
    explicit_cap: usize,
) -> Result<RecoveryDiagnostics> {
    l0.check_same_dims(mask.tensor())?;
    let rel = relative_conv_rank(l0, basis, rank_tol)?;
    let alpha = alpha_for_support(l0, basis, &rel)?;
    let mu = active_coherence(basis, &rel.support)?;
    let (m, k) = (l0.len(), basis.k());
    let coh = match conv_coherence_with_cap(l0, basis.kernel_shape(), rank_tol, explicit_cap) {
        Ok(c) => Some(c),
        Err(Error::TooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let th = thresholds(&ThresholdInputs {
        m,
        k,
        rho0: mask.rate(),
        r_k: rel.rank,
        alpha_k: alpha,
        mu_k_i: mu,
        coherence: coh.map(|c| (c.mu1, c.mu2, c.rank)),
    });
    Ok(RecoveryDiagnostics {
        r_k: rel.rank,
        support_i: rel.support,
        alpha_k: alpha,
        mu_k_i: mu,
        mu1: coh.map(|c| c.mu1),
        mu2: coh.map(|c| c.mu2),
        tau: coh.map(|c| c.tau),
        r0: coh.map(|c| c.rank),
        rho0: mask.rate(),
        rho_min_noiseless: th.rho_min_noiseless,
        rho_min_noisy: th.rho_min_noisy,
        error_bound_factor: th.error_bound_factor,
        cnnm_bound: th.cnnm_bound,
        icnnm_ideal_bound: th.icnnm_ideal_bound,
        certified_noiseless: th.certified_noiseless,
        certified_noisy: th.certified_noisy,
        m,
        k,
        rank_tol,
    })
}
