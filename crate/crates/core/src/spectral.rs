//! Convolution eigenvalues and eigenvectors of a tensor, and the shared
//! orthogonal eigenbasis learned from an ensemble of reference tensors.
//!
//! Both reduce to the symmetric eigenproblem of a `k x k` Gram matrix
//! `A_k(L)^T A_k(L)`. Entry `(s, t)` of that Gram depends only on `s - t`
//! modulo the tensor dims, so the whole matrix is read off one circular
//! autocorrelation computed with a single FFT round trip. Eigenvalues are
//! then re-measured matrix-free as `||L * kappa_i||_F`, which keeps the
//! numerically-zero ones near machine precision instead of near `sqrt(eps)`.

use nalgebra::DMatrix;

use crate::linalg;
use serde::{Deserialize, Serialize};

use crate::conv::KernelBank;
use crate::error::{Error, Result};
use crate::fft::NdFft;
use crate::tensor::{unravel, DenseTensor, KernelShape};

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Tolerance on `||K^T K - I||_max` accepted for an eigenbasis.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Circular autocorrelation `c[d] = sum_i L[i] L[i + d]`, summed over tensors.
fn autocorrelation<'a>(dims: &[usize], tensors: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let fft = NdFft::new(dims);
    let mut power = vec![rustfft::num_complex::Complex64::default(); fft.len()];
    for values in tensors {
        let spec = fft.forward_real(values);
        power
            .iter_mut()
            .zip(&spec)
            .for_each(|(p, s)| p.re += s.norm_sqr());
    }
    fft.inverse(&mut power);
    power.iter().map(|c| c.re).collect()
}

fn gram_from_autocorrelation(corr: &[f64], dims: &[usize], ks: &KernelShape) -> DMatrix<f64> {
    let k = ks.size();
    let n = ks.order();
    let mut si = vec![0; n];
    let mut ti = vec![0; n];
    let mut g = DMatrix::zeros(k, k);
    for s in 0..k {
        unravel(s, ks.dims(), &mut si);
        for t in s..k {
            unravel(t, ks.dims(), &mut ti);
            let flat = (0..n).fold(0, |acc, j| {
                acc * dims[j] + (si[j] + dims[j] - ti[j]) % dims[j]
            });
            g[(s, t)] = corr[flat];
            g[(t, s)] = corr[flat];
        }
    }
    g
}

/// `A_k(L)^T A_k(L)` in `O(m log m + k^2)`.
pub fn conv_gram(l: &DenseTensor, ks: &KernelShape) -> Result<DMatrix<f64>> {
    ks.check_fits(l.dims())?;
    let corr = autocorrelation(l.dims(), std::iter::once(l.values()));
    Ok(gram_from_autocorrelation(&corr, l.dims(), ks))
}

/// Eigenvalues and eigenvectors of a single tensor's convolution matrix.
#[derive(Debug, Clone)]
pub struct ConvSpectrum {
    /// `sigma_1 >= ... >= sigma_k >= 0`.
    pub eigenvalues: Vec<f64>,
    /// Kernel-shaped, pairwise orthonormal.
    pub eigenvectors: Vec<DenseTensor>,
    /// Number of `sigma_i > tol * sigma_1`.
    pub rank: usize,
    /// Set for the all-zero tensor, whose eigenvectors are the identity basis.
    pub degenerate: bool,
}

/// Orthogonal `k x k` matrix whose column `i` is `vec` of the `i`-th
/// learned convolution eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    kernel_shape: KernelShape,
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl EigenBasis {
    pub fn new(kernel_shape: KernelShape, matrix: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let k = kernel_shape.size();
        if matrix.shape() != (k, k) || eigenvalues.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "basis for kernel {kernel_shape} needs a {k}x{k} matrix and {k} eigenvalues, got {}x{} and {}",
                matrix.nrows(),
                matrix.ncols(),
                eigenvalues.len()
            )));
        }
        if eigenvalues.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("eigenvalues must be finite and >= 0".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument("eigenvalues must be nonincreasing".into()));
        }
        let defect = (matrix.tr_mul(&matrix) - DMatrix::identity(k, k)).abs().max();
        if !(defect < ORTHOGONALITY_TOL) {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthogonal: max |K^T K - I| = {defect:e}"
            )));
        }
        Ok(Self {
            kernel_shape,
            matrix,
            eigenvalues,
        })
    }

    pub fn identity(kernel_shape: KernelShape) -> Self {
        let k = kernel_shape.size();
        Self {
            kernel_shape,
            matrix: DMatrix::identity(k, k),
            eigenvalues: vec![0.0; k],
        }
    }

    pub fn kernel_shape(&self) -> &KernelShape {
        &self.kernel_shape
    }

    pub fn k(&self) -> usize {
        self.kernel_shape.size()
    }

    /// The orthogonal matrix `K`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// True when learned from all-zero references.
    pub fn is_degenerate(&self) -> bool {
        self.eigenvalues.iter().all(|&s| s == 0.0)
    }

    /// Column `i` reshaped to the kernel box.
    pub fn kernel(&self, i: usize) -> DenseTensor {
        DenseTensor::from_parts_unchecked(
            self.kernel_shape.dims().to_vec(),
            self.matrix.column(i).iter().copied().collect(),
        )
    }

    /// Filter bank computing `A_k(L) K` for tensors of `dims`.
    pub fn bank(&self, dims: &[usize]) -> Result<KernelBank> {
        KernelBank::new(dims, &self.kernel_shape, &self.matrix)
    }
}

/// Options for [`learn_ensemble_basis_with`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LearnOptions {
    /// Scale every reference to unit Frobenius norm before accumulating.
    #[serde(default)]
    pub normalize: bool,
}

/// Eigenvectors of `gram`, sorted by re-measured eigenvalue, sign-fixed.
///
/// `measure(K)` returns the re-measured `sigma_i` for each column of `K`.
fn decompose(
    gram: DMatrix<f64>,
    measure: impl FnOnce(&DMatrix<f64>) -> Result<Vec<f64>>,
) -> Result<(DMatrix<f64>, Vec<f64>, bool)> {
    let k = gram.nrows();
    if gram.iter().all(|&v| v == 0.0) {
        return Ok((DMatrix::identity(k, k), vec![0.0; k], true));
    }
    let (_, mut vectors) = linalg::symmetric_eigen(&gram);
    for mut col in vectors.column_iter_mut() {
        let scale = col.amax();
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-12 * scale) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    let sigma = measure(&vectors)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let vectors = DMatrix::from_fn(k, k, |r, c| vectors[(r, order[c])]);
    let sigma = order.iter().map(|&i| sigma[i]).collect();
    Ok((vectors, sigma, false))
}

/// Convolution eigenvalues/eigenvectors of `l` for kernel `ks`.
pub fn conv_spectrum(l: &DenseTensor, ks: &KernelShape, tol: f64) -> Result<ConvSpectrum> {
    let gram = conv_gram(l, ks)?;
    let (vectors, sigma, degenerate) = decompose(gram, |k| {
        Ok(KernelBank::new(l.dims(), ks, k)?.response_norms(l.values()))
    })?;
    let rank = rank_of(&sigma, tol);
    let eigenvectors = vectors
        .column_iter()
        .map(|c| DenseTensor::from_parts_unchecked(ks.dims().to_vec(), c.iter().copied().collect()))
        .collect();
    Ok(ConvSpectrum {
        eigenvalues: sigma,
        eigenvectors,
        rank,
        degenerate,
    })
}

/// Count of `sigma_i > tol * max sigma`.
pub fn rank_of(sigma: &[f64], tol: f64) -> usize {
    let top = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > tol * top).count()
}

pub fn learn_ensemble_basis(refs: &[DenseTensor], ks: &KernelShape) -> Result<EigenBasis> {
    learn_ensemble_basis_with(refs, ks, &LearnOptions::default())
}

/// Learns `K` from the right singular vectors of the stacked convolution
/// matrices of all references, via the summed Gram.
pub fn learn_ensemble_basis_with(
    refs: &[DenseTensor],
    ks: &KernelShape,
    opts: &LearnOptions,
) -> Result<EigenBasis> {
    let first = refs
        .first()
        .ok_or_else(|| Error::InvalidArgument("reference list is empty".into()))?;
    ks.check_fits(first.dims())?;
    for r in refs {
        first.check_same_dims(r)?;
    }
    let scaled: Vec<DenseTensor>;
    let refs = if opts.normalize {
        scaled = refs
            .iter()
            .map(|r| {
                let n = r.frobenius_norm();
                if n > 0.0 {
                    r.scaled(1.0 / n)
                } else {
                    r.clone()
                }
            })
            .collect();
        &scaled[..]
    } else {
        refs
    };
    let dims = first.dims();
    let corr = autocorrelation(dims, refs.iter().map(|r| r.values()));
    let gram = gram_from_autocorrelation(&corr, dims, ks);
    let (matrix, eigenvalues, _) = decompose(gram, |k| {
        let bank = KernelBank::new(dims, ks, k)?;
        let mut energy = vec![0.0; k.ncols()];
        for r in refs {
            for (e, n) in energy.iter_mut().zip(bank.response_norms(r.values())) {
                *e += n * n;
            }
        }
        Ok(energy.into_iter().map(f64::sqrt).collect())
    })?;
    EigenBasis::new(ks.clone(), matrix, eigenvalues)
}
