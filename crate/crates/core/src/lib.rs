//! Tensor completion from arbitrarily sampled entries.
//!
//! The target is assumed convolutionally low-rank: its convolution matrix
//! `A_k(L)` (the `m x k` matrix with `A_k(L) vec(X) = vec(L * X)` for
//! circular convolution with any `k_1 x ... x k_n` kernel `X`) has low rank.
//! [`solver::icnnm_solve`] recovers it by minimizing the column-wise
//! `l2,1` norm of `A_k(L) K`, where `K` is an orthogonal basis of
//! convolution eigenvectors learned beforehand from reference tensors
//! ([`spectral::learn_ensemble_basis`]). No SVD is needed inside the
//! iterations. [`solver::cnnm_solve`] is the nuclear-norm baseline, and
//! [`analysis`] evaluates the sampling-rate thresholds under which exact
//! and stable recovery are guaranteed.

pub mod analysis;
pub mod conv;
pub mod error;
mod fft;
pub mod io;
pub mod linalg;
pub mod mask;
pub mod metrics;
pub mod solver;
pub mod spectral;
pub mod synth;
pub mod tensor;

pub use nalgebra;

pub use analysis::{diagnose, RecoveryDiagnostics};
pub use conv::{
    circular_convolve, conv_adjoint, conv_apply, conv_matrix, conv_sampling_mask, ConvMatrix,
    KernelBank,
};
pub use error::{Error, Result};
pub use mask::{generate_mask, MaskSpec};
pub use metrics::{psnr, MetricsReport};
pub use solver::{cnnm_solve, icnnm_solve, SolveReport, SolverConfig, Termination};
pub use spectral::{conv_gram, conv_spectrum, learn_ensemble_basis, ConvSpectrum, EigenBasis};
pub use tensor::{DenseTensor, KernelShape, SamplingMask};
