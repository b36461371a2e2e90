//! ADMM solvers for the penalized completion programs
//!
//! ```text
//! ICNNM:  min_L ||A_k(L) K||_{2,1} + (lambda k / 2) ||P_Omega(L - M)||_F^2
//! CNNM:   min_L ||A_k(L)||_*       + (lambda k / 2) ||P_Omega(L - M)||_F^2
//! ```
//!
//! Both split `Z = A_k(L) K` (with `K = I` for CNNM) and alternate a proximal
//! `Z` step, the closed-form `L` step
//! `L = (A_k^*((Y + theta Z) K^T) / k + lambda P_Omega(M)) / (lambda Theta + theta)`
//! and a multiplier ascent, with a geometrically increasing penalty `theta`.

mod prox;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use prox::{l21_norm, nuclear_norm, prox_l21, prox_l21_with_norm, svt};

use crate::conv::{shift_adjoint, shift_matrix, KernelBank, DEFAULT_EXPLICIT_CAP};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{conv_gram, EigenBasis, DEFAULT_RANK_TOL};
use crate::tensor::{DenseTensor, KernelShape, SamplingMask};

/// How missing entries are filled in the initial iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitFill {
    #[default]
    Zero,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Initial penalty; `None` picks `1.25 / sigma_1(A_k(P_Omega(M)))`.
    pub theta0: Option<f64>,
    pub theta_growth: f64,
    pub theta_max: f64,
    pub max_iters: usize,
    /// Bound on `||Z - A_k(L) K||_F / ||A_k(P_Omega(M))||_F`.
    pub tol_primal: f64,
    /// Bound on `||L_t - L_{t-1}||_F / ||L_{t-1}||_F`.
    pub tol_change: f64,
    pub rank_tol: f64,
    pub init: InitFill,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1000.0,
            theta0: None,
            theta_growth: 1.05,
            theta_max: 1e10,
            max_iters: 1000,
            tol_primal: 1e-7,
            tol_change: 1e-8,
            rank_tol: DEFAULT_RANK_TOL,
            init: InitFill::Zero,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("theta_max", self.theta_max),
            ("tol_primal", self.tol_primal),
            ("tol_change", self.tol_change),
            ("rank_tol", self.rank_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.theta_growth >= 1.0) || !self.theta_growth.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "theta_growth must be >= 1, got {}",
                self.theta_growth
            )));
        }
        if let Some(t0) = self.theta0 {
            if !(t0 > 0.0) || t0 > self.theta_max {
                return Err(Error::InvalidArgument(format!(
                    "theta0 must lie in (0, theta_max], got {t0}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        Ok(())
    }

    fn initial_theta(&self, observed: &DenseTensor, ks: &KernelShape) -> Result<f64> {
        if let Some(t) = self.theta0 {
            return Ok(t);
        }
        // largest convolution eigenvalue of the observed data; K is orthogonal
        // so it is also the spectral norm of A_k(P_Omega M) K
        let top = linalg::symmetric_eigen(&conv_gram(observed, ks)?).0[0].max(0.0).sqrt();
        let theta = if top > 0.0 { 1.25 / top } else { 1.0 };
        Ok(theta.min(self.theta_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||Z||_reg + (lambda k / 2) ||P_Omega(L - M)||_F^2` after each iteration.
    pub objective: Vec<f64>,
    pub primal_residual: Vec<f64>,
    pub iterate_change: Vec<f64>,
    pub termination: Termination,
    pub wall_time_secs: f64,
    pub final_theta: f64,
}

/// Iterates of one ADMM run.
#[derive(Debug, Clone)]
pub struct SolveState {
    pub l: DenseTensor,
    pub z: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub theta: f64,
}

/// The linear map `L -> A_k(L) K` and the regularizer applied to its image.
trait Splitting {
    fn kernel_shape(&self) -> &KernelShape;
    fn k(&self) -> usize {
        self.kernel_shape().size()
    }
    fn forward(&self, l: &[f64]) -> DMatrix<f64>;
    /// `A_k^*(V K^T)`.
    fn adjoint(&self, v: &DMatrix<f64>) -> Vec<f64>;
    /// Proximal map of `tau * reg`, plus `reg` of the result.
    fn prox(&self, w: DMatrix<f64>, tau: f64) -> (DMatrix<f64>, f64);
}

struct BasisSplitting {
    bank: KernelBank,
}

impl Splitting for BasisSplitting {
    fn kernel_shape(&self) -> &KernelShape {
        self.bank.kernel_shape()
    }
    fn forward(&self, l: &[f64]) -> DMatrix<f64> {
        self.bank.apply(l)
    }
    fn adjoint(&self, v: &DMatrix<f64>) -> Vec<f64> {
        self.bank.adjoint(v)
    }
    fn prox(&self, w: DMatrix<f64>, tau: f64) -> (DMatrix<f64>, f64) {
        prox_l21_with_norm(w, tau)
    }
}

struct NuclearSplitting {
    dims: Vec<usize>,
    kernel_shape: KernelShape,
}

impl Splitting for NuclearSplitting {
    fn kernel_shape(&self) -> &KernelShape {
        &self.kernel_shape
    }
    fn forward(&self, l: &[f64]) -> DMatrix<f64> {
        shift_matrix(l, &self.dims, &self.kernel_shape)
    }
    fn adjoint(&self, v: &DMatrix<f64>) -> Vec<f64> {
        shift_adjoint(v, &self.dims, &self.kernel_shape)
    }
    fn prox(&self, w: DMatrix<f64>, tau: f64) -> (DMatrix<f64>, f64) {
        svt(w, tau)
    }
}

fn check_inputs(m_obs: &DenseTensor, mask: &SamplingMask, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    m_obs.check_same_dims(mask.tensor())?;
    if mask.observed_count() == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(())
}

fn frob(values: &[f64]) -> f64 {
    crate::tensor::norm2(values)
}

fn initial_state(
    splitting: &impl Splitting,
    observed: &DenseTensor,
    mask: &SamplingMask,
    cfg: &SolverConfig,
) -> Result<SolveState> {
    let pm = observed.values();
    let l = match cfg.init {
        InitFill::Zero => observed.clone(),
        InitFill::Mean => {
            let mean = pm.iter().sum::<f64>() / mask.observed_count() as f64;
            let values = pm
                .iter()
                .zip(mask.indicator())
                .map(|(&v, &w)| if w == 1.0 { v } else { mean })
                .collect();
            DenseTensor::from_parts_unchecked(observed.dims().to_vec(), values)
        }
    };
    let z = splitting.forward(l.values());
    Ok(SolveState {
        y: DMatrix::zeros(z.nrows(), z.ncols()),
        z,
        l,
        theta: cfg.initial_theta(observed, splitting.kernel_shape())?,
    })
}

fn run_admm(
    splitting: &impl Splitting,
    m_obs: &DenseTensor,
    mask: &SamplingMask,
    cfg: &SolverConfig,
) -> Result<(SolveState, SolveReport)> {
    let start = Instant::now();
    let k = splitting.k() as f64;
    let lambda = cfg.lambda;
    let theta_mask = mask.indicator();
    let observed = mask.project(m_obs)?;
    let pm = observed.values();

    let mut st = initial_state(splitting, &observed, mask, cfg)?;
    let mut lk = st.z.clone();
    // ||A_k(P_Omega M) K||_F = sqrt(k) ||P_Omega M||_F for orthogonal K
    let residual_scale = match k.sqrt() * frob(pm) {
        s if s > 0.0 => s,
        _ => 1.0,
    };

    let mut report = SolveReport {
        iterations: 0,
        objective: Vec::new(),
        primal_residual: Vec::new(),
        iterate_change: Vec::new(),
        termination: Termination::MaxIters,
        wall_time_secs: 0.0,
        final_theta: st.theta,
    };

    for _ in 0..cfg.max_iters {
        let theta = st.theta;
        let w = &lk - &st.y / theta;
        let (z, reg) = splitting.prox(w, 1.0 / theta);
        st.z = z;

        let back = splitting.adjoint(&(&st.y + &st.z * theta));
        let next: Vec<f64> = back
            .iter()
            .zip(pm)
            .zip(theta_mask)
            .map(|((&b, &p), &w)| (b / k + lambda * p) / (lambda * w + theta))
            .collect();

        lk = splitting.forward(&next);
        let gap = &st.z - &lk;
        st.y += &gap * theta;

        let prev = st.l.values();
        let step = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let change = match frob(prev) {
            n if n > 0.0 => step / n,
            _ => step,
        };
        let primal = gap.norm() / residual_scale;
        let fit: f64 = next
            .iter()
            .zip(m_obs.values())
            .zip(theta_mask)
            .map(|((&a, &b), &w)| w * (a - b) * (a - b))
            .sum();
        st.l = DenseTensor::from_parts_unchecked(m_obs.dims().to_vec(), next);

        report.iterations += 1;
        report.objective.push(reg + 0.5 * lambda * k * fit);
        report.primal_residual.push(primal);
        report.iterate_change.push(change);
        report.final_theta = theta;

        if primal < cfg.tol_primal && change < cfg.tol_change {
            report.termination = Termination::Converged;
            break;
        }
        st.theta = (theta * cfg.theta_growth).min(cfg.theta_max);
    }

    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok((st, report))
}

/// Completes `m_obs` on the unobserved entries with the eigenbasis `basis`.
pub fn icnnm_solve(
    m_obs: &DenseTensor,
    mask: &SamplingMask,
    basis: &EigenBasis,
    cfg: &SolverConfig,
) -> Result<(DenseTensor, SolveReport)> {
    check_inputs(m_obs, mask, cfg)?;
    let splitting = BasisSplitting {
        bank: basis.bank(m_obs.dims())?,
    };
    let (st, report) = run_admm(&splitting, m_obs, mask, cfg)?;
    Ok((st.l, report))
}

/// Convolution nuclear norm baseline; every iteration takes one SVD of an
/// `m x k` matrix.
pub fn cnnm_solve(
    m_obs: &DenseTensor,
    mask: &SamplingMask,
    ks: &KernelShape,
    cfg: &SolverConfig,
) -> Result<(DenseTensor, SolveReport)> {
    check_inputs(m_obs, mask, cfg)?;
    ks.check_fits(m_obs.dims())?;
    let splitting = NuclearSplitting {
        dims: m_obs.dims().to_vec(),
        kernel_shape: ks.clone(),
    };
    let (st, report) = run_admm(&splitting, m_obs, mask, cfg)?;
    Ok((st.l, report))
}

fn fit_term(l: &DenseTensor, m_obs: &DenseTensor, mask: &SamplingMask) -> Result<f64> {
    l.check_same_dims(m_obs)?;
    let diff = mask.project(&l.sub(m_obs)?)?;
    Ok(diff.frobenius_norm().powi(2))
}

/// `||A_k(L) K||_{2,1} + (lambda k / 2) ||P_Omega(L - M)||_F^2`.
pub fn objective_icnnm(
    l: &DenseTensor,
    m_obs: &DenseTensor,
    mask: &SamplingMask,
    basis: &EigenBasis,
    lambda: f64,
) -> Result<f64> {
    let fit = fit_term(l, m_obs, mask)?;
    let lk = basis.bank(l.dims())?.apply(l.values());
    Ok(l21_norm(&lk) + 0.5 * lambda * basis.k() as f64 * fit)
}

/// `||A_k(L)||_* + (lambda k / 2) ||P_Omega(L - M)||_F^2`, via an explicit SVD.
pub fn objective_cnnm(
    l: &DenseTensor,
    m_obs: &DenseTensor,
    mask: &SamplingMask,
    ks: &KernelShape,
    lambda: f64,
) -> Result<f64> {
    let fit = fit_term(l, m_obs, mask)?;
    let a = crate::conv::conv_matrix_with_cap(l, ks, DEFAULT_EXPLICIT_CAP)?.matrix;
    Ok(nuclear_norm(&a) + 0.5 * lambda * ks.size() as f64 * fit)
}
