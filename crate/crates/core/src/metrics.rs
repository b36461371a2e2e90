//! PSNR, MSE and SSIM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub fn mse(reference: &DenseTensor, estimate: &DenseTensor) -> Result<f64> {
    reference.check_same_dims(estimate)?;
    let sum: f64 = reference
        .values()
        .iter()
        .zip(estimate.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// `10 log10(peak^2 / mse)`; `f64::INFINITY` for identical inputs.
pub fn psnr(reference: &DenseTensor, estimate: &DenseTensor, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("peak must be positive, got {peak}")));
    }
    Ok(psnr_from_mse(mse(reference, estimate)?, peak))
}

fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering of an `h x w` image.
fn filter_valid(img: &[f64], h: usize, w: usize, win: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = win.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|t| win[t] * img[y * w + x + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|t| win[t] * rows[(y + t) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean SSIM of two order-2 tensors: 11x11 Gaussian window (sigma 1.5,
/// shrunk to fit small images), `K1 = 0.01`, `K2 = 0.03`.
pub fn ssim(reference: &DenseTensor, estimate: &DenseTensor, peak: f64) -> Result<f64> {
    reference.check_same_dims(estimate)?;
    let [h, w] = reference.dims() else {
        return Err(Error::ShapeMismatch(format!(
            "SSIM needs order-2 tensors, got {:?}",
            reference.dims()
        )));
    };
    let (h, w) = (*h, *w);
    let size = 11.min(h).min(w);
    let win = gaussian_window(size, 1.5);
    let x = reference.values();
    let y = estimate.values();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let (mx, _, _) = filter_valid(x, h, w, &win);
    let (my, _, _) = filter_valid(y, h, w, &win);
    let (sxx, _, _) = filter_valid(&xx, h, w, &win);
    let (syy, _, _) = filter_valid(&yy, h, w, &win);
    let (sxy, _, _) = filter_valid(&xy, h, w, &win);
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let total: f64 = (0..mx.len())
        .map(|i| {
            let (a, b) = (mx[i], my[i]);
            let va = sxx[i] - a * a;
            let vb = syy[i] - b * b;
            let cov = sxy[i] - a * b;
            ((2.0 * a * b + c1) * (2.0 * cov + c2)) / ((a * a + b * b + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / mx.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: usize,
    /// `None` encodes an infinite PSNR (exact match).
    pub psnr: Option<f64>,
    pub mse: f64,
    pub ssim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub psnr: Option<f64>,
    pub mse: f64,
    pub ssim: Option<f64>,
    pub peak: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_frame: Option<Vec<FrameMetrics>>,
}

/// Whole-tensor metrics, plus SSIM for images and a per-frame breakdown
/// (frames along axis 0) for order-3 tensors.
pub fn evaluate(reference: &DenseTensor, estimate: &DenseTensor, peak: f64) -> Result<MetricsReport> {
    let err = mse(reference, estimate)?;
    let p = psnr(reference, estimate, peak)?;
    let (ssim_all, per_frame) = match reference.order() {
        2 => (Some(ssim(reference, estimate, peak)?), None),
        3 => {
            let dims = reference.dims();
            let frame_dims = [dims[1], dims[2]];
            let len = dims[1] * dims[2];
            let frames = (0..dims[0])
                .map(|f| {
                    let slice = |t: &DenseTensor| {
                        DenseTensor::new(frame_dims.to_vec(), t.values()[f * len..(f + 1) * len].to_vec())
                    };
                    let (a, b) = (slice(reference)?, slice(estimate)?);
                    let e = mse(&a, &b)?;
                    Ok(FrameMetrics {
                        frame: f,
                        psnr: finite_or_none(psnr_from_mse(e, peak)),
                        mse: e,
                        ssim: Some(ssim(&a, &b, peak)?),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mean = frames.iter().filter_map(|f| f.ssim).sum::<f64>() / frames.len() as f64;
            (Some(mean), Some(frames))
        }
        _ => (None, None),
    };
    Ok(MetricsReport {
        psnr: finite_or_none(p),
        mse: err,
        ssim: ssim_all,
        peak,
        per_frame,
    })
}
