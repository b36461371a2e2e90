//! Multidimensional complex FFT over row-major buffers, built from 1-D
//! `rustfft` plans applied axis by axis.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::tensor::strides;

pub(crate) struct NdFft {
    dims: Vec<usize>,
    strides: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    len: usize,
}

impl NdFft {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims: dims.to_vec(),
            strides: strides(dims),
            forward: dims.iter().map(|&d| planner.plan_fft_forward(d)).collect(),
            inverse: dims.iter().map(|&d| planner.plan_fft_inverse(d)).collect(),
            len: dims.iter().product(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.forward);
    }

    /// Inverse transform, normalized so that `inverse(forward(x)) == x`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inverse);
        let scale = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    fn run(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(buf.len(), self.len);
        let mut line = Vec::new();
        for (axis, plan) in plans.iter().enumerate() {
            let d = self.dims[axis];
            if d == 1 {
                continue;
            }
            let stride = self.strides[axis];
            if stride == 1 {
                plan.process(buf);
                continue;
            }
            line.resize(d, Complex64::default());
            // Lines along `axis` start at offsets whose axis coordinate is zero.
            let block = stride * d;
            for outer in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    let start = outer + inner;
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = buf[start + t * stride];
                    }
                    plan.process(&mut line);
                    for (t, slot) in line.iter().enumerate() {
                        buf[start + t * stride] = *slot;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(values: &[f64], dims: &[usize]) -> Vec<Complex64> {
        let n = dims.len();
        let m: usize = dims.iter().product();
        let mut fi = vec![0; n];
        let mut xi = vec![0; n];
        (0..m)
            .map(|f| {
                crate::tensor::unravel(f, dims, &mut fi);
                (0..m)
                    .map(|x| {
                        crate::tensor::unravel(x, dims, &mut xi);
                        let phase: f64 = (0..n)
                            .map(|j| (fi[j] * xi[j]) as f64 / dims[j] as f64)
                            .sum();
                        Complex64::from_polar(values[x], -2.0 * std::f64::consts::PI * phase)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_and_round_trips() {
        let dims = [3, 4, 2];
        let values: Vec<f64> = (0..24).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let fft = NdFft::new(&dims);
        let spec = fft.forward_real(&values);
        let oracle = naive_dft(&values, &dims);
        for (a, b) in spec.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-10);
        }
        let mut back = spec.clone();
        fft.inverse(&mut back);
        for (a, &b) in back.iter().zip(&values) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }
}
