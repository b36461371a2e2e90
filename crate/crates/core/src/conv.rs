//! Circular convolution, the convolution matrix `A_k(L)` and its adjoint.
//!
//! Column `s` of `A_k(L)` (kernel offsets in row-major order over the
//! kernel box, anchored at the origin) is `vec` of `L` circularly shifted
//! by `s`, so that `A_k(L) vec(X) = vec(L * X)`.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::NdFft;
use crate::tensor::{DenseTensor, KernelShape, SamplingMask};

/// Default cap on `m * k` for explicitly materialized convolution matrices.
pub const DEFAULT_EXPLICIT_CAP: usize = 1 << 26;

fn check_pair(dims: &[usize], ks: &KernelShape) -> Result<()> {
    ks.check_fits(dims)
}

/// Circular convolution `L * X`; `X` may be smaller than `L` along any axis.
pub fn circular_convolve(l: &DenseTensor, x: &DenseTensor) -> Result<DenseTensor> {
    if x.order() != l.order() {
        return Err(Error::OrderMismatch {
            tensor: l.order(),
            kernel: x.order(),
        });
    }
    let padded = x.zero_pad(l.dims())?;
    let fft = NdFft::new(l.dims());
    let mut fl = fft.forward_real(l.values());
    let fx = fft.forward_real(padded.values());
    fl.iter_mut().zip(&fx).for_each(|(a, b)| *a *= b);
    fft.inverse(&mut fl);
    Ok(DenseTensor::from_parts_unchecked(
        l.dims().to_vec(),
        fl.iter().map(|c| c.re).collect(),
    ))
}

/// Writes `dst[i] = src[i - shift]` (`backward == false`) or
/// `dst[i] = src[i + shift]` (`backward == true`), indices taken modulo dims.
pub fn circular_shift_into(
    src: &[f64],
    dims: &[usize],
    shift: &[usize],
    backward: bool,
    dst: &mut [f64],
) {
    fn rec(
        src: &[f64],
        dst: &mut [f64],
        dims: &[usize],
        shift: &[usize],
        backward: bool,
        src_off: usize,
        dst_off: usize,
    ) {
        let d = dims[0];
        let s = shift[0] % d;
        // source coordinate for output coordinate i is (i + lag) mod d
        let lag = if backward { s } else { (d - s) % d };
        if dims.len() == 1 {
            let (dst_line, src_line) = (&mut dst[dst_off..dst_off + d], &src[src_off..src_off + d]);
            dst_line[..d - lag].copy_from_slice(&src_line[lag..]);
            dst_line[d - lag..].copy_from_slice(&src_line[..lag]);
            return;
        }
        let inner: usize = dims[1..].iter().product();
        for i in 0..d {
            let si = (i + lag) % d;
            rec(
                src,
                dst,
                &dims[1..],
                &shift[1..],
                backward,
                src_off + si * inner,
                dst_off + i * inner,
            );
        }
    }
    rec(src, dst, dims, shift, backward, 0, 0);
}

/// Explicit convolution matrix together with its provenance.
#[derive(Debug, Clone)]
pub struct ConvMatrix {
    pub matrix: DMatrix<f64>,
    pub source_dims: Vec<usize>,
    pub kernel_shape: KernelShape,
}

impl ConvMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Builds `A_k(L)` from circular shifts, without any size check.
pub(crate) fn shift_matrix(values: &[f64], dims: &[usize], ks: &KernelShape) -> DMatrix<f64> {
    let m = values.len();
    let mut out = DMatrix::zeros(m, ks.size());
    let data = out.as_mut_slice();
    for (col, s) in ks.offsets().enumerate() {
        circular_shift_into(values, dims, &s, false, &mut data[col * m..(col + 1) * m]);
    }
    out
}

/// `A_k^*(W) = sum_s shift_{-s}(W[:, s])`, without any size check beyond shapes.
pub(crate) fn shift_adjoint(w: &DMatrix<f64>, dims: &[usize], ks: &KernelShape) -> Vec<f64> {
    let m = w.nrows();
    let mut acc = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    let data = w.as_slice();
    for (col, s) in ks.offsets().enumerate() {
        circular_shift_into(&data[col * m..(col + 1) * m], dims, &s, true, &mut tmp);
        acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a += t);
    }
    acc
}

pub fn conv_matrix(l: &DenseTensor, ks: &KernelShape) -> Result<ConvMatrix> {
    conv_matrix_with_cap(l, ks, DEFAULT_EXPLICIT_CAP)
}

/// Materializes `A_k(L)`, refusing when `m * k` exceeds `cap`.
pub fn conv_matrix_with_cap(l: &DenseTensor, ks: &KernelShape, cap: usize) -> Result<ConvMatrix> {
    check_pair(l.dims(), ks)?;
    let entries = l.len().saturating_mul(ks.size());
    if entries > cap {
        return Err(Error::TooLarge { entries, cap });
    }
    Ok(ConvMatrix {
        matrix: shift_matrix(l.values(), l.dims(), ks),
        source_dims: l.dims().to_vec(),
        kernel_shape: ks.clone(),
    })
}

/// Matrix-free `A_k(L) v`.
pub fn conv_apply(l: &DenseTensor, ks: &KernelShape, v: &[f64]) -> Result<Vec<f64>> {
    check_pair(l.dims(), ks)?;
    if v.len() != ks.size() {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {} for kernel {ks} (k = {})",
            v.len(),
            ks.size()
        )));
    }
    let kernel = DenseTensor::new(ks.dims().to_vec(), v.to_vec())?;
    Ok(circular_convolve(l, &kernel)?.into_values())
}

/// Hermitian adjoint `A_k^*` mapping an `m x k` matrix back to tensor space.
pub fn conv_adjoint(w: &DMatrix<f64>, ks: &KernelShape, dims: &[usize]) -> Result<DenseTensor> {
    check_pair(dims, ks)?;
    let m: usize = dims.iter().product();
    if w.nrows() != m || w.ncols() != ks.size() {
        return Err(Error::ShapeMismatch(format!(
            "matrix is {}x{}, expected {}x{}",
            w.nrows(),
            w.ncols(),
            m,
            ks.size()
        )));
    }
    DenseTensor::new(dims.to_vec(), shift_adjoint(w, dims, ks))
}

/// Mask matrix of the convolution sampling set, `A_k(Theta_Omega)`.
///
/// Built from exact shifts, so entries are exactly 0 or 1 and every column
/// holds `|Omega|` ones.
pub fn conv_sampling_mask(mask: &SamplingMask, ks: &KernelShape) -> Result<DMatrix<f64>> {
    check_pair(mask.dims(), ks)?;
    Ok(shift_matrix(mask.indicator(), mask.dims(), ks))
}

/// A bank of kernel-box filters applied to tensors of one fixed shape.
///
/// Applying the bank to `L` yields the `m x p` matrix whose column `i` is
/// `vec(L * kernel_i)`; with the columns of an orthogonal `K` as kernels this
/// is `A_k(L) K`. Kernel spectra are stored two per complex buffer (one in
/// the real part, one in the imaginary part), which halves both the memory
/// and the number of transforms since every signal involved is real.
pub struct KernelBank {
    dims: Vec<usize>,
    kernel_shape: KernelShape,
    count: usize,
    fft: NdFft,
    packed: Vec<Vec<Complex64>>,
}

impl KernelBank {
    /// `kernels` is a `k x p` matrix whose columns are `vec` of kernels.
    pub fn new(dims: &[usize], ks: &KernelShape, kernels: &DMatrix<f64>) -> Result<Self> {
        check_pair(dims, ks)?;
        let k = ks.size();
        if kernels.nrows() != k {
            return Err(Error::ShapeMismatch(format!(
                "kernel matrix has {} rows, kernel {ks} needs {k}",
                kernels.nrows()
            )));
        }
        let fft = NdFft::new(dims);
        let m = fft.len();
        let mut kidx = vec![0; ks.order()];
        let flat_positions: Vec<usize> = (0..k)
            .map(|f| {
                crate::tensor::unravel(f, ks.dims(), &mut kidx);
                crate::tensor::ravel(&kidx, dims)
            })
            .collect();
        let count = kernels.ncols();
        let packed = (0..count)
            .step_by(2)
            .map(|a| {
                let mut buf = vec![Complex64::default(); m];
                for (row, &pos) in flat_positions.iter().enumerate() {
                    let im = if a + 1 < count { kernels[(row, a + 1)] } else { 0.0 };
                    buf[pos] = Complex64::new(kernels[(row, a)], im);
                }
                fft.forward(&mut buf);
                buf
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            kernel_shape: ks.clone(),
            count,
            fft,
            packed,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn kernel_shape(&self) -> &KernelShape {
        &self.kernel_shape
    }

    /// Number of kernels `p`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn tensor_len(&self) -> usize {
        self.fft.len()
    }

    pub fn apply(&self, l: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.tensor_len(), self.count);
        self.apply_into(l, &mut out);
        out
    }

    /// Writes column `i` = `vec(L * kernel_i)` into `out`.
    pub fn apply_into(&self, l: &[f64], out: &mut DMatrix<f64>) {
        let m = self.tensor_len();
        assert_eq!(l.len(), m);
        assert_eq!(out.shape(), (m, self.count));
        let fl = self.fft.forward_real(l);
        let data = out.as_mut_slice();
        let mut buf = vec![Complex64::default(); m];
        for (pair, spec) in self.packed.iter().enumerate() {
            buf.iter_mut()
                .zip(fl.iter().zip(spec))
                .for_each(|(b, (x, y))| *b = x * y);
            self.fft.inverse(&mut buf);
            let a = 2 * pair;
            for (dst, c) in data[a * m..(a + 1) * m].iter_mut().zip(&buf) {
                *dst = c.re;
            }
            if a + 1 < self.count {
                for (dst, c) in data[(a + 1) * m..(a + 2) * m].iter_mut().zip(&buf) {
                    *dst = c.im;
                }
            }
        }
    }

    /// Adjoint of [`KernelBank::apply`]: `sum_i corr(V[:, i], kernel_i)`,
    /// which equals `A_k^*(V K^T)` for a basis bank.
    pub fn adjoint(&self, v: &DMatrix<f64>) -> Vec<f64> {
        let m = self.tensor_len();
        assert_eq!(v.shape(), (m, self.count));
        let data = v.as_slice();
        let mut acc = vec![Complex64::default(); m];
        let mut buf = vec![Complex64::default(); m];
        for (pair, spec) in self.packed.iter().enumerate() {
            let a = 2 * pair;
            let re = &data[a * m..(a + 1) * m];
            if a + 1 < self.count {
                let im = &data[(a + 1) * m..(a + 2) * m];
                buf.iter_mut()
                    .zip(re.iter().zip(im))
                    .for_each(|(b, (&x, &y))| *b = Complex64::new(x, y));
            } else {
                buf.iter_mut()
                    .zip(re)
                    .for_each(|(b, &x)| *b = Complex64::new(x, 0.0));
            }
            self.fft.forward(&mut buf);
            // Re(IFFT(C conj(P))) is the sum of both real correlations.
            acc.iter_mut()
                .zip(buf.iter().zip(spec))
                .for_each(|(s, (c, p))| *s += c * p.conj());
        }
        self.fft.inverse(&mut acc);
        acc.iter().map(|c| c.re).collect()
    }

    /// `||L * kernel_i||_F` for every kernel.
    pub fn response_norms(&self, l: &[f64]) -> Vec<f64> {
        let out = self.apply(l);
        out.column_iter().map(|c| c.norm()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(dims: &[usize], values: &[f64]) -> DenseTensor {
        DenseTensor::new(dims.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let l = t(&[3, 4], &(0..12).map(|i| i as f64 * 0.5 - 2.0).collect::<Vec<_>>());
        let x = DenseTensor::delta(&[2, 3]).unwrap();
        let out = circular_convolve(&l, &x).unwrap();
        for (a, b) in out.values().iter().zip(l.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_tensor_scales_by_kernel_sum() {
        let l = DenseTensor::filled(&[4, 5], 2.5).unwrap();
        let x = t(&[2, 2], &[1.0, -0.5, 3.0, 0.25]);
        let out = circular_convolve(&l, &x).unwrap();
        for v in out.values() {
            assert!((v - 2.5 * 3.75).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_errors() {
        let l = DenseTensor::zeros(&[3, 3]).unwrap();
        assert!(matches!(
            circular_convolve(&l, &DenseTensor::zeros(&[2]).unwrap()),
            Err(Error::OrderMismatch { .. })
        ));
        assert!(matches!(
            circular_convolve(&l, &DenseTensor::zeros(&[4, 1]).unwrap()),
            Err(Error::KernelTooLarge { .. })
        ));
        let ks = KernelShape::new(vec![2, 2]).unwrap();
        assert!(matches!(conv_apply(&l, &ks, &[1.0; 3]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(
            conv_matrix_with_cap(&l, &ks, 35),
            Err(Error::TooLarge { entries: 36, cap: 35 })
        ));
        assert!(conv_adjoint(&DMatrix::zeros(9, 3), &ks, &[3, 3]).is_err());
    }

    #[test]
    fn shift_directions() {
        let src = [0.0, 1.0, 2.0, 3.0];
        let mut dst = [0.0; 4];
        circular_shift_into(&src, &[4], &[1], false, &mut dst);
        assert_eq!(dst, [3.0, 0.0, 1.0, 2.0]);
        circular_shift_into(&src, &[4], &[1], true, &mut dst);
        assert_eq!(dst, [1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn zero_inputs_give_zero_outputs() {
        let ks = KernelShape::new(vec![2, 2]).unwrap();
        let zero = DenseTensor::zeros(&[3, 3]).unwrap();
        assert!(conv_matrix(&zero, &ks).unwrap().matrix.iter().all(|&v| v == 0.0));
        let l = t(&[3, 3], &[1.0; 9]);
        assert!(conv_apply(&l, &ks, &[0.0; 4]).unwrap().iter().all(|&v| v.abs() < 1e-15));
        let adj = conv_adjoint(&DMatrix::zeros(9, 4), &ks, &[3, 3]).unwrap();
        assert!(adj.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_and_empty_sampling_masks() {
        let ks = KernelShape::new(vec![2, 2]).unwrap();
        let full = SamplingMask::full(&[4, 5]).unwrap();
        assert!(conv_sampling_mask(&full, &ks).unwrap().iter().all(|&v| v == 1.0));
        let empty = SamplingMask::new(DenseTensor::zeros(&[4, 5]).unwrap()).unwrap();
        assert!(conv_sampling_mask(&empty, &ks).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kernel_bank_matches_explicit_product() {
        let dims = [5, 4];
        let ks = KernelShape::new(vec![2, 3]).unwrap();
        let l: Vec<f64> = (0..20).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        // five kernels (odd count exercises the unpaired tail)
        let kernels = DMatrix::from_fn(6, 5, |r, c| ((r * 5 + c * 3) % 4) as f64 - 1.5);
        let bank = KernelBank::new(&dims, &ks, &kernels).unwrap();
        let got = bank.apply(&l);
        let a = shift_matrix(&l, &dims, &ks);
        let want = &a * &kernels;
        assert!((&got - &want).abs().max() < 1e-10);

        let v = DMatrix::from_fn(20, 5, |r, c| ((r + 2 * c) % 5) as f64 - 2.0);
        let adj = bank.adjoint(&v);
        let want = shift_adjoint(&(&v * kernels.transpose()), &dims, &ks);
        for (x, y) in adj.iter().zip(&want) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
