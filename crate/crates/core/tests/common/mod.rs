#![allow(dead_code)]

use icnnm::nalgebra::DMatrix;
use icnnm::tensor::{ravel, unravel};
use icnnm::{DenseTensor, KernelShape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(dims: &[usize], rng: &mut impl Rng) -> DenseTensor {
    DenseTensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random orthogonal matrix from the QR factor of a Gaussian-ish matrix.
pub fn random_orthogonal(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    random_matrix(k, k, rng).qr().q()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// The literal double sum `sum_s L[i - s mod dims] X[s]`.
pub fn brute_convolve(l: &DenseTensor, x: &DenseTensor) -> DenseTensor {
    let dims = l.dims().to_vec();
    let kd = x.dims().to_vec();
    let n = dims.len();
    let mut s = vec![0; n];
    let mut src = vec![0; n];
    DenseTensor::from_fn(&dims, |i| {
        let mut acc = 0.0;
        for flat in 0..x.len() {
            unravel(flat, &kd, &mut s);
            for j in 0..n {
                src[j] = (i[j] + dims[j] - s[j]) % dims[j];
            }
            acc += l.values()[ravel(&src, &dims)] * x.values()[flat];
        }
        acc
    })
    .unwrap()
}

/// Explicit `A_k(L)` assembled column by column from brute-force shifts.
pub fn brute_conv_matrix(l: &DenseTensor, ks: &KernelShape) -> DMatrix<f64> {
    let k = ks.size();
    let mut a = DMatrix::zeros(l.len(), k);
    for c in 0..k {
        let mut e = vec![0.0; k];
        e[c] = 1.0;
        let x = DenseTensor::new(ks.dims().to_vec(), e).unwrap();
        a.set_column(c, &icnnm::nalgebra::DVector::from_column_slice(brute_convolve(l, &x).values()));
    }
    a
}

/// `(tensor dims, kernel dims)` with order 1..=3 and at most 6 per axis.
pub fn dims_and_kernel() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    prop::collection::vec(1usize..=6, 1..=3).prop_flat_map(|dims| {
        let kernel: Vec<_> = dims.iter().map(|&d| 1usize..=d).collect();
        (Just(dims), kernel)
    })
}

pub fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}
