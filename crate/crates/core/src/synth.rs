//! Synthetic targets: tensors of prescribed convolution rank, and
//! dead-leaves images as a stand-in for natural photographs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{conv_spectrum, DEFAULT_RANK_TOL};
use crate::tensor::{unravel, DenseTensor, KernelShape};

/// A sum of real sinusoids on the frequency lattice of `dims`, with
/// convolution rank at most `target_rank` for kernel `ks`.
///
/// Each non-constant atom occupies two conjugate frequencies and so adds at
/// most two to the rank; an odd rank adds a constant offset. When
/// `target_rank == k` the bound is vacuous and an unconstrained random
/// tensor is returned.
pub fn synth_low_conv_rank(
    dims: &[usize],
    ks: &KernelShape,
    target_rank: usize,
    seed: u64,
) -> Result<DenseTensor> {
    ks.check_fits(dims)?;
    let k = ks.size();
    if target_rank == 0 || target_rank > k {
        return Err(Error::InvalidArgument(format!(
            "target rank {target_rank} infeasible for kernel of size {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if target_rank == k {
        return DenseTensor::from_fn(dims, |_| rng.random::<f64>());
    }

    let n = dims.len();
    let m: usize = dims.iter().product();
    let negate = |f: &[usize]| -> Vec<usize> { (0..n).map(|j| (dims[j] - f[j]) % dims[j]).collect() };
    // frequencies equal to their own conjugate give rank-1 atoms; skip them
    let mut f = vec![0; n];
    let candidates: Vec<Vec<usize>> = (0..m)
        .filter_map(|flat| {
            unravel(flat, dims, &mut f);
            (negate(&f) != f).then(|| f.clone())
        })
        .collect();
    let atoms = target_rank / 2;
    if atoms > candidates.len() / 2 {
        return Err(Error::InvalidArgument(format!(
            "target rank {target_rank} needs {atoms} distinct frequencies, dims {dims:?} offer {}",
            candidates.len() / 2
        )));
    }
    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(atoms);
    while chosen.len() < atoms {
        let cand = &candidates[rng.random_range(0..candidates.len())];
        let neg = negate(cand);
        if !chosen.iter().any(|c| c == cand || *c == neg) {
            chosen.push(cand.clone());
        }
    }
    let offset = if target_rank % 2 == 1 {
        rng.random_range(0.5..1.0)
    } else {
        0.0
    };
    let params: Vec<(f64, f64)> = chosen
        .iter()
        .map(|_| (rng.random_range(0.5..1.0), rng.random_range(0.0..2.0 * PI)))
        .collect();
    let out = DenseTensor::from_fn(dims, |idx| {
        offset
            + chosen
                .iter()
                .zip(&params)
                .map(|(freq, &(amp, phase))| {
                    let t: f64 = (0..n)
                        .map(|j| (freq[j] * idx[j]) as f64 / dims[j] as f64)
                        .sum();
                    amp * (2.0 * PI * t + phase).cos()
                })
                .sum::<f64>()
    })?;
    let rank = conv_spectrum(&out, ks, DEFAULT_RANK_TOL)?.rank;
    if rank > target_rank {
        return Err(Error::Degenerate(format!(
            "synthesized tensor has convolution rank {rank} > {target_rank}"
        )));
    }
    Ok(out)
}

/// Dead-leaves image in `[0, 1]`: occluding discs with power-law radii and
/// gently shaded gray levels, the classic model reproducing the
/// scale-invariant statistics and sharp edges of natural images.
pub fn dead_leaves(height: usize, width: usize, seed: u64) -> Result<DenseTensor> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidDims(vec![height, width]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r_min, r_max) = (1.5f64, 0.4 * height.max(width) as f64);
    let mut values = vec![0.0; height * width];
    let mut covered = vec![false; height * width];
    let mut left = height * width;
    for _ in 0..200_000 {
        if left == 0 {
            break;
        }
        // density proportional to r^-3 via inverse transform
        let u: f64 = rng.random();
        let inv = r_min.powi(-2) - u * (r_min.powi(-2) - r_max.powi(-2));
        let r = inv.powf(-0.5);
        let cy = rng.random_range(-r..height as f64 + r);
        let cx = rng.random_range(-r..width as f64 + r);
        let base: f64 = rng.random_range(0.05..0.95);
        let (gy, gx) = (rng.random_range(-0.15..0.15) / r, rng.random_range(-0.15..0.15) / r);
        let y0 = (cy - r).floor().max(0.0) as usize;
        let y1 = ((cy + r).ceil().max(0.0) as usize).min(height);
        let x0 = (cx - r).floor().max(0.0) as usize;
        let x1 = ((cx + r).ceil().max(0.0) as usize).min(width);
        for y in y0..y1 {
            for x in x0..x1 {
                let (dy, dx) = (y as f64 - cy, x as f64 - cx);
                let p = y * width + x;
                if !covered[p] && dy * dy + dx * dx <= r * r {
                    covered[p] = true;
                    values[p] = (base + gy * dy + gx * dx).clamp(0.0, 1.0);
                    left -= 1;
                }
            }
        }
    }
    let blurred = blur3(&values, height, width);
    DenseTensor::new(vec![height, width], blurred)
}

/// Light [1 2 1]/4 separable smoothing with edge clamping (anti-aliasing).
fn blur3(values: &[f64], h: usize, w: usize) -> Vec<f64> {
    let at = |v: &[f64], y: isize, x: isize| {
        let y = y.clamp(0, h as isize - 1) as usize;
        let x = x.clamp(0, w as isize - 1) as usize;
        v[y * w + x]
    };
    let mut tmp = vec![0.0; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            tmp[y as usize * w + x as usize] =
                0.25 * at(values, y, x - 1) + 0.5 * at(values, y, x) + 0.25 * at(values, y, x + 1);
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            out[y as usize * w + x as usize] =
                0.25 * at(&tmp, y - 1, x) + 0.5 * at(&tmp, y, x) + 0.25 * at(&tmp, y + 1, x);
        }
    }
    out
}

/// Rectangular window of an order-2 tensor.
pub fn crop(img: &DenseTensor, top: usize, left: usize, height: usize, width: usize) -> Result<DenseTensor> {
    let [h, w] = img.dims() else {
        return Err(Error::ShapeMismatch(format!("crop needs an order-2 tensor, got {:?}", img.dims())));
    };
    if top + height > *h || left + width > *w {
        return Err(Error::InvalidArgument(format!(
            "crop {height}x{width} at ({top}, {left}) exceeds {h}x{w}"
        )));
    }
    DenseTensor::from_fn(&[height, width], |i| img.get(&[top + i[0], left + i[1]]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_constant() {
        let ks = KernelShape::new(vec![3, 3]).unwrap();
        let t = synth_low_conv_rank(&[6, 6], &ks, 1, 5).unwrap();
        let first = t.values()[0];
        assert!(t.values().iter().all(|&v| (v - first).abs() < 1e-12));
    }

    #[test]
    fn full_rank_request_is_unconstrained() {
        let ks = KernelShape::new(vec![2, 2]).unwrap();
        let t = synth_low_conv_rank(&[5, 5], &ks, 4, 1).unwrap();
        assert_eq!(conv_spectrum(&t, &ks, DEFAULT_RANK_TOL).unwrap().rank, 4);
    }

    #[test]
    fn infeasible_ranks() {
        let ks = KernelShape::new(vec![2, 2]).unwrap();
        assert!(synth_low_conv_rank(&[5, 5], &ks, 0, 1).is_err());
        assert!(synth_low_conv_rank(&[5, 5], &ks, 5, 1).is_err());
        // a 2-vector only has self-conjugate frequencies
        let k3 = KernelShape::new(vec![2]).unwrap();
        assert!(synth_low_conv_rank(&[2], &k3, 1, 1).is_ok());
        let k4 = KernelShape::new(vec![3]).unwrap();
        assert!(synth_low_conv_rank(&[3], &k4, 3, 1).is_ok());
    }

    #[test]
    fn deterministic_in_seed() {
        let ks = KernelShape::new(vec![4, 4]).unwrap();
        let a = synth_low_conv_rank(&[16, 16], &ks, 4, 7).unwrap();
        let b = synth_low_conv_rank(&[16, 16], &ks, 4, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(dead_leaves(20, 30, 3).unwrap(), dead_leaves(20, 30, 3).unwrap());
    }

    #[test]
    fn dead_leaves_in_unit_range() {
        let img = dead_leaves(64, 64, 11).unwrap();
        assert!(img.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let mean = img.sum() / img.len() as f64;
        let var = img.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / img.len() as f64;
        assert!(var > 1e-3);
        let c = crop(&img, 10, 20, 8, 4).unwrap();
        assert_eq!(c.get(&[1, 2]), img.get(&[11, 22]));
        assert!(crop(&img, 60, 0, 8, 4).is_err());
    }
}
