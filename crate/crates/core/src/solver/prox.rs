use nalgebra::DMatrix;

use crate::linalg;

/// Column-wise shrinkage: the minimizer of `tau ||Z||_{2,1} + 1/2 ||Z - W||_F^2`.
pub fn prox_l21(w: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    prox_l21_with_norm(w.clone(), tau).0
}

/// In-place [`prox_l21`], also returning `||Z||_{2,1}` of the result.
pub fn prox_l21_with_norm(mut w: DMatrix<f64>, tau: f64) -> (DMatrix<f64>, f64) {
    assert!(tau >= 0.0, "shrinkage threshold must be nonnegative");
    let mut total = 0.0;
    for mut col in w.column_iter_mut() {
        let norm = col.norm();
        if norm <= tau {
            col.fill(0.0);
        } else {
            col *= (norm - tau) / norm;
            total += norm - tau;
        }
    }
    (w, total)
}

/// Singular value soft-thresholding, returning the result and its nuclear norm.
pub fn svt(w: DMatrix<f64>, tau: f64) -> (DMatrix<f64>, f64) {
    assert!(tau >= 0.0, "shrinkage threshold must be nonnegative");
    let (rows, cols) = w.shape();
    let svd = linalg::thin_svd(&w);
    let (u, v) = (svd.u, svd.v);
    let shrunk: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| (s - tau).max(0.0))
        .collect();
    let kept: Vec<usize> = (0..shrunk.len()).filter(|&i| shrunk[i] > 0.0).collect();
    let nuclear = kept.iter().map(|&i| shrunk[i]).sum();
    if kept.is_empty() {
        return (DMatrix::zeros(rows, cols), 0.0);
    }
    let us = DMatrix::from_fn(rows, kept.len(), |r, c| u[(r, kept[c])] * shrunk[kept[c]]);
    let vt = DMatrix::from_fn(kept.len(), cols, |r, c| v[(c, kept[r])]);
    (us * vt, nuclear)
}

pub fn l21_norm(z: &DMatrix<f64>) -> f64 {
    z.column_iter().map(|c| c.norm()).sum()
}

pub fn nuclear_norm(z: &DMatrix<f64>) -> f64 {
    linalg::singular_values(z).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_threshold_is_identity() {
        let w = DMatrix::from_fn(4, 3, |r, c| (r as f64 - c as f64) * 0.7);
        assert_eq!(prox_l21(&w, 0.0), w);
    }

    #[test]
    fn columns_scale_or_vanish() {
        // column norms 2 and 0.4
        let w = DMatrix::from_column_slice(2, 2, &[1.2, 1.6, 0.0, 0.4]);
        let z = prox_l21(&w, 0.5);
        assert!((z[(0, 0)] - 0.9).abs() < 1e-15 && (z[(1, 0)] - 1.2).abs() < 1e-15);
        assert_eq!(z.column(1).norm(), 0.0);
    }

    #[test]
    fn svt_shrinks_singular_values() {
        let w = DMatrix::from_fn(6, 3, |r, c| ((r * 3 + c * 5) % 7) as f64 - 3.0);
        let s = linalg::singular_values(&w);
        let (z, nuc) = svt(w, 1.0);
        let t = linalg::singular_values(&z);
        let mut want: Vec<f64> = s.iter().map(|&x| (x - 1.0).max(0.0)).collect();
        let mut got: Vec<f64> = t.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((nuc - want.iter().sum::<f64>()).abs() < 1e-10);
        assert!((nuclear_norm(&z) - nuc).abs() < 1e-10);
    }
}
