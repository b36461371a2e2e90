//! Dense decompositions. Matrices live in `nalgebra` containers; the
//! factorizations themselves run on `faer`.

use faer::Mat;
use nalgebra::{DMatrix, DVector};

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin SVD `A = U diag(s) V^T` with `s` nonincreasing.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn thin_svd(a: &DMatrix<f64>) -> ThinSvd {
    let (m, n) = a.shape();
    let p = m.min(n);
    if p == 0 {
        return ThinSvd {
            u: DMatrix::zeros(m, 0),
            singular_values: DVector::zeros(0),
            v: DMatrix::zeros(n, 0),
        };
    }
    let svd = to_faer(a)
        .thin_svd()
        .expect("SVD of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    ThinSvd {
        u: DMatrix::from_fn(m, p, |i, j| u[(i, j)]),
        singular_values: DVector::from_fn(p, |i, _| s[i]),
        v: DMatrix::from_fn(n, p, |i, j| v[(i, j)]),
    }
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    let p = a.nrows().min(a.ncols());
    if p == 0 {
        return DVector::zeros(0);
    }
    let s = to_faer(a)
        .singular_values()
        .expect("SVD of a finite matrix converges");
    let mut out = DVector::from_vec(s);
    out.as_mut_slice().sort_by(|x, y| y.total_cmp(x));
    out
}

/// Eigenpairs of a symmetric matrix, eigenvalues nonincreasing.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigendecomposition converges");
    let (s, u) = (eig.S().column_vector(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
    let values = order.iter().map(|&i| s[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    (values, vectors)
}
