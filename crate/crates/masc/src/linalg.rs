//! Small dense helpers on top of nalgebra.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Rebuild V·diag(λ)·Vᴴ.
pub fn from_eigen(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        let v = vectors.column(k);
        out += v * v.adjoint() * Complex64::new(lam, 0.0);
    }
    out
}

/// Unnormalized DFT matrix, F[m, k] = exp(−j2πmk/n).
pub fn dft_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |m, k| {
        Complex64::from_polar(1.0, -2.0 * PI * ((m * k) % n) as f64 / n as f64)
    })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn real_trace(m: &CMatrix) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// log₂ det(I + M) for a Hermitian PSD `M`.
pub fn log2_det_identity_plus(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.iter().map(|&v| (1.0 + v.max(0.0)).log2()).sum()
}
