//! Small dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Kronecker product of two 2x2 matrices, first factor acting on the first
/// qubit.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn hermitize4(m: &Mat4) -> Mat4 {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian 4x4 matrix. Eigenvalues are returned in
/// ascending order with matching eigenvector columns.
pub fn eigh4(m: &Mat4) -> ([f64; 4], Mat4) {
    let eig = SymmetricEigen::new(hermitize4(m));
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals = [0.0; 4];
    let mut vecs = Mat4::zeros();
    for (k, &i) in idx.iter().enumerate() {
        vals[k] = eig.eigenvalues[i];
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix of any size, unsorted.
pub fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(hermitize(m));
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Principal square root of a positive semidefinite Hermitian matrix; negative
/// eigenvalues from round-off are clipped to zero.
pub fn sqrtm_psd4(m: &Mat4) -> Mat4 {
    let (vals, vecs) = eigh4(m);
    let mut d = Mat4::zeros();
    for (k, v) in vals.iter().enumerate() {
        d[(k, k)] = c(v.max(0.0).sqrt(), 0.0);
    }
    vecs * d * vecs.adjoint()
}

pub fn to_dmatrix(m: &Mat4) -> DMatrix<C64> {
    DMatrix::from_iterator(4, 4, m.iter().copied())
}

pub fn trace4(m: &Mat4) -> C64 {
    m[(0, 0)] + m[(1, 1)] + m[(2, 2)] + m[(3, 3)]
}
