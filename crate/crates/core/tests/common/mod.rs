#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tensor_rbf::linalg::Mat;
use tensor_rbf::{Operator6, Shape3, Tensor3};

pub fn random_op(rng: &mut ChaCha8Rng, s: Shape3, shift: f64) -> Operator6 {
    let n = s.total();
    Operator6::from_fn(s, |r, c| {
        rng.gen_range(-1.0..1.0) / (n as f64).sqrt() + if r == c { shift } else { 0.0 }
    })
}

pub fn random_tensor(rng: &mut ChaCha8Rng, s: Shape3) -> Tensor3 {
    Tensor3::from_fn(s, |_, _, _| rng.gen_range(-1.0..1.0))
}

pub fn flat(op: &Operator6) -> DMatrix<f64> {
    let n = op.dim();
    DMatrix::from_row_slice(n, n, op.flat())
}

pub fn vecof(t: &Tensor3) -> DVector<f64> {
    DVector::from_column_slice(t.as_slice())
}

/// Classical Gram-Schmidt applied twice.
pub fn cgs2(basis: &[DVector<f64>], w: &mut DVector<f64>) -> Vec<f64> {
    let mut coef = vec![0.0; basis.len()];
    for _ in 0..2 {
        let c: Vec<f64> = basis.iter().map(|v| v.dot(w)).collect();
        for (v, ci) in basis.iter().zip(&c) {
            *w -= v * *ci;
        }
        for (a, b) in coef.iter_mut().zip(c) {
            *a += b;
        }
    }
    coef
}

/// Matrix Arnoldi: returns the basis and the (m+1) x m Hessenberg matrix.
pub fn arnoldi(a: &DMatrix<f64>, v: &DVector<f64>, m: usize) -> (Vec<DVector<f64>>, DMatrix<f64>) {
    let mut basis = vec![v / v.norm()];
    let mut h = DMatrix::zeros(m + 1, m);
    for j in 0..m {
        let mut w = a * &basis[j];
        let c = cgs2(&basis, &mut w);
        for (i, ci) in c.into_iter().enumerate() {
            h[(i, j)] = ci;
        }
        h[(j + 1, j)] = w.norm();
        basis.push(w / h[(j + 1, j)]);
    }
    (basis, h)
}

/// Matrix Golub-Kahan with full reorthogonalization: P, Q, rho, sigma_2...
pub fn golub_kahan(
    a: &DMatrix<f64>,
    f: &DVector<f64>,
    m: usize,
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<f64>, Vec<f64>) {
    let mut p = vec![f / f.norm()];
    let mut q: Vec<DVector<f64>> = Vec::new();
    let (mut rho, mut sigma) = (Vec::new(), Vec::new());
    for j in 0..m {
        let mut w = a.transpose() * &p[j];
        if j > 0 {
            w -= &q[j - 1] * sigma[j - 1];
        }
        cgs2(&q, &mut w);
        rho.push(w.norm());
        q.push(w / rho[j]);
        let mut z = a * &q[j] - &p[j] * rho[j];
        cgs2(&p, &mut z);
        sigma.push(z.norm());
        p.push(z / sigma[j]);
    }
    (p, q, rho, sigma)
}

/// Minimizer of |M y - b e1|^2 + lambda |y|^2 through the normal equations.
pub fn tikhonov_normal(m: &DMatrix<f64>, b: f64, lambda: f64) -> DVector<f64> {
    let mut rhs = DVector::zeros(m.nrows());
    rhs[0] = b;
    let k = m.ncols();
    let lhs = m.transpose() * m + DMatrix::identity(k, k) * lambda;
    lhs.lu().solve(&(m.transpose() * rhs)).unwrap()
}

/// Same minimizer through the SVD of the stacked system.
pub fn tikhonov_stacked(m: &DMatrix<f64>, b: f64, lambda: f64) -> DVector<f64> {
    let (r, k) = m.shape();
    let mut st = DMatrix::zeros(r + k, k);
    st.view_mut((0, 0), (r, k)).copy_from(m);
    for j in 0..k {
        st[(r + j, j)] = lambda.sqrt();
    }
    let mut rhs = DVector::zeros(r + k);
    rhs[0] = b;
    st.svd(true, true).solve(&rhs, 1e-300).unwrap()
}

pub fn to_nalgebra(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
