//! Order-3 tensors, order-6 operators and the Einstein-product algebra.
//!
//! A [`Tensor3`] of shape `M x N x P` is stored row-major over `(i, j, k)`:
//! with 1-based math indices the storage offset is
//! `((i-1)·N + (j-1))·P + (k-1)`. An [`Operator6`] of shape
//! `M x N x P x M x N x P` is stored only through its flattening, the square
//! matrix with `flat[row(i,j,k), col(m,n,p)] = a_{ijkmnp}` under the same
//! offset map for rows and columns. With that convention the contraction
//! `A *3 X` over the trailing three modes is a plain matrix-vector product.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Sub};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Extents of the three modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape3 {
    pub m: usize,
    pub n: usize,
    pub p: usize,
}

impl Shape3 {
    pub fn new(m: usize, n: usize, p: usize) -> Result<Self> {
        let shape = Shape3 { m, n, p };
        if m == 0 || n == 0 || p == 0 {
            return Err(Error::InvalidShape(shape, "every extent must be positive"));
        }
        m.checked_mul(n)
            .and_then(|mn| mn.checked_mul(p))
            .ok_or(Error::InvalidShape(shape, "total size overflows"))?;
        Ok(shape)
    }

    pub fn cube(side: usize) -> Result<Self> {
        Shape3::new(side, side, side)
    }

    pub fn total(&self) -> usize {
        self.m * self.n * self.p
    }

    /// Storage offset of the 0-based multi-index `(i, j, k)`.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.p + k
    }

    /// Inverse of [`Shape3::offset`].
    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx % self.p;
        let ij = idx / self.p;
        (ij / self.n, ij % self.n, k)
    }
}

impl fmt::Display for Shape3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.m, self.n, self.p)
    }
}

fn check_shape(expected: Shape3, found: Shape3) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch { expected, found });
    }
    Ok(())
}

/// Dense real order-3 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: Shape3,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(shape: Shape3) -> Self {
        Tensor3 {
            shape,
            data: vec![0.0; shape.total()],
        }
    }

    pub fn from_vec(shape: Shape3, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.total() {
            return Err(Error::DimensionMismatch {
                context: "Tensor3::from_vec",
                expected: shape.total(),
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite tensor entry at offset {bad}"
            )));
        }
        Ok(Tensor3 { shape, data })
    }

    pub fn from_fn(shape: Shape3, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.total());
        for i in 0..shape.m {
            for j in 0..shape.n {
                for k in 0..shape.p {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { shape, data }
    }

    /// Coordinate tensor with a single one at 0-based `(i, j, k)`.
    pub fn unit(shape: Shape3, i: usize, j: usize, k: usize) -> Self {
        let mut t = Tensor3::zeros(shape);
        t.data[shape.offset(i, j, k)] = 1.0;
        t
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// `<self, other> = sum_ijk x_ijk y_ijk`, i.e. `tr(X^T *3 Y)`.
    pub fn inner(&self, other: &Tensor3) -> Result<f64> {
        check_shape(self.shape, other.shape)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn fro_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> Tensor3 {
        let mut t = self.clone();
        t.scale(alpha);
        t
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: f64, x: &Tensor3) -> Result<()> {
        check_shape(self.shape, x.shape)?;
        for (d, s) in self.data.iter_mut().zip(&x.data) {
            *d += alpha * s;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[self.shape.offset(i, j, k)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        let o = self.shape.offset(i, j, k);
        &mut self.data[o]
    }
}

impl Add for &Tensor3 {
    type Output = Tensor3;

    /// Panics on shape mismatch; use [`Tensor3::axpy`] for a checked update.
    fn add(self, rhs: &Tensor3) -> Tensor3 {
        assert_eq!(self.shape, rhs.shape, "shape mismatch in add");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Tensor3 {
            shape: self.shape,
            data,
        }
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;

    /// Panics on shape mismatch.
    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        assert_eq!(self.shape, rhs.shape, "shape mismatch in sub");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Tensor3 {
            shape: self.shape,
            data,
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Order-6 operator acting on [`Tensor3`] through `*3`, held as its
/// `(MNP) x (MNP)` flattening.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator6 {
    shape: Shape3,
    flat: Vec<f64>,
}

impl Operator6 {
    pub fn zeros(shape: Shape3) -> Self {
        let n = shape.total();
        Operator6 {
            shape,
            flat: vec![0.0; n * n],
        }
    }

    /// The unit tensor `I_N`.
    pub fn identity(shape: Shape3) -> Self {
        let mut op = Operator6::zeros(shape);
        let n = shape.total();
        for r in 0..n {
            op.flat[r * n + r] = 1.0;
        }
        op
    }

    /// Wraps a row-major flattened matrix of side `shape.total()`.
    pub fn from_flat(shape: Shape3, flat: Vec<f64>) -> Result<Self> {
        let n = shape.total();
        if flat.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "Operator6::from_flat",
                expected: n * n,
                found: flat.len(),
            });
        }
        Ok(Operator6 { shape, flat })
    }

    /// Builds the operator from a function of the flattened row and column
    /// offsets.
    pub fn from_fn(shape: Shape3, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let n = shape.total();
        let mut flat = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                flat.push(entry(r, c));
            }
        }
        Operator6 { shape, flat }
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    /// Side of the flattened matrix.
    pub fn dim(&self) -> usize {
        self.shape.total()
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_row(&self, r: usize) -> &[f64] {
        let n = self.dim();
        &self.flat[r * n..(r + 1) * n]
    }

    /// Entry `a_{ijk mnp}` for 0-based multi-indices.
    pub fn entry(&self, row: (usize, usize, usize), col: (usize, usize, usize)) -> f64 {
        let r = self.shape.offset(row.0, row.1, row.2);
        let c = self.shape.offset(col.0, col.1, col.2);
        self.flat[r * self.dim() + c]
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_row_major(self.dim(), self.dim(), self.flat.clone())
            .expect("operator flattening is square")
    }

    /// `A *3 X`.
    pub fn apply(&self, x: &Tensor3) -> Result<Tensor3> {
        check_shape(self.shape, x.shape)?;
        let n = self.dim();
        let data = self
            .flat
            .chunks_exact(n)
            .map(|row| dot(row, &x.data))
            .collect();
        Ok(Tensor3 {
            shape: self.shape,
            data,
        })
    }

    /// `A^T *3 X`, where `(A^T)_{mnp ijk} = a_{ijk mnp}`.
    pub fn apply_transpose(&self, x: &Tensor3) -> Result<Tensor3> {
        check_shape(self.shape, x.shape)?;
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (row, &xr) in self.flat.chunks_exact(n).zip(&x.data) {
            if xr == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * xr;
            }
        }
        Ok(Tensor3 {
            shape: self.shape,
            data: out,
        })
    }

    pub fn transpose(&self) -> Operator6 {
        let n = self.dim();
        let mut flat = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                flat[c * n + r] = self.flat[r * n + c];
            }
        }
        Operator6 {
            shape: self.shape,
            flat,
        }
    }

    /// `A *3 B` for two square order-6 operators.
    pub fn compose(&self, other: &Operator6) -> Result<Operator6> {
        check_shape(self.shape, other.shape)?;
        let prod = self.to_mat().matmul(&other.to_mat())?;
        Operator6::from_flat(self.shape, prod.as_slice().to_vec())
    }

    /// `tr(A) = sum_ijk a_{ijk ijk}`.
    pub fn trace(&self) -> f64 {
        let n = self.dim();
        (0..n).map(|r| self.flat[r * n + r]).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|r| (r + 1..n).all(|c| self.flat[r * n + c] == self.flat[c * n + r]))
    }

    /// Bytes held by the flattened storage.
    pub fn bytes(&self) -> usize {
        self.flat.len() * std::mem::size_of::<f64>()
    }
}

/// Ordered stack of equally shaped [`Tensor3`] frontal slices: a 4-mode
/// tensor such as a Krylov basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceStack4 {
    shape: Shape3,
    slices: Vec<Tensor3>,
}

impl SliceStack4 {
    pub fn new(shape: Shape3) -> Self {
        SliceStack4 {
            shape,
            slices: Vec::new(),
        }
    }

    pub fn from_slices(shape: Shape3, slices: Vec<Tensor3>) -> Result<Self> {
        for s in &slices {
            check_shape(shape, s.shape)?;
        }
        Ok(SliceStack4 { shape, slices })
    }

    pub fn push(&mut self, slice: Tensor3) -> Result<()> {
        check_shape(self.shape, slice.shape)?;
        self.slices.push(slice);
        Ok(())
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slice(&self, s: usize) -> &Tensor3 {
        &self.slices[s]
    }

    pub fn slices(&self) -> &[Tensor3] {
        &self.slices
    }

    pub fn truncate(&mut self, len: usize) {
        self.slices.truncate(len);
    }

    /// 4-mode product `stack x4 W`: output slice `r` is
    /// `sum_s w[r, s] · slice_s`.
    pub fn mode4_matmul(&self, w: &Mat) -> Result<SliceStack4> {
        if w.cols() != self.len() {
            return Err(Error::DimensionMismatch {
                context: "mode4_matmul",
                expected: self.len(),
                found: w.cols(),
            });
        }
        let slices = (0..w.rows())
            .map(|r| self.combine(w.row(r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SliceStack4 {
            shape: self.shape,
            slices,
        })
    }

    /// 4-mode vector product `stack x̄4 y = sum_s y[s] · slice_s`.
    pub fn mode4_vecmul(&self, y: &[f64]) -> Result<Tensor3> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: "mode4_vecmul",
                expected: self.len(),
                found: y.len(),
            });
        }
        self.combine(y)
    }

    fn combine(&self, coef: &[f64]) -> Result<Tensor3> {
        let mut out = Tensor3::zeros(self.shape);
        for (c, s) in coef.iter().zip(&self.slices) {
            if *c != 0.0 {
                out.axpy(*c, s)?;
            }
        }
        Ok(out)
    }

    /// Gram matrix `G[a, b] = <slice_a, slice_b>`.
    pub fn gram(&self) -> Mat {
        let k = self.len();
        let mut g = Mat::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = dot(&self.slices[a].data, &self.slices[b].data);
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: Shape3) -> Tensor3 {
        Tensor3::from_fn(shape, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn offsets_round_trip() {
        let s = Shape3::new(3, 4, 5).unwrap();
        for idx in 0..s.total() {
            let (i, j, k) = s.unravel(idx);
            assert_eq!(s.offset(i, j, k), idx);
        }
        // 1-based (2,3,4) -> ((2-1)*4 + (3-1))*5 + (4-1)
        assert_eq!(s.offset(1, 2, 3), 33);
    }

    #[test]
    fn zero_extent_is_rejected() {
        assert!(Shape3::new(0, 2, 2).is_err());
        assert!(Shape3::new(usize::MAX, 2, 2).is_err());
    }

    #[test]
    fn identity_and_zero_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Shape3::new(2, 3, 2).unwrap();
        let x = rand_tensor(&mut rng, s);
        let id = Operator6::identity(s);
        assert_eq!(id.apply(&x).unwrap(), x);
        assert_eq!(id.apply_transpose(&x).unwrap(), x);
        let op = Operator6::from_fn(s, |_, _| rng.gen_range(-1.0..1.0));
        assert!(op.apply(&Tensor3::zeros(s)).unwrap().is_zero());
    }

    #[test]
    fn shape_mismatch_reports_both_shapes() {
        let a = Operator6::identity(Shape3::new(2, 2, 2).unwrap());
        let x = Tensor3::zeros(Shape3::new(2, 2, 1).unwrap());
        let err = a.apply(&x).unwrap_err().to_string();
        assert!(err.contains("2x2x2") && err.contains("2x2x1"), "{err}");
    }

    #[test]
    fn symmetric_transpose_apply_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Shape3::new(2, 2, 3).unwrap();
        let n = s.total();
        let raw: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let op = Operator6::from_fn(s, |r, c| raw[r * n + c] + raw[c * n + r]);
        assert!(op.is_symmetric());
        let x = rand_tensor(&mut rng, s);
        assert_eq!(op.apply(&x).unwrap(), op.apply_transpose(&x).unwrap());
    }

    #[test]
    fn inner_and_norm_basics() {
        let s = Shape3::new(2, 2, 2).unwrap();
        let e = Tensor3::unit(s, 0, 0, 0);
        assert_eq!(e.inner(&e).unwrap(), 1.0);
        assert_eq!(e.fro_norm(), 1.0);
        assert_eq!(e.inner(&Tensor3::zeros(s)).unwrap(), 0.0);
        assert_eq!(Tensor3::zeros(s).fro_norm(), 0.0);
    }

    #[test]
    fn mode4_products() {
        let s = Shape3::new(1, 2, 2).unwrap();
        let a = Tensor3::from_vec(s, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor3::from_vec(s, vec![-1.0, 0.5, 0.0, 2.0]).unwrap();
        let stack = SliceStack4::from_slices(s, vec![a.clone(), b.clone()]).unwrap();

        let same = stack.mode4_matmul(&Mat::identity(2)).unwrap();
        assert_eq!(same, stack);

        let swap = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let swapped = stack.mode4_matmul(&swap).unwrap();
        assert_eq!(swapped.slice(0), &b);
        assert_eq!(swapped.slice(1), &a);

        assert_eq!(stack.mode4_vecmul(&[1.0, 0.0]).unwrap(), a);
        assert!(stack.mode4_vecmul(&[0.0, 0.0]).unwrap().is_zero());
        assert!(stack.mode4_vecmul(&[1.0]).is_err());
        assert!(stack.mode4_matmul(&Mat::identity(3)).is_err());
    }

    #[test]
    fn non_finite_entries_rejected() {
        let s = Shape3::new(1, 1, 2).unwrap();
        assert!(Tensor3::from_vec(s, vec![1.0, f64::NAN]).is_err());
    }
}
