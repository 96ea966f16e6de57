//! Small dense linear algebra for the projected problems.
//!
//! Everything here works on [`Mat`], a row-major `f64` matrix. Sizes are
//! those of Krylov projections (a few hundred at most), so the kernels are
//! plain loops: Householder least squares, LU with partial pivoting and a
//! Golub-Reinsch SVD (Householder bidiagonalization followed by implicitly
//! shifted QR sweeps).

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::from_row_major",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "Mat::matmul",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::matvec",
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Copy of the top-left `rows x cols` block.
    pub fn submatrix(&self, rows: usize, cols: usize) -> Mat {
        let mut out = Mat::zeros(rows, cols);
        for i in 0..rows.min(self.rows) {
            for j in 0..cols.min(self.cols) {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Solves `min ||a x - b||_2` for a tall matrix with full column rank using
/// Householder reflections.
pub fn lstsq(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            context: "lstsq rhs",
            expected: m,
            found: b.len(),
        });
    }
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "lstsq needs rows >= cols, got {m}x{n}"
        )));
    }
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut v = vec![0.0; m];
    for k in 0..n {
        let norm = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        for i in k..m {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..m).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i] * r[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                r[(i, j)] -= f * v[i];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i] * rhs[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            rhs[i] -= f * v[i];
        }
    }
    let dmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let cutoff = dmax * f64::EPSILON * n as f64;
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let d = r[(i, i)];
        if d.abs() <= cutoff || d == 0.0 {
            return Err(Error::Singular("rank-deficient least-squares matrix"));
        }
        let s: f64 = (i + 1..n).map(|j| r[(i, j)] * x[j]).sum();
        x[i] = (rhs[i] - s) / d;
    }
    Ok(x)
}

/// Solves the square system `a x = b` by LU with partial pivoting.
pub fn lu_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "lu_solve square",
            expected: n,
            found: a.cols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "lu_solve rhs",
            expected: n,
            found: b.len(),
        });
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let (piv, pval) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if pval == 0.0 {
            return Err(Error::Singular("zero pivot in LU"));
        }
        if piv != k {
            for j in 0..n {
                lu.data.swap(k * n + j, piv * n + j);
            }
            x.swap(k, piv);
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / d;
            if l == 0.0 {
                continue;
            }
            lu[(i, k)] = l;
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= l * u;
            }
            x[i] -= l * x[k];
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| lu[(i, j)] * x[j]).sum();
        x[i] = (x[i] - s) / lu[(i, i)];
    }
    Ok(x)
}

/// Thin singular value decomposition `a = u diag(s) v^T` of a matrix with
/// `rows >= cols`. Singular values are sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

/// Golub-Reinsch SVD for `rows >= cols`.
pub fn svd(a: &Mat) -> Result<Svd> {
    let m = a.rows();
    let n = a.cols();
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "svd needs rows >= cols, got {m}x{n}"
        )));
    }
    if n == 0 {
        return Ok(Svd {
            u: Mat::zeros(m, 0),
            s: Vec::new(),
            v: Mat::zeros(0, 0),
        });
    }
    let mut a = a.clone();
    let nu = n;
    let mut s = vec![0.0f64; (m + 1).min(n)];
    let mut u = Mat::zeros(m, nu);
    let mut v = Mat::zeros(n, n);
    let mut e = vec![0.0f64; n];
    let mut work = vec![0.0f64; m];

    // Householder reduction to bidiagonal form: diagonal in s, superdiagonal in e.
    let nct = (m - 1).min(n);
    let nrt = (n as isize - 2).min(m as isize).max(0) as usize;
    for k in 0..nct.max(nrt) {
        if k < nct {
            s[k] = 0.0;
            for i in k..m {
                s[k] = s[k].hypot(a[(i, k)]);
            }
            if s[k] != 0.0 {
                if a[(k, k)] < 0.0 {
                    s[k] = -s[k];
                }
                for i in k..m {
                    a[(i, k)] /= s[k];
                }
                a[(k, k)] += 1.0;
            }
            s[k] = -s[k];
        }
        for j in k + 1..n {
            if k < nct && s[k] != 0.0 {
                let mut t = 0.0;
                for i in k..m {
                    t += a[(i, k)] * a[(i, j)];
                }
                t = -t / a[(k, k)];
                for i in k..m {
                    let aik = a[(i, k)];
                    a[(i, j)] += t * aik;
                }
            }
            e[j] = a[(k, j)];
        }
        if k < nct {
            for i in k..m {
                u[(i, k)] = a[(i, k)];
            }
        }
        if k < nrt {
            e[k] = 0.0;
            for i in k + 1..n {
                e[k] = e[k].hypot(e[i]);
            }
            if e[k] != 0.0 {
                if e[k + 1] < 0.0 {
                    e[k] = -e[k];
                }
                let ek = e[k];
                for ei in e.iter_mut().take(n).skip(k + 1) {
                    *ei /= ek;
                }
                e[k + 1] += 1.0;
            }
            e[k] = -e[k];
            if k + 1 < m && e[k] != 0.0 {
                for w in work.iter_mut().take(m).skip(k + 1) {
                    *w = 0.0;
                }
                for j in k + 1..n {
                    for i in k + 1..m {
                        work[i] += e[j] * a[(i, j)];
                    }
                }
                for j in k + 1..n {
                    let t = -e[j] / e[k + 1];
                    for i in k + 1..m {
                        a[(i, j)] += t * work[i];
                    }
                }
            }
            for i in k + 1..n {
                v[(i, k)] = e[i];
            }
        }
    }

    let mut p = n.min(m + 1);
    if nct < n {
        s[nct] = a[(nct, nct)];
    }
    if m < p {
        s[p - 1] = 0.0;
    }
    if nrt + 1 < p {
        e[nrt] = a[(nrt, p - 1)];
    }
    e[p - 1] = 0.0;

    // Accumulate U.
    for j in nct..nu {
        for i in 0..m {
            u[(i, j)] = 0.0;
        }
        u[(j, j)] = 1.0;
    }
    for k in (0..nct).rev() {
        if s[k] != 0.0 {
            for j in k + 1..nu {
                let mut t = 0.0;
                for i in k..m {
                    t += u[(i, k)] * u[(i, j)];
                }
                t = -t / u[(k, k)];
                for i in k..m {
                    let uik = u[(i, k)];
                    u[(i, j)] += t * uik;
                }
            }
            for i in k..m {
                u[(i, k)] = -u[(i, k)];
            }
            u[(k, k)] += 1.0;
            for i in 0..k.saturating_sub(1) {
                u[(i, k)] = 0.0;
            }
        } else {
            for i in 0..m {
                u[(i, k)] = 0.0;
            }
            u[(k, k)] = 1.0;
        }
    }

    // Accumulate V.
    for k in (0..n).rev() {
        if k < nrt && e[k] != 0.0 {
            for j in k + 1..nu {
                let mut t = 0.0;
                for i in k + 1..n {
                    t += v[(i, k)] * v[(i, j)];
                }
                t = -t / v[(k + 1, k)];
                for i in k + 1..n {
                    let vik = v[(i, k)];
                    v[(i, j)] += t * vik;
                }
            }
        }
        for i in 0..n {
            v[(i, k)] = 0.0;
        }
        v[(k, k)] = 1.0;
    }

    // Implicit-shift QR on the bidiagonal.
    let pp = p - 1;
    let eps = f64::EPSILON;
    let tiny = 2f64.powi(-966);
    let max_sweeps = 75 * n.max(10);
    let mut sweeps = 0usize;
    while p > 0 {
        if sweeps > max_sweeps {
            return Err(Error::Singular("SVD did not converge"));
        }
        // k: largest index with negligible e[k], or -1.
        let mut k: isize = p as isize - 2;
        while k >= 0 {
            let ku = k as usize;
            if e[ku].abs() <= tiny + eps * (s[ku].abs() + s[ku + 1].abs()) {
                e[ku] = 0.0;
                break;
            }
            k -= 1;
        }
        let kase;
        if k == p as isize - 2 {
            kase = 4;
        } else {
            let mut ks: isize = p as isize - 1;
            while ks > k {
                let ksu = ks as usize;
                let t = (if ksu != p { e[ksu].abs() } else { 0.0 })
                    + (if ks != k + 1 { e[ksu - 1].abs() } else { 0.0 });
                if s[ksu].abs() <= tiny + eps * t {
                    s[ksu] = 0.0;
                    break;
                }
                ks -= 1;
            }
            if ks == k {
                kase = 3;
            } else if ks == p as isize - 1 {
                kase = 1;
            } else {
                kase = 2;
                k = ks;
            }
        }
        let k = (k + 1) as usize;

        match kase {
            // Deflate negligible s[p-1].
            1 => {
                let mut f = e[p - 2];
                e[p - 2] = 0.0;
                for j in (k..=p - 2).rev() {
                    let t = s[j].hypot(f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    if j != k {
                        f = -sn * e[j - 1];
                        e[j - 1] *= cs;
                    }
                    for i in 0..n {
                        let t = cs * v[(i, j)] + sn * v[(i, p - 1)];
                        v[(i, p - 1)] = -sn * v[(i, j)] + cs * v[(i, p - 1)];
                        v[(i, j)] = t;
                    }
                }
            }
            // Split at negligible s[k-1].
            2 => {
                let mut f = e[k - 1];
                e[k - 1] = 0.0;
                for j in k..p {
                    let t = s[j].hypot(f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    f = -sn * e[j];
                    e[j] *= cs;
                    for i in 0..m {
                        let t = cs * u[(i, j)] + sn * u[(i, k - 1)];
                        u[(i, k - 1)] = -sn * u[(i, j)] + cs * u[(i, k - 1)];
                        u[(i, j)] = t;
                    }
                }
            }
            // One QR sweep.
            3 => {
                let scale = s[p - 1]
                    .abs()
                    .max(s[p - 2].abs())
                    .max(e[p - 2].abs())
                    .max(s[k].abs())
                    .max(e[k].abs());
                let sp = s[p - 1] / scale;
                let spm1 = s[p - 2] / scale;
                let epm1 = e[p - 2] / scale;
                let sk = s[k] / scale;
                let ek = e[k] / scale;
                let b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
                let c = (sp * epm1) * (sp * epm1);
                let mut shift = 0.0;
                if b != 0.0 || c != 0.0 {
                    shift = (b * b + c).sqrt();
                    if b < 0.0 {
                        shift = -shift;
                    }
                    shift = c / (b + shift);
                }
                let mut f = (sk + sp) * (sk - sp) + shift;
                let mut g = sk * ek;
                for j in k..p - 1 {
                    let mut t = f.hypot(g);
                    let mut cs = f / t;
                    let mut sn = g / t;
                    if j != k {
                        e[j - 1] = t;
                    }
                    f = cs * s[j] + sn * e[j];
                    e[j] = cs * e[j] - sn * s[j];
                    g = sn * s[j + 1];
                    s[j + 1] *= cs;
                    for i in 0..n {
                        t = cs * v[(i, j)] + sn * v[(i, j + 1)];
                        v[(i, j + 1)] = -sn * v[(i, j)] + cs * v[(i, j + 1)];
                        v[(i, j)] = t;
                    }
                    t = f.hypot(g);
                    cs = f / t;
                    sn = g / t;
                    s[j] = t;
                    f = cs * e[j] + sn * s[j + 1];
                    s[j + 1] = -sn * e[j] + cs * s[j + 1];
                    g = sn * e[j + 1];
                    e[j + 1] *= cs;
                    if j < m - 1 {
                        for i in 0..m {
                            t = cs * u[(i, j)] + sn * u[(i, j + 1)];
                            u[(i, j + 1)] = -sn * u[(i, j)] + cs * u[(i, j + 1)];
                            u[(i, j)] = t;
                        }
                    }
                }
                e[p - 2] = f;
                sweeps += 1;
            }
            // Converged singular value: make it positive and sort.
            _ => {
                let mut k = k;
                if s[k] <= 0.0 {
                    s[k] = if s[k] < 0.0 { -s[k] } else { 0.0 };
                    for i in 0..=pp {
                        v[(i, k)] = -v[(i, k)];
                    }
                }
                while k < pp {
                    if s[k] >= s[k + 1] {
                        break;
                    }
                    s.swap(k, k + 1);
                    if k < n - 1 {
                        for i in 0..n {
                            let t = v[(i, k + 1)];
                            v[(i, k + 1)] = v[(i, k)];
                            v[(i, k)] = t;
                        }
                    }
                    if k < m - 1 {
                        for i in 0..m {
                            let t = u[(i, k + 1)];
                            u[(i, k + 1)] = u[(i, k)];
                            u[(i, k)] = t;
                        }
                    }
                    k += 1;
                }
                sweeps = 0;
                p -= 1;
            }
        }
    }
    s.truncate(n);
    Ok(Svd { u, s, v })
}
