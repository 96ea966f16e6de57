//! Global Krylov processes under the Einstein product and the two
//! Tikhonov-regularized solvers built on them.
//!
//! Slices are orthonormal under the tensor inner product
//! `<X, Y> = tr(X^T *3 Y)`. Orientation of the 4-mode relations follows
//! [`SliceStack4::mode4_matmul`]: output slice `r` is `sum_s w[r, s] slice_s`,
//! so the Arnoldi relation reads `H *3 V_m = V_{m+1} x4 Ht_m^T` and the
//! Golub-Kahan pair reads `H *3 Q_m = P_{m+1} x4 Ct_m^T`,
//! `H^T *3 P_m = Q_m x4 C_m`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::hmatrix::HOperator;
use crate::linalg::{lstsq, Mat};
use crate::regularization::{discrepancy_select, gcv_minimize};
use crate::tensor::{Operator6, Shape3, SliceStack4, Tensor3};

/// Norm ratio below which a second Gram-Schmidt pass is applied.
const REORTH_RATIO: f64 = 0.7;
/// A new direction is treated as zero when its norm is at most this
/// fraction of its norm before orthogonalization.
const BREAKDOWN_TOL: f64 = 1e-14;

/// Linear operator on order-3 tensors, applied matrix-free.
pub trait LinearMap {
    fn shape(&self) -> Shape3;
    fn apply(&self, x: &Tensor3) -> Result<Tensor3>;
    fn apply_transpose(&self, x: &Tensor3) -> Result<Tensor3>;
}

impl LinearMap for Operator6 {
    fn shape(&self) -> Shape3 {
        Operator6::shape(self)
    }

    fn apply(&self, x: &Tensor3) -> Result<Tensor3> {
        Operator6::apply(self, x)
    }

    fn apply_transpose(&self, x: &Tensor3) -> Result<Tensor3> {
        Operator6::apply_transpose(self, x)
    }
}

impl LinearMap for HOperator {
    fn shape(&self) -> Shape3 {
        HOperator::shape(self)
    }

    fn apply(&self, x: &Tensor3) -> Result<Tensor3> {
        HOperator::apply(self, x)
    }

    fn apply_transpose(&self, x: &Tensor3) -> Result<Tensor3> {
        HOperator::apply_transpose(self, x)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn shape(&self) -> Shape3 {
        (**self).shape()
    }

    fn apply(&self, x: &Tensor3) -> Result<Tensor3> {
        (**self).apply(x)
    }

    fn apply_transpose(&self, x: &Tensor3) -> Result<Tensor3> {
        (**self).apply_transpose(x)
    }
}

fn check_shape(op: &(impl LinearMap + ?Sized), x: &Tensor3) -> Result<()> {
    if op.shape() != x.shape() {
        return Err(Error::ShapeMismatch {
            expected: op.shape(),
            found: x.shape(),
        });
    }
    Ok(())
}

/// Orthogonalizes `w` against `basis` (modified Gram-Schmidt), with one
/// classical re-orthogonalization pass when the norm drops below
/// `REORTH_RATIO` of its value on entry. Returns the coefficients, the
/// final norm and the entry norm.
fn orthogonalize(basis: &[Tensor3], w: &mut Tensor3) -> Result<(Vec<f64>, f64, f64)> {
    let before = w.fro_norm();
    let mut coef = Vec::with_capacity(basis.len());
    for v in basis {
        let h = v.inner(w)?;
        w.axpy(-h, v)?;
        coef.push(h);
    }
    let mut after = w.fro_norm();
    if after < REORTH_RATIO * before {
        let corr = basis
            .iter()
            .map(|v| v.inner(w))
            .collect::<Result<Vec<_>>>()?;
        for (v, c) in basis.iter().zip(&corr) {
            w.axpy(-c, v)?;
        }
        for (h, c) in coef.iter_mut().zip(&corr) {
            *h += c;
        }
        after = w.fro_norm();
    }
    Ok((coef, after, before))
}

/// `(k+1) x k` upper Hessenberg projection of the Arnoldi process.
#[derive(Debug, Clone, PartialEq)]
pub struct HessenbergFactor {
    h: Mat,
}

impl HessenbergFactor {
    pub fn matrix(&self) -> &Mat {
        &self.h
    }

    /// Number of Arnoldi steps `k`.
    pub fn steps(&self) -> usize {
        self.h.cols()
    }
}

/// Result of [`etga`].
#[derive(Debug, Clone)]
pub struct ArnoldiFactorization {
    /// `V_1 .. V_{k+1}`, or `V_1 .. V_k` after a breakdown.
    pub basis: SliceStack4,
    pub hessenberg: HessenbergFactor,
    /// Norm of the start tensor.
    pub beta: f64,
    pub breakdown: bool,
}

impl ArnoldiFactorization {
    pub fn steps(&self) -> usize {
        self.hessenberg.steps()
    }

    /// `|H *3 V_k - V_{k+1} x4 Ht_k^T|_F`.
    pub fn relation_residual(&self, op: &(impl LinearMap + ?Sized)) -> Result<f64> {
        let k = self.steps();
        let h = self.hessenberg.matrix();
        let rows = self.basis.len();
        let ht = h.submatrix(rows, k).transpose();
        let rhs = self.basis.mode4_matmul(&ht)?;
        let mut total = 0.0;
        for j in 0..k {
            let hv = op.apply(self.basis.slice(j))?;
            total += (&hv - rhs.slice(j)).fro_norm().powi(2);
        }
        Ok(total.sqrt())
    }
}

/// Einstein-product global Arnoldi process with `m` steps started from `v`.
pub fn etga(op: &(impl LinearMap + ?Sized), v: &Tensor3, m: usize) -> Result<ArnoldiFactorization> {
    check_shape(op, v)?;
    if m == 0 {
        return Err(Error::InvalidArgument("Arnoldi needs m >= 1".into()));
    }
    let beta = v.fro_norm();
    if beta == 0.0 {
        return Err(Error::ZeroStart);
    }
    let mut basis = SliceStack4::new(v.shape());
    basis.push(v.scaled(1.0 / beta))?;
    let mut h = Mat::zeros(m + 1, m);
    let mut steps = 0;
    let mut breakdown = false;
    for j in 0..m {
        let mut w = op.apply(basis.slice(j))?;
        let (coef, norm, before) = orthogonalize(basis.slices(), &mut w)?;
        for (i, c) in coef.into_iter().enumerate() {
            h[(i, j)] = c;
        }
        steps = j + 1;
        if norm <= BREAKDOWN_TOL * before {
            breakdown = true;
            break;
        }
        h[(j + 1, j)] = norm;
        w.scale(1.0 / norm);
        basis.push(w)?;
    }
    Ok(ArnoldiFactorization {
        basis,
        hessenberg: HessenbergFactor {
            h: h.submatrix(steps + 1, steps),
        },
        beta,
        breakdown,
    })
}

/// Lower bidiagonal projection of the Golub-Kahan process: diagonal
/// `rho_1..rho_k`, subdiagonal `sigma_2..sigma_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagFactor {
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl BidiagFactor {
    pub fn steps(&self) -> usize {
        self.rho.len()
    }

    /// `(k+1) x k` matrix `Ct_k`.
    pub fn c_tilde(&self) -> Mat {
        let k = self.steps();
        let mut c = Mat::zeros(k + 1, k);
        for j in 0..k {
            c[(j, j)] = self.rho[j];
            c[(j + 1, j)] = self.sigma[j];
        }
        c
    }

    /// Square `k x k` matrix `C_k`.
    pub fn c_square(&self) -> Mat {
        let k = self.steps();
        self.c_tilde().submatrix(k, k)
    }
}

/// Incremental Einstein-product global Golub-Kahan bidiagonalization:
/// `sigma_1 P_1 = F`, `rho_1 Q_1 = H^T P_1`,
/// `sigma_{j+1} P_{j+1} = H Q_j - rho_j P_j`,
/// `rho_{j+1} Q_{j+1} = H^T P_{j+1} - sigma_{j+1} Q_j`.
#[derive(Debug, Clone)]
pub struct GolubKahan<'a, L: LinearMap + ?Sized> {
    op: &'a L,
    p: SliceStack4,
    q: SliceStack4,
    bidiag: BidiagFactor,
    sigma1: f64,
    breakdown: bool,
}

impl<'a, L: LinearMap + ?Sized> GolubKahan<'a, L> {
    pub fn new(op: &'a L, f: &Tensor3) -> Result<Self> {
        check_shape(op, f)?;
        let sigma1 = f.fro_norm();
        if sigma1 == 0.0 {
            return Err(Error::ZeroStart);
        }
        let mut p = SliceStack4::new(f.shape());
        p.push(f.scaled(1.0 / sigma1))?;
        Ok(GolubKahan {
            op,
            p,
            q: SliceStack4::new(f.shape()),
            bidiag: BidiagFactor {
                rho: Vec::new(),
                sigma: Vec::new(),
            },
            sigma1,
            breakdown: false,
        })
    }

    /// Runs one more step. Returns `false` (and leaves the factorization
    /// unchanged where no new direction exists) once a breakdown occurred.
    pub fn step(&mut self) -> Result<bool> {
        if self.breakdown {
            return Ok(false);
        }
        let j = self.q.len();
        let mut w = self.op.apply_transpose(self.p.slice(j))?;
        let entry = w.fro_norm();
        if j > 0 {
            w.axpy(-self.bidiag.sigma[j - 1], self.q.slice(j - 1))?;
        }
        let (_, rho, _) = orthogonalize(self.q.slices(), &mut w)?;
        if rho <= BREAKDOWN_TOL * entry {
            self.breakdown = true;
            return Ok(false);
        }
        w.scale(1.0 / rho);
        self.q.push(w)?;
        self.bidiag.rho.push(rho);

        let mut z = self.op.apply(self.q.slice(j))?;
        let entry = z.fro_norm();
        z.axpy(-rho, self.p.slice(j))?;
        let (_, sigma, _) = orthogonalize(self.p.slices(), &mut z)?;
        if sigma <= BREAKDOWN_TOL * entry {
            self.bidiag.sigma.push(0.0);
            self.breakdown = true;
            return Ok(true);
        }
        z.scale(1.0 / sigma);
        self.p.push(z)?;
        self.bidiag.sigma.push(sigma);
        Ok(true)
    }

    pub fn steps(&self) -> usize {
        self.q.len()
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    pub fn p(&self) -> &SliceStack4 {
        &self.p
    }

    pub fn q(&self) -> &SliceStack4 {
        &self.q
    }

    pub fn bidiag(&self) -> &BidiagFactor {
        &self.bidiag
    }

    pub fn into_factorization(self) -> BidiagFactorization {
        BidiagFactorization {
            q: self.q,
            p: self.p,
            bidiag: self.bidiag,
            sigma1: self.sigma1,
            breakdown: self.breakdown,
        }
    }
}

/// Result of [`ggkb`].
#[derive(Debug, Clone)]
pub struct BidiagFactorization {
    /// `Q_1 .. Q_k`.
    pub q: SliceStack4,
    /// `P_1 .. P_{k+1}`; `P_{k+1}` is absent when `sigma_{k+1} = 0`.
    pub p: SliceStack4,
    pub bidiag: BidiagFactor,
    pub sigma1: f64,
    pub breakdown: bool,
}

impl BidiagFactorization {
    pub fn steps(&self) -> usize {
        self.bidiag.steps()
    }

    /// Residuals of `H *3 Q_k = P_{k+1} x4 Ct_k^T` and
    /// `H^T *3 P_k = Q_k x4 C_k`.
    pub fn relation_residuals(&self, op: &(impl LinearMap + ?Sized)) -> Result<(f64, f64)> {
        let k = self.steps();
        let ct = self.bidiag.c_tilde().submatrix(self.p.len(), k).transpose();
        let lhs = self.p.mode4_matmul(&ct)?;
        let mut r1 = 0.0;
        for j in 0..k {
            let hq = op.apply(self.q.slice(j))?;
            r1 += (&hq - lhs.slice(j)).fro_norm().powi(2);
        }
        let c = self.bidiag.c_square();
        let rhs = self.q.mode4_matmul(&c)?;
        let mut r2 = 0.0;
        for j in 0..k {
            let htp = op.apply_transpose(self.p.slice(j))?;
            r2 += (&htp - rhs.slice(j)).fro_norm().powi(2);
        }
        Ok((r1.sqrt(), r2.sqrt()))
    }
}

/// Einstein-product global Golub-Kahan bidiagonalization with `m` steps.
pub fn ggkb(op: &(impl LinearMap + ?Sized), f: &Tensor3, m: usize) -> Result<BidiagFactorization> {
    if m == 0 {
        return Err(Error::InvalidArgument("Golub-Kahan needs m >= 1".into()));
    }
    let mut gk = GolubKahan::new(op, f)?;
    for _ in 0..m {
        if !gk.step()? || gk.breakdown() {
            break;
        }
    }
    Ok(gk.into_factorization())
}

/// Minimizer of `|Ht y - beta e1|^2 + lambda |y|^2` through the stacked
/// least-squares problem `[Ht; sqrt(lambda) I] y = [beta e1; 0]`.
pub fn solve_reduced_gmres(h: &Mat, beta: f64, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let (r, k) = (h.rows(), h.cols());
    let mut stacked = Mat::zeros(r + k, k);
    for i in 0..r {
        for j in 0..k {
            stacked[(i, j)] = h[(i, j)];
        }
    }
    let damp = lambda.sqrt();
    for j in 0..k {
        stacked[(r + j, j)] = damp;
    }
    let mut rhs = vec![0.0; r + k];
    rhs[0] = beta;
    lstsq(&stacked, &rhs)
}

/// Minimizer of `|Ct y - sigma1 e1|^2 + lambda |y|^2` for the lower
/// bidiagonal `Ct`, by Givens rotations on `[Ct; sqrt(lambda) I]`.
pub fn solve_reduced_lsqr(c: &BidiagFactor, sigma1: f64, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let k = c.steps();
    let damp = lambda.sqrt();
    // Upper bidiagonal R: diagonal `diag`, superdiagonal `sup`.
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k.saturating_sub(1)];
    let mut rhs = vec![0.0; k];
    let mut rhobar = c.rho.first().copied().unwrap_or(0.0);
    let mut phibar = sigma1;
    for j in 0..k {
        // Fold the damping row into row j.
        let rhobar1 = rhobar.hypot(damp);
        let (cs1, _sn1) = if rhobar1 == 0.0 {
            (1.0, 0.0)
        } else {
            (rhobar / rhobar1, damp / rhobar1)
        };
        phibar *= cs1;
        // Eliminate the subdiagonal sigma_{j+1}.
        let beta = c.sigma[j];
        let rho = rhobar1.hypot(beta);
        if rho == 0.0 {
            return Err(Error::Singular("zero column in bidiagonal least squares"));
        }
        let cs = rhobar1 / rho;
        let sn = beta / rho;
        diag[j] = rho;
        rhs[j] = cs * phibar;
        phibar *= sn;
        if j + 1 < k {
            let alpha = c.rho[j + 1];
            sup[j] = sn * alpha;
            rhobar = -cs * alpha;
        }
    }
    let dmax = diag.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
    let mut y = vec![0.0; k];
    for j in (0..k).rev() {
        if diag[j].abs() <= f64::EPSILON * dmax * k as f64 {
            return Err(Error::Singular("rank-deficient bidiagonal least squares"));
        }
        let s = if j + 1 < k { sup[j] * y[j + 1] } else { 0.0 };
        y[j] = (rhs[j] - s) / diag[j];
    }
    Ok(y)
}

/// How the Tikhonov parameter `lambda` (weight of `|y|^2`) is chosen on
/// each projected problem.
#[derive(Debug, Clone, PartialEq)]
pub enum MuStrategy {
    Gcv,
    Fixed(f64),
    /// Discrepancy principle with the given relative noise level.
    Discrepancy(f64),
    /// Prescribed per-iteration values; the last value repeats.
    Schedule(Vec<f64>),
}

impl MuStrategy {
    fn select(&self, projected: &Mat, beta: f64, iteration: usize) -> Result<f64> {
        match self {
            MuStrategy::Gcv => Ok(gcv_minimize(projected, beta)?.lambda),
            MuStrategy::Fixed(v) => Ok(*v),
            MuStrategy::Discrepancy(nu) => Ok(discrepancy_select(projected, beta, *nu)?.lambda),
            MuStrategy::Schedule(vals) => vals
                .get(iteration)
                .or(vals.last())
                .copied()
                .ok_or_else(|| Error::InvalidArgument("empty lambda schedule".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Arnoldi steps per restart cycle (GMRES only).
    pub restart: usize,
    /// Relative-change tolerance.
    pub tau: f64,
    /// Relative residual tolerance `|F - H X| / |F|`; 0 disables the test.
    pub tol: f64,
    /// Outer cycles (GMRES) or Golub-Kahan steps (LSQR).
    pub maxit: usize,
    pub mu: MuStrategy,
}

impl SolverConfig {
    pub const DEFAULT_RESTART: usize = 10;
    pub const DEFAULT_TAU: f64 = 1e-12;
    pub const DEFAULT_TOL: f64 = 0.0;
    pub const DEFAULT_MAXIT: usize = 200;

    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 {
            return Err(Error::InvalidArgument("restart must be >= 1".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidArgument("tau must be positive".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidArgument("tol must be nonnegative".into()));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidArgument("maxit must be >= 1".into()));
        }
        match &self.mu {
            MuStrategy::Fixed(v) if !(*v >= 0.0) => {
                Err(Error::InvalidArgument("fixed lambda must be >= 0".into()))
            }
            MuStrategy::Discrepancy(nu) if !(*nu > 0.0) => Err(Error::InvalidArgument(
                "noise level must be positive".into(),
            )),
            MuStrategy::Schedule(v) if v.is_empty() || v.iter().any(|x| !(*x >= 0.0)) => Err(
                Error::InvalidArgument("lambda schedule must be nonempty and >= 0".into()),
            ),
            _ => Ok(()),
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            restart: Self::DEFAULT_RESTART,
            tau: Self::DEFAULT_TAU,
            tol: Self::DEFAULT_TOL,
            maxit: Self::DEFAULT_MAXIT,
            mu: MuStrategy::Gcv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    RelChange,
    Residual,
    MaxIter,
    Breakdown,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::RelChange => "relchange",
            Termination::Residual => "residual",
            Termination::MaxIter => "maxiter",
            Termination::Breakdown => "breakdown",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Tensor3,
    /// Restart cycles (GMRES) or Golub-Kahan steps (LSQR).
    pub outer_iterations: usize,
    /// Operator-building Krylov steps in total.
    pub inner_steps: usize,
    /// Selected `lambda` per outer iteration.
    pub lambda_history: Vec<f64>,
    /// `|F - H X| / |F|` per outer iteration (projected estimate for LSQR).
    pub residual_history: Vec<f64>,
    /// `|X_new - X_old| / |X_old|` per outer iteration.
    pub relchange_history: Vec<f64>,
    pub wall_time: f64,
    pub termination: Termination,
}

impl SolveReport {
    pub fn final_lambda(&self) -> Option<f64> {
        self.lambda_history.last().copied()
    }
}

fn relchange(new: &Tensor3, old: &Tensor3) -> f64 {
    let diff = (new - old).fro_norm();
    let base = old.fro_norm();
    if base > 0.0 {
        diff / base
    } else if new.fro_norm() > 0.0 {
        diff / new.fro_norm()
    } else {
        0.0
    }
}

/// Restarted global GMRES with Tikhonov regularization of each projected
/// problem.
pub fn gmres_tikhonov(
    op: &(impl LinearMap + ?Sized),
    f: &Tensor3,
    x0: &Tensor3,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    gmres_tikhonov_observed(op, f, x0, cfg, |_, _| {})
}

/// [`gmres_tikhonov`] calling `observe(iteration, iterate)` after every
/// restart cycle (1-based iteration count).
pub fn gmres_tikhonov_observed(
    op: &(impl LinearMap + ?Sized),
    f: &Tensor3,
    x0: &Tensor3,
    cfg: &SolverConfig,
    mut observe: impl FnMut(usize, &Tensor3),
) -> Result<SolveReport> {
    cfg.validate()?;
    check_shape(op, f)?;
    check_shape(op, x0)?;
    let start = Instant::now();
    let fnorm = f.fro_norm();
    let scale = if fnorm > 0.0 { fnorm } else { 1.0 };

    let mut x = x0.clone();
    let mut r = f - &op.apply(&x)?;
    let mut report = SolveReport {
        solution: x.clone(),
        outer_iterations: 0,
        inner_steps: 0,
        lambda_history: Vec::new(),
        residual_history: Vec::new(),
        relchange_history: Vec::new(),
        wall_time: 0.0,
        termination: Termination::MaxIter,
    };
    if r.fro_norm() == 0.0 {
        report.termination = Termination::Residual;
        report.wall_time = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    for outer in 0..cfg.maxit {
        let arnoldi = etga(op, &r, cfg.restart)?;
        report.inner_steps += arnoldi.steps();
        let h = arnoldi.hessenberg.matrix();
        let lambda = cfg.mu.select(h, arnoldi.beta, outer)?;
        let y = solve_reduced_gmres(h, arnoldi.beta, lambda)?;
        let k = arnoldi.steps();
        let mut x_new = x.clone();
        for (yj, v) in y.iter().zip(arnoldi.basis.slices().iter().take(k)) {
            x_new.axpy(*yj, v)?;
        }
        let change = relchange(&x_new, &x);
        r = f - &op.apply(&x_new)?;
        let res = r.fro_norm() / scale;

        report.outer_iterations = outer + 1;
        report.lambda_history.push(lambda);
        report.residual_history.push(res);
        report.relchange_history.push(change);
        x = x_new;
        observe(outer + 1, &x);

        if change <= cfg.tau {
            report.termination = Termination::RelChange;
            break;
        }
        if res <= cfg.tol || r.fro_norm() == 0.0 {
            report.termination = Termination::Residual;
            break;
        }
        if arnoldi.breakdown && k < cfg.restart && change == 0.0 {
            report.termination = Termination::Breakdown;
            break;
        }
    }
    report.solution = x;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Global LSQR with Tikhonov regularization: the bidiagonalization grows one
/// step per iteration, `lambda` is re-selected on every projected problem and
/// the iterate is `X_k = Q_k x̄4 y_k`.
pub fn lsqr_tikhonov(
    op: &(impl LinearMap + ?Sized),
    f: &Tensor3,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    lsqr_tikhonov_observed(op, f, cfg, |_, _| {})
}

/// [`lsqr_tikhonov`] calling `observe(step, iterate)` after every step.
pub fn lsqr_tikhonov_observed(
    op: &(impl LinearMap + ?Sized),
    f: &Tensor3,
    cfg: &SolverConfig,
    mut observe: impl FnMut(usize, &Tensor3),
) -> Result<SolveReport> {
    cfg.validate()?;
    check_shape(op, f)?;
    let start = Instant::now();
    let mut report = SolveReport {
        solution: Tensor3::zeros(f.shape()),
        outer_iterations: 0,
        inner_steps: 0,
        lambda_history: Vec::new(),
        residual_history: Vec::new(),
        relchange_history: Vec::new(),
        wall_time: 0.0,
        termination: Termination::MaxIter,
    };
    if f.fro_norm() == 0.0 {
        report.termination = Termination::Residual;
        return Ok(report);
    }
    let mut gk = GolubKahan::new(op, f)?;
    let sigma1 = gk.sigma1();
    let mut x = Tensor3::zeros(f.shape());

    for step in 0..cfg.maxit {
        let grew = gk.step()?;
        if !grew {
            report.termination = Termination::Breakdown;
            break;
        }
        let c = gk.bidiag();
        let ct = c.c_tilde();
        let lambda = cfg.mu.select(&ct, sigma1, step)?;
        let y = solve_reduced_lsqr(c, sigma1, lambda)?;
        let x_new = gk.q().mode4_vecmul(&y)?;
        let change = relchange(&x_new, &x);
        let proj = ct.matvec(&y)?;
        let res = proj
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 0 { v - sigma1 } else { *v })
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            / sigma1;

        report.outer_iterations = step + 1;
        report.inner_steps = gk.steps();
        report.lambda_history.push(lambda);
        report.residual_history.push(res);
        report.relchange_history.push(change);
        x = x_new;
        observe(step + 1, &x);

        if change <= cfg.tau {
            report.termination = Termination::RelChange;
            break;
        }
        if res <= cfg.tol {
            report.termination = Termination::Residual;
            break;
        }
        if gk.breakdown() {
            report.termination = Termination::Breakdown;
            break;
        }
    }
    report.solution = x;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> Shape3 {
        Shape3::new(2, 2, 2).unwrap()
    }

    #[test]
    fn identity_arnoldi_breaks_down_immediately() {
        let s = shape();
        let id = Operator6::identity(s);
        let v = Tensor3::from_fn(s, |i, j, k| (i + 2 * j + 3 * k) as f64 + 1.0);
        let ar = etga(&id, &v, 4).unwrap();
        assert!(ar.breakdown);
        assert_eq!(ar.steps(), 1);
        assert!((ar.hessenberg.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
        let v1 = ar.basis.slice(0);
        assert!((v1 - &v.scaled(1.0 / v.fro_norm())).fro_norm() < 1e-15);
    }

    #[test]
    fn zero_start_is_an_error() {
        let s = shape();
        let id = Operator6::identity(s);
        assert!(matches!(
            etga(&id, &Tensor3::zeros(s), 2),
            Err(Error::ZeroStart)
        ));
        assert!(matches!(
            ggkb(&id, &Tensor3::zeros(s), 2),
            Err(Error::ZeroStart)
        ));
    }

    #[test]
    fn identity_golub_kahan() {
        let s = shape();
        let id = Operator6::identity(s);
        let f = Tensor3::from_fn(s, |i, j, k| 1.0 + i as f64 - j as f64 * 0.5 + k as f64);
        let gk = ggkb(&id, &f, 3).unwrap();
        assert_eq!(gk.steps(), 1);
        assert!(gk.breakdown);
        assert!((gk.bidiag.rho[0] - 1.0).abs() < 1e-15);
        assert_eq!(gk.bidiag.sigma[0], 0.0);
        let fnorm = f.scaled(1.0 / f.fro_norm());
        assert_eq!(gk.p.slice(0), &fnorm);
        assert!((gk.q.slice(0) - &fnorm).fro_norm() < 1e-15);
    }

    #[test]
    fn reduced_problems_one_by_one() {
        let h = Mat::from_rows(&[vec![1.0], vec![0.0]]);
        assert!((solve_reduced_gmres(&h, 1.0, 0.0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((solve_reduced_gmres(&h, 1.0, 1.0).unwrap()[0] - 0.5).abs() < 1e-15);
        let c = BidiagFactor {
            rho: vec![1.0],
            sigma: vec![0.0],
        };
        assert!((solve_reduced_lsqr(&c, 1.0, 0.0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((solve_reduced_lsqr(&c, 1.0, 1.0).unwrap()[0] - 0.5).abs() < 1e-15);
        assert!(solve_reduced_lsqr(&c, 1.0, -1.0).is_err());
    }

    #[test]
    fn identity_solvers_recover_rhs() {
        let s = shape();
        let id = Operator6::identity(s);
        let f = Tensor3::from_fn(s, |i, j, k| (i * 4 + j * 2 + k) as f64 - 3.5);
        let cfg = SolverConfig {
            mu: MuStrategy::Fixed(0.0),
            tol: 1e-12,
            ..Default::default()
        };
        let g = gmres_tikhonov(&id, &f, &Tensor3::zeros(s), &cfg).unwrap();
        assert!((&g.solution - &f).fro_norm() < 1e-14);
        assert_eq!(g.outer_iterations, 1);
        let l = lsqr_tikhonov(&id, &f, &cfg).unwrap();
        assert!((&l.solution - &f).fro_norm() < 1e-14);
        assert_eq!(l.inner_steps, 1);
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            restart: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            mu: MuStrategy::Schedule(vec![]),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}
