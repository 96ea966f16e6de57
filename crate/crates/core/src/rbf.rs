//! Multiquadric kernel, Helmholtz collocation operators and manufactured
//! right-hand sides.

use crate::collocation::{Point, PointKind, PointSet};
use crate::error::{Error, Result};
use crate::tensor::{Operator6, Tensor3};

/// Multiquadric `phi(r) = sqrt(1 + eps^2 r^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MqKernel {
    epsilon: f64,
}

impl MqKernel {
    pub const DEFAULT_EPSILON: f64 = 1.0;

    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "shape parameter must be positive, got {epsilon}"
            )));
        }
        Ok(MqKernel { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        (1.0 + e2 * r * r).sqrt()
    }

    /// `phi'(r) / r = eps^2 / phi(r)`, finite at `r = 0`.
    #[inline]
    pub fn dphi_over_r(&self, r: f64) -> f64 {
        self.epsilon * self.epsilon / self.eval(r)
    }

    /// 3D Laplacian `eps^2 (3 + 2 eps^2 r^2) / phi^3`.
    #[inline]
    pub fn laplacian(&self, r: f64) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        let phi = self.eval(r);
        e2 * (3.0 + 2.0 * e2 * r * r) / (phi * phi * phi)
    }
}

impl Default for MqKernel {
    fn default() -> Self {
        MqKernel {
            epsilon: Self::DEFAULT_EPSILON,
        }
    }
}

/// Sum of Gaussians `u(x) = sum_j exp(-|x - c_j|^2 / sigma_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    terms: Vec<([f64; 3], f64)>,
}

impl ExactSolution {
    pub fn new(terms: Vec<([f64; 3], f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument(
                "exact solution needs at least one term".into(),
            ));
        }
        if let Some((_, s)) = terms.iter().find(|(_, s)| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "gaussian width must be positive, got {s}"
            )));
        }
        Ok(ExactSolution { terms })
    }

    pub fn gaussian(center: [f64; 3], sigma: f64) -> Result<Self> {
        ExactSolution::new(vec![(center, sigma)])
    }

    pub fn terms(&self) -> &[([f64; 3], f64)] {
        &self.terms
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|&(c, s)| (-dist2(x, c) / s).exp())
            .sum()
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for &(c, s) in &self.terms {
            let u = (-dist2(x, c) / s).exp();
            for a in 0..3 {
                g[a] += -2.0 * (x[a] - c[a]) / s * u;
            }
        }
        g
    }

    /// `u (4 |x-c|^2 / sigma^2 - 6 / sigma)` summed over terms.
    pub fn laplacian(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|&(c, s)| {
                let d2 = dist2(x, c);
                (-d2 / s).exp() * (4.0 * d2 / (s * s) - 6.0 / s)
            })
            .sum()
    }
}

/// `(Laplace + k^2) u = f` inside, `a u + b du/dn = g` on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzProblem {
    wavenumber: f64,
    boundary_a: f64,
    boundary_b: f64,
    exact: ExactSolution,
}

impl HelmholtzProblem {
    pub const DEFAULT_WAVENUMBER: f64 = 1.0;

    pub fn new(
        wavenumber: f64,
        boundary_a: f64,
        boundary_b: f64,
        exact: ExactSolution,
    ) -> Result<Self> {
        if !(wavenumber >= 0.0 && wavenumber.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "wavenumber must be nonnegative, got {wavenumber}"
            )));
        }
        if boundary_a == 0.0 && boundary_b == 0.0 {
            return Err(Error::InvalidArgument(
                "boundary operator needs a != 0 or b != 0".into(),
            ));
        }
        Ok(HelmholtzProblem {
            wavenumber,
            boundary_a,
            boundary_b,
            exact,
        })
    }

    /// Dirichlet problem `a = 1, b = 0`.
    pub fn dirichlet(wavenumber: f64, exact: ExactSolution) -> Result<Self> {
        HelmholtzProblem::new(wavenumber, 1.0, 0.0, exact)
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn boundary_a(&self) -> f64 {
        self.boundary_a
    }

    pub fn boundary_b(&self) -> f64 {
        self.boundary_b
    }

    pub fn exact(&self) -> &ExactSolution {
        &self.exact
    }
}

#[inline]
fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

fn need_normal(problem: &HelmholtzProblem, target: &Point, idx: usize) -> Result<[f64; 3]> {
    match target.normal {
        Some(n) => Ok(n),
        None if problem.boundary_b == 0.0 => Ok([0.0; 3]),
        None => Err(Error::MissingNormal(idx)),
    }
}

/// Collocation entry for one (target, source) pair: `(Laplace + k^2) phi` on
/// interior targets, `a phi + b dphi/dn` on boundary targets.
pub fn mq_helmholtz_row(
    kernel: &MqKernel,
    problem: &HelmholtzProblem,
    source: &Point,
    target: &Point,
) -> Result<f64> {
    helmholtz_entry(kernel, problem, source, target, 0)
}

fn helmholtz_entry(
    kernel: &MqKernel,
    problem: &HelmholtzProblem,
    source: &Point,
    target: &Point,
    target_idx: usize,
) -> Result<f64> {
    let r = dist2(target.pos, source.pos).sqrt();
    match target.kind {
        PointKind::Interior => {
            let k2 = problem.wavenumber * problem.wavenumber;
            Ok(kernel.laplacian(r) + k2 * kernel.eval(r))
        }
        PointKind::Boundary => {
            let mut v = problem.boundary_a * kernel.eval(r);
            if problem.boundary_b != 0.0 {
                let n = need_normal(problem, target, target_idx)?;
                let d = [
                    target.pos[0] - source.pos[0],
                    target.pos[1] - source.pos[1],
                    target.pos[2] - source.pos[2],
                ];
                let dn = d[0] * n[0] + d[1] * n[1] + d[2] * n[2];
                v += problem.boundary_b * kernel.dphi_over_r(r) * dn;
            }
            Ok(v)
        }
    }
}

/// Entry closures shared by dense and hierarchical assembly.
pub(crate) fn kernel_entry(kernel: &MqKernel, points: &PointSet, row: usize, col: usize) -> f64 {
    let p = points.points();
    kernel.eval(dist2(p[row].pos, p[col].pos).sqrt())
}

pub(crate) fn operator_entry(
    kernel: &MqKernel,
    problem: &HelmholtzProblem,
    points: &PointSet,
    row: usize,
    col: usize,
) -> f64 {
    let p = points.points();
    helmholtz_entry(kernel, problem, &p[col], &p[row], row)
        .expect("normals validated before assembly")
}

pub(crate) fn check_normals(problem: &HelmholtzProblem, points: &PointSet) -> Result<()> {
    if problem.boundary_b != 0.0 {
        if let Some(idx) = points
            .points()
            .iter()
            .position(|p| p.is_boundary() && p.normal.is_none())
        {
            return Err(Error::MissingNormal(idx));
        }
    }
    Ok(())
}

/// System tensor with entries `phi(|x_ijk - x_mnp|)`.
pub fn assemble_a(points: &PointSet, kernel: &MqKernel) -> Operator6 {
    let n = points.len();
    let mut flat = vec![0.0; n * n];
    for r in 0..n {
        flat[r * n + r] = 1.0;
        for c in r + 1..n {
            let v = kernel_entry(kernel, points, r, c);
            flat[r * n + c] = v;
            flat[c * n + r] = v;
        }
    }
    Operator6::from_flat(points.shape(), flat).expect("square by construction")
}

/// Operator tensor: row `ijk` holds the collocation entries of target `ijk`.
pub fn assemble_h(
    points: &PointSet,
    kernel: &MqKernel,
    problem: &HelmholtzProblem,
) -> Result<Operator6> {
    check_normals(problem, points)?;
    Ok(Operator6::from_fn(points.shape(), |r, c| {
        operator_entry(kernel, problem, points, r, c)
    }))
}

/// Manufactured right-hand side from the exact solution.
pub fn assemble_f(points: &PointSet, problem: &HelmholtzProblem) -> Result<Tensor3> {
    check_normals(problem, points)?;
    let u = problem.exact();
    let k2 = problem.wavenumber * problem.wavenumber;
    let data = points
        .points()
        .iter()
        .map(|p| match p.kind {
            PointKind::Interior => u.laplacian(p.pos) + k2 * u.value(p.pos),
            PointKind::Boundary => {
                let mut v = problem.boundary_a * u.value(p.pos);
                if problem.boundary_b != 0.0 {
                    let n = p.normal.expect("checked above");
                    let g = u.gradient(p.pos);
                    v += problem.boundary_b * (g[0] * n[0] + g[1] * n[1] + g[2] * n[2]);
                }
                v
            }
        })
        .collect();
    Tensor3::from_vec(points.shape(), data)
}

/// Exact solution sampled at the collocation points.
pub fn sample_exact(points: &PointSet, exact: &ExactSolution) -> Tensor3 {
    let data = points.points().iter().map(|p| exact.value(p.pos)).collect();
    Tensor3::from_vec(points.shape(), data).expect("exact solution is finite")
}

/// `U = A *3 Y`.
pub fn evaluate_u(a: &Operator6, y: &Tensor3) -> Result<Tensor3> {
    a.apply(y)
}
