use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensor_rbf::collocation::{gen_cube, Distribution, Point};
use tensor_rbf::rbf::{
    assemble_a, assemble_f, assemble_h, evaluate_u, mq_helmholtz_row, sample_exact, ExactSolution,
    HelmholtzProblem, MqKernel,
};
use tensor_rbf::{Error, Shape3, Tensor3};

const FD_H: f64 = 1e-3;

fn seven_point(f: &impl Fn([f64; 3]) -> f64, x: [f64; 3], h: f64) -> f64 {
    let mut acc = -6.0 * f(x);
    for a in 0..3 {
        let mut p = x;
        p[a] += h;
        acc += f(p);
        p[a] -= 2.0 * h;
        acc += f(p);
    }
    acc / (h * h)
}

/// Seven-point Laplacian with one Richardson step.
fn fd_laplacian(f: impl Fn([f64; 3]) -> f64, x: [f64; 3]) -> f64 {
    (4.0 * seven_point(&f, x, FD_H / 2.0) - seven_point(&f, x, FD_H)) / 3.0
}

fn central(f: &impl Fn([f64; 3]) -> f64, x: [f64; 3], h: f64) -> [f64; 3] {
    let mut g = [0.0; 3];
    for a in 0..3 {
        let mut p = x;
        p[a] += h;
        let fp = f(p);
        p[a] -= 2.0 * h;
        g[a] = (fp - f(p)) / (2.0 * h);
    }
    g
}

fn fd_gradient(f: impl Fn([f64; 3]) -> f64, x: [f64; 3]) -> [f64; 3] {
    let a = central(&f, x, FD_H / 2.0);
    let b = central(&f, x, FD_H);
    [0, 1, 2].map(|i| (4.0 * a[i] - b[i]) / 3.0)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[test]
fn kernel_laplacian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for eps in [0.5, 1.0, 3.0] {
        let k = MqKernel::new(eps).unwrap();
        for _ in 0..20 {
            let c: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let x: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let fd = fd_laplacian(|p| k.eval(dist(p, c)), x);
            let exact = k.laplacian(dist(x, c));
            assert!(
                (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                "{fd} vs {exact}"
            );
        }
    }
}

#[test]
fn exact_solution_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let u = ExactSolution::new(vec![([1.75, 0.0, 0.1], 0.5), ([0.0, 0.0, 0.0], 0.5)]).unwrap();
    for _ in 0..30 {
        let x: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let fd = fd_laplacian(|p| u.value(p), x);
        let exact = u.laplacian(x);
        assert!(
            (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
            "{fd} vs {exact}"
        );
        let g = u.gradient(x);
        let gfd = fd_gradient(|p| u.value(p), x);
        for a in 0..3 {
            assert!((g[a] - gfd[a]).abs() <= 1e-6);
        }
    }
    let g = ExactSolution::gaussian([0.2, -0.1, 0.4], 20.0).unwrap();
    let pr = HelmholtzProblem::dirichlet(1.5, g.clone()).unwrap();
    let c = [0.2, -0.1, 0.4];
    let forcing = g.laplacian(c) + pr.wavenumber().powi(2) * g.value(c);
    assert!((forcing - (-6.0 / 20.0 + 2.25)).abs() <= 1e-15);
}

#[test]
fn robin_boundary_entry_is_normal_derivative() {
    let k = MqKernel::new(1.3).unwrap();
    let u = ExactSolution::gaussian([0.0; 3], 1.0).unwrap();
    let pr = HelmholtzProblem::new(1.0, 2.0, 0.7, u).unwrap();
    let src = Point::interior([0.3, 0.2, 0.1]);
    let n = [0.0, 0.6, 0.8];
    let tgt = Point::boundary([1.0, 0.5, 0.5], n);
    let got = mq_helmholtz_row(&k, &pr, &src, &tgt).unwrap();
    let g = fd_gradient(|p| k.eval(dist(p, src.pos)), tgt.pos);
    let dn = g[0] * n[0] + g[1] * n[1] + g[2] * n[2];
    let want = 2.0 * k.eval(dist(tgt.pos, src.pos)) + 0.7 * dn;
    assert!((got - want).abs() <= 1e-7, "{got} vs {want}");

    let bare = Point {
        normal: None,
        ..tgt
    };
    assert!(matches!(
        mq_helmholtz_row(&k, &pr, &src, &bare),
        Err(Error::MissingNormal(_))
    ));
}

#[test]
fn robin_forcing_is_normal_derivative_of_exact() {
    let u = ExactSolution::gaussian([0.3, 0.3, 0.3], 0.8).unwrap();
    let pr = HelmholtzProblem::new(0.5, 1.0, 1.0, u.clone()).unwrap();
    let pts = gen_cube(Shape3::cube(4).unwrap(), Distribution::Uniform, 0).unwrap();
    let f = assemble_f(&pts, &pr).unwrap();
    for (idx, p) in pts.points().iter().enumerate() {
        let want = match p.normal {
            Some(n) => {
                let g = fd_gradient(|x| u.value(x), p.pos);
                u.value(p.pos) + g[0] * n[0] + g[1] * n[1] + g[2] * n[2]
            }
            None => fd_laplacian(|x| u.value(x), p.pos) + 0.25 * u.value(p.pos),
        };
        assert!((f.as_slice()[idx] - want).abs() <= 1e-5, "point {idx}");
    }
}

#[test]
fn interpolant_reproduces_samples() {
    let pts = gen_cube(Shape3::cube(4).unwrap(), Distribution::Uniform, 0).unwrap();
    let k = MqKernel::new(1.0).unwrap();
    let u = ExactSolution::gaussian([0.0; 3], 20.0).unwrap();
    let a = assemble_a(&pts, &k);
    assert!(a.is_symmetric());
    let samples = sample_exact(&pts, &u);
    let n = pts.len();
    let am = DMatrix::from_row_slice(n, n, a.flat());
    let coef = am
        .lu()
        .solve(&DVector::from_column_slice(samples.as_slice()))
        .unwrap();
    let y = Tensor3::from_vec(pts.shape(), coef.as_slice().to_vec()).unwrap();
    let back = evaluate_u(&a, &y).unwrap();
    let rel = (&back - &samples).fro_norm() / samples.fro_norm();
    assert!(rel <= 1e-8, "{rel}");
}

/// Relative norm of F - H A^{-1} U_exact: the collocation residual of the
/// interpolant of the exact solution.
fn consistency_residual(side: usize, eps: f64) -> f64 {
    let pts = gen_cube(Shape3::cube(side).unwrap(), Distribution::Uniform, 0).unwrap();
    let k = MqKernel::new(eps).unwrap();
    let u = ExactSolution::gaussian([0.0; 3], 20.0).unwrap();
    let pr = HelmholtzProblem::dirichlet(1.0, u.clone()).unwrap();
    let n = pts.len();
    let a = DMatrix::from_row_slice(n, n, assemble_a(&pts, &k).flat());
    let h = DMatrix::from_row_slice(n, n, assemble_h(&pts, &k, &pr).unwrap().flat());
    let f = DVector::from_column_slice(assemble_f(&pts, &pr).unwrap().as_slice());
    let ue = DVector::from_column_slice(sample_exact(&pts, &u).as_slice());
    let coef = a.lu().solve(&ue).unwrap();
    (&f - h * coef).norm() / f.norm()
}

#[test]
fn manufactured_data_is_consistent_with_collocation() {
    // Default kernel shape on the 5^3 cube; measured about 1.7e-3.
    let rel = consistency_residual(5, 1.0);
    println!("5^3 consistency residual at epsilon 1: {rel:.3e}");
    assert!(rel <= 1e-3, "{rel}");
}

#[test]
fn consistency_residual_shrinks_under_refinement() {
    let r: Vec<f64> = [4, 5, 6, 7]
        .iter()
        .map(|&s| consistency_residual(s, 1.0))
        .collect();
    for w in r.windows(2) {
        assert!(w[1] < w[0], "{r:?}");
    }
}

#[test]
fn operator_rows_follow_point_kind() {
    let pts = gen_cube(Shape3::cube(3).unwrap(), Distribution::Uniform, 0).unwrap();
    let k = MqKernel::new(2.0).unwrap();
    let u = ExactSolution::gaussian([0.0; 3], 20.0).unwrap();
    let pr = HelmholtzProblem::dirichlet(1.0, u).unwrap();
    let h = assemble_h(&pts, &k, &pr).unwrap();
    let a = assemble_a(&pts, &k);
    let n = pts.len();
    for (r, p) in pts.points().iter().enumerate() {
        for c in 0..n {
            let hv = h.flat()[r * n + c];
            let av = a.flat()[r * n + c];
            if p.is_boundary() {
                assert_eq!(hv, av);
            } else {
                let d = dist(p.pos, pts.points()[c].pos);
                assert!((hv - (k.laplacian(d) + k.eval(d))).abs() <= 1e-14);
            }
        }
    }
}
