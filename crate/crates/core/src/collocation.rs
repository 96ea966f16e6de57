//! Collocation point sets indexed by an `M x N x P` grid.
//!
//! Every point carries its own interior/boundary classification; the
//! `(m, n, p)` index of a point is its position under the [`Shape3`]
//! flattening, not a geometric property.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Shape3;

const DUPLICATE_TOL: f64 = 1e-12;
const NORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub pos: [f64; 3],
    pub kind: PointKind,
    /// Outward unit normal; present on boundary points of generated sets.
    pub normal: Option<[f64; 3]>,
}

impl Point {
    pub fn interior(pos: [f64; 3]) -> Self {
        Point {
            pos,
            kind: PointKind::Interior,
            normal: None,
        }
    }

    pub fn boundary(pos: [f64; 3], normal: [f64; 3]) -> Self {
        Point {
            pos,
            kind: PointKind::Boundary,
            normal: Some(normal),
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.kind == PointKind::Boundary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    Uniform,
    Random,
    Halton,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Distribution::Uniform),
            "random" => Ok(Distribution::Random),
            "halton" => Ok(Distribution::Halton),
            other => Err(Error::InvalidArgument(format!(
                "unknown distribution '{other}' (expected uniform|random|halton)"
            ))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uniform => "uniform",
            Distribution::Random => "random",
            Distribution::Halton => "halton",
        })
    }
}

/// Validated point set addressed by the tensor flattening of `(m, n, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    shape: Shape3,
    points: Vec<Point>,
    n_interior: usize,
    n_boundary: usize,
}

impl PointSet {
    /// Checks the record count, normal lengths and pairwise distinctness.
    pub fn new(shape: Shape3, points: Vec<Point>) -> Result<Self> {
        if points.len() != shape.total() {
            return Err(Error::DimensionMismatch {
                context: "PointSet::new",
                expected: shape.total(),
                found: points.len(),
            });
        }
        for (idx, p) in points.iter().enumerate() {
            if p.pos.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "point {idx} has a non-finite coordinate"
                )));
            }
            if let Some(n) = p.normal {
                let len = norm3(n);
                if (len - 1.0).abs() > NORMAL_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "point {idx} normal has length {len}"
                    )));
                }
            }
        }
        if let Some((a, b)) = find_duplicate(&points) {
            return Err(Error::DuplicatePoint(a, b));
        }
        let n_boundary = points.iter().filter(|p| p.is_boundary()).count();
        Ok(PointSet {
            shape,
            n_interior: points.len() - n_boundary,
            n_boundary,
            points,
        })
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    /// Writes the point file format read by [`load_points`].
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {}\n",
            self.shape.m, self.shape.n, self.shape.p
        ));
        for p in &self.points {
            let kind = if p.is_boundary() { 'B' } else { 'I' };
            out.push_str(&format!("{} {} {} {}", p.pos[0], p.pos[1], p.pos[2], kind));
            if let Some(n) = p.normal {
                out.push_str(&format!(" {} {} {}", n[0], n[1], n[2]));
            }
            out.push('\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Sweep along x; only pairs within the tolerance in x are compared.
fn find_duplicate(points: &[Point]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].pos[0].total_cmp(&points[b].pos[0]));
    for (oi, &a) in order.iter().enumerate() {
        for &b in &order[oi + 1..] {
            if points[b].pos[0] - points[a].pos[0] > DUPLICATE_TOL {
                break;
            }
            if dist3(points[a].pos, points[b].pos) <= DUPLICATE_TOL {
                return Some((a.min(b), a.max(b)));
            }
        }
    }
    None
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton point number `index` (1-based) with bases (2, 3, 5).
pub fn halton3(index: u64) -> [f64; 3] {
    [
        radical_inverse(index, 2),
        radical_inverse(index, 3),
        radical_inverse(index, 5),
    ]
}

fn linspace(lo: f64, hi: f64, count: usize, i: usize) -> f64 {
    if count == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (count - 1) as f64
    }
}

/// Boundary count of the Uniform cube grid with the same shape.
fn grid_boundary_count(shape: Shape3) -> usize {
    let inner = |e: usize| e.saturating_sub(2);
    shape.total() - inner(shape.m) * inner(shape.n) * inner(shape.p)
}

fn face_normal(axis: usize, upper: bool) -> [f64; 3] {
    let mut n = [0.0; 3];
    n[axis] = if upper { 1.0 } else { -1.0 };
    n
}

/// Points in the unit cube `[0,1]^3`.
///
/// Uniform places a tensor grid including the faces. Random and Halton draw
/// `shape.total()` points in the open cube and then project the points
/// nearest the surface onto their closest face, as many as the Uniform grid
/// of the same shape has on its boundary.
pub fn gen_cube(shape: Shape3, dist: Distribution, seed: u64) -> Result<PointSet> {
    let points = match dist {
        Distribution::Uniform => {
            if shape.m < 2 || shape.n < 2 || shape.p < 2 {
                return Err(Error::InvalidShape(
                    shape,
                    "uniform cube grid needs every extent >= 2",
                ));
            }
            let ext = [shape.m, shape.n, shape.p];
            let mut pts = Vec::with_capacity(shape.total());
            for i in 0..shape.m {
                for j in 0..shape.n {
                    for k in 0..shape.p {
                        let idx = [i, j, k];
                        let pos = [
                            linspace(0.0, 1.0, shape.m, i),
                            linspace(0.0, 1.0, shape.n, j),
                            linspace(0.0, 1.0, shape.p, k),
                        ];
                        let mut normal = [0.0; 3];
                        let mut on_face = false;
                        for a in 0..3 {
                            if idx[a] == 0 {
                                normal[a] = -1.0;
                                on_face = true;
                            } else if idx[a] == ext[a] - 1 {
                                normal[a] = 1.0;
                                on_face = true;
                            }
                        }
                        if on_face {
                            let len = norm3(normal);
                            normal.iter_mut().for_each(|c| *c /= len);
                            pts.push(Point::boundary(pos, normal));
                        } else {
                            pts.push(Point::interior(pos));
                        }
                    }
                }
            }
            pts
        }
        Distribution::Random | Distribution::Halton => {
            let total = shape.total();
            let raw: Vec<[f64; 3]> = match dist {
                Distribution::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..total)
                        .map(|_| loop {
                            let p = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                            if p.iter().all(|&c| c > 0.0) {
                                break p;
                            }
                        })
                        .collect()
                }
                _ => (1..=total as u64).map(halton3).collect(),
            };
            // Nearest face of each point: (distance, axis, upper).
            let nearest: Vec<(f64, usize, bool)> = raw
                .iter()
                .map(|p| {
                    let mut best = (f64::INFINITY, 0, false);
                    for (a, &c) in p.iter().enumerate() {
                        if c < best.0 {
                            best = (c, a, false);
                        }
                        if 1.0 - c < best.0 {
                            best = (1.0 - c, a, true);
                        }
                    }
                    best
                })
                .collect();
            let mut order: Vec<usize> = (0..total).collect();
            order.sort_by(|&a, &b| nearest[a].0.total_cmp(&nearest[b].0).then(a.cmp(&b)));
            let mut on_boundary = vec![false; total];
            for &idx in order.iter().take(grid_boundary_count(shape)) {
                on_boundary[idx] = true;
            }
            raw.iter()
                .enumerate()
                .map(|(idx, &p)| {
                    if on_boundary[idx] {
                        let (_, axis, upper) = nearest[idx];
                        let mut pos = p;
                        pos[axis] = if upper { 1.0 } else { 0.0 };
                        Point::boundary(pos, face_normal(axis, upper))
                    } else {
                        Point::interior(p)
                    }
                })
                .collect()
        }
    };
    PointSet::new(shape, points)
}

/// Points in the unit ball, interior points first, then points on the unit
/// sphere with the radial direction as outward normal.
///
/// The interior count is that of a tensor grid over `[-1,1]^3` filtered to
/// `r <= 1 - h/2` (`h` the finest grid spacing); the rest of the
/// `shape.total()` slots are sphere points. Uniform uses the filtered grid
/// and a Fibonacci lattice, Random draws both uniformly from the seed, and
/// Halton uses the (2,3,5) sequence inside and a (2,3) sequence on the
/// surface.
pub fn gen_sphere(shape: Shape3, dist: Distribution, seed: u64) -> Result<PointSet> {
    if shape.total() < 8 {
        return Err(Error::InvalidShape(
            shape,
            "sphere sets need at least 8 points",
        ));
    }
    let ext = [shape.m, shape.n, shape.p];
    let h = ext
        .iter()
        .filter(|&&e| e > 1)
        .map(|&e| 2.0 / (e - 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let r_max = if h.is_finite() { 1.0 - 0.5 * h } else { 1.0 };

    let mut grid = Vec::new();
    for i in 0..shape.m {
        for j in 0..shape.n {
            for k in 0..shape.p {
                let pos = [
                    linspace(-1.0, 1.0, shape.m, i),
                    linspace(-1.0, 1.0, shape.n, j),
                    linspace(-1.0, 1.0, shape.p, k),
                ];
                if norm3(pos) <= r_max && norm3(pos) < 1.0 {
                    grid.push(pos);
                }
            }
        }
    }
    let n_interior = grid.len();
    let n_boundary = shape.total() - n_interior;

    let (interior, surface): (Vec<[f64; 3]>, Vec<[f64; 3]>) = match dist {
        Distribution::Uniform => (grid, fibonacci_sphere(n_boundary)),
        Distribution::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut inner = Vec::with_capacity(n_interior);
            while inner.len() < n_interior {
                let p = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                if norm3(p) < r_max {
                    inner.push(p);
                }
            }
            let surf = (0..n_boundary)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let v: f64 = rng.gen();
                    sphere_point(u, v)
                })
                .collect();
            (inner, surf)
        }
        Distribution::Halton => {
            let mut inner = Vec::with_capacity(n_interior);
            let mut idx = 1u64;
            while inner.len() < n_interior {
                let q = halton3(idx);
                idx += 1;
                let p = [2.0 * q[0] - 1.0, 2.0 * q[1] - 1.0, 2.0 * q[2] - 1.0];
                if norm3(p) < r_max {
                    inner.push(p);
                }
            }
            let surf = (1..=n_boundary as u64)
                .map(|i| sphere_point(radical_inverse(i, 2), radical_inverse(i, 3)))
                .collect();
            (inner, surf)
        }
    };

    let mut points: Vec<Point> = interior.into_iter().map(Point::interior).collect();
    points.extend(surface.into_iter().map(|p| Point::boundary(p, p)));
    PointSet::new(shape, points)
}

/// Area-preserving map from the unit square to the unit sphere.
fn sphere_point(u: f64, v: f64) -> [f64; 3] {
    let z = 1.0 - 2.0 * u;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * v;
    normalize([r * phi.cos(), r * phi.sin(), z])
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let len = norm3(p);
    [p[0] / len, p[1] / len, p[2] / len]
}

fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            normalize([r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

/// Reads the point file format: a header line `M N P`, then `M·N·P` records
/// `x y z kind [nx ny nz]` with kind `I` or `B`. Lines starting with `#` and
/// blank lines are skipped. Normals are renormalized to unit length.
pub fn load_points(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut shape = None;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(shape) = shape else {
            if fields.len() != 3 {
                return Err(perr(lineno, "header must be 'M N P'".into()));
            }
            let mut ext = [0usize; 3];
            for (e, f) in ext.iter_mut().zip(&fields) {
                *e = f
                    .parse()
                    .map_err(|_| perr(lineno, format!("bad extent '{f}'")))?;
            }
            shape =
                Some(Shape3::new(ext[0], ext[1], ext[2]).map_err(|e| perr(lineno, e.to_string()))?);
            continue;
        };
        if points.len() == shape.total() {
            return Err(perr(
                lineno,
                format!("more records than the header's {}", shape.total()),
            ));
        }
        if fields.len() != 4 && fields.len() != 7 {
            return Err(perr(
                lineno,
                format!(
                    "expected 'x y z kind [nx ny nz]', got {} fields",
                    fields.len()
                ),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| perr(lineno, format!("bad number '{s}'")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(perr(lineno, format!("non-finite number '{s}'")))
            }
        };
        let pos = [num(fields[0])?, num(fields[1])?, num(fields[2])?];
        let kind = match fields[3] {
            "I" | "i" => PointKind::Interior,
            "B" | "b" => PointKind::Boundary,
            other => {
                return Err(perr(
                    lineno,
                    format!("bad kind '{other}' (expected I or B)"),
                ))
            }
        };
        let normal = if fields.len() == 7 {
            let n = [num(fields[4])?, num(fields[5])?, num(fields[6])?];
            let len = norm3(n);
            if (len - 1.0).abs() > 1e-6 {
                return Err(perr(lineno, format!("normal length {len} is not 1")));
            }
            Some(if (len - 1.0).abs() > NORMAL_TOL {
                normalize(n)
            } else {
                n
            })
        } else {
            None
        };
        points.push(Point { pos, kind, normal });
    }
    let shape = shape.ok_or_else(|| perr(0, "missing header".into()))?;
    if points.len() != shape.total() {
        return Err(perr(
            text.lines().count(),
            format!(
                "header declares {} records, found {}",
                shape.total(),
                points.len()
            ),
        ));
    }
    PointSet::new(shape, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_grid_is_all_boundary() {
        let set = gen_cube(Shape3::cube(2).unwrap(), Distribution::Uniform, 0).unwrap();
        assert_eq!(set.n_boundary(), 8);
        assert_eq!(set.n_interior(), 0);
        let corner = set.points()[0];
        assert_eq!(corner.pos, [0.0, 0.0, 0.0]);
        let inv = 1.0 / 3f64.sqrt();
        let n = corner.normal.unwrap();
        assert!(n.iter().all(|&c| (c + inv).abs() < 1e-15));
    }

    #[test]
    fn three_cubed_grid_has_single_center() {
        let set = gen_cube(Shape3::cube(3).unwrap(), Distribution::Uniform, 0).unwrap();
        assert_eq!(set.n_interior(), 1);
        let center = set.points().iter().find(|p| !p.is_boundary()).unwrap();
        assert_eq!(center.pos, [0.5, 0.5, 0.5]);
    }

    #[test]
    fn uniform_cube_rejects_thin_shapes() {
        let s = Shape3::new(1, 4, 4).unwrap();
        assert!(gen_cube(s, Distribution::Uniform, 0).is_err());
    }

    #[test]
    fn uniform_faces_are_covered() {
        let shape = Shape3::new(3, 4, 5).unwrap();
        let set = gen_cube(shape, Distribution::Uniform, 0).unwrap();
        let min = 3usize;
        for axis in 0..3 {
            for val in [0.0, 1.0] {
                let count = set
                    .points()
                    .iter()
                    .filter(|p| p.is_boundary() && p.pos[axis] == val)
                    .count();
                assert!(count >= min * min);
            }
        }
    }

    #[test]
    fn random_cube_matches_grid_boundary_count_and_is_deterministic() {
        let shape = Shape3::new(4, 5, 6).unwrap();
        for dist in [Distribution::Random, Distribution::Halton] {
            let a = gen_cube(shape, dist, 42).unwrap();
            let b = gen_cube(shape, dist, 42).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.n_boundary(), 120 - 2 * 3 * 4);
            for p in a.points() {
                let on_face = p.pos.iter().any(|&c| c == 0.0 || c == 1.0);
                assert_eq!(on_face, p.is_boundary());
                assert!(p.pos.iter().all(|&c| (0.0..=1.0).contains(&c)));
            }
        }
        let c = gen_cube(shape, Distribution::Random, 43).unwrap();
        assert_ne!(c, gen_cube(shape, Distribution::Random, 42).unwrap());
    }

    #[test]
    fn sphere_sets_are_ordered_interior_first() {
        for dist in [
            Distribution::Uniform,
            Distribution::Random,
            Distribution::Halton,
        ] {
            let set = gen_sphere(Shape3::cube(6).unwrap(), dist, 5).unwrap();
            let first_b = set.points().iter().position(|p| p.is_boundary()).unwrap();
            assert_eq!(first_b, set.n_interior());
            for p in set.points() {
                let r = norm3(p.pos);
                if p.is_boundary() {
                    assert!((r - 1.0).abs() <= 1e-12);
                    assert_eq!(p.normal.unwrap(), p.pos);
                } else {
                    assert!(r < 1.0);
                }
            }
        }
    }

    #[test]
    fn duplicate_points_are_rejected() {
        let shape = Shape3::new(2, 1, 1).unwrap();
        let p = Point::interior([0.1, 0.2, 0.3]);
        assert!(matches!(
            PointSet::new(shape, vec![p, p]),
            Err(Error::DuplicatePoint(0, 1))
        ));
    }

    #[test]
    fn halton_prefix() {
        assert_eq!(halton3(1), [0.5, 1.0 / 3.0, 0.2]);
        assert_eq!(halton3(2), [0.25, 2.0 / 3.0, 0.4]);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn distribution_parsing() {
        assert_eq!(
            "Halton".parse::<Distribution>().unwrap(),
            Distribution::Halton
        );
        assert!("sobol".parse::<Distribution>().is_err());
    }
}
