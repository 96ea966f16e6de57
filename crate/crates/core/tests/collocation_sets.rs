use std::io::Write;

use tensor_rbf::collocation::{
    gen_cube, gen_sphere, halton3, load_points, Distribution, PointKind,
};
use tensor_rbf::{Error, Shape3};

fn write_tmp(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn minimal_file_loads() {
    let f = write_tmp("2 1 1\n0 0 0 I\n# comment\n\n1 0 0 B 1 0 0\n");
    let set = load_points(f.path()).unwrap();
    assert_eq!(set.shape(), Shape3::new(2, 1, 1).unwrap());
    assert_eq!(set.n_interior(), 1);
    assert_eq!(set.n_boundary(), 1);
    assert_eq!(set.points()[1].normal, Some([1.0, 0.0, 0.0]));
}

#[test]
fn repeated_point_is_rejected() {
    let f = write_tmp("2 1 1\n0.5 0.5 0.5 I\n0.5 0.5 0.5 I\n");
    assert!(matches!(
        load_points(f.path()),
        Err(Error::DuplicatePoint(_, _))
    ));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let cases = [
        ("2 1 1\n0 0 0 I\n", None),
        ("2 1 1\n0 0 0 I\n1 0 x I\n", Some(3)),
        ("2 1 1\n0 0 0 Q\n1 0 0 I\n", Some(2)),
        ("2 1 1\n0 0 0 I\n1 0 0 B 2 0 0\n", Some(3)),
        ("2 1\n", Some(1)),
    ];
    for (text, line) in cases {
        let f = write_tmp(text);
        let err = load_points(f.path()).unwrap_err();
        if let Some(l) = line {
            match err {
                Error::Parse { line, .. } => assert_eq!(line, l, "{text:?}"),
                other => panic!("expected parse error for {text:?}, got {other}"),
            }
        }
    }
}

#[test]
fn saved_cube_reloads_identically() {
    let set = gen_cube(Shape3::new(4, 3, 5).unwrap(), Distribution::Random, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.pts");
    set.save(&path).unwrap();
    let back = load_points(&path).unwrap();
    assert_eq!(back, set);
}

#[test]
fn uniform_cube_faces_are_covered() {
    for side in [3usize, 4, 6] {
        let s = Shape3::cube(side).unwrap();
        let set = gen_cube(s, Distribution::Uniform, 0).unwrap();
        for axis in 0..3 {
            for val in [0.0, 1.0] {
                let count = set
                    .points()
                    .iter()
                    .filter(|p| p.kind == PointKind::Boundary && p.pos[axis] == val)
                    .count();
                assert!(count >= side * side);
            }
        }
        assert_eq!(set.n_interior(), (side - 2).pow(3));
    }
}

#[test]
fn halton_octants_are_balanced() {
    let mut counts = [0usize; 8];
    for i in 1..=1000u64 {
        let q = halton3(i);
        let o =
            (q[0] >= 0.5) as usize | ((q[1] >= 0.5) as usize) << 1 | ((q[2] >= 0.5) as usize) << 2;
        counts[o] += 1;
    }
    for c in counts {
        assert!((95..=155).contains(&c), "{counts:?}");
    }
}

#[test]
fn generated_sets_are_deterministic_and_valid() {
    let s = Shape3::new(5, 4, 6).unwrap();
    for dist in [
        Distribution::Uniform,
        Distribution::Random,
        Distribution::Halton,
    ] {
        for (a, b) in [
            (gen_cube(s, dist, 3).unwrap(), gen_cube(s, dist, 3).unwrap()),
            (
                gen_sphere(s, dist, 3).unwrap(),
                gen_sphere(s, dist, 3).unwrap(),
            ),
        ] {
            assert_eq!(a, b);
            assert_eq!(a.len(), s.total());
            assert_eq!(a.n_interior() + a.n_boundary(), s.total());
            for p in a.points() {
                if let Some(nrm) = p.normal {
                    let len = (nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]).sqrt();
                    assert!((len - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn sphere_geometry() {
    let s = Shape3::cube(6).unwrap();
    for dist in [
        Distribution::Uniform,
        Distribution::Random,
        Distribution::Halton,
    ] {
        let set = gen_sphere(s, dist, 1).unwrap();
        let mut seen_boundary = false;
        for p in set.points() {
            let r = (p.pos[0].powi(2) + p.pos[1].powi(2) + p.pos[2].powi(2)).sqrt();
            match p.kind {
                PointKind::Interior => {
                    assert!(!seen_boundary, "interior points come first");
                    assert!(r < 1.0);
                }
                PointKind::Boundary => {
                    seen_boundary = true;
                    assert!((r - 1.0).abs() <= 1e-12);
                    let n = p.normal.unwrap();
                    for a in 0..3 {
                        assert!((n[a] - p.pos[a]).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
