use mcflab::geometry::io::{parse_mesh, to_text};
use mcflab::geometry::{
    laplace_beltrami, tangential_gradient_norm, validate, Cells, GeometryError, Hypersurface, Vec3,
    PRINCIPAL_SUM_TOLERANCE,
};
use mcflab::shapes::{circle, dumbbell, ellipse, icosphere, torus, ShapeError, ShapeSpec};

fn tetrahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let p = vec![
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(-1.0, 1.0, -1.0),
        Vec3::new(-1.0, -1.0, 1.0),
    ];
    let t = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    (p, t)
}

#[test]
fn canonical_meshes_validate() {
    let c = circle(128, 1.0).unwrap();
    assert!(validate(c.positions(), c.cells()).is_valid());
    let s = icosphere(3, 1.0).unwrap();
    assert!(validate(s.positions(), s.cells()).is_valid());
    assert_eq!(s.topology().euler_characteristic(), 2);
    let t = torus(2.0, 0.5, 24, 12).unwrap();
    assert_eq!(t.topology().euler_characteristic(), 0);
    let (p, tri) = tetrahedron();
    assert!(Hypersurface::new(p, Cells::Triangles(tri)).is_ok());
}

#[test]
fn open_boundary_detected() {
    let (p, mut t) = tetrahedron();
    t.pop();
    let err = Hypersurface::new(p, Cells::Triangles(t)).unwrap_err();
    assert!(matches!(err, GeometryError::OpenBoundary(..)), "{err:?}");
}

#[test]
fn flipped_triangle_detected() {
    let (p, mut t) = tetrahedron();
    t[3] = [1, 2, 3];
    let err = Hypersurface::new(p, Cells::Triangles(t)).unwrap_err();
    assert!(matches!(err, GeometryError::InconsistentOrientation(..)), "{err:?}");
}

#[test]
fn curve_violations() {
    let p: Vec<Vec3> = (0..4).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
    let branching = Cells::Edges(vec![[0, 1], [1, 2], [2, 0], [1, 3], [3, 1]]);
    assert!(matches!(
        Hypersurface::new(p.clone(), branching),
        Err(GeometryError::NonManifold { .. })
    ));
    let mut q = p[..3].to_vec();
    q[2] = q[1];
    let err = Hypersurface::new(q, Cells::polygon(3)).unwrap_err();
    assert!(matches!(err, GeometryError::DegenerateElement { .. }), "{err:?}");
}

#[test]
fn unit_vectors_and_exact_measure() {
    for m in [circle(64, 1.0).unwrap(), icosphere(3, 1.3).unwrap(), torus(2.0, 0.7, 20, 10).unwrap()] {
        for nu in m.normals() {
            assert!((nu.norm() - 1.0).abs() < 1e-12);
        }
        let a = m.total_area();
        assert!(a > 0.0);
        assert!((a - m.polyhedral_measure()).abs() <= 1e-12 * a);
    }
}

#[test]
fn circle_curvature_is_one() {
    for n in [16, 64, 256] {
        let m = circle(n, 1.0).unwrap();
        let h = 2.0 * std::f64::consts::PI / n as f64;
        for &k in m.mean_curvature() {
            assert!((k - 1.0).abs() < h * h, "n = {n}: {k}");
        }
    }
}

#[test]
fn sphere_curvature_is_n_over_r() {
    for (level, r) in [(2, 1.0), (3, 2.5), (4, 1.0), (4, 0.3)] {
        let m = icosphere(level, r).unwrap();
        let err = m.mean_curvature().iter().map(|h| (h - 2.0 / r).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10 / r, "level {level}, r = {r}: {err}");
    }
}

#[test]
fn principal_curvatures_sum_to_h() {
    for m in [icosphere(3, 1.0).unwrap(), torus(2.0, 0.7, 32, 16).unwrap(), dumbbell(0.4, 1.0, 32, 16).unwrap()] {
        for v in 0..m.len() {
            let sum: f64 = m.principal(v).iter().sum();
            let h = m.mean_curvature()[v];
            assert!((sum - h).abs() <= PRINCIPAL_SUM_TOLERANCE * (1.0 + h.abs()));
        }
    }
}

#[test]
fn ellipse_curvature_matches_closed_form() {
    let (a, b) = (2.0, 1.0);
    let m = ellipse(512, a, b).unwrap();
    let kappa = |x: &Vec3| {
        let th = (x.y / b).atan2(x.x / a);
        a * b / (a * a * th.sin().powi(2) + b * b * th.cos().powi(2)).powf(1.5)
    };
    let tip = (0..m.len())
        .min_by(|&i, &j| {
            let d = |v: usize| (m.position(v) - Vec3::new(a, 0.0, 0.0)).norm();
            d(i).total_cmp(&d(j))
        })
        .unwrap();
    assert!((m.mean_curvature()[tip] - 2.0).abs() < 1e-3);
    for v in 0..m.len() {
        let want = kappa(&m.position(v));
        assert!((m.mean_curvature()[v] - want).abs() < 1e-3 * want, "vertex {v}");
    }
}

#[test]
fn laplacian_oracles() {
    let m = icosphere(4, 1.0).unwrap();
    let c = vec![3.5; m.len()];
    assert!(laplace_beltrami(&m, &c).unwrap().iter().all(|x| x.abs() < 1e-10));
    let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
    let lx = laplace_beltrami(&m, &x).unwrap();
    let err = lx.iter().zip(&x).map(|(l, x)| (l + 2.0 * x).abs()).fold(0.0, f64::max);
    assert!(err < 0.01, "{err}");
    let d2: Vec<f64> = m.positions().iter().map(|p| p.norm_squared()).collect();
    assert!(laplace_beltrami(&m, &d2).unwrap().iter().all(|x| x.abs() < 1e-9));
}

#[test]
fn gradient_oracles() {
    let c = circle(256, 1.0).unwrap();
    assert!(tangential_gradient_norm(&c, &vec![5.0; c.len()]).unwrap().iter().all(|g| *g < 1e-12));
    let x: Vec<f64> = c.positions().iter().map(|p| p.x).collect();
    let h = 2.0 * std::f64::consts::PI / 256.0;
    for (g, p) in tangential_gradient_norm(&c, &x).unwrap().iter().zip(c.positions()) {
        assert!((g - p.y.abs()).abs() < h * h);
    }
    let s = icosphere(4, 1.0).unwrap();
    let x: Vec<f64> = s.positions().iter().map(|p| p.x).collect();
    for (g, p) in tangential_gradient_norm(&s, &x).unwrap().iter().zip(s.positions()) {
        assert!((g * g - (1.0 - p.x * p.x)).abs() < 0.01);
    }
}

#[test]
fn dilation_scales_stored_geometry() {
    let m = icosphere(2, 1.0).unwrap();
    let d = m.dilated(4.0);
    for v in 0..m.len() {
        assert_eq!(d.mean_curvature()[v] * 4.0, m.mean_curvature()[v]);
        assert_eq!(d.area_weights()[v], m.area_weights()[v] * 16.0);
    }
}

#[test]
fn text_roundtrip_is_exact() {
    for m in [ellipse(40, 1.5, 0.5).unwrap(), icosphere(2, 0.7).unwrap()] {
        let back = parse_mesh(&to_text(&m)).unwrap();
        assert_eq!(back.positions(), m.positions());
        assert_eq!(back.cells(), m.cells());
    }
}

#[test]
fn shape_spec_rules() {
    let bad = [
        ShapeSpec::Ellipse { a: 1.0, b: 2.0 },
        ShapeSpec::Torus { major: 1.0, minor: 1.0 },
        ShapeSpec::Dumbbell { neck: 0.0, handle: 1.0 },
        ShapeSpec::Circle { radius: -1.0 },
    ];
    for s in bad {
        assert!(matches!(s.check(), Err(ShapeError::InvalidParameters(_))), "{s:?}");
    }
    assert!(matches!(
        ShapeSpec::Circle { radius: 1.0 }.generate(7),
        Err(ShapeError::ResolutionTooLow { got: 7, min: 8 })
    ));
    let tiny = ShapeSpec::Sphere {
        radius: 1.0,
        subdivision: 0,
    };
    assert!(matches!(tiny.generate(0), Err(ShapeError::ResolutionTooLow { got: 12, min: 42 })));
    let a = ShapeSpec::Dumbbell { neck: 0.3, handle: 1.0 }.generate(24).unwrap();
    let b = ShapeSpec::Dumbbell { neck: 0.3, handle: 1.0 }.generate(24).unwrap();
    assert_eq!(a.positions(), b.positions());
}
