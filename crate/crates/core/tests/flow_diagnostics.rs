use std::f64::consts::PI;

use mcflab::diagnostics::{
    area_derivative_check, evolution_residual, h_evolution_residual, hat_fields, max_h_series, pinching_constant,
    DiagnosticsError,
};
use mcflab::flow::{evolve, exact_sphere, step, FlowError, StopCriteria, Termination};
use mcflab::geometry::Hypersurface;
use mcflab::shapes::{circle, dumbbell, ellipse, icosphere, torus, DumbbellProfile};
use mcflab::spacetime::{
    heat_operator, read_trajectory, spacetime_norm, write_trajectory, CutoffFunction, FlowTrajectory,
};

/// Largest `η² + |∇η|² + 2η|(∂t − Δ)η|` at `k = 1` on the normalized sphere,
/// divided by `4²`; first-run pin.
const CUTOFF_WEIGHT_PIN: f64 = 3.8;

fn stop(max_time: f64, h_max: f64) -> StopCriteria {
    StopCriteria {
        max_time,
        max_steps: 10_000_000,
        h_max,
        dt_floor: 1e-12,
    }
}

#[test]
fn big_sphere_step_displacement() {
    let m = icosphere(2, 100.0).unwrap();
    let next = step(&m, 1e-4).unwrap();
    for (a, b) in m.positions().iter().zip(next.positions()) {
        assert!(((a - b).norm() - 2e-6).abs() < 1e-12);
    }
}

#[test]
fn circle_hits_ceiling_on_time() {
    let traj = evolve(&circle(128, 1.0).unwrap(), &stop(1.0, 50.0), 1).unwrap();
    assert_eq!(traj.termination(), Termination::CurvatureCeiling);
    let want = 0.5 * (1.0 - 1.0 / 2500.0);
    assert!((traj.final_time() / want - 1.0).abs() < 0.02);
    let series = max_h_series(&traj);
    for (j, h) in series.max_h.iter().enumerate() {
        let r = traj.snapshot(j).radius_stats().0;
        assert!((h * r - 1.0).abs() < 0.01, "snapshot {j}");
    }
}

#[test]
fn sphere_stops_at_max_time() {
    let traj = evolve(&icosphere(3, 1.0).unwrap(), &stop(0.2, 1e3), 1).unwrap();
    assert_eq!(traj.termination(), Termination::MaxTime);
    assert_eq!(traj.final_time(), 0.2);
    assert!((traj.last().radius_stats().0 / 0.2f64.sqrt() - 1.0).abs() < 0.01);
    assert!(max_h_series(&traj).max_h.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn exact_sphere_examples() {
    assert_eq!(exact_sphere(1, 1.0, 0.0).unwrap(), (1.0, 1.0));
    assert_eq!(exact_sphere(2, 1.0, 0.1875).unwrap(), (0.5, 4.0));
    assert!(matches!(exact_sphere(1, 1.0, 0.5), Err(FlowError::PastExtinction { .. })));
}

#[test]
fn trajectory_roundtrip_is_exact() {
    let traj = evolve(&ellipse(32, 1.5, 1.0).unwrap(), &stop(0.05, 1e3), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_trajectory(dir.path(), &traj).unwrap();
    let back = read_trajectory(dir.path()).unwrap();
    assert_eq!(back.times(), traj.times());
    assert_eq!(back.termination(), traj.termination());
    for (a, b) in back.snapshots().iter().zip(traj.snapshots()) {
        assert_eq!(a.positions(), b.positions());
        assert_eq!(a.mean_curvature(), b.mean_curvature());
    }
}

#[test]
fn circle_norm_examples() {
    let traj = evolve(&circle(256, 1.0).unwrap(), &stop(1.0, 200.0), 1).unwrap();
    let ones = traj.constant_field(1.0);
    let v = spacetime_norm(&traj, &ones, 1.0, None).unwrap().value;
    assert!((v / (2.0 * PI / 3.0) - 1.0).abs() < 0.01, "{v}");
    let zeros = traj.constant_field(0.0);
    assert_eq!(spacetime_norm(&traj, &zeros, 3.0, None).unwrap().value, 0.0);
}

fn single(m: Hypersurface) -> FlowTrajectory {
    FlowTrajectory::new(vec![m], vec![0.0], Termination::MaxTime).unwrap()
}

fn normalized_sphere() -> FlowTrajectory {
    evolve(&icosphere(3, 2.5).unwrap(), &stop(1.0, 1e3), 1).unwrap()
}

#[test]
fn cutoff_weight_is_bounded() {
    let traj = normalized_sphere();
    let center = traj.last().position(0);
    let cut = CutoffFunction::new(center, 1).unwrap();
    let eta = cut.sample(&traj);
    let mut sup: f64 = 0.0;
    let mut interior: f64 = 0.0;
    for j in 0..traj.len() - 1 {
        let heat = heat_operator(&traj, &eta, j).unwrap();
        let s = traj.snapshot(j);
        for i in 0..s.len() {
            let e = eta[j][i];
            let g = cut.tangential_gradient(traj.time(j), &s.position(i), &s.normal(i)).norm_squared();
            sup = sup.max(e * e + g + 2.0 * e * heat[i].abs());
            let t = traj.time(j);
            if t > 0.5 && (s.position(i) - center).norm() < 0.5 && traj.time(j + 1) > 0.5 {
                interior = interior.max(heat[i].abs());
            }
        }
    }
    assert!(sup <= CUTOFF_WEIGHT_PIN * 16.0, "{sup}");
    assert!(interior < 1e-9, "{interior}");
}

#[test]
fn area_identity() {
    let sph = evolve(&icosphere(3, 1.0).unwrap(), &stop(0.2, 1e3), 1).unwrap();
    let worst = area_derivative_check(&sph).into_iter().fold(0.0, f64::max);
    assert!(worst < 0.02, "{worst}");
    assert!(area_derivative_check(&single(icosphere(1, 1.0).unwrap())).is_empty());
}

#[test]
fn circle_h_evolution() {
    let traj = evolve(&circle(128, 1.0).unwrap(), &stop(0.4, 1e3), 1).unwrap();
    let res = h_evolution_residual(&traj).unwrap();
    let j = traj.nearest_index(0.25);
    assert!(res.relative_l2[j] < 0.05);
    let zero = traj.constant_field(0.0);
    let z = evolution_residual(&traj, &zero, &traj.mean_curvature_field()).unwrap();
    assert_eq!(z.scale(), 0.0);
}

#[test]
fn pinching_constants() {
    let short = |m| evolve(&m, &stop(0.01, 1e3), 1).unwrap();
    for m in [circle(64, 1.0).unwrap(), icosphere(3, 1.0).unwrap(), ellipse(64, 2.0, 1.0).unwrap()] {
        assert_eq!(pinching_constant(&short(m)).b, 0.0);
    }
    let t = torus(2.0, 1.0, 64, 32).unwrap();
    let b = pinching_constant(&single(t.clone())).b;
    assert!((b - 1.0).abs() < 0.02, "{b}");
    let d = short(dumbbell(0.3, 1.0, 32, 32).unwrap());
    assert!(pinching_constant(&d).b > 0.0);
}

#[test]
fn hat_field_examples() {
    let s = single(icosphere(3, 1.0).unwrap());
    let hat = hat_fields(&s, 0.0).unwrap();
    assert!(hat.hat_h[0].iter().all(|h| (h - 2.0).abs() < 1e-10));
    assert!(hat.f[0].iter().all(|f| (f - 4.0).abs() < 1e-9));

    let t = torus(2.0, 1.0, 64, 32).unwrap();
    let inner = (0..t.len())
        .min_by(|&a, &b| {
            let r = |v: usize| t.position(v).xy().norm();
            r(a).total_cmp(&r(b))
        })
        .unwrap();
    let traj = single(t);
    let b = pinching_constant(&traj).b;
    let hat = hat_fields(&traj, b).unwrap();
    assert!((hat.hat_h[0][inner] - 2.0).abs() < 0.05, "{}", hat.hat_h[0][inner]);
    assert!(hat_fields(&traj, 0.0).is_ok());

    // Inner equator of the fat torus has H = 1 − 1/0.2 = −4.
    let fat = single(torus(1.2, 1.0, 64, 32).unwrap());
    let b = pinching_constant(&fat).b;
    assert!((b - 5.0).abs() < 0.1, "{b}");
    assert!(hat_fields(&fat, b).is_ok());
    assert!(matches!(hat_fields(&fat, 1.0), Err(DiagnosticsError::PinchingViolated { .. })));
}

#[test]
fn dumbbell_argmax_on_neck() {
    let prof = DumbbellProfile::new(0.3, 1.0);
    let traj = evolve(&dumbbell(0.3, 1.0, 32, 32).unwrap(), &stop(1.0, 12.0), 10).unwrap();
    assert_eq!(traj.termination(), Termination::CurvatureCeiling);
    let series = max_h_series(&traj);
    let j = traj.len() - 1;
    let z = traj.snapshot(j).position(series.argmax[j]).z;
    assert!(z.abs() < prof.neck_half_width());
}
