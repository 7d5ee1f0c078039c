use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mcflab::flow::{evolve, StopCriteria};
use mcflab::geometry::{Hypersurface, Vec3};
use mcflab::ineqlab::{bump_field, constants_table, interpolation_check, michael_simon_check, BumpField};
use mcflab::rescale::rescale_trajectory;
use mcflab::shapes::{circle, icosphere, star_shaped};
use mcflab::spacetime::{smoothstep, CutoffFunction, ParabolicCylinder};

fn rotation(a: f64, b: f64) -> nalgebra::Rotation3<f64> {
    nalgebra::Rotation3::from_euler_angles(a, b, 0.3 * a - b)
}

fn field_on(mesh: &Hypersurface, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bump_field(&BumpField::random(&mut rng), mesh.positions())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn michael_simon_ratio_is_similarity_invariant(
        seed in any::<u64>(),
        scale in 0.2f64..5.0,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let mesh = star_shaped(2, seed % 16, 0.25).unwrap();
        let f = field_on(&mesh, seed);
        let base = michael_simon_check(&mesh, &f).unwrap().ratio;
        let rot = rotation(a, b);
        let moved = mesh
            .with_positions(mesh.positions().iter().map(|x| rot * x * scale).collect())
            .unwrap();
        let r = michael_simon_check(&moved, &f).unwrap().ratio;
        prop_assert!((r - base).abs() <= 1e-12 * base, "{} vs {}", r, base);
    }

    #[test]
    fn interpolation_holds_on_random_fields(
        seed in any::<u64>(),
        t in 1.0f64..4.0,
        dr in 0.05f64..4.0,
        ds in 0.05f64..8.0,
        log_eps in -4.0f64..4.0,
    ) {
        let mesh = star_shaped(2, seed % 8, 0.3).unwrap();
        let f = field_on(&mesh, seed);
        let (r, s) = (t + dr, t + dr + ds);
        let rep = interpolation_check(&mesh, &f, t, r, s, log_eps.exp()).unwrap();
        prop_assert!(rep.holds, "{:?}", rep);
    }

    #[test]
    fn dilation_by_powers_of_two_is_exact(k in -3i32..5, level in 1usize..3, r in 0.3f64..3.0) {
        let q = 2f64.powi(k);
        let m = icosphere(level, r).unwrap();
        let d = m.dilated(q);
        for v in 0..m.len() {
            prop_assert_eq!(d.mean_curvature()[v] * q, m.mean_curvature()[v]);
            prop_assert_eq!(d.position(v), m.position(v) * q);
        }
    }

    #[test]
    fn smoothstep_and_cutoff_bounds(u in -1.0f64..2.0, x in -2.0f64..2.0, y in -2.0f64..2.0, t in -0.5f64..1.5, k in 1usize..6) {
        let s = smoothstep(u);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(smoothstep(u + 0.01) >= s);
        let c = Vec3::new(0.1, -0.2, 0.0);
        let cut = CutoffFunction::new(c, k).unwrap();
        let p = Vec3::new(x, y, 0.3);
        let e = cut.eval(t, &p);
        prop_assert!((0.0..=1.0).contains(&e));
        if e > 0.0 {
            prop_assert!(ParabolicCylinder::level(c, k - 1).contains(&p, t));
        }
    }

    #[test]
    fn constants_increase_with_inputs(c0 in 0.0f64..10.0, c1 in 1.0f64..10.0, d in 0.01f64..5.0, c_n in 0.05f64..2.0) {
        let a = constants_table(2, 4.0, 4.0, c0, c1, c_n).unwrap();
        let b = constants_table(2, 4.0, 4.0, c0 + d, c1, c_n).unwrap();
        let c = constants_table(2, 4.0, 4.0, c0, c1 + d, c_n).unwrap();
        prop_assert!(b.c_a >= a.c_a && b.c_z >= a.c_z && b.c_b >= a.c_b);
        prop_assert!(c.c_a >= a.c_a && c.c_c >= a.c_c);
        prop_assert!(c.delta1 < a.delta1 && c.delta2 < a.delta2);
    }
}

#[test]
fn rescaled_window_is_bit_exact() {
    let stop = StopCriteria {
        max_time: 0.45,
        max_steps: 1_000_000,
        h_max: 1e3,
        dt_floor: 1e-14,
    };
    let traj = evolve(&circle(64, 1.0).unwrap(), &stop, 1).unwrap();
    for q in [2.0, 4.0, 8.0] {
        let w = rescale_trajectory(&traj, q, 0.44).unwrap();
        assert_eq!(w.trajectory.times().last(), Some(&1.0));
        for (k, s) in w.trajectory.snapshots().iter().enumerate() {
            let src = traj.snapshot(w.source.0 + k);
            for v in 0..s.len() {
                assert_eq!(s.position(v), src.position(v) * q);
                assert_eq!(s.mean_curvature()[v] * q, src.mean_curvature()[v]);
                assert_eq!(s.area_weights()[v], src.area_weights()[v] * q);
            }
        }
    }
}
