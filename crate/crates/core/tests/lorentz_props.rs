use margulis::lorentz::{lorentz_form, mob_to_iso, null_frame, sl2_to_vec, vec_to_sl2, Mob, Vec3};
use nalgebra::Matrix3;
use proptest::prelude::*;

fn mob() -> impl Strategy<Value = Mob> {
    (
        -3.0..3.0f64,
        -3.0..3.0f64,
        0.0..std::f64::consts::PI,
        0.1..4.0f64,
    )
        .prop_map(|(s, t, a, l)| {
            Mob::boost(s) * Mob::rotation(a) * Mob::boost(l) * Mob::rotation(-a) * Mob::boost(t)
        })
}

fn hyperbolic() -> impl Strategy<Value = Mob> {
    (0.2..4.0f64, 0.0..std::f64::consts::PI, -1.5..1.5f64)
        .prop_map(|(l, a, s)| Mob::boost(l).conjugate_by(&(Mob::rotation(a) * Mob::boost(s))))
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bridge_is_a_homomorphism(a in mob(), b in mob()) {
        let ab = mob_to_iso(&(a * b));
        let prod = mob_to_iso(&a).matrix() * mob_to_iso(&b).matrix();
        prop_assert!((ab.matrix() - prod).norm() <= 1e-10 * prod.norm());
    }

    #[test]
    fn bridge_ignores_sign(a in mob()) {
        let pos = Mob::from_matrix(*a.matrix()).unwrap();
        let neg = Mob::from_matrix(-a.matrix()).unwrap();
        let (x, y) = (mob_to_iso(&pos), mob_to_iso(&neg));
        prop_assert_eq!(x.matrix(), y.matrix());
    }

    #[test]
    fn frame_reconstructs_the_isometry(a in hyperbolic()) {
        let h = mob_to_iso(&a);
        let f = null_frame(&h).unwrap();
        let p = f.basis();
        let d = Matrix3::from_diagonal(&Vec3::new(1.0, f.lambda, 1.0 / f.lambda));
        let r = p * d * p.try_inverse().unwrap();
        prop_assert!((r - h.matrix()).norm() <= 1e-8 * h.matrix().norm());
        prop_assert!(p.determinant() > 0.0);
    }

    #[test]
    fn form_is_invariant(a in mob(), u in vec3(), v in vec3()) {
        let h = mob_to_iso(&a);
        let scale = h.matrix().norm().powi(2);
        prop_assert!((lorentz_form(&h.apply(&u), &h.apply(&v)) - lorentz_form(&u, &v)).abs() <= 1e-12 * scale * (1.0 + u.norm() * v.norm()));
    }

    #[test]
    fn sl2_round_trip(v in vec3()) {
        prop_assert!((sl2_to_vec(&vec_to_sl2(&v)) - v).norm() <= 1e-15 * (1.0 + v.norm()));
    }
}
