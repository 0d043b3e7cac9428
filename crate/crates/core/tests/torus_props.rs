use margulis::cocycle::{coboundary, cohomologous, Cocycle};
use margulis::sample;
use margulis::torus::{
    mar_g1_coefficients, mar_g1_pattern, normalize, phi_t, torus_margulis, TorusFrameData,
};
use proptest::prelude::*;

fn torus(seed: u64) -> TorusFrameData {
    let (l1, l2, th) = sample::torus(&mut sample::rng(seed), 0.1);
    TorusFrameData::from_params(l1, l2, th).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn phi_t_is_injective_on_classes(seed in any::<u64>(), z in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)) {
        prop_assume!(z.0.abs() + z.1.abs() + z.2.abs() > 1e-3);
        let t = torus(seed);
        let u = phi_t(&t, z.0, z.1, z.2).unwrap();
        prop_assert!(cohomologous(&u, &Cocycle::zero(t.rep.clone())).is_none());
        let m = torus_margulis(&u).unwrap();
        prop_assert!((m.zeta1 - z.0).abs() < 1e-9 && (m.zeta2 - z.1).abs() < 1e-9 && (m.kappa - z.2).abs() < 1e-9);
    }

    #[test]
    fn equal_triples_give_cohomologous_cocycles(seed in any::<u64>(), z in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)) {
        let t = torus(seed);
        let u = phi_t(&t, z.0, z.1, z.2).unwrap();
        let mut rng = sample::rng(seed ^ 1);
        let moved = &u + &coboundary(t.rep.clone(), &sample::vec3(&mut rng, 1.0));
        prop_assert!(cohomologous(&u, &moved).is_some());
    }

    #[test]
    fn normal_form_ignores_free_parameters(seed in any::<u64>(), shift in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)) {
        let t = torus(seed);
        let c = mar_g1_coefficients(&t).unwrap();
        let abcd = c.abcd_block();
        // a direction in (a, b, c, d) that keeps Mar(g1) fixed
        let raw = [shift.0, shift.1, shift.2, 0.5];
        let dot: f64 = raw.iter().zip(abcd).map(|(x, y)| x * y).sum();
        let nn: f64 = abcd.iter().map(|x| x * x).sum();
        let n: Vec<f64> = raw.iter().zip(abcd).map(|(x, y)| x - dot / nn * y).collect();
        let p = [0.4, -0.8, 0.3, 0.1, -0.2, 0.6];
        let q = [p[0], p[1], p[2] + n[0], p[3] + n[1], p[4] + n[2], p[5] + n[3]];
        let (a, _) = normalize(&t, &t.frame_cocycle(&p)).unwrap();
        let (b, _) = normalize(&t, &t.frame_cocycle(&q)).unwrap();
        prop_assert!((&a - &b).max_norm() <= 1e-9 * (1.0 + a.max_norm()), "{}", (&a - &b).max_norm());
    }

    #[test]
    fn g1_coefficients_follow_the_pattern(seed in any::<u64>()) {
        let t = torus(seed);
        let fit = mar_g1_coefficients(&t).unwrap().fit(&mar_g1_pattern(t.lambda1, t.lambda2, t.theta));
        prop_assert!(fit.residual <= 1e-9);
    }
}
