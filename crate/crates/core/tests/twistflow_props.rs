use margulis::glue::{affine_twist, GluePartition};
use margulis::sample;
use margulis::twistflow::{cosine_terms, length_derivative, FD_STEP};
use margulis::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn derivative_is_twice_margulis(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let s = sample::surface(&mut rng, 1, 2);
        let u = sample::cocycle(&mut rng, &s.rep, 1.0);
        let gens: Vec<usize> = (0..s.rep.rank()).collect();
        let len = 1 + (seed % 6) as usize;
        let w = sample::word(&mut rng, &gens, len).cyclically_reduced();
        prop_assume!(!w.is_empty());
        let m = u.margulis(&w).unwrap();
        let d = length_derivative(&s.rep, &u, &w, FD_STEP).unwrap();
        prop_assert!((d - 2.0 * m).abs() <= 1e-5 * (1.0 + m.abs()), "{} vs {}", d, 2.0 * m);
    }

    #[test]
    fn cosine_sum_is_the_margulis_invariant(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let s = sample::surface(&mut rng, 0, 4);
        let p = GluePartition::along_curve(&s, 1).unwrap();
        let at = affine_twist(&s.rep, &p).unwrap();
        let a = sample::alternating_word(&mut rng, &p, 5, 2);
        match cosine_terms(&s.rep, &p, &a) {
            Ok(terms) => {
                prop_assert_eq!(terms.len(), a.crossing_count(&p));
                prop_assert!(terms.iter().all(|t| t.cos.abs() < 1.0 && t.pairing.abs() < 1.0));
                let sum: f64 = terms.iter().map(|t| t.cos).sum();
                prop_assert!((sum - at.margulis(&a.word()).unwrap()).abs() <= 1e-9);
            }
            Err(Error::AxesDontCross { pairing, .. }) => prop_assert!(pairing.abs() >= 1.0),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
