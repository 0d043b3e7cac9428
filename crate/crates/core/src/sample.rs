//! Random inputs for the randomized suites. Every generator takes the RNG
//! explicitly, so a fixed seed gives a fixed stream.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::cocycle::Cocycle;
use crate::error::Result;
use crate::fuchsian::{
    assemble_surface, torus_commutator_trace, FreeRep, HandleSpec, Surface, SurfaceSpec, Word,
};
use crate::glue::{Coords, GluePartition};
use crate::lorentz::{Mob, Vec3, HYPERBOLIC_MARGIN};
use crate::twistflow::AlternatingWord;

/// Range of handle lengths for random surfaces.
pub const HANDLE_LENGTHS: (f64, f64) = (2.2, 3.0);
/// Range of boundary and inner curve lengths for random surfaces.
pub const PANTS_LENGTHS: (f64, f64) = (1.0, 2.5);

pub fn vec3<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

/// A hyperbolic element `k b k^-1` with `b` a boost of length in `[0.2, 4)`
/// and `k` a random product of a rotation and a boost.
pub fn hyperbolic<R: Rng + ?Sized>(rng: &mut R) -> Mob {
    let b = Mob::boost(rng.random_range(0.2..4.0));
    let k = Mob::rotation(rng.random_range(0.0..PI)) * Mob::boost(rng.random_range(-1.5..1.5));
    b.conjugate_by(&k)
}

/// A freely reduced word of length `len` over `gens`.
pub fn word<R: Rng + ?Sized>(rng: &mut R, gens: &[usize], len: usize) -> Word {
    assert!(!gens.is_empty(), "a word needs generators");
    let mut w = Word::empty();
    while w.len() < len {
        let g = gens[rng.random_range(0..gens.len())];
        let e = if rng.random_bool(0.5) { 1 } else { -1 };
        let next = w.concat(&Word::new([(g, e)]));
        if next.len() > w.len() {
            w = next;
        }
    }
    w
}

/// Lengths and angle of an admissible once-holed torus with `theta` at
/// least `gap` away from `pi/2`.
pub fn torus<R: Rng + ?Sized>(rng: &mut R, gap: f64) -> (f64, f64, f64) {
    loop {
        let l1 = rng.random_range(0.5..3.0);
        let l2 = rng.random_range(0.5..3.0);
        let theta = rng.random_range(0.2..PI - 0.2);
        if (theta - PI / 2.0).abs() >= gap && torus_commutator_trace(l1, l2, theta) < -2.0 - 1e-3 {
            return (l1, l2, theta);
        }
    }
}

/// A random surface spec of type `(g, b)` with lengths in
/// [`HANDLE_LENGTHS`] and [`PANTS_LENGTHS`], angles at least 0.1 from
/// `pi/2`, and twists in `[-0.5, 0.5)`.
pub fn surface_spec<R: Rng + ?Sized>(rng: &mut R, g: usize, b: usize) -> SurfaceSpec {
    let k = (b + g).saturating_sub(3);
    let pl = |rng: &mut R| rng.random_range(PANTS_LENGTHS.0..PANTS_LENGTHS.1);
    let handles = (0..g)
        .map(|_| loop {
            let theta = rng.random_range(0.4..PI - 0.4);
            if (theta - PI / 2.0).abs() < 0.1 {
                continue;
            }
            let h = HandleSpec {
                l1: rng.random_range(HANDLE_LENGTHS.0..HANDLE_LENGTHS.1),
                l2: rng.random_range(HANDLE_LENGTHS.0..HANDLE_LENGTHS.1),
                theta,
                twist: rng.random_range(-0.5..0.5),
            };
            if torus_commutator_trace(h.l1, h.l2, h.theta) < -2.0 - HYPERBOLIC_MARGIN {
                break h;
            }
        })
        .collect();
    SurfaceSpec {
        g,
        b,
        boundary_lengths: (0..b).map(|_| pl(rng)).collect(),
        curve_lengths: (0..k).map(|_| pl(rng)).collect(),
        twists: (0..k).map(|_| rng.random_range(-0.5..0.5)).collect(),
        handles,
    }
}

/// Assembled random surface; specs that fail to assemble are redrawn.
pub fn surface<R: Rng + ?Sized>(rng: &mut R, g: usize, b: usize) -> Surface {
    loop {
        if let Ok(s) = assemble_surface(&surface_spec(rng, g, b)) {
            return s;
        }
    }
}

/// Cocycle with generator values uniform in `[-scale, scale)^3`.
pub fn cocycle<R: Rng + ?Sized>(rng: &mut R, rep: &Arc<FreeRep>, scale: f64) -> Cocycle {
    let values = (0..rep.rank()).map(|_| vec3(rng, scale)).collect();
    Cocycle::new(rep.clone(), values).expect("one value per generator")
}

/// Coordinates uniform in `[-scale, scale)`.
pub fn coords<R: Rng + ?Sized>(rng: &mut R, g: usize, b: usize, scale: f64) -> Result<Coords> {
    let n = Coords::zeros(g, b).len();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
    Coords::from_vec(g, b, &x)
}

/// An alternating word with between 1 and `max_blocks` blocks per side,
/// each of length 1 to `max_len`. The first side is random, and the word is
/// cyclically reduced.
pub fn alternating_word<R: Rng + ?Sized>(
    rng: &mut R,
    p: &GluePartition,
    max_blocks: usize,
    max_len: usize,
) -> AlternatingWord {
    loop {
        let n = rng.random_range(1..=max_blocks);
        let first: u8 = if rng.random_bool(0.5) { 1 } else { 2 };
        // n blocks per side, or n on the first side and n - 1 on the other
        let count = if n > 1 && rng.random_bool(0.5) {
            2 * n - 1
        } else {
            2 * n
        };
        let blocks: Vec<(u8, Word)> = (0..count)
            .map(|i| {
                let side = if i % 2 == 0 { first } else { 3 - first };
                let len = rng.random_range(1..=max_len);
                (side, word(rng, p.gens(side), len))
            })
            .collect();
        if let Ok(a) = AlternatingWord::new(p, blocks) {
            if a.word() == a.word().cyclically_reduced() {
                return a;
            }
        }
    }
}

/// Deterministic RNG for a seed.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{classify, mob_to_iso, Classification};

    #[test]
    fn same_seed_same_stream() {
        let (mut a, mut b) = (rng(7), rng(7));
        assert_eq!(surface_spec(&mut a, 1, 3), surface_spec(&mut b, 1, 3));
        assert_eq!(hyperbolic(&mut a), hyperbolic(&mut b));
    }

    #[test]
    fn words_are_reduced_and_long_enough() {
        let mut r = rng(1);
        for len in 1..8 {
            let w = word(&mut r, &[0, 1], len);
            assert_eq!(w.len(), len);
        }
        assert_eq!(
            classify(&mob_to_iso(&hyperbolic(&mut r))),
            Classification::Hyperbolic
        );
    }

    #[test]
    fn random_tori_are_admissible() {
        let mut r = rng(2);
        for _ in 0..50 {
            let (l1, l2, th) = torus(&mut r, 0.1);
            assert!((th - PI / 2.0).abs() >= 0.1);
            assert!(torus_commutator_trace(l1, l2, th) < -2.0);
        }
    }

    #[test]
    fn alternating_words_alternate() {
        let mut r = rng(3);
        let s = surface(&mut r, 0, 4);
        let p = GluePartition::along_curve(&s, 1).unwrap();
        for _ in 0..50 {
            let a = alternating_word(&mut r, &p, 5, 3);
            assert!(a.blocks().windows(2).all(|b| b[0].0 != b[1].0));
            assert!(a.blocks().len() <= 10);
        }
    }
}
