//! Double-double evaluation of words and cocycles.
//!
//! Products of long words, and of short words whose generators sit far from
//! the basepoint, lose `eps * ||prefix||` to rounding. Cocycle values and
//! Margulis invariants are evaluated here with about 106 bits and rounded
//! once at the end.

use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::fuchsian::{FreeRep, Word};
use crate::lorentz::{Mob, Vec3, HYPERBOLIC_MARGIN};

type D = TwoFloat;
type M2 = [[D; 2]; 2];
type M3 = [[D; 3]; 3];
type V3 = [D; 3];

fn d(x: f64) -> D {
    D::from(x)
}

fn zero() -> D {
    D::from(0.0)
}

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut out = [[zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mul3(a: &M3, b: &M3) -> M3 {
    let mut out = [[zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn apply3(a: &M3, v: &V3) -> V3 {
    let mut out = [zero(); 3];
    for i in 0..3 {
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    }
    out
}

fn identity3() -> M3 {
    let mut m = [[zero(); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = d(1.0);
    }
    m
}

fn adjugate(a: &M2) -> M2 {
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

/// 2x2 letter matrix; inverses are adjugates, as in the `f64` bridge.
fn letter2(rep: &FreeRep, gen: usize, exp: i8) -> M2 {
    let m = rep.generators()[gen].mob().matrix();
    let a = [[d(m[(0, 0)]), d(m[(0, 1)])], [d(m[(1, 0)]), d(m[(1, 1)])]];
    if exp > 0 {
        a
    } else {
        adjugate(&a)
    }
}

fn vec_to_sl2(v: &V3) -> M2 {
    [[v[0], v[1] - v[2]], [v[1] + v[2], -v[0]]]
}

fn sl2_to_vec(m: &M2) -> V3 {
    let h = d(0.5);
    [
        h * (m[0][0] - m[1][1]),
        h * (m[0][1] + m[1][0]),
        h * (m[1][0] - m[0][1]),
    ]
}

/// `X -> A X adj(A)` in the basis `E1, E2, E3`.
fn adjoint(a: &M2) -> M3 {
    let ai = adjugate(a);
    let mut m = [[zero(); 3]; 3];
    for j in 0..3 {
        let mut e = [zero(); 3];
        e[j] = d(1.0);
        let col = sl2_to_vec(&mul2(&mul2(a, &vec_to_sl2(&e)), &ai));
        for i in 0..3 {
            m[i][j] = col[i];
        }
    }
    m
}

fn lorentz(u: &V3, v: &V3) -> D {
    u[0] * v[0] + u[1] * v[1] - u[2] * v[2]
}

fn round(v: &V3) -> Vec3 {
    Vec3::new(
        v[0].hi() + v[0].lo(),
        v[1].hi() + v[1].lo(),
        v[2].hi() + v[2].lo(),
    )
}

/// `u(w)` for the cocycle with generator values `values`.
fn eval_wide(rep: &FreeRep, values: &[Vec3], w: &Word) -> V3 {
    let mut prefix = identity3();
    let mut acc = [zero(); 3];
    for l in w.letters() {
        let a = letter2(rep, l.gen, l.exp);
        let g = rep.generators()[l.gen].mob().matrix();
        let gm = [[d(g[(0, 0)]), d(g[(0, 1)])], [d(g[(1, 0)]), d(g[(1, 1)])]];
        let u = values[l.gen];
        let u = [d(u.x), d(u.y), d(u.z)];
        // u(g^-1) = -g^-1 u(g)
        let val = if l.exp > 0 {
            u
        } else {
            let v = apply3(&adjoint(&adjugate(&gm)), &u);
            [-v[0], -v[1], -v[2]]
        };
        let pv = apply3(&prefix, &val);
        for i in 0..3 {
            acc[i] += pv[i];
        }
        prefix = mul3(&prefix, &adjoint(&a));
    }
    acc
}

/// `u(w)`, rounded once.
pub(crate) fn eval(rep: &FreeRep, values: &[Vec3], w: &Word) -> Vec3 {
    round(&eval_wide(rep, values, w))
}

/// Product of the letters in `SL(2, R)`, with positive trace.
fn product2(rep: &FreeRep, letters: impl Iterator<Item = (usize, i8)>) -> M2 {
    let mut m = [[d(1.0), zero()], [zero(), d(1.0)]];
    for (gen, exp) in letters {
        m = mul2(&m, &letter2(rep, gen, exp));
    }
    if m[0][0] + m[1][1] < 0.0 {
        m = [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]];
    }
    m
}

/// `|tr|` of the word's image, rounded once.
pub(crate) fn abs_trace(rep: &FreeRep, w: &Word) -> f64 {
    let m = product2(rep, pairs(w.letters()));
    let t = m[0][0] + m[1][1];
    t.hi() + t.lo()
}

/// Unit spacelike fixed vector of the word's image.
fn axis_wide(rep: &FreeRep, letters: impl Iterator<Item = (usize, i8)>) -> Result<V3> {
    let a = product2(rep, letters);
    let t = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let tf = t.hi();
    if tf <= 2.0 + HYPERBOLIC_MARGIN {
        return Err(Error::NotHyperbolic { trace: tf });
    }
    let disc = (t * t - d(4.0) * det).sqrt();
    let traceless = [
        [a[0][0] - a[1][1], d(2.0) * a[0][1]],
        [d(2.0) * a[1][0], a[1][1] - a[0][0]],
    ];
    let v = sl2_to_vec(&traceless);
    Ok([v[0] / disc, v[1] / disc, v[2] / disc])
}

/// `X0` of the word's image, rounded once.
pub(crate) fn axis(rep: &FreeRep, w: &Word) -> Result<Vec3> {
    Ok(round(&axis_wide(rep, pairs(w.letters()))?))
}

fn pairs(letters: &[crate::fuchsian::Letter]) -> impl Iterator<Item = (usize, i8)> + '_ {
    letters.iter().map(|l| (l.gen, l.exp))
}

/// `B(u(w), X0_w)`, summed letter by letter: the letter at position `i`
/// contributes `B(u(l_i), X0)` of the rotation of `w` starting at `i`.
/// The terms stay of the size of the generator values, while `u(w)` itself
/// grows like the word's image and would cancel against `X0_w`.
pub(crate) fn margulis(rep: &FreeRep, values: &[Vec3], w: &Word) -> Result<f64> {
    let letters = w.letters();
    let n = letters.len();
    if n == 0 {
        return Err(Error::NotHyperbolic { trace: 2.0 });
    }
    let mut total = zero();
    for i in 0..n {
        let x0 = axis_wide(rep, pairs(&letters[i..]).chain(pairs(&letters[..i])))?;
        let l = letters[i];
        let u = values[l.gen];
        let u = [d(u.x), d(u.y), d(u.z)];
        let val = if l.exp > 0 {
            u
        } else {
            // u(g^-1) = -g^-1 u(g)
            let v = apply3(&adjoint(&adjugate(&letter2(rep, l.gen, 1))), &u);
            [-v[0], -v[1], -v[2]]
        };
        total += lorentz(&val, &x0);
    }
    Ok(total.hi() + total.lo())
}

fn mob2(m: &Mob) -> M2 {
    let m = m.matrix();
    [[d(m[(0, 0)]), d(m[(0, 1)])], [d(m[(1, 0)]), d(m[(1, 1)])]]
}

/// Translation length of `w` with each generator `g_i` replaced by
/// `left[i] g_i`. The products are formed without rounding `left[i] g_i`.
pub(crate) fn deformed_length(rep: &FreeRep, left: &[Mob], w: &Word) -> Result<f64> {
    let mut m = [[d(1.0), zero()], [zero(), d(1.0)]];
    for l in w.letters() {
        let a = mul2(&mob2(&left[l.gen]), &mob2(rep.generators()[l.gen].mob()));
        m = mul2(&m, &if l.exp > 0 { a } else { adjugate(&a) });
    }
    let t = (m[0][0] + m[1][1]).abs();
    let excess = t - d(2.0);
    if excess.hi() <= HYPERBOLIC_MARGIN {
        return Err(Error::NotHyperbolic { trace: t.hi() });
    }
    // 2 acosh(t/2), written to keep precision near t = 2
    let s = (excess * (t + d(2.0))).sqrt() * d(0.5);
    let s = s.hi() + s.lo();
    Ok(2.0 * s.asinh())
}
