//! Affine deformations of the once-holed torus group `<w1, w2>`.
//!
//! Everything is computed in the normalized frame where `w1` translates
//! along the axis with `X0 = [1,0,0]`, and `w2` is the same kind of
//! translation rotated by the crossing angle `theta` about `[0,0,1]`.
//! The boundary is `g1 = [w1, w2]`, and `g3 = w1 w2^-1 w1^-1` (so `g1 w2 g3 = 1`).

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{Matrix3, SMatrix, SVector};
use serde::Serialize;

use crate::cocycle::{lorentz_inverse, Cocycle};
use crate::error::{Error, Result};
use crate::fuchsian::{build_once_holed_torus, FreeRep, Word};
use crate::lorentz::{
    axis_relation_of_vectors, axis_vector, conjugator, lorentz_form, mob_to_iso, null_frame,
    translation_to_origin, AxisRelation, Iso, Mob, NullFrame, Vec3, HYPERBOLIC_MARGIN,
};

/// Angular distance from `pi/2` below which the crossing counts as a right angle.
pub const RIGHT_ANGLE_TOL: f64 = 1e-6;

fn w1() -> Word {
    Word::gen(0)
}
fn w2() -> Word {
    Word::gen(1)
}
/// `[w1, w2]`.
pub fn g1_word() -> Word {
    Word::commutator(&w1(), &w2())
}
/// `w1 w2^-1 w1^-1`.
pub fn g3_word() -> Word {
    w1().concat(&w2().inverse()).concat(&w1().inverse())
}

/// A once-holed torus group together with its normalized frame.
#[derive(Debug, Clone)]
pub struct TorusFrameData {
    /// The representation as given (generators 0 and 1 are `w1`, `w2`).
    pub rep: Arc<FreeRep>,
    /// The same representation conjugated into the normalized frame.
    pub normalized: Arc<FreeRep>,
    /// `C` with `normalized = C rep C^-1`.
    pub conj: Mob,
    pub theta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Frames of `w1`, `w2` and `g1`, in the normalized frame.
    pub y1: NullFrame,
    pub y2: NullFrame,
    pub x1: NullFrame,
}

impl TorusFrameData {
    /// Frame data for the torus with `l(w1) = l1`, `l(w2) = l2` and crossing angle `theta`.
    pub fn from_params(l1: f64, l2: f64, theta: f64) -> Result<TorusFrameData> {
        Self::new(Arc::new(build_once_holed_torus(l1, l2, theta)?))
    }

    /// Conjugates a rank-2 representation with crossing generator axes into the normalized frame.
    pub fn new(rep: Arc<FreeRep>) -> Result<TorusFrameData> {
        if rep.rank() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: rep.rank(),
            });
        }
        let a = *rep.generators()[0].mob();
        let l1 = crate::lorentz::translation_length(&rep.generators()[0])?;
        let c1 = conjugator(&a, &Mob::boost(l1))?;
        let b1 = rep.generators()[1].mob().conjugate_by(&c1);
        let x0b = axis_vector(&b1)?;
        let point = match axis_relation_of_vectors(&Vec3::new(1.0, 0.0, 0.0), &x0b) {
            AxisRelation::Cross { point, .. } => point,
            other => {
                return Err(Error::NotGenerating(format!(
                    "generator axes do not cross ({other:?})"
                )))
            }
        };
        let conj = translation_to_origin(&point)? * c1;
        let normalized = Arc::new(rep.conjugated(&conj));
        let y1 = null_frame(&normalized.generators()[0])?;
        let y2 = null_frame(&normalized.generators()[1])?;
        if (y1.x0 - Vec3::new(1.0, 0.0, 0.0)).norm() > 1e-8 || y2.x0.z.abs() > 1e-8 {
            return Err(Error::NotNormalizedFrame(
                "conjugation did not reach the standard frame".into(),
            ));
        }
        if y2.x0.y < 0.0 {
            return Err(Error::NotNormalizedFrame(
                "the axis of w2 is at angle -theta from the axis of w1 (mirrored torus); \
                 swap the generators"
                    .into(),
            ));
        }
        let g1 = normalized.evaluate(&g1_word())?;
        if g1.mob().abs_trace() <= 2.0 + HYPERBOLIC_MARGIN {
            return Err(Error::NonHyperbolicBoundary);
        }
        let x1 = null_frame(&g1)?;
        let theta = y2.x0.y.atan2(y2.x0.x);
        Ok(TorusFrameData {
            rep,
            normalized,
            conj,
            theta,
            lambda1: y1.lambda,
            lambda2: y2.lambda,
            y1,
            y2,
            x1,
        })
    }

    pub fn is_right_angle(&self) -> bool {
        (self.theta - FRAC_PI_2).abs() < RIGHT_ANGLE_TOL
    }

    fn right_angle_error(&self) -> Error {
        Error::RightAngle {
            theta: self.theta,
            constraint: right_angle_constraint(self.lambda1, self.lambda2),
        }
    }

    /// Moves a cocycle over `rep` to the normalized frame (values `C u(g)`).
    pub fn to_normalized(&self, u: &Cocycle) -> Result<Cocycle> {
        let c = mob_to_iso(&self.conj);
        Cocycle::new(
            self.normalized.clone(),
            u.values().iter().map(|v| c.apply(v)).collect(),
        )
    }

    /// Moves a cocycle over the normalized representation back to `rep`.
    pub fn from_normalized(&self, u: &Cocycle) -> Result<Cocycle> {
        let c = mob_to_iso(&self.conj.inverse());
        Cocycle::new(
            self.rep.clone(),
            u.values().iter().map(|v| c.apply(v)).collect(),
        )
    }

    /// Cocycle over the normalized representation with
    /// `u(w1) = z1 Y1_0 + a Y1_- + b Y1_+` and `u(w2) = z2 Y2_0 + c Y2_- + d Y2_+`.
    pub fn frame_cocycle(&self, p: &[f64; 6]) -> Cocycle {
        let [z1, z2, a, b, c, d] = *p;
        let v1 = self.y1.x0 * z1 + self.y1.xm * a + self.y1.xp * b;
        let v2 = self.y2.x0 * z2 + self.y2.xm * c + self.y2.xp * d;
        Cocycle::new(self.normalized.clone(), vec![v1, v2]).expect("rank 2")
    }

    /// The `f64` constant of the right-angle relation between `kappa` and the `zeta`s.
    pub fn k_right_angle(&self) -> f64 {
        k_right_angle(self.lambda1, self.lambda2)
    }
}

/// `-2 / sqrt((1 - l1)^2 (1 - l2)^2 - 16 l1 l2)` written as the three-term radicand.
pub fn k_right_angle(lambda1: f64, lambda2: f64) -> f64 {
    let (l1, l2) = (lambda1, lambda2);
    let rad =
        (-1.0 + l2).powi(2) + l1 * l1 * (-1.0 + l2).powi(2) - 2.0 * l1 * (1.0 + 6.0 * l2 + l2 * l2);
    -2.0 / rad.sqrt()
}

pub(crate) fn right_angle_constraint(l1: f64, l2: f64) -> String {
    format!(
        "kappa / K = (1 + lambda1)(-1 + lambda2) zeta1 + (-1 + lambda1)(1 + lambda2) zeta2, \
         with lambda1 = {l1:.17e}, lambda2 = {l2:.17e}, K = {:.17e}",
        k_right_angle(l1, l2)
    )
}

/// `u(g1) = (I - g3^-1) u(w1) + (w1 - g1) u(w2)`, computed from the matrices.
pub fn u_g1(u: &Cocycle) -> Result<Vec3> {
    let rep = u.rep();
    let w1m = *rep.generator(0)?.matrix();
    let g1m = *rep.evaluate(&g1_word())?.matrix();
    let g3m = *rep.evaluate(&g3_word())?.matrix();
    let a = (Matrix3::identity() - lorentz_inverse(&g3m)) * u.value(0)?;
    let b = (w1m - g1m) * u.value(1)?;
    Ok(a + b)
}

/// Coefficients of `(zeta1, zeta2, a, b, c, d)` in a linear functional of the cocycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffVector {
    pub coeffs: [f64; 6],
}

/// Scale and relative residual of the best fit `coeffs ~ scale * pattern`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternFit {
    pub scale: f64,
    pub residual: f64,
}

impl CoeffVector {
    pub fn zeta_block(&self) -> [f64; 2] {
        [self.coeffs[0], self.coeffs[1]]
    }

    pub fn abcd_block(&self) -> [f64; 4] {
        [
            self.coeffs[2],
            self.coeffs[3],
            self.coeffs[4],
            self.coeffs[5],
        ]
    }

    /// Least-squares scale `<c, p> / <p, p>` and `|c - scale p| / |c|`.
    pub fn fit(&self, pattern: &[f64; 6]) -> PatternFit {
        let c = SVector::<f64, 6>::from(self.coeffs);
        let p = SVector::<f64, 6>::from(*pattern);
        let scale = c.dot(&p) / p.dot(&p);
        let residual = (c - p * scale).norm() / c.norm();
        PatternFit { scale, residual }
    }

    pub fn apply(&self, p: &[f64; 6]) -> f64 {
        self.coeffs.iter().zip(p).map(|(a, b)| a * b).sum()
    }
}

/// Predicted shape of the `Mar(g1)` coefficients.
pub fn mar_g1_pattern(lambda1: f64, lambda2: f64, theta: f64) -> [f64; 6] {
    let (l1, l2) = (lambda1, lambda2);
    let (s, c) = theta.sin_cos();
    let r = std::f64::consts::SQRT_2 * c;
    [
        s * (1.0 + l1) * (-1.0 + l2),
        s * (1.0 + l2) * (-1.0 + l1),
        -r * (-1.0 + l2),
        r * l1 * (-1.0 + l2),
        r * (-1.0 + l1),
        -r * l2 * (-1.0 + l1),
    ]
}

/// Predicted shape of the `Mar(w1 w2)` coefficients.
pub fn mar_w1w2_pattern(lambda1: f64, lambda2: f64, theta: f64) -> [f64; 6] {
    let (l1, l2) = (lambda1, lambda2);
    let p = (1.0 + l1) * (-1.0 + l2);
    let q = (-1.0 + l1) * (1.0 + l2);
    let (cot, csc) = (1.0 / theta.tan(), 1.0 / theta.sin());
    let r = std::f64::consts::SQRT_2;
    [
        -(p * cot + q * csc),
        -(q * cot + p * csc),
        -r * (-1.0 + l2),
        r * l1 * (-1.0 + l2),
        r * (-1.0 + l1),
        -r * l2 * (-1.0 + l1),
    ]
}

const UNIT: [[f64; 6]; 6] = [
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
];

/// Coefficients of `Mar(g1) = B(u(g1), X1_0)` in the frame parameters.
pub fn mar_g1_coefficients(t: &TorusFrameData) -> Result<CoeffVector> {
    let mut coeffs = [0.0; 6];
    for (k, e) in UNIT.iter().enumerate() {
        let u = t.frame_cocycle(e);
        coeffs[k] = lorentz_form(&u_g1(&u)?, &t.x1.x0);
    }
    Ok(CoeffVector { coeffs })
}

/// Coefficients of `Mar(w1 w2)` in the frame parameters.
pub fn mar_w1w2_coefficients(t: &TorusFrameData) -> Result<CoeffVector> {
    let w = w1().concat(&w2());
    let mut coeffs = [0.0; 6];
    for (k, e) in UNIT.iter().enumerate() {
        coeffs[k] = t.frame_cocycle(e).margulis(&w)?;
    }
    Ok(CoeffVector { coeffs })
}

/// The two scale constants of the torus: `K` for `Mar(g1)` and `K'` for `Mar(w1 w2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusConstants {
    pub k: f64,
    pub k_prime: f64,
    pub fit_g1: PatternFit,
    pub fit_w1w2: PatternFit,
}

pub fn torus_constants(t: &TorusFrameData) -> Result<TorusConstants> {
    let fit_g1 = mar_g1_coefficients(t)?.fit(&mar_g1_pattern(t.lambda1, t.lambda2, t.theta));
    let fit_w1w2 = mar_w1w2_coefficients(t)?.fit(&mar_w1w2_pattern(t.lambda1, t.lambda2, t.theta));
    Ok(TorusConstants {
        k: fit_g1.scale,
        k_prime: fit_w1w2.scale,
        fit_g1,
        fit_w1w2,
    })
}

/// Adds a coboundary so that `u(g1)` is a multiple of `X1_0` and `u(w2)` has
/// no `Y2_+` component. Returns the new cocycle and the vector `v`.
pub fn normalize(t: &TorusFrameData, u: &Cocycle) -> Result<(Cocycle, Vec3)> {
    if t.is_right_angle() {
        return Err(t.right_angle_error());
    }
    let rep = u.rep().clone();
    let g1 = rep.evaluate(&g1_word())?;
    if g1.mob().abs_trace() <= 2.0 + HYPERBOLIC_MARGIN {
        return Err(Error::NonHyperbolicBoundary);
    }
    let x1 = null_frame(&g1)?;
    let y2 = null_frame(rep.generator(1)?)?;
    let ug1 = u.eval(&g1_word())?;
    let (_, cm, cp) = x1.components(&ug1);
    let mu = x1.lambda;
    // -(n - g1^-1 n) / ((1 - mu)(1 - 1/mu)) with n = cm X- + cp X+, using
    // g1^-1 X- = X- / mu and g1^-1 X+ = mu X+
    let v0 = -(x1.xm * (cm / (1.0 - mu)) + x1.xp * (cp / (1.0 - 1.0 / mu)));
    let w2 = rep.generator(1)?;
    let shifted_w2 = u.value(1)? + v0 - w2.apply(&v0);
    let d_x0 = x1.x0 - w2.apply(&x1.x0);
    let denom = lorentz_form(&d_x0, &y2.xm);
    if denom.abs() < 1e-14 * (1.0 + d_x0.norm()) {
        return Err(Error::SingularSystem(
            "delta_X0(w2) has no Y2+ component".into(),
        ));
    }
    let s = -lorentz_form(&shifted_w2, &y2.xm) / denom;
    let v = v0 + x1.x0 * s;
    let d = crate::cocycle::coboundary(rep, &v);
    Ok((u + &d, v))
}

/// The cocycle with Margulis invariants `(z1, z2, k)` on `(w1, w2, g1)`, in
/// the normal form of [`normalize`], over `t.rep`.
///
/// The frame parameters `(a, b, c, d)` are the least-norm solution of the
/// `Mar(g1) = k` equation before normalization.
pub fn phi_t(t: &TorusFrameData, z1: f64, z2: f64, k: f64) -> Result<Cocycle> {
    if t.is_right_angle() {
        return Err(t.right_angle_error());
    }
    let coeffs = mar_g1_coefficients(t)?;
    let abcd = coeffs.abcd_block();
    let nrm2: f64 = abcd.iter().map(|x| x * x).sum();
    let rest = k - coeffs.coeffs[0] * z1 - coeffs.coeffs[1] * z2;
    let f = rest / nrm2;
    let p = [z1, z2, f * abcd[0], f * abcd[1], f * abcd[2], f * abcd[3]];
    let u = t.frame_cocycle(&p);
    let (u, _) = normalize(t, &u)?;
    t.from_normalized(&u)
}

/// `|kappa/K - cos(theta) zeta3/K' - 2 (l1 l2 - 1) / sin(theta) (zeta1 + zeta2)|`
/// with `kappa = Mar(g1)`, `zeta3 = Mar(w1 w2)`.
pub fn kappa_zeta3_residual(t: &TorusFrameData, u: &Cocycle) -> Result<f64> {
    let m = torus_margulis(u)?;
    let kc = torus_constants(t)?;
    let rhs = 2.0 * (t.lambda1 * t.lambda2 - 1.0) / t.theta.sin() * (m.zeta1 + m.zeta2);
    Ok((m.kappa / kc.k - t.theta.cos() * m.zeta3 / kc.k_prime - rhs).abs())
}

/// Residual of the relation obtained by eliminating `(a, b, c, d)` between the
/// `Mar(g1)` and `Mar(w1 w2)` expansions:
/// `kappa/K - cos(theta) zeta3/K' = ((P + Q cos) zeta1 + (Q + P cos) zeta2) / sin`
/// with `P = (1 + l1)(-1 + l2)`, `Q = (-1 + l1)(1 + l2)`.
pub fn eliminated_relation_residual(t: &TorusFrameData, u: &Cocycle) -> Result<f64> {
    let m = torus_margulis(u)?;
    let kc = torus_constants(t)?;
    let (l1, l2) = (t.lambda1, t.lambda2);
    let p = (1.0 + l1) * (-1.0 + l2);
    let q = (-1.0 + l1) * (1.0 + l2);
    let (s, c) = t.theta.sin_cos();
    let rhs = ((p + q * c) * m.zeta1 + (q + p * c) * m.zeta2) / s;
    Ok((m.kappa / kc.k - c * m.zeta3 / kc.k_prime - rhs).abs())
}

/// Margulis invariants of `w1`, `w2`, `g1` and `w1 w2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusMargulis {
    pub zeta1: f64,
    pub zeta2: f64,
    pub kappa: f64,
    pub zeta3: f64,
}

pub fn torus_margulis(u: &Cocycle) -> Result<TorusMargulis> {
    Ok(TorusMargulis {
        zeta1: u.margulis(&w1())?,
        zeta2: u.margulis(&w2())?,
        kappa: u.margulis(&g1_word())?,
        zeta3: u.margulis(&w1().concat(&w2()))?,
    })
}

/// `(Mar(om1), Mar(om2), Mar([om1, om2]))` for another generating pair.
///
/// The pair is accepted when the axes cross and `tr [om1, om2] = tr [w1, w2]`,
/// which holds for every generating pair of the once-holed torus group.
pub fn generator_change_coords(
    rep: &FreeRep,
    om1: &Word,
    om2: &Word,
    u: &Cocycle,
) -> Result<(f64, f64, f64)> {
    check_generating_pair(rep, om1, om2)?;
    let comm = Word::commutator(om1, om2);
    Ok((u.margulis(om1)?, u.margulis(om2)?, u.margulis(&comm)?))
}

/// Crossing angle of a generating pair; errors as in [`generator_change_coords`].
pub fn check_generating_pair(rep: &FreeRep, om1: &Word, om2: &Word) -> Result<f64> {
    let a = rep.evaluate(om1)?;
    let b = rep.evaluate(om2)?;
    let (xa, xb) = (axis_vector(a.mob()), axis_vector(b.mob()));
    let (xa, xb) = match (xa, xb) {
        (Ok(x), Ok(y)) => (x, y),
        _ => return Err(Error::NotGenerating("an element is not hyperbolic".into())),
    };
    let angle = match axis_relation_of_vectors(&xa, &xb) {
        AxisRelation::Cross { angle, .. } => angle,
        other => {
            return Err(Error::NotGenerating(format!(
                "axes do not cross ({other:?})"
            )))
        }
    };
    let tr = |x: &Iso, y: &Iso| {
        let (x, y) = (x.mob(), y.mob());
        (x.matrix() * y.matrix() * x.inverse().matrix() * y.inverse().matrix()).trace()
    };
    let base = tr(&rep.generators()[0], &rep.generators()[1]);
    let got = tr(&a, &b);
    if (got - base).abs() > 1e-8 * base.abs() {
        return Err(Error::NotGenerating(format!(
            "tr of the commutator is {got}, expected {base}"
        )));
    }
    if (angle - FRAC_PI_2).abs() < RIGHT_ANGLE_TOL {
        let l1 = null_frame(&a)?.lambda;
        let l2 = null_frame(&b)?.lambda;
        return Err(Error::RightAngle {
            theta: angle,
            constraint: right_angle_constraint(l1, l2),
        });
    }
    Ok(angle)
}

/// Linear map from cocycles (`3 * 2` generator entries) to the triple of a generating pair.
pub fn triple_matrix(t: &TorusFrameData, om1: &Word, om2: &Word) -> Result<SMatrix<f64, 3, 6>> {
    let mut m = SMatrix::<f64, 3, 6>::zeros();
    for k in 0..6 {
        let mut vals = [Vec3::zeros(); 2];
        vals[k / 3][k % 3] = 1.0;
        let u = Cocycle::new(t.rep.clone(), vals.to_vec())?;
        let (a, b, c) = generator_change_coords(&t.rep, om1, om2, &u)?;
        m[(0, k)] = a;
        m[(1, k)] = b;
        m[(2, k)] = c;
    }
    Ok(m)
}

/// Everything the torus report prints.
#[derive(Debug, Clone, Serialize)]
pub struct TorusReport {
    pub l1: f64,
    pub l2: f64,
    pub theta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub k: f64,
    pub k_prime: f64,
    pub k_right_angle: Option<f64>,
    pub coefficients_g1: [f64; 6],
    pub coefficients_w1w2: [f64; 6],
    pub residual_g1: f64,
    pub residual_w1w2: f64,
}

pub fn torus_report(l1: f64, l2: f64, theta: f64) -> Result<TorusReport> {
    let t = TorusFrameData::from_params(l1, l2, theta)?;
    let cg = mar_g1_coefficients(&t)?;
    let cw = mar_w1w2_coefficients(&t)?;
    let kc = torus_constants(&t)?;
    Ok(TorusReport {
        l1,
        l2,
        theta,
        lambda1: t.lambda1,
        lambda2: t.lambda2,
        k: kc.k,
        k_prime: kc.k_prime,
        k_right_angle: t.is_right_angle().then(|| t.k_right_angle()),
        coefficients_g1: cg.coeffs,
        coefficients_w1w2: cw.coeffs,
        residual_g1: kc.fit_g1.residual,
        residual_w1w2: kc.fit_w1w2.residual,
    })
}
