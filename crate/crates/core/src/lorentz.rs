//! Minkowski space R^{2,1}, the bridge PSL(2,R) -> SO°(2,1), null frames and
//! axis geometry of hyperbolic isometries.
//!
//! Coordinates are `[x1, x2, x3]` with the form `x1 y1 + x2 y2 - x3 y3`. The
//! Lie algebra sl2(R) is identified with R^{2,1} through the basis
//!
//! ```text
//! E1 = [[1, 0], [0, -1]]   E2 = [[0, 1], [1, 0]]   E3 = [[0, -1], [1, 0]]
//! ```
//!
//! under which the Lorentz form is the half-trace form `tr(XY) / 2`, and a
//! matrix `A` acts on R^{2,1} by the adjoint action `X -> A X A^-1`.
//! With this orientation the boost `diag(e^t, e^-t)` (t > 0) has null frame
//! `X0 = [1,0,0]`, `X- = [0,1,1]/sqrt 2`, `X+ = [0,-1,1]/sqrt 2`.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Error, Result};

/// A vector of R^{2,1}.
pub type Vec3 = Vector3<f64>;

/// Threshold below which `B(v, v)` counts as zero.
pub const NULL_TOL: f64 = 1e-10;
/// `|tr| - 2` must exceed this for an element to count as hyperbolic.
pub const HYPERBOLIC_MARGIN: f64 = 1e-8;
/// Tolerance used to decide that two axes coincide or are asymptotic.
pub const AXIS_TOL: f64 = 1e-10;

/// The Lorentzian inner product `x1 y1 + x2 y2 - x3 y3`.
#[inline]
pub fn lorentz_form(u: &Vec3, v: &Vec3) -> f64 {
    u.x * v.x + u.y * v.y - u.z * v.z
}

/// Lorentzian cross product: the unique vector `w` with
/// `B(w, z) = det(u, v, z)` for all `z`. It is B-orthogonal to `u` and `v`.
#[inline]
pub fn lorentz_cross(u: &Vec3, v: &Vec3) -> Vec3 {
    let c = u.cross(v);
    Vec3::new(c.x, c.y, -c.z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalType {
    Spacelike,
    Null,
    Timelike,
}

pub fn causal_type(v: &Vec3) -> CausalType {
    let q = lorentz_form(v, v);
    if q > NULL_TOL {
        CausalType::Spacelike
    } else if q < -NULL_TOL {
        CausalType::Timelike
    } else {
        CausalType::Null
    }
}

/// Traceless 2x2 matrix `x1 E1 + x2 E2 + x3 E3`.
pub fn vec_to_sl2(v: &Vec3) -> Matrix2<f64> {
    Matrix2::new(v.x, v.y - v.z, v.y + v.z, -v.x)
}

/// Inverse of [`vec_to_sl2`] on traceless matrices (the trace part is dropped).
pub fn sl2_to_vec(m: &Matrix2<f64>) -> Vec3 {
    Vec3::new(
        0.5 * (m[(0, 0)] - m[(1, 1)]),
        0.5 * (m[(0, 1)] + m[(1, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// `exp(vec_to_sl2(v))`, using `X^2 = B(v,v) I` for traceless `X`.
pub fn exp_sl2(v: &Vec3) -> Mob {
    let q = lorentz_form(v, v);
    let (c, s) = if q.abs() < 1e-8 {
        (1.0 + q / 2.0 + q * q / 24.0, 1.0 + q / 6.0 + q * q / 120.0)
    } else if q > 0.0 {
        let r = q.sqrt();
        (r.cosh(), r.sinh() / r)
    } else {
        let r = (-q).sqrt();
        (r.cos(), r.sin() / r)
    };
    let x = vec_to_sl2(v);
    Mob::from_unimodular(Matrix2::identity() * c + x * s)
}

/// An element of PSL(2,R), stored as its canonical SL(2,R) representative:
/// determinant one and first non-negligible entry (row-major) positive.
#[derive(Clone, Copy, PartialEq)]
pub struct Mob(Matrix2<f64>);

impl fmt::Debug for Mob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "Mob[[{}, {}], [{}, {}]]",
            m[(0, 0)],
            m[(0, 1)],
            m[(1, 0)],
            m[(1, 1)]
        )
    }
}

impl Mob {
    /// Builds the class of `[[a, b], [c, d]]`, rescaling to determinant one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::from_matrix(Matrix2::new(a, b, c, d))
    }

    pub fn from_matrix(m: Matrix2<f64>) -> Result<Self> {
        let det = m.determinant();
        if !(det.is_finite() && det > 0.0) {
            return Err(Error::NotUnimodular { det });
        }
        Ok(Self::canonical(m / det.sqrt()))
    }

    /// For products of unimodular matrices: renormalizes without the checks.
    ///
    /// For large entries the computed determinant is dominated by rounding,
    /// so it is only used when it is close to one.
    fn from_unimodular(m: Matrix2<f64>) -> Self {
        let det = m.determinant();
        if (det - 1.0).abs() < 1e-6 {
            Self::canonical(m / det.sqrt())
        } else {
            Self::canonical(m)
        }
    }

    fn canonical(m: Matrix2<f64>) -> Self {
        let scale = m.amax();
        let first = m
            .transpose()
            .iter()
            .copied()
            .find(|x| x.abs() > 1e-14 * scale)
            .unwrap_or(1.0);
        if first < 0.0 {
            Mob(-m)
        } else {
            Mob(m)
        }
    }

    pub fn identity() -> Self {
        Mob(Matrix2::identity())
    }

    /// Hyperbolic translation of length `length` along the imaginary axis.
    pub fn boost(length: f64) -> Self {
        let h = 0.5 * length;
        Mob(Matrix2::new(h.exp(), 0.0, 0.0, (-h).exp()))
    }

    /// Rotation about `i`; acts on R^{2,1} as the rotation by `angle` about the x3-axis.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::canonical(Matrix2::new(c, -s, s, c))
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    pub fn entries(&self) -> [f64; 4] {
        let m = &self.0;
        [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn abs_trace(&self) -> f64 {
        self.0.trace().abs()
    }

    pub fn inverse(&self) -> Self {
        let m = &self.0;
        Self::canonical(Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]))
    }

    /// `k * self * k^-1`.
    pub fn conjugate_by(&self, k: &Mob) -> Self {
        *k * *self * k.inverse()
    }

    /// Equality in PSL(2,R): `self = ±other` entrywise within `tol` (relative to the entry scale).
    pub fn approx_eq(&self, other: &Mob, tol: f64) -> bool {
        let scale = 1.0f64.max(self.0.amax()).max(other.0.amax());
        (self.0 - other.0).amax() <= tol * scale || (self.0 + other.0).amax() <= tol * scale
    }

    /// Representative with non-negative trace.
    fn positive(&self) -> Matrix2<f64> {
        if self.0.trace() < 0.0 {
            -self.0
        } else {
            self.0
        }
    }
}

impl Mul for Mob {
    type Output = Mob;
    fn mul(self, rhs: Mob) -> Mob {
        Mob::from_unimodular(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Mob> for &'a Mob {
    type Output = Mob;
    fn mul(self, rhs: &Mob) -> Mob {
        Mob::from_unimodular(self.0 * rhs.0)
    }
}

/// An element of SO°(2,1) together with the PSL(2,R) element it came from.
///
/// Every `Iso` in this crate is produced by bridging a [`Mob`], so the
/// 2x2 representative is always available for closed-form eigen data.
#[derive(Clone, Copy, Debug)]
pub struct Iso {
    m: Matrix3<f64>,
    mob: Mob,
}

/// Adjoint action of `A` on R^{2,1}, in the basis `E1, E2, E3`.
pub fn mob_to_iso(a: &Mob) -> Iso {
    let am = a.matrix();
    // adjugate, so the sign of the representative cancels
    let ainv = Matrix2::new(am[(1, 1)], -am[(0, 1)], -am[(1, 0)], am[(0, 0)]);
    let basis = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    let mut m = Matrix3::zeros();
    for (j, e) in basis.iter().enumerate() {
        let col = sl2_to_vec(&(am * vec_to_sl2(e) * ainv));
        m.set_column(j, &col);
    }
    Iso { m, mob: *a }
}

impl From<Mob> for Iso {
    fn from(a: Mob) -> Self {
        mob_to_iso(&a)
    }
}

impl Iso {
    pub fn identity() -> Self {
        Iso {
            m: Matrix3::identity(),
            mob: Mob::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn mob(&self) -> &Mob {
        &self.mob
    }

    #[inline]
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.m * v
    }

    pub fn inverse(&self) -> Self {
        mob_to_iso(&self.mob.inverse())
    }

    pub fn classify(&self) -> Classification {
        classify(self)
    }
}

impl Mul for Iso {
    type Output = Iso;
    fn mul(self, rhs: Iso) -> Iso {
        mob_to_iso(&(self.mob * rhs.mob))
    }
}

impl<'a> Mul<&'a Iso> for &'a Iso {
    type Output = Iso;
    fn mul(self, rhs: &Iso) -> Iso {
        mob_to_iso(&(self.mob * rhs.mob))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Trace classification. Traces within [`HYPERBOLIC_MARGIN`] of 2 are
/// reported as parabolic.
pub fn classify(h: &Iso) -> Classification {
    let mob = h.mob();
    if (mob.matrix() - Matrix2::identity()).amax() <= 1e-12 {
        return Classification::Identity;
    }
    let t = mob.abs_trace();
    if t > 2.0 + HYPERBOLIC_MARGIN {
        Classification::Hyperbolic
    } else if t < 2.0 - HYPERBOLIC_MARGIN {
        Classification::Elliptic
    } else {
        Classification::Parabolic
    }
}

/// Normalized eigenframe of a hyperbolic isometry.
#[derive(Debug, Clone, Copy)]
pub struct NullFrame {
    /// Unit spacelike fixed vector, oriented by `det(x0, xm, xp) > 0`.
    pub x0: Vec3,
    /// Future null eigenvector of the smallest eigenvalue, Euclidean norm 1.
    pub xm: Vec3,
    /// Future null eigenvector of the largest eigenvalue, Euclidean norm 1.
    pub xp: Vec3,
    /// Smallest eigenvalue of the 3x3 matrix, `e^-ell`.
    pub lambda: f64,
    /// Translation length in H^2.
    pub ell: f64,
}

impl NullFrame {
    /// Coefficients `(c0, cm, cp)` with `v = c0 x0 + cm xm + cp xp`.
    pub fn components(&self, v: &Vec3) -> (f64, f64, f64) {
        let pm = lorentz_form(&self.xm, &self.xp);
        (
            lorentz_form(v, &self.x0),
            lorentz_form(v, &self.xp) / pm,
            lorentz_form(v, &self.xm) / pm,
        )
    }

    /// A point of the invariant axis on the hyperboloid `B(x,x) = -1, x3 > 0`.
    pub fn axis_point(&self) -> Vec3 {
        let p = self.xm + self.xp;
        p / (-lorentz_form(&p, &p)).sqrt()
    }

    /// Columns `(x0 | xm | xp)`.
    pub fn basis(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.x0, self.xm, self.xp])
    }
}

/// Null vector of the boundary point with homogeneous coordinates `p`.
fn boundary_null_vector(p: (f64, f64)) -> Vec3 {
    let (x, y) = p;
    let v = Vec3::new(x * y, 0.5 * (y * y - x * x), 0.5 * (x * x + y * y));
    v / v.norm()
}

/// Eigenvector of a 2x2 matrix for eigenvalue `lambda`, from whichever row is better conditioned.
fn eigvec2(m: &Matrix2<f64>, lambda: f64) -> (f64, f64) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let p = (b, lambda - a);
    let q = (lambda - d, c);
    if p.0.hypot(p.1) >= q.0.hypot(q.1) {
        p
    } else {
        q
    }
}

/// Unit spacelike fixed vector of a hyperbolic `Mob`: the normalized traceless part.
pub(crate) fn axis_vector(mob: &Mob) -> Result<Vec3> {
    let a = mob.positive();
    let t = a.trace();
    if t <= 2.0 + HYPERBOLIC_MARGIN {
        return Err(Error::NotHyperbolic { trace: t });
    }
    let disc = ((t - 2.0) * (t + 2.0)).sqrt();
    let traceless = Matrix2::new(
        a[(0, 0)] - a[(1, 1)],
        2.0 * a[(0, 1)],
        2.0 * a[(1, 0)],
        a[(1, 1)] - a[(0, 0)],
    );
    Ok(sl2_to_vec(&traceless) / disc)
}

/// Null frame computed from the fixed points of the 2x2 representative.
pub fn null_frame(h: &Iso) -> Result<NullFrame> {
    let a = h.mob().positive();
    let t = a.trace();
    if t <= 2.0 + HYPERBOLIC_MARGIN {
        return Err(Error::NotHyperbolic { trace: t });
    }
    let disc = ((t - 2.0) * (t + 2.0)).sqrt();
    let mu = 0.5 * (t + disc);
    let x0 = axis_vector(h.mob())?;
    // attracting fixed point of A carries the expanding null direction of Ad(A)
    let xp = boundary_null_vector(eigvec2(&a, mu));
    let xm = boundary_null_vector(eigvec2(&a, 1.0 / mu));
    let ell = 2.0 * (0.5 * t).acosh();
    Ok(NullFrame {
        x0,
        xm,
        xp,
        lambda: (-ell).exp(),
        ell,
    })
}

/// Hyperbolic translation length `2 arccosh(|tr| / 2)`.
pub fn translation_length(h: &Iso) -> Result<f64> {
    let t = h.mob().abs_trace();
    if t <= 2.0 + HYPERBOLIC_MARGIN {
        return Err(Error::NotHyperbolic { trace: t });
    }
    Ok(2.0 * (0.5 * t).acosh())
}

/// Translation by `distance` along the oriented axis of `h`; commutes with `h`.
pub fn axis_translation(h: &Iso, distance: f64) -> Result<Mob> {
    let x0 = axis_vector(h.mob())?;
    Ok(exp_sl2(&(x0 * (0.5 * distance))))
}

/// The pure translation `C` with `Ad(C) p = [0, 0, 1]`, for `p` on the
/// future hyperboloid.
pub fn translation_to_origin(p: &Vec3) -> Result<Mob> {
    // vec_to_sl2(p) E3^-1 = A^2 for the symmetric positive A moving the origin to p
    let e3_inv = Matrix2::new(0.0, 1.0, -1.0, 0.0);
    let m = vec_to_sl2(p) * e3_inv;
    let t = m.trace();
    if !(t > 0.0) {
        return Err(Error::SingularSystem("point is not future timelike".into()));
    }
    let a = (m + Matrix2::identity()) / (t + 2.0).sqrt();
    Ok(Mob::from_matrix(a)?.inverse())
}

/// Relative position of the invariant axes of two hyperbolic isometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisRelation {
    /// Axes meet at `point` (on the hyperboloid) with `cos(angle) = B(X0_1, X0_2)`.
    Cross {
        angle: f64,
        point: Vec3,
    },
    Equal,
    Asymptotic,
    /// Ultraparallel axes at hyperbolic distance `distance`.
    Disjoint {
        distance: f64,
    },
}

pub fn axis_relation(h1: &Iso, h2: &Iso) -> Result<AxisRelation> {
    let a = axis_vector(h1.mob())?;
    let b = axis_vector(h2.mob())?;
    Ok(axis_relation_of_vectors(&a, &b))
}

pub(crate) fn axis_relation_of_vectors(a: &Vec3, b: &Vec3) -> AxisRelation {
    if (a - b).norm() <= AXIS_TOL * 1e2 || (a + b).norm() <= AXIS_TOL * 1e2 {
        return AxisRelation::Equal;
    }
    let p = lorentz_form(a, b);
    if p.abs() < 1.0 - AXIS_TOL {
        let mut x = lorentz_cross(a, b);
        x /= (-lorentz_form(&x, &x)).sqrt();
        if x.z < 0.0 {
            x = -x;
        }
        AxisRelation::Cross {
            angle: p.acos(),
            point: x,
        }
    } else if p.abs() > 1.0 + AXIS_TOL {
        AxisRelation::Disjoint {
            distance: p.abs().acosh(),
        }
    } else {
        AxisRelation::Asymptotic
    }
}

/// The unique `C` in PSL(2,R) with `C from C^-1 = to`, matching attracting
/// and repelling fixed points. Requires equal translation lengths.
pub fn conjugator(from: &Mob, to: &Mob) -> Result<Mob> {
    let p = eigenbasis(from)?;
    let q = eigenbasis(to)?;
    let pinv = p
        .try_inverse()
        .ok_or(Error::SingularSystem("eigenbasis".into()))?;
    Mob::from_matrix(q * pinv)
}

/// Unimodular matrix whose columns are the attracting and repelling eigenvectors.
fn eigenbasis(mob: &Mob) -> Result<Matrix2<f64>> {
    let a = mob.positive();
    let t = a.trace();
    if t <= 2.0 + HYPERBOLIC_MARGIN {
        return Err(Error::NotHyperbolic { trace: t });
    }
    let disc = ((t - 2.0) * (t + 2.0)).sqrt();
    let mu = 0.5 * (t + disc);
    let p1 = eigvec2(&a, mu);
    let p1n = p1.0.hypot(p1.1);
    let p2 = eigvec2(&a, 1.0 / mu);
    let p2n = p2.0.hypot(p2.1);
    let mut m = Matrix2::new(p1.0 / p1n, p2.0 / p2n, p1.1 / p1n, p2.1 / p2n);
    let det = m.determinant();
    if det < 0.0 {
        m.set_column(1, &(-m.column(1)));
    }
    Ok(m / det.abs().sqrt())
}
