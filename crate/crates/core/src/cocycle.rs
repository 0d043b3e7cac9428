//! Cocycles of a free group with values in R^{2,1}, twisted by the linear
//! action of a [`FreeRep`]: evaluation, coboundaries, Margulis invariants
//! and the cohomology test.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{FreeRep, Word};
use crate::lorentz::{axis_vector, lorentz_form, Mob, Vec3};

/// A cocycle, stored by its values on the free generators.
#[derive(Debug, Clone)]
pub struct Cocycle {
    rep: Arc<FreeRep>,
    values: Vec<Vec3>,
}

/// Inverse of a Lorentz matrix, `J m^T J`.
#[inline]
pub(crate) fn lorentz_inverse(m: &Matrix3<f64>) -> Matrix3<f64> {
    let mut t = m.transpose();
    for i in 0..2 {
        t[(i, 2)] = -t[(i, 2)];
        t[(2, i)] = -t[(2, i)];
    }
    t
}

impl Cocycle {
    pub fn new(rep: Arc<FreeRep>, values: Vec<Vec3>) -> Result<Cocycle> {
        if values.len() != rep.rank() {
            return Err(Error::DimensionMismatch {
                expected: rep.rank(),
                got: values.len(),
            });
        }
        Ok(Cocycle { rep, values })
    }

    pub fn zero(rep: Arc<FreeRep>) -> Cocycle {
        let values = vec![Vec3::zeros(); rep.rank()];
        Cocycle { rep, values }
    }

    pub fn rep(&self) -> &Arc<FreeRep> {
        &self.rep
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn value(&self, i: usize) -> Result<Vec3> {
        self.values.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            rank: self.values.len(),
        })
    }

    /// Same generator values over another representation of the same rank.
    pub fn with_rep(&self, rep: Arc<FreeRep>) -> Result<Cocycle> {
        Cocycle::new(rep, self.values.clone())
    }

    /// Replaces the values of the generators in `gens`.
    pub fn with_values(&self, gens: &[usize], values: &[Vec3]) -> Cocycle {
        let mut out = self.clone();
        for (&i, v) in gens.iter().zip(values) {
            out.values[i] = *v;
        }
        out
    }

    /// Value on a single letter: `u(g)` or `u(g^-1) = -g^-1 u(g)`.
    fn letter_value(&self, gen: usize, exp: i8) -> Vec3 {
        let v = self.values[gen];
        if exp > 0 {
            v
        } else {
            -(lorentz_inverse(self.rep.generators()[gen].matrix()) * v)
        }
    }

    fn letter_matrix(&self, gen: usize, exp: i8) -> Matrix3<f64> {
        let m = self.rep.generators()[gen].matrix();
        if exp > 0 {
            *m
        } else {
            lorentz_inverse(m)
        }
    }

    /// `u(w)`, via `u(h1 h2) = h1 u(h2) + u(h1)` letter by letter, accumulated
    /// in double-double.
    pub fn eval(&self, w: &Word) -> Result<Vec3> {
        self.rep.check_word(w)?;
        Ok(crate::dd::eval(&self.rep, &self.values, w))
    }

    /// [`Cocycle::eval`] in plain `f64`.
    pub fn eval_f64(&self, w: &Word) -> Result<Vec3> {
        self.rep.check_word(w)?;
        let mut prefix = Matrix3::identity();
        let mut acc = Vec3::zeros();
        for l in w.letters() {
            acc += prefix * self.letter_value(l.gen, l.exp);
            prefix *= self.letter_matrix(l.gen, l.exp);
        }
        Ok(acc)
    }

    /// Margulis invariant `B(u(w), X0_w)`, in double-double.
    pub fn margulis(&self, w: &Word) -> Result<f64> {
        self.rep.check_word(w)?;
        crate::dd::margulis(&self.rep, &self.values, w)
    }

    /// `B(u(w), X0_w)` in plain `f64`.
    pub fn margulis_direct(&self, w: &Word) -> Result<f64> {
        let g = self.rep.evaluate(w)?;
        let x0 = axis_vector(g.mob())?;
        Ok(lorentz_form(&self.eval_f64(w)?, &x0))
    }

    /// `sum_i B(u(a_i), X0 of a_i ... a_n a_1 ... a_{i-1})` over the letters
    /// `a_i` of `w`, in `f64`. Equal to the Margulis invariant.
    pub fn margulis_by_rotations(&self, w: &Word) -> Result<f64> {
        self.rep.check_word(w)?;
        let letters = w.letters();
        let n = letters.len();
        if n == 0 {
            axis_vector(&Mob::identity())?;
        }
        let mut total = 0.0;
        for i in 0..n {
            let mut m = Mob::identity();
            for k in 0..n {
                let l = letters[(i + k) % n];
                let g = self.rep.generators()[l.gen].mob();
                m = if l.exp > 0 { m * *g } else { m * g.inverse() };
            }
            let x0 = axis_vector(&m)?;
            total += lorentz_form(&self.letter_value(letters[i].gen, letters[i].exp), &x0);
        }
        Ok(total)
    }

    /// Generator values stacked into a vector of length `3 * rank`.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            3 * self.values.len(),
            self.values.iter().flat_map(|v| v.iter().copied()),
        )
    }

    pub fn from_vector(rep: Arc<FreeRep>, x: &DVector<f64>) -> Result<Cocycle> {
        if x.len() != 3 * rep.rank() {
            return Err(Error::DimensionMismatch {
                expected: 3 * rep.rank(),
                got: x.len(),
            });
        }
        let values = (0..rep.rank())
            .map(|i| Vec3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]))
            .collect();
        Ok(Cocycle { rep, values })
    }

    /// The representative `u - delta_v` of the class of `u` with the least
    /// Euclidean norm over the generator values.
    pub fn reduced(&self) -> Cocycle {
        match cohomologous_with_residual(&Cocycle::zero(self.rep.clone()), self) {
            Some((v, _, _)) => self - &coboundary(self.rep.clone(), &v),
            None => self.clone(),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> CocycleJson {
        CocycleJson {
            generator_values: self.values.iter().map(|v| [v.x, v.y, v.z]).collect(),
        }
    }

    pub fn from_json(rep: Arc<FreeRep>, j: &CocycleJson) -> Result<Cocycle> {
        Cocycle::new(
            rep,
            j.generator_values
                .iter()
                .map(|v| Vec3::new(v[0], v[1], v[2]))
                .collect(),
        )
    }

    fn zip_with(&self, other: &Cocycle, f: impl Fn(Vec3, Vec3) -> Vec3) -> Cocycle {
        assert_eq!(
            self.values.len(),
            other.values.len(),
            "cocycles over different ranks"
        );
        Cocycle {
            rep: self.rep.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }
}

/// Serialized form of a cocycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleJson {
    pub generator_values: Vec<[f64; 3]>,
}

impl Add for &Cocycle {
    type Output = Cocycle;
    fn add(self, rhs: &Cocycle) -> Cocycle {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Cocycle {
    type Output = Cocycle;
    fn sub(self, rhs: &Cocycle) -> Cocycle {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &Cocycle {
    type Output = Cocycle;
    fn neg(self) -> Cocycle {
        self * -1.0
    }
}

impl Mul<f64> for &Cocycle {
    type Output = Cocycle;
    fn mul(self, s: f64) -> Cocycle {
        Cocycle {
            rep: self.rep.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// `delta_v(h) = v - h v`.
pub fn coboundary(rep: Arc<FreeRep>, v: &Vec3) -> Cocycle {
    let values = rep.generators().iter().map(|g| v - g.apply(v)).collect();
    Cocycle { rep, values }
}

/// `B(u(w), X0_w)`; see [`Cocycle::margulis`].
pub fn margulis(u: &Cocycle, w: &Word) -> Result<f64> {
    u.margulis(w)
}

/// Finds `v` with `u2 - u = delta_v`, if one exists.
///
/// Solves `(I - g_i) v = u2(g_i) - u(g_i)` over all generators by least
/// squares and accepts when the residual is at most `1e-8 * (1 + |rhs|)`.
pub fn cohomologous(u: &Cocycle, u2: &Cocycle) -> Option<Vec3> {
    cohomologous_with_residual(u, u2).and_then(|(v, res, scale)| {
        if res <= 1e-8 * (1.0 + scale) {
            Some(v)
        } else {
            None
        }
    })
}

/// Least-squares solution, its residual norm and the right-hand side norm.
pub fn cohomologous_with_residual(u: &Cocycle, u2: &Cocycle) -> Option<(Vec3, f64, f64)> {
    let rank = u.rep().rank();
    if u2.rep().rank() != rank {
        return None;
    }
    let mut a = DMatrix::zeros(3 * rank, 3);
    let mut rhs = DVector::zeros(3 * rank);
    for (i, g) in u.rep().generators().iter().enumerate() {
        let block = Matrix3::identity() - g.matrix();
        a.view_mut((3 * i, 0), (3, 3)).copy_from(&block);
        let d = u2.values()[i] - u.values()[i];
        rhs.rows_mut(3 * i, 3).copy_from(&d);
    }
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&rhs, 1e-12 * svd.singular_values.max()).ok()?;
    let res = (&a * &x - &rhs).norm();
    Some((Vec3::new(x[0], x[1], x[2]), res, rhs.norm()))
}
