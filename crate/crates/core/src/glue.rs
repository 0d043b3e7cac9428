//! Gluing cocycles along a curve that splits the generators in two, affine
//! twist cocycles, and the linear coordinate system on `H^1` of an
//! assembled surface group.
//!
//! Coordinates are the Margulis invariants of the boundaries, handle curves,
//! inner pants curves and handle generators, plus one twist parameter per
//! handle curve and per inner curve. A cocycle is built bottom-up: pants
//! cocycles are chained along the inner curves of the holed sphere obtained
//! by cutting off the handles, then each handle's torus cocycle is glued on.
//! The zero-twist image of the Margulis data is the reference point for the
//! twist parameters.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, RowVector3, SMatrix, SVector, SVD};
use serde::{Deserialize, Serialize};

use crate::cocycle::{coboundary, Cocycle};
use crate::error::{Error, Result};
use crate::fuchsian::{centering, FreeRep, Surface, Word};
use crate::lorentz::{lorentz_form, mob_to_iso, null_frame, Iso, Mob, Vec3, HYPERBOLIC_MARGIN};
use crate::torus::{phi_t, right_angle_constraint, TorusFrameData};

/// Relative tolerance on equal Margulis invariants along a gluing curve,
/// scaled by the size of the two values on the curve.
pub const MAR_MATCH_TOL: f64 = 1e-9;

/// A split of the free generators into two sides sharing the curve `f`.
///
/// Side `i` is the subgroup generated by `qi_gens` together with `f`; the
/// word `f` is written over the generators of one side only.
#[derive(Debug, Clone, PartialEq)]
pub struct GluePartition {
    pub q1_gens: Vec<usize>,
    pub q2_gens: Vec<usize>,
    pub f: Word,
}

impl GluePartition {
    pub fn new(
        rank: usize,
        q1_gens: Vec<usize>,
        q2_gens: Vec<usize>,
        f: Word,
    ) -> Result<GluePartition> {
        let mut seen = vec![0u8; rank];
        for &i in q1_gens.iter().chain(&q2_gens) {
            if i >= rank {
                return Err(Error::IndexOutOfRange { index: i, rank });
            }
            seen[i] += 1;
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(Error::InvalidPartition(
                "every generator must lie on exactly one side".into(),
            ));
        }
        if f.is_empty() {
            return Err(Error::InvalidPartition(
                "the gluing curve is trivial".into(),
            ));
        }
        let p = GluePartition {
            q1_gens,
            q2_gens,
            f,
        };
        if !p.is_over_side(&p.f, 1) && !p.is_over_side(&p.f, 2) {
            return Err(Error::InvalidPartition(
                "the gluing curve must be a word in one side's generators".into(),
            ));
        }
        Ok(p)
    }

    /// Split of a surface along the inner curve `f_k` (1-based); side 2 holds
    /// the generators beyond `f_k`.
    pub fn along_curve(s: &Surface, k: usize) -> Result<GluePartition> {
        let f = s.curve(k)?.clone();
        let q2 = s.gens_beyond_curve(k);
        GluePartition::new(s.rep.rank(), complement(s.rep.rank(), &q2), q2, f)
    }

    /// Split of a surface along the handle curve `g^j` (1-based); side 2 is the handle.
    pub fn along_handle(s: &Surface, j: usize) -> Result<GluePartition> {
        if j == 0 || j > s.spec.g {
            return Err(Error::UnknownLabel(format!("g{j}")));
        }
        let f = s.rep.label(&format!("g{j}"))?.clone();
        let q2 = s.handle_generators(j);
        GluePartition::new(s.rep.rank(), complement(s.rep.rank(), &q2), q2, f)
    }

    /// Side (1 or 2) of a generator.
    pub fn side(&self, gen: usize) -> Option<u8> {
        if self.q1_gens.contains(&gen) {
            Some(1)
        } else if self.q2_gens.contains(&gen) {
            Some(2)
        } else {
            None
        }
    }

    /// Whether every letter of `w` is a generator of side `side`.
    pub fn is_over_side(&self, w: &Word, side: u8) -> bool {
        w.letters().iter().all(|l| self.side(l.gen) == Some(side))
    }

    pub fn gens(&self, side: u8) -> &[usize] {
        if side == 1 {
            &self.q1_gens
        } else {
            &self.q2_gens
        }
    }

    /// Image of the gluing curve, which must be hyperbolic.
    pub fn curve_image(&self, rep: &FreeRep) -> Result<Iso> {
        let h = rep.evaluate(&self.f)?;
        if h.mob().abs_trace() <= 2.0 + HYPERBOLIC_MARGIN {
            return Err(Error::NotHyperbolic {
                trace: h.mob().abs_trace(),
            });
        }
        Ok(h)
    }
}

fn complement(rank: usize, gens: &[usize]) -> Vec<usize> {
    (0..rank).filter(|i| !gens.contains(i)).collect()
}

/// The translation `v` with `v - f v = d` built from the null part `n` of
/// `d`: `(n - f^-1 n) / ((1 - mu)(1 - mu^-1))`, `mu` the smallest eigenvalue.
///
/// Exact when `B(d, X0_f) = 0`; otherwise the `X0_f` part of `d` is ignored.
pub fn trans_vector(f: &Iso, d: &Vec3) -> Result<Vec3> {
    let frame = null_frame(f)?;
    let (_, cm, cp) = frame.components(d);
    let n = frame.xm * cm + frame.xp * cp;
    let mu = frame.lambda;
    Ok((n - f.inverse().apply(&n)) / ((1.0 - mu) * (1.0 - 1.0 / mu)))
}

/// `u1 #_f u2`: `u1` on side 1, `u2 + delta_trans` on side 2, where `trans`
/// makes the two agree on `f`.
pub fn combine(u1: &Cocycle, u2: &Cocycle, p: &GluePartition) -> Result<Cocycle> {
    combine_at(u1, u1.eval(&p.f)?, u2, p)
}

/// [`combine`] with the side-1 value on `f` given explicitly; the side-2
/// generator values of `u1` are ignored.
fn combine_at(u1: &Cocycle, u1_f: Vec3, u2: &Cocycle, p: &GluePartition) -> Result<Cocycle> {
    let rep = u1.rep();
    if u2.rep().rank() != rep.rank() {
        return Err(Error::DimensionMismatch {
            expected: rep.rank(),
            got: u2.rep().rank(),
        });
    }
    let h = p.curve_image(rep)?;
    let x0 = null_frame(&h)?.x0;
    let u2_f = u2.eval(&p.f)?;
    let (left, right) = (lorentz_form(&u1_f, &x0), u2.margulis(&p.f)?);
    let scale = 1.0 + u1_f.norm().max(u2_f.norm()) * x0.norm();
    if (left - right).abs() > MAR_MATCH_TOL * scale {
        return Err(Error::MarMismatch { left, right });
    }
    let d = u1_f - u2_f;
    let trans = trans_vector(&h, &d)?;
    let mut values = u1.values().to_vec();
    for &i in &p.q2_gens {
        let g = rep.generator(i)?;
        values[i] = u2.values()[i] + trans - g.apply(&trans);
    }
    Cocycle::new(rep.clone(), values)
}

/// The affine twist cocycle along `f`: zero on side 1 and `X0_f - h X0_f`
/// on each side-2 generator `h`.
pub fn affine_twist(rep: &Arc<FreeRep>, p: &GluePartition) -> Result<Cocycle> {
    let x0 = null_frame(&p.curve_image(rep)?)?.x0;
    let mut values = vec![Vec3::zeros(); rep.rank()];
    for &i in &p.q2_gens {
        values[i] = x0 - rep.generator(i)?.apply(&x0);
    }
    Cocycle::new(rep.clone(), values)
}

/// `v -> B(v, x)` as a row.
fn pairing_row(x: &Vec3) -> RowVector3<f64> {
    RowVector3::new(x.x, x.y, -x.z)
}

/// Word `(g1 g2)^-1` of the third pants boundary.
pub fn pants_third_word() -> Word {
    Word::new([(1, -1), (0, -1)])
}

/// A cocycle on the pants group `<g1, g2>` with Margulis invariants `z` on
/// `(g1, g2, (g1 g2)^-1)`.
///
/// The representative has `u(g1)` along `X0_g1` and `B(u(g2), X-_g2) = 0`.
/// When that gauge is singular the least-norm solution is returned.
pub fn pants_cocycle(rep: &Arc<FreeRep>, z: [f64; 3]) -> Result<Cocycle> {
    if rep.rank() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rep.rank(),
        });
    }
    // solve near the origin; the gauge conditions are conjugation invariant
    let k = centering(rep.generators().iter().map(|g| g.mob()))?;
    let centered = Arc::new(rep.conjugated(&k));
    let u = pants_cocycle_here(&centered, z)?;
    let back = mob_to_iso(&k.inverse());
    Cocycle::new(
        rep.clone(),
        u.values().iter().map(|v| back.apply(v)).collect(),
    )
}

fn pants_cocycle_here(rep: &Arc<FreeRep>, z: [f64; 3]) -> Result<Cocycle> {
    if rep.rank() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rep.rank(),
        });
    }
    let g1 = rep.generator(0)?;
    let f1 = null_frame(g1)?;
    let f2 = null_frame(rep.generator(1)?)?;
    let g3 = rep.evaluate(&pants_third_word())?;
    let f3 = null_frame(&g3)?;

    let mut a = SMatrix::<f64, 6, 6>::zeros();
    a.fixed_view_mut::<1, 3>(0, 0)
        .copy_from(&pairing_row(&f1.x0));
    a.fixed_view_mut::<1, 3>(1, 3)
        .copy_from(&pairing_row(&f2.x0));
    // u(g3) = -g3 (u(g1) + g1 u(g2))
    let r3 = -pairing_row(&f3.x0) * g3.matrix();
    a.fixed_view_mut::<1, 3>(2, 0).copy_from(&r3);
    a.fixed_view_mut::<1, 3>(2, 3)
        .copy_from(&(r3 * g1.matrix()));
    a.fixed_view_mut::<1, 3>(3, 0)
        .copy_from(&pairing_row(&f1.xm));
    a.fixed_view_mut::<1, 3>(4, 0)
        .copy_from(&pairing_row(&f1.xp));
    a.fixed_view_mut::<1, 3>(5, 3)
        .copy_from(&pairing_row(&f2.xm));
    let rhs = SVector::<f64, 6>::new(z[0], z[1], z[2], 0.0, 0.0, 0.0);

    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let x = if svd.singular_values.min() > 1e-10 * smax {
        svd.solve(&rhs, 0.0)
            .map_err(|e| Error::SingularSystem(e.into()))?
    } else {
        let m = a.fixed_rows::<3>(0).into_owned();
        let msvd = m.svd(true, true);
        let sol = msvd
            .solve(&rhs.fixed_rows::<3>(0).into_owned(), 1e-12 * smax)
            .map_err(|e| Error::SingularSystem(e.into()))?;
        if (m * sol - rhs.fixed_rows::<3>(0)).norm() > 1e-9 * (1.0 + rhs.norm()) {
            return Err(Error::SingularSystem(
                "pants Margulis equations have no solution".into(),
            ));
        }
        sol
    };
    Cocycle::new(
        rep.clone(),
        vec![Vec3::new(x[0], x[1], x[2]), Vec3::new(x[3], x[4], x[5])],
    )
}

/// Coordinates of a class in `H^1`, grouped by kind.
///
/// `alpha`: boundaries `gamma^i`; `kappa`: handle curves `g^j`; `beta`:
/// inner curves `f_k`; `zeta1`, `zeta2`: handle generators; `tau`, `eps`:
/// twist parameters along `g^j` and `f_k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Coords {
    pub alpha: Vec<f64>,
    pub kappa: Vec<f64>,
    pub beta: Vec<f64>,
    pub zeta1: Vec<f64>,
    pub zeta2: Vec<f64>,
    pub tau: Vec<f64>,
    pub eps: Vec<f64>,
}

impl Coords {
    /// The zero vector for a surface with `g` handles and `b` boundaries.
    pub fn zeros(g: usize, b: usize) -> Coords {
        let k = (b + g).saturating_sub(3);
        Coords {
            alpha: vec![0.0; b],
            kappa: vec![0.0; g],
            beta: vec![0.0; k],
            zeta1: vec![0.0; g],
            zeta2: vec![0.0; g],
            tau: vec![0.0; g],
            eps: vec![0.0; k],
        }
    }

    fn parts(&self) -> [&Vec<f64>; 7] {
        [
            &self.alpha,
            &self.kappa,
            &self.beta,
            &self.zeta1,
            &self.zeta2,
            &self.tau,
            &self.eps,
        ]
    }

    fn parts_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [
            &mut self.alpha,
            &mut self.kappa,
            &mut self.beta,
            &mut self.zeta1,
            &mut self.zeta2,
            &mut self.tau,
            &mut self.eps,
        ]
    }

    pub fn len(&self) -> usize {
        self.parts().iter().map(|p| p.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened in field order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.parts()
            .iter()
            .flat_map(|p| p.iter().copied())
            .collect()
    }

    /// Inverse of [`Coords::to_vec`] for the given surface type.
    pub fn from_vec(g: usize, b: usize, x: &[f64]) -> Result<Coords> {
        let mut c = Coords::zeros(g, b);
        if x.len() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                got: x.len(),
            });
        }
        let mut it = x.iter().copied();
        for part in c.parts_mut() {
            for v in part.iter_mut() {
                *v = it.next().expect("length checked");
            }
        }
        Ok(c)
    }

    /// Checks the field lengths against a surface type.
    pub fn check_shape(&self, g: usize, b: usize) -> Result<()> {
        let z = Coords::zeros(g, b);
        for (name, (got, want)) in ["alpha", "kappa", "beta", "zeta1", "zeta2", "tau", "eps"]
            .iter()
            .zip(self.parts().iter().zip(z.parts()))
        {
            if got.len() != want.len() {
                return Err(Error::InvalidSurface(format!(
                    "coordinate field {name}: expected {} entries, got {}",
                    want.len(),
                    got.len()
                )));
            }
        }
        Ok(())
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, other: &Coords) -> f64 {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The holed sphere left after cutting off the handles, presented on the
/// slot words `c_2..c_m`.
#[derive(Debug, Clone)]
struct Sphere {
    rep: Arc<FreeRep>,
    /// Pants groups on their first two boundaries.
    pants: Vec<Arc<FreeRep>>,
    /// Splits along `f_1..f_{n-1}` in sphere generators.
    parts: Vec<GluePartition>,
}

impl Sphere {
    fn new(s: &Surface) -> Result<Sphere> {
        let m = s.slots.len();
        let n = s.spec.pants_count();
        let mobs: Vec<Mob> = s.slots[1..]
            .iter()
            .map(|w| s.rep.evaluate(w).map(|h| *h.mob()))
            .collect::<Result<_>>()?;
        let names = (2..=m).map(|i| format!("c{i}")).collect();
        let rep = Arc::new(FreeRep::from_mobs(mobs, names));
        let rank = m - 1;
        // F_k = c_{k+2} ... c_m is generators k..rank-1
        let tail = |k: usize| Word::new((k..rank).map(|i| (i, 1)));
        let mut pants = Vec::with_capacity(n);
        for i in 1..=n {
            // c_1 for the first pants, f_{i-1}^-1 after that
            let first = tail(i - 1).inverse();
            let gens = vec![*rep.evaluate(&first)?.mob(), *rep.generator(i - 1)?.mob()];
            pants.push(Arc::new(FreeRep::new(gens, vec!["x".into(), "y".into()])?));
        }
        let parts = (1..n)
            .map(|k| GluePartition::new(rank, (0..k).collect(), (k..rank).collect(), tail(k)))
            .collect::<Result<_>>()?;
        Ok(Sphere { rep, pants, parts })
    }

    /// Chains pants cocycles with invariants `z` = per pants triples along
    /// `f_1..f_{n-1}`, adding `eps_k` times the twist along `f_k`.
    fn cocycle(&self, z: &[[f64; 3]], eps: &[f64]) -> Result<Cocycle> {
        let mut acc: Option<Cocycle> = None;
        for (i, (pants, zi)) in self.pants.iter().zip(z).enumerate() {
            let p = pants_cocycle(pants, *zi)?;
            let mut values = vec![Vec3::zeros(); self.rep.rank()];
            values[i] = p.values()[1];
            values[i + 1] = p.eval(&pants_third_word())?;
            let piece = Cocycle::new(self.rep.clone(), values)?;
            acc = Some(match acc {
                None => piece,
                Some(prev) => {
                    let part = &self.parts[i - 1];
                    let glued = combine(&prev, &piece, part)?;
                    &glued + &(&affine_twist(&self.rep, part)? * eps[i - 1])
                }
            });
        }
        Ok(acc.expect("at least one pants"))
    }
}

/// The coordinate system of one assembled surface.
#[derive(Debug, Clone)]
pub struct CoordinateSystem {
    surface: Surface,
    sphere: Sphere,
    tori: Vec<TorusFrameData>,
    handle_parts: Vec<GluePartition>,
    matrix: DMatrix<f64>,
    scales: DVector<f64>,
    basis: SVD<f64, Dyn, Dyn>,
    condition: f64,
    /// Words crossing the twist curves, and the twist columns of their
    /// Margulis invariants over the basis cocycles.
    probes: Vec<Word>,
    probe_matrix: DMatrix<f64>,
    probe_svd: SVD<f64, Dyn, Dyn>,
}

impl CoordinateSystem {
    pub fn new(surface: &Surface) -> Result<CoordinateSystem> {
        let spec = &surface.spec;
        if spec.pants_count() == 0 {
            return Err(Error::InvalidSurface(
                "S_{1,1} has no pants; its deformations are described by the torus module".into(),
            ));
        }
        let rep = &surface.rep;
        let mut tori = Vec::with_capacity(spec.g);
        let mut handle_parts = Vec::with_capacity(spec.g);
        for j in 1..=spec.g {
            let gens = surface.handle_generators(j);
            let sub = FreeRep::new(
                gens.iter().map(|&i| *rep.generators()[i].mob()).collect(),
                vec!["w1".into(), "w2".into()],
            )?;
            let t = TorusFrameData::new(Arc::new(sub))?;
            if t.is_right_angle() {
                return Err(Error::RightAngleHandle {
                    handle: j,
                    constraint: right_angle_constraint(t.lambda1, t.lambda2),
                });
            }
            tori.push(t);
            handle_parts.push(GluePartition::along_handle(surface, j)?);
        }
        let mut cs = CoordinateSystem {
            surface: surface.clone(),
            sphere: Sphere::new(surface)?,
            tori,
            handle_parts,
            matrix: DMatrix::zeros(0, 0),
            scales: DVector::zeros(0),
            basis: DMatrix::<f64>::identity(1, 1).svd(true, true),
            condition: 1.0,
            probes: Vec::new(),
            probe_matrix: DMatrix::zeros(0, 0),
            probe_svd: DMatrix::<f64>::identity(1, 1).svd(true, true),
        };

        let dim = spec.dimension();
        let n = 3 * rep.rank();
        let mut m = DMatrix::zeros(n, dim + 3);
        let mut e = vec![0.0; dim];
        let mut basis = Vec::with_capacity(dim);
        for i in 0..dim {
            e[i] = 1.0;
            let u = cs.coords_to_cocycle(&Coords::from_vec(spec.g, spec.b, &e)?)?;
            m.set_column(i, &u.to_vector());
            basis.push(u);
            e[i] = 0.0;
        }
        for k in 0..3 {
            let mut v = Vec3::zeros();
            v[k] = 1.0;
            m.set_column(dim + k, &coboundary(rep.clone(), &v).to_vector());
        }
        // equilibrate: basis columns range over several orders of magnitude
        let scales = DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.norm()));
        let mut scaled = m.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col /= scales[j];
        }
        let svd = scaled.svd(true, true);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        if !(smin > 1e-12 * smax) {
            return Err(Error::SingularSystem(format!(
                "basis cocycles and coboundaries do not span (singular values {smin:e} / {smax:e})"
            )));
        }
        cs.condition = smax / smin;
        cs.basis = svd;
        cs.matrix = m;
        cs.scales = scales;

        let twist_parts: Vec<GluePartition> = cs
            .handle_parts
            .iter()
            .cloned()
            .map(Ok)
            .chain((1..=spec.inner_curves()).map(|k| GluePartition::along_curve(surface, k)))
            .collect::<Result<_>>()?;
        let probes = probe_words(&twist_parts);
        let cols = twist_columns(spec.g, spec.b);
        let mut pm = DMatrix::zeros(probes.len(), cols.len());
        for (r, w) in probes.iter().enumerate() {
            for (c, &i) in cols.iter().enumerate() {
                pm[(r, c)] = basis[i].margulis(w)?;
            }
        }
        if !cols.is_empty() {
            let psvd = pm.clone().svd(true, true);
            let (pmax, pmin) = (psvd.singular_values.max(), psvd.singular_values.min());
            if !(pmin > 1e-10 * pmax) {
                return Err(Error::SingularSystem(format!(
                    "crossing words do not detect every twist (singular values {pmin:e} / {pmax:e})"
                )));
            }
            cs.probe_svd = psvd;
        }
        cs.probes = probes;
        cs.probe_matrix = pm;
        Ok(cs)
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn dimension(&self) -> usize {
        self.surface.spec.dimension()
    }

    /// Condition number of the basis matrix used to read off twist parameters.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Invariant of slot `c_i`.
    fn slot_value(&self, c: &Coords, i: usize) -> f64 {
        let b = self.surface.spec.b;
        if i <= b {
            c.alpha[i - 1]
        } else {
            c.kappa[i - b - 1]
        }
    }

    /// The least-norm cocycle with coordinates `c`, over the surface
    /// representation.
    pub fn coords_to_cocycle(&self, c: &Coords) -> Result<Cocycle> {
        let spec = &self.surface.spec;
        let (g, b) = (spec.g, spec.b);
        c.check_shape(g, b)?;
        let n = spec.pants_count();
        let z: Vec<[f64; 3]> = (1..=n)
            .map(|i| {
                [
                    if i == 1 {
                        self.slot_value(c, 1)
                    } else {
                        c.beta[i - 2]
                    },
                    self.slot_value(c, i + 1),
                    if i == n {
                        self.slot_value(c, n + 2)
                    } else {
                        c.beta[i - 1]
                    },
                ]
            })
            .collect();
        let u0 = self.sphere.cocycle(&z, &c.eps)?;

        let rep = &self.surface.rep;
        // the sphere fixes gamma_2..gamma_b and the value on each handle curve;
        // handle generators are filled in by gluing
        let mut values = vec![Vec3::zeros(); rep.rank()];
        values[..b - 1].copy_from_slice(&u0.values()[..b - 1]);
        let mut w = Cocycle::new(rep.clone(), values)?;
        for j in 1..=g {
            let t = &self.tori[j - 1];
            let uj = phi_t(t, c.zeta1[j - 1], c.zeta2[j - 1], c.kappa[j - 1])?;
            let gens = self.surface.handle_generators(j);
            let piece = Cocycle::zero(rep.clone()).with_values(&gens, uj.values());
            let part = &self.handle_parts[j - 1];
            let glued = combine_at(&w, u0.values()[b + j - 2], &piece, part)?;
            w = &glued + &(&affine_twist(rep, part)? * c.tau[j - 1]);
        }
        // gluing leaves a large coboundary part on long products
        Ok(w.reduced())
    }

    /// Margulis invariants of the labelled curves, in coordinate layout
    /// (twist fields zero).
    pub fn margulis_entries(&self, u: &Cocycle) -> Result<Coords> {
        let spec = &self.surface.spec;
        let rep = &self.surface.rep;
        let mar = |name: String| u.margulis(rep.label(&name)?);
        let mut c = Coords::zeros(spec.g, spec.b);
        for i in 0..spec.b {
            c.alpha[i] = mar(format!("gamma{}", i + 1))?;
        }
        for j in 0..spec.g {
            c.kappa[j] = mar(format!("g{}", j + 1))?;
            c.zeta1[j] = mar(format!("w1_{}", j + 1))?;
            c.zeta2[j] = mar(format!("w2_{}", j + 1))?;
        }
        for k in 0..spec.inner_curves() {
            c.beta[k] = mar(format!("f{}", k + 1))?;
        }
        Ok(c)
    }

    /// Solves `u = sum c_i B_i + delta_v` over the basis cocycles `B_i`.
    /// Returns the coefficients, `v` and the relative residual.
    pub fn decompose(&self, u: &Cocycle) -> Result<(Coords, Vec3, f64)> {
        let spec = &self.surface.spec;
        let rhs: DVector<f64> = u.to_vector();
        let mut x = self
            .basis
            .solve(&rhs, 0.0)
            .map_err(|e| Error::SingularSystem(e.into()))?;
        x.component_div_assign(&self.scales);
        let dim = spec.dimension();
        let res = (&self.matrix * &x - &rhs).norm() / (1.0 + rhs.norm());
        let c = Coords::from_vec(spec.g, spec.b, &x.as_slice()[..dim])?;
        Ok((c, Vec3::new(x[dim], x[dim + 1], x[dim + 2]), res))
    }

    /// Coordinates of the class of `u`: Margulis entries measured directly,
    /// twist entries by least squares from the Margulis invariants of words
    /// crossing the twist curves, after removing the zero-twist cocycle with
    /// the measured entries. Only class functions are used, so adding a
    /// coboundary changes nothing.
    pub fn cocycle_to_coords(&self, u: &Cocycle) -> Result<Coords> {
        let spec = &self.surface.spec;
        let mut c = self.margulis_entries(u)?;
        let cols = twist_columns(spec.g, spec.b);
        if cols.is_empty() {
            return Ok(c);
        }
        let rest = u - &self.coords_to_cocycle(&c)?;
        let rhs = DVector::from_iterator(
            self.probes.len(),
            self.probes
                .iter()
                .map(|w| rest.margulis(w))
                .collect::<Result<Vec<_>>>()?,
        );
        let t = self
            .probe_svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::SingularSystem(e.into()))?;
        let mut x = c.to_vec();
        for (k, &i) in cols.iter().enumerate() {
            x[i] = t[k];
        }
        c = Coords::from_vec(spec.g, spec.b, &x)?;
        Ok(c)
    }

    /// Condition number of the crossing-word system for the twist entries.
    pub fn twist_condition(&self) -> f64 {
        let s = &self.probe_svd.singular_values;
        s.max() / s.min()
    }
}

/// Positions of `tau` and `eps` in [`Coords::to_vec`].
fn twist_columns(g: usize, b: usize) -> Vec<usize> {
    let k = (b + g).saturating_sub(3);
    let start = b + g + k + 2 * g;
    (start..start + g + k).collect()
}

/// Words `a b` and `a b^-1` for every generator `a` on side 1 and `b` on
/// side 2 of each split; each crosses that split's curve twice.
fn probe_words(parts: &[GluePartition]) -> Vec<Word> {
    let mut out: Vec<Word> = Vec::new();
    for p in parts {
        for &a in &p.q1_gens {
            for &b in &p.q2_gens {
                for e in [1, -1] {
                    let w = Word::new([(a, 1), (b, e)]);
                    if !out.contains(&w) {
                        out.push(w);
                    }
                }
            }
        }
    }
    out
}

/// One-shot [`CoordinateSystem::coords_to_cocycle`].
pub fn coords_to_cocycle(surface: &Surface, c: &Coords) -> Result<Cocycle> {
    CoordinateSystem::new(surface)?.coords_to_cocycle(c)
}

/// One-shot [`CoordinateSystem::cocycle_to_coords`].
pub fn cocycle_to_coords(surface: &Surface, u: &Cocycle) -> Result<Coords> {
    CoordinateSystem::new(surface)?.cocycle_to_coords(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::cohomologous;
    use crate::fuchsian::{assemble_surface, build_pants, HandleSpec, SurfaceSpec};

    fn spec(g: usize, b: usize) -> SurfaceSpec {
        let k = (b + g).saturating_sub(3);
        SurfaceSpec {
            g,
            b,
            boundary_lengths: (0..b).map(|i| 1.2 + 0.3 * i as f64).collect(),
            curve_lengths: (0..k).map(|i| 1.6 + 0.2 * i as f64).collect(),
            twists: (0..k).map(|i| 0.3 - 0.1 * i as f64).collect(),
            handles: (0..g)
                .map(|j| HandleSpec {
                    l1: 2.4 + 0.1 * j as f64,
                    l2: 2.6,
                    theta: 1.1 + 0.2 * j as f64,
                    twist: 0.2,
                })
                .collect(),
        }
    }

    fn some_cocycle(rep: &Arc<FreeRep>, seed: f64) -> Cocycle {
        let values = (0..rep.rank())
            .map(|i| {
                let t = seed + i as f64;
                Vec3::new(t.sin(), (1.7 * t).cos(), 0.5 * (0.3 * t).sin())
            })
            .collect();
        Cocycle::new(rep.clone(), values).unwrap()
    }

    fn coords_sample(g: usize, b: usize, seed: f64) -> Coords {
        let n = Coords::zeros(g, b).len();
        let x: Vec<f64> = (0..n)
            .map(|i| (seed * (i as f64 + 1.3)).sin() * 2.0)
            .collect();
        Coords::from_vec(g, b, &x).unwrap()
    }

    #[test]
    fn partition_validation() {
        assert!(GluePartition::new(3, vec![0, 1], vec![2], Word::gen(2)).is_ok());
        assert!(matches!(
            GluePartition::new(3, vec![0, 1], vec![1, 2], Word::gen(2)),
            Err(Error::InvalidPartition(_))
        ));
        assert!(matches!(
            GluePartition::new(3, vec![0], vec![1, 2], Word::new([(0, 1), (1, 1)])),
            Err(Error::InvalidPartition(_))
        ));
        assert!(matches!(
            GluePartition::new(2, vec![0], vec![5], Word::gen(0)),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn trans_vector_solves_its_equation() {
        let rep = build_pants(1.3, 2.0, 1.7).unwrap();
        let h = rep.generator(1).unwrap();
        let fr = null_frame(h).unwrap();
        let d = fr.xm * 0.7 - fr.xp * 1.9;
        let v = trans_vector(h, &d).unwrap();
        assert!((v - h.apply(&v) - d).norm() < 1e-12 * (1.0 + d.norm()));
    }

    #[test]
    fn combine_on_a_four_holed_sphere() {
        let s = assemble_surface(&spec(0, 4)).unwrap();
        let p = GluePartition::along_curve(&s, 1).unwrap();
        let u = some_cocycle(&s.rep, 0.4);
        // u glued to itself is u
        let same = combine(&u, &u, &p).unwrap();
        assert!((&same - &u).max_norm() < 1e-12);

        // a side-2 cocycle with the same invariant on f, shifted by a coboundary
        let shifted = &u + &coboundary(s.rep.clone(), &Vec3::new(0.3, -0.2, 0.5));
        let other = &shifted + &(&affine_twist(&s.rep, &p).unwrap() * 0.8);
        let c = combine(&u, &other, &p).unwrap();
        let (cf, uf) = (c.eval(&p.f).unwrap(), u.eval(&p.f).unwrap());
        assert!((cf - uf).norm() <= 1e-10 * (1.0 + uf.norm()));
        for &i in &p.q1_gens {
            assert_eq!(c.values()[i], u.values()[i]);
        }
        // side-1 words keep their invariants
        let w = Word::gen(0).concat(&p.f);
        let m = u.margulis(&w).unwrap();
        assert!((c.margulis(&w).unwrap() - m).abs() < 1e-10 * (1.0 + m.abs()));
    }

    #[test]
    fn combine_rejects_different_invariants() {
        let s = assemble_surface(&spec(0, 4)).unwrap();
        let p = GluePartition::along_curve(&s, 1).unwrap();
        let u = some_cocycle(&s.rep, 0.4);
        let v = some_cocycle(&s.rep, 1.9);
        assert!(matches!(
            combine(&u, &v, &p),
            Err(Error::MarMismatch { .. })
        ));
    }

    #[test]
    fn affine_twist_is_trivial_on_each_side() {
        let s = assemble_surface(&spec(1, 3)).unwrap();
        for p in [
            GluePartition::along_curve(&s, 1).unwrap(),
            GluePartition::along_handle(&s, 1).unwrap(),
        ] {
            let at = affine_twist(&s.rep, &p).unwrap();
            assert!(at.eval(&p.f).unwrap().norm() < 1e-10);
            assert!(at.margulis(&p.f).unwrap().abs() < 1e-10);
            for side in [1u8, 2] {
                let gens = p.gens(side);
                let w = gens.iter().fold(Word::empty(), |acc, &i| {
                    acc.concat(&Word::new([(i, 1), (i, 1)]))
                });
                if !w.is_empty() {
                    assert!(at.margulis(&w).unwrap().abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn pants_cocycle_invariants_and_gauge() {
        let rep = Arc::new(build_pants(1.3, 2.0, 1.7).unwrap());
        let z = [0.4, -1.1, 2.3];
        let u = pants_cocycle(&rep, z).unwrap();
        let words = [Word::gen(0), Word::gen(1), pants_third_word()];
        for (w, zi) in words.iter().zip(z) {
            assert!((u.margulis(w).unwrap() - zi).abs() < 1e-9);
        }
        let f1 = null_frame(rep.generator(0).unwrap()).unwrap();
        let f2 = null_frame(rep.generator(1).unwrap()).unwrap();
        assert!(lorentz_form(&u.values()[0], &f1.xm).abs() < 1e-12);
        assert!(lorentz_form(&u.values()[0], &f1.xp).abs() < 1e-12);
        assert!(lorentz_form(&u.values()[1], &f2.xm).abs() < 1e-12);
        assert_eq!(pants_cocycle(&rep, [0.0; 3]).unwrap().max_norm(), 0.0);

        // another representative of the same class
        let moved = &u + &coboundary(rep.clone(), &Vec3::new(1.0, 2.0, -0.5));
        assert!(cohomologous(&u, &moved).is_some());
        let u2 = pants_cocycle(&rep, [0.1, 0.2, 0.3]).unwrap();
        let sum = pants_cocycle(&rep, [0.5, -0.9, 2.6]).unwrap();
        assert!((&(&u + &u2) - &sum).max_norm() < 1e-12);
    }

    #[test]
    fn coords_layout() {
        for (g, b) in [(0, 3), (0, 4), (1, 2), (2, 1), (1, 4), (2, 3)] {
            let c = Coords::zeros(g, b);
            assert_eq!(c.len(), 6 * g + 3 * b - 6);
            let x: Vec<f64> = (0..c.len()).map(|i| i as f64).collect();
            assert_eq!(Coords::from_vec(g, b, &x).unwrap().to_vec(), x);
        }
        assert!(Coords::from_vec(1, 2, &[0.0; 5]).is_err());
        let json = serde_json::to_string(&Coords::zeros(1, 2)).unwrap();
        assert!(json.contains("\"zeta1\":[0.0]"));
    }

    #[test]
    fn coordinates_round_trip() {
        for (g, b) in [(0, 3), (0, 4), (1, 2), (2, 1), (1, 3), (0, 5)] {
            let s = assemble_surface(&spec(g, b)).unwrap();
            let cs = CoordinateSystem::new(&s).unwrap();
            // generator entries are stored in f64; words of three letters
            // amplify that rounding by about |g|^3
            let gn = s
                .rep
                .generators()
                .iter()
                .map(|g| g.matrix().norm())
                .fold(1.0, f64::max);
            let tol = 1e-12f64.max(1e-15 * gn.powi(3));
            for seed in [0.3, 1.7, 2.9] {
                let c = coords_sample(g, b, seed);
                let u = cs.coords_to_cocycle(&c).unwrap();
                let back = cs.cocycle_to_coords(&u).unwrap();
                assert!(c.max_abs_diff(&back) < tol, "({g},{b}): {c:?} vs {back:?}");
                let v = Vec3::new(seed, -0.5, 0.25);
                let moved = &u + &coboundary(s.rep.clone(), &v);
                let back2 = cs.cocycle_to_coords(&moved).unwrap();
                assert!(back.max_abs_diff(&back2) < tol, "({g},{b})");
            }
            let zero = cs.coords_to_cocycle(&Coords::zeros(g, b)).unwrap();
            assert!(cohomologous(&zero, &Cocycle::zero(s.rep.clone())).is_some());
        }
    }

    #[test]
    fn coordinates_are_linear() {
        let s = assemble_surface(&spec(2, 1)).unwrap();
        let cs = CoordinateSystem::new(&s).unwrap();
        let (a, b) = (coords_sample(2, 1, 0.7), coords_sample(2, 1, 2.2));
        let sum: Vec<f64> = a
            .to_vec()
            .iter()
            .zip(b.to_vec())
            .map(|(x, y)| 2.0 * x - y)
            .collect();
        let ua = cs.coords_to_cocycle(&a).unwrap();
        let ub = cs.coords_to_cocycle(&b).unwrap();
        let us = cs
            .coords_to_cocycle(&Coords::from_vec(2, 1, &sum).unwrap())
            .unwrap();
        let lin = &(&ua * 2.0) - &ub;
        assert!((&lin - &us).max_norm() <= 1e-10 * (1.0 + us.max_norm()));
    }

    #[test]
    fn twist_cocycles_in_coordinates() {
        let s = assemble_surface(&spec(1, 3)).unwrap();
        let cs = CoordinateSystem::new(&s).unwrap();
        let ph = GluePartition::along_handle(&s, 1).unwrap();
        let c = cs
            .cocycle_to_coords(&affine_twist(&s.rep, &ph).unwrap())
            .unwrap();
        let mut want = Coords::zeros(1, 3);
        want.tau[0] = 1.0;
        assert!(c.max_abs_diff(&want) < 1e-9);

        // the twist along f1 comes with the handle beyond it, weighted by the
        // pairing of the two axes
        let pf = GluePartition::along_curve(&s, 1).unwrap();
        let c = cs
            .cocycle_to_coords(&affine_twist(&s.rep, &pf).unwrap())
            .unwrap();
        let xf = null_frame(&s.rep.evaluate(&pf.f).unwrap()).unwrap().x0;
        let xg = null_frame(&s.rep.evaluate(&ph.f).unwrap()).unwrap().x0;
        let mut want = Coords::zeros(1, 3);
        want.eps[0] = 1.0;
        want.tau[0] = lorentz_form(&xf, &xg);
        assert!(c.max_abs_diff(&want) < 1e-8, "{c:?}");
    }

    #[test]
    fn twist_sweeps_one_slot_on_four_holed_sphere() {
        let s = assemble_surface(&spec(0, 4)).unwrap();
        let cs = CoordinateSystem::new(&s).unwrap();
        let p = GluePartition::along_curve(&s, 1).unwrap();
        let at = affine_twist(&s.rep, &p).unwrap();
        let u = cs.coords_to_cocycle(&coords_sample(0, 4, 1.1)).unwrap();
        let base = cs.cocycle_to_coords(&u).unwrap();
        for tau in [-1.0, 0.5, 3.0] {
            let c = cs.cocycle_to_coords(&(&u + &(&at * tau))).unwrap();
            let mut want = base.clone();
            want.eps[0] += tau;
            assert!(c.max_abs_diff(&want) < 1e-9);
        }
    }

    #[test]
    fn right_angle_handle_is_refused() {
        let mut sp = spec(1, 2);
        sp.handles[0].theta = std::f64::consts::FRAC_PI_2;
        let s = assemble_surface(&sp).unwrap();
        match CoordinateSystem::new(&s) {
            Err(Error::RightAngleHandle {
                handle: 1,
                constraint,
            }) => {
                assert!(constraint.contains("kappa / K"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn once_holed_torus_has_no_pants_coordinates() {
        let mut sp = spec(1, 1);
        let h = sp.handles[0];
        let t = crate::fuchsian::torus_commutator_trace(h.l1, h.l2, h.theta);
        sp.boundary_lengths[0] = 2.0 * (0.5 * t.abs()).acosh();
        let s = assemble_surface(&sp).unwrap();
        assert!(matches!(
            CoordinateSystem::new(&s),
            Err(Error::InvalidSurface(_))
        ));
    }
}
