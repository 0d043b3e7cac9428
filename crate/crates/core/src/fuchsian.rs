//! Free-group words, Fuchsian representations of free groups, and the
//! standard builders: pairs of pants, once-holed tori, and the chain
//! decomposition of a surface with `g` handles and `b` boundary components.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lorentz::{
    axis_translation, classify, conjugator, lorentz_form, mob_to_iso, null_frame,
    translation_length, translation_to_origin, Classification, Iso, Mob, Vec3,
};

/// One letter of a word: generator `gen` to the power `exp` (±1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub gen: usize,
    pub exp: i8,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        Letter {
            gen: self.gen,
            exp: -self.exp,
        }
    }
}

/// A freely reduced word in the free group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    /// Builds a word from `(generator, ±1)` pairs and freely reduces it.
    ///
    /// # Panics
    /// If an exponent is not ±1.
    pub fn new(letters: impl IntoIterator<Item = (usize, i8)>) -> Word {
        let mut w = Word::default();
        for (gen, exp) in letters {
            assert!(exp == 1 || exp == -1, "word exponents must be +1 or -1");
            w.push(Letter { gen, exp });
        }
        w
    }

    pub fn empty() -> Word {
        Word::default()
    }

    pub fn gen(i: usize) -> Word {
        Word::new([(i, 1)])
    }

    fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &l in &other.letters {
            w.push(l);
        }
        w
    }

    pub fn pow(&self, n: i32) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut w = Word::empty();
        for _ in 0..n.unsigned_abs() {
            w = w.concat(&base);
        }
        w
    }

    /// `a b a^-1 b^-1`.
    pub fn commutator(a: &Word, b: &Word) -> Word {
        a.concat(b).concat(&a.inverse()).concat(&b.inverse())
    }

    /// Largest generator index used, if any.
    pub fn max_gen(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.gen).max()
    }

    /// The word `l_k l_{k+1} ... l_{k-1}` (not reduced cyclically).
    pub fn rotate(&self, k: usize) -> Word {
        if self.letters.is_empty() {
            return Word::empty();
        }
        let k = k % self.letters.len();
        let mut letters = self.letters[k..].to_vec();
        letters.extend_from_slice(&self.letters[..k]);
        let mut w = Word::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    /// Freely and cyclically reduced representative of the conjugacy class.
    pub fn cyclically_reduced(&self) -> Word {
        let mut l = self.letters.clone();
        while l.len() >= 2 && l[0] == l[l.len() - 1].inverse() {
            l.pop();
            l.remove(0);
        }
        Word { letters: l }
    }

    /// Renders with the given generator names, e.g. `w1_1 w2_1^-1`.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.letters.is_empty() {
            return "1".into();
        }
        self.letters
            .iter()
            .map(|l| {
                let name = names
                    .get(l.gen)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", l.gen));
                if l.exp < 0 {
                    format!("{name}^-1")
                } else {
                    name
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&[]))
    }
}

impl std::ops::Mul for &Word {
    type Output = Word;
    fn mul(self, rhs: &Word) -> Word {
        self.concat(rhs)
    }
}

/// A representation of a free group by hyperbolic isometries, with named
/// generators and labelled words for the designated curves.
#[derive(Debug, Clone)]
pub struct FreeRep {
    gens: Vec<Iso>,
    names: Vec<String>,
    labels: Vec<(String, Word)>,
}

impl FreeRep {
    /// Rejects generators that are not hyperbolic.
    pub fn new(gens: Vec<Mob>, names: Vec<String>) -> Result<FreeRep> {
        let rep = Self::from_mobs(gens, names);
        for g in &rep.gens {
            if classify(g) != Classification::Hyperbolic {
                return Err(Error::NotHyperbolic {
                    trace: g.mob().abs_trace(),
                });
            }
        }
        Ok(rep)
    }

    /// Generators named `x0, x1, ...`.
    pub fn from_generators(gens: Vec<Mob>) -> Result<FreeRep> {
        let names = (0..gens.len()).map(|i| format!("x{i}")).collect();
        Self::new(gens, names)
    }

    /// No hyperbolicity check; used for deformations along a path.
    pub(crate) fn from_mobs(gens: Vec<Mob>, names: Vec<String>) -> FreeRep {
        assert_eq!(gens.len(), names.len(), "one name per generator");
        FreeRep {
            gens: gens.iter().map(mob_to_iso).collect(),
            names,
            labels: Vec::new(),
        }
    }

    pub fn with_label(mut self, name: &str, word: Word) -> FreeRep {
        self.labels.retain(|(n, _)| n != name);
        self.labels.push((name.to_string(), word));
        self
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn generator(&self, i: usize) -> Result<&Iso> {
        self.gens.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            rank: self.gens.len(),
        })
    }

    pub fn generators(&self) -> &[Iso] {
        &self.gens
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn labels(&self) -> &[(String, Word)] {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Result<&Word> {
        self.labels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| w)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.max_gen() {
            Some(i) if i >= self.rank() => Err(Error::IndexOutOfRange {
                index: i,
                rank: self.rank(),
            }),
            _ => Ok(()),
        }
    }

    /// Image of a word; the product is formed in PSL(2,R) and bridged once.
    pub fn evaluate(&self, w: &Word) -> Result<Iso> {
        self.check_word(w)?;
        let mut m = Mob::identity();
        for l in w.letters() {
            let g = self.gens[l.gen].mob();
            m = if l.exp > 0 { m * *g } else { m * g.inverse() };
        }
        Ok(mob_to_iso(&m))
    }

    pub fn evaluate_label(&self, name: &str) -> Result<Iso> {
        self.evaluate(self.label(name)?)
    }

    /// Conjugates every generator by `k`; labels are kept.
    pub fn conjugated(&self, k: &Mob) -> FreeRep {
        FreeRep {
            gens: self
                .gens
                .iter()
                .map(|g| mob_to_iso(&g.mob().conjugate_by(k)))
                .collect(),
            names: self.names.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Same names and labels with new generator images (unchecked).
    pub(crate) fn with_generators(&self, gens: Vec<Mob>) -> FreeRep {
        FreeRep {
            gens: gens.iter().map(mob_to_iso).collect(),
            names: self.names.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Parses whitespace-separated tokens `name`, `name^-1` or `name^k`,
    /// where `name` is a generator name or a label.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let mut w = Word::empty();
        for tok in s.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => (
                    n,
                    e.parse::<i32>()
                        .map_err(|_| Error::InvalidWord(format!("bad exponent in {tok:?}")))?,
                ),
                None => (tok, 1),
            };
            let base = if let Some(i) = self.names.iter().position(|n| n == name) {
                Word::gen(i)
            } else if let Ok(lw) = self.label(name) {
                lw.clone()
            } else {
                return Err(Error::InvalidWord(format!("unknown generator {name:?}")));
            };
            w = w.concat(&base.pow(exp));
        }
        Ok(w)
    }

    pub fn display_word(&self, w: &Word) -> String {
        w.display_with(&self.names)
    }
}

fn check_length(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidLength(l))
    }
}

/// `B(p, X0_h)`: positive on the side of the axis of `h` that lies to the
/// left when travelling in the translation direction.
pub fn axis_side(h: &Iso, p: &Vec3) -> Result<f64> {
    Ok(lorentz_form(p, &null_frame(h)?.x0))
}

/// Pair of pants with boundary lengths `l1, l2, l3`: rank 2 with
/// generators `g1, g2` and labels `g1, g2, g3 = (g1 g2)^-1`.
///
/// The pants lies on the positive side (see [`axis_side`]) of all three
/// boundary axes.
pub fn build_pants(l1: f64, l2: f64, l3: f64) -> Result<FreeRep> {
    let (a, b) = pants_generators(l1, l2, l3)?;
    let rep = FreeRep::new(vec![a, b], vec!["g1".into(), "g2".into()])?;
    let g1 = Word::gen(0);
    let g2 = Word::gen(1);
    let g3 = g1.concat(&g2).inverse();
    Ok(rep
        .with_label("g1", g1)
        .with_label("g2", g2)
        .with_label("g3", g3))
}

fn pants_generators(l1: f64, l2: f64, l3: f64) -> Result<(Mob, Mob)> {
    check_length(l1)?;
    check_length(l2)?;
    check_length(l3)?;
    let (a, b, c) = (0.5 * l1, 0.5 * l2, 0.5 * l3);
    // distance between the axes of g1 and g2
    let cosh_d = (a.cosh() * b.cosh() + c.cosh()) / (a.sinh() * b.sinh());
    let d = cosh_d.acosh();
    let (ch, sh) = ((0.5 * d).cosh(), (0.5 * d).sinh());
    let m = Mob::new(ch, sh, sh, ch)?;
    let g1 = Mob::boost(l1);
    let g2 = Mob::boost(l2).conjugate_by(&m);
    // raw traces of the lifts with positive trace decide the orientation
    let target = -2.0 * c.cosh();
    let tr_plus = (g1.matrix() * g2.matrix()).trace();
    let g2inv = g2.inverse();
    let tr_minus = (g1.matrix() * g2inv.matrix()).trace();
    let g2 = if (tr_plus - target).abs() <= (tr_minus - target).abs() {
        g2
    } else {
        g2inv
    };
    Ok((g1, g2))
}

/// Once-holed torus: `w1` translates along the x1-axis direction through the
/// basepoint `[0,0,1]`, and `w2` is the same kind of translation rotated by
/// `theta` about the basepoint. Labels `w1, w2, g1 = [w1,w2], g2 = w2,
/// g3 = w1 w2^-1 w1^-1`.
pub fn build_once_holed_torus(l1: f64, l2: f64, theta: f64) -> Result<FreeRep> {
    check_length(l1)?;
    check_length(l2)?;
    if !(theta.is_finite() && theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidAngle(theta));
    }
    let w1 = Mob::boost(l1);
    let w2 = Mob::boost(l2).conjugate_by(&Mob::rotation(theta));
    let comm = w1.matrix() * w2.matrix() * w1.inverse().matrix() * w2.inverse().matrix();
    let trace = comm.trace();
    if trace > -2.0 - crate::lorentz::HYPERBOLIC_MARGIN {
        return Err(Error::NotDiscrete { trace });
    }
    let rep = FreeRep::new(vec![w1, w2], vec!["w1".into(), "w2".into()])?;
    let x = Word::gen(0);
    let y = Word::gen(1);
    let g3 = x.concat(&y.inverse()).concat(&x.inverse());
    Ok(rep
        .with_label("w1", x.clone())
        .with_label("w2", y.clone())
        .with_label("g1", Word::commutator(&x, &y))
        .with_label("g2", y)
        .with_label("g3", g3))
}

/// Trace of `[w1, w2]` for the torus of [`build_once_holed_torus`], without validation.
pub fn torus_commutator_trace(l1: f64, l2: f64, theta: f64) -> f64 {
    let w1 = Mob::boost(l1);
    let w2 = Mob::boost(l2).conjugate_by(&Mob::rotation(theta));
    (w1.matrix() * w2.matrix() * w1.inverse().matrix() * w2.inverse().matrix()).trace()
}

/// Parameters of one handle (once-holed torus) of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandleSpec {
    pub l1: f64,
    pub l2: f64,
    pub theta: f64,
    /// Twist along the handle boundary, in length units.
    #[serde(default)]
    pub twist: f64,
}

/// Decomposition data for a surface with `g` handles and `b` boundary
/// components: `boundary_lengths` for the `b` boundaries, `curve_lengths`
/// and `twists` for the `b+g-3` inner pants curves, and one entry of
/// `handles` per handle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub g: usize,
    pub b: usize,
    pub boundary_lengths: Vec<f64>,
    #[serde(default)]
    pub curve_lengths: Vec<f64>,
    #[serde(default)]
    pub twists: Vec<f64>,
    #[serde(default)]
    pub handles: Vec<HandleSpec>,
}

impl SurfaceSpec {
    /// Number of inner curves (the `f_k`), `b + g - 3` (zero when negative).
    pub fn inner_curves(&self) -> usize {
        (self.b + self.g).saturating_sub(3)
    }

    /// Number of pairs of pants, `b + g - 2` (zero for the once-holed torus).
    pub fn pants_count(&self) -> usize {
        (self.b + self.g).saturating_sub(2)
    }

    /// Rank of the free fundamental group, `2g + b - 1`.
    pub fn rank(&self) -> usize {
        2 * self.g + self.b - 1
    }

    /// Dimension of the deformation space, `6g + 3b - 6`.
    pub fn dimension(&self) -> usize {
        (6 * self.g + 3 * self.b).saturating_sub(6)
    }

    pub fn validate(&self) -> Result<()> {
        let (g, b) = (self.g, self.b);
        if b == 0 {
            return Err(Error::InvalidSurface(
                "at least one boundary component is required".into(),
            ));
        }
        if g == 0 && b < 3 {
            return Err(Error::InvalidSurface(format!(
                "S_{{0,{b}}} has no pants decomposition"
            )));
        }
        let expect = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::InvalidSurface(format!(
                    "{what}: expected {want} entries, got {got}"
                )))
            }
        };
        expect("boundary_lengths", self.boundary_lengths.len(), b)?;
        expect(
            "curve_lengths",
            self.curve_lengths.len(),
            self.inner_curves(),
        )?;
        expect("twists", self.twists.len(), self.inner_curves())?;
        expect("handles", self.handles.len(), g)?;
        for &l in self.boundary_lengths.iter().chain(&self.curve_lengths) {
            check_length(l)?;
        }
        for t in &self.twists {
            if !t.is_finite() {
                return Err(Error::InvalidSurface(format!("twist {t} is not finite")));
            }
        }
        for h in &self.handles {
            check_length(h.l1)?;
            check_length(h.l2)?;
            if !(h.theta > 0.0 && h.theta < std::f64::consts::PI) {
                return Err(Error::InvalidAngle(h.theta));
            }
            if !h.twist.is_finite() {
                return Err(Error::InvalidSurface(format!(
                    "twist {} is not finite",
                    h.twist
                )));
            }
        }
        if g == 1 && b == 1 && self.boundary_lengths[0] > 0.0 {
            // the boundary of a once-holed torus is the handle curve itself
            let h = self.handles[0];
            let len = torus_boundary_length(&h)?;
            if (len - self.boundary_lengths[0]).abs() > 1e-8 * (1.0 + len) {
                return Err(Error::GluingMismatch {
                    curve: "gamma1".into(),
                    reason: format!(
                        "boundary length {} differs from the handle boundary length {len}",
                        self.boundary_lengths[0]
                    ),
                });
            }
        }
        Ok(())
    }
}

fn torus_boundary_length(h: &HandleSpec) -> Result<f64> {
    let t = torus_commutator_trace(h.l1, h.l2, h.theta);
    if t > -2.0 - crate::lorentz::HYPERBOLIC_MARGIN {
        return Err(Error::NotDiscrete { trace: t });
    }
    Ok(2.0 * (0.5 * t.abs()).acosh())
}

/// A pair of pants of the decomposition, by its boundary words in the
/// surface group (product in order is the identity; the pants lies on the
/// positive side of each).
#[derive(Debug, Clone)]
pub struct PantsPiece {
    pub boundary: [Word; 3],
    pub names: [String; 3],
}

/// A handle of the decomposition.
#[derive(Debug, Clone)]
pub struct HandlePiece {
    pub w1: Word,
    pub w2: Word,
    /// `[w1, w2]`; the handle lies on its negative side.
    pub boundary: Word,
    pub theta: f64,
}

/// An assembled surface group with its decomposition.
///
/// Boundary slots are `c_1..c_m` (`m = b + g`): the boundaries `gamma1..gammab`
/// followed by the handle curves `g1..gg`. With `n = m - 2` pants,
/// `P_1 = (c_1, c_2, f_1)`, `P_i = (f_{i-1}^-1, c_{i+1}, f_i)` and
/// `P_n = (f_{n-1}^-1, c_{n+1}, c_{n+2})`, so that `c_1 ... c_m = 1` and
/// `f_k = c_{k+2} ... c_m`. Free generators are `gamma2..gammab`, then
/// `w1_j, w2_j` for each handle.
#[derive(Debug, Clone)]
pub struct Surface {
    pub spec: SurfaceSpec,
    pub rep: Arc<FreeRep>,
    pub pants: Vec<PantsPiece>,
    pub handles: Vec<HandlePiece>,
    /// Boundary slot words `c_1..c_m`.
    pub slots: Vec<Word>,
}

impl Surface {
    /// Word of the inner curve `f_k` (1-based).
    pub fn curve(&self, k: usize) -> Result<&Word> {
        self.rep.label(&format!("f{k}"))
    }

    /// Generators lying beyond the inner curve `f_k` (those of slots `c_{k+2}..c_m`).
    pub fn gens_beyond_curve(&self, k: usize) -> Vec<usize> {
        let m = self.slots.len();
        (k + 2..=m)
            .flat_map(|slot| self.slot_generators(slot))
            .collect()
    }

    /// Generators attached to slot `c_i` (1-based).
    pub fn slot_generators(&self, slot: usize) -> Vec<usize> {
        let b = self.spec.b;
        if slot == 1 {
            vec![]
        } else if slot <= b {
            vec![slot - 2]
        } else {
            let j = slot - b - 1;
            vec![b - 1 + 2 * j, b + 2 * j]
        }
    }

    /// Generators of handle `j` (1-based).
    pub fn handle_generators(&self, j: usize) -> Vec<usize> {
        self.slot_generators(self.spec.b + j)
    }
}

/// Assembles the surface group of `spec` by gluing pants and handles along
/// their shared curves, applying the twists as translations along them.
pub fn assemble_surface(spec: &SurfaceSpec) -> Result<Surface> {
    spec.validate()?;
    let (g, b) = (spec.g, spec.b);
    let m = g + b;
    let rank = spec.rank();
    let mut names: Vec<String> = (2..=b).map(|i| format!("gamma{i}")).collect();
    for j in 1..=g {
        names.push(format!("w1_{j}"));
        names.push(format!("w2_{j}"));
    }

    // slot words in the free group
    let mut slots = vec![Word::empty(); m];
    for i in 2..=b {
        slots[i - 1] = Word::gen(i - 2);
    }
    for j in 0..g {
        let x = Word::gen(b - 1 + 2 * j);
        let y = Word::gen(b + 2 * j);
        slots[b + j] = Word::commutator(&x, &y);
    }
    let tail = |slots: &[Word], from: usize| {
        slots[from - 1..]
            .iter()
            .fold(Word::empty(), |acc, w| acc.concat(w))
    };
    slots[0] = tail(&slots, 2).inverse();
    let curves: Vec<Word> = (1..=spec.inner_curves())
        .map(|k| tail(&slots, k + 2))
        .collect();

    let handle_lengths: Vec<f64> = spec
        .handles
        .iter()
        .map(torus_boundary_length)
        .collect::<Result<_>>()?;
    let slot_length = |i: usize| {
        if i <= b {
            spec.boundary_lengths[i - 1]
        } else {
            handle_lengths[i - b - 1]
        }
    };

    // Pieces are placed twice: the first pass finds a basepoint in the middle of
    // the decomposition, the second builds everything around it so that entries
    // (and rounding in long products) stay small.
    let place = |start: &Mob| -> Result<Placement> {
        let mut gens: Vec<Option<Mob>> = vec![None; rank];
        let mut slot_values: Vec<Option<Mob>> = vec![None; m];
        let mut pants = Vec::new();
        let mut handles = Vec::new();

        if spec.pants_count() == 0 {
            // once-holed torus alone: gamma1 = g1^-1
            let h = spec.handles[0];
            let t = build_once_holed_torus(h.l1, h.l2, h.theta)?;
            gens[0] = Some(t.generators()[0].mob().conjugate_by(start));
            gens[1] = Some(t.generators()[1].mob().conjugate_by(start));
            handles.push(HandlePiece {
                w1: Word::gen(0),
                w2: Word::gen(1),
                boundary: slots[1].clone(),
                theta: h.theta,
            });
        } else {
            let n = m - 2;
            // previous inner curve value, in global coordinates
            let mut prev_f: Option<Mob> = None;
            for i in 1..=n {
                let (first_len, first_slot) = if i == 1 {
                    (slot_length(1), Some(1))
                } else {
                    (spec.curve_lengths[i - 2], None)
                };
                let second_slot = i + 1;
                let (third_len, third_slot) = if i == n {
                    (slot_length(n + 2), Some(n + 2))
                } else {
                    (spec.curve_lengths[i - 1], None)
                };
                let (x, y) = pants_generators(first_len, slot_length(second_slot), third_len)?;
                let z = (x * y).inverse();
                let (x, y, z) = match prev_f {
                    None => (
                        x.conjugate_by(start),
                        y.conjugate_by(start),
                        z.conjugate_by(start),
                    ),
                    Some(f) => {
                        // P_i's first boundary is f_{i-1}^-1
                        let target = f.inverse();
                        let k = conjugator(&x, &target)?;
                        let twist = axis_translation(&mob_to_iso(&target), spec.twists[i - 2])?;
                        let k = twist * k;
                        (x.conjugate_by(&k), y.conjugate_by(&k), z.conjugate_by(&k))
                    }
                };
                if let Some(s) = first_slot {
                    slot_values[s - 1] = Some(x);
                }
                slot_values[second_slot - 1] = Some(y);
                if let Some(s) = third_slot {
                    slot_values[s - 1] = Some(z);
                }
                prev_f = Some(z);
                let first_word = if i == 1 {
                    slots[0].clone()
                } else {
                    curves[i - 2].inverse()
                };
                let first_name = if i == 1 {
                    slot_name(1, b)
                } else {
                    format!("f{}^-1", i - 1)
                };
                let (third_word, third_name) = if i == n {
                    (slots[n + 1].clone(), slot_name(n + 2, b))
                } else {
                    (curves[i - 1].clone(), format!("f{i}"))
                };
                pants.push(PantsPiece {
                    boundary: [first_word, slots[second_slot - 1].clone(), third_word],
                    names: [first_name, slot_name(second_slot, b), third_name],
                });
            }
            gens[..b - 1].copy_from_slice(&slot_values[1..b]);
            for j in 0..g {
                let h = spec.handles[j];
                let t = build_once_holed_torus(h.l1, h.l2, h.theta)?;
                let comm = t.evaluate_label("g1")?;
                let target = slot_values[b + j].expect("every slot is filled by a pants");
                let k = conjugator(comm.mob(), &target)?;
                let twist = axis_translation(&mob_to_iso(&target), h.twist)?;
                let k = twist * k;
                gens[b - 1 + 2 * j] = Some(t.generators()[0].mob().conjugate_by(&k));
                gens[b + 2 * j] = Some(t.generators()[1].mob().conjugate_by(&k));
                handles.push(HandlePiece {
                    w1: Word::gen(b - 1 + 2 * j),
                    w2: Word::gen(b + 2 * j),
                    boundary: slots[b + j].clone(),
                    theta: h.theta,
                });
            }
        }
        let gens: Vec<Mob> = gens
            .into_iter()
            .map(|g| g.expect("every generator is assigned"))
            .collect();
        Ok((gens, slot_values, pants, handles))
    };
    let (gens, slot_values, _, _) = place(&Mob::identity())?;
    let c = centering(gens.iter().chain(slot_values.iter().flatten()))?;
    let (gens, slot_values, pants, handles) = place(&c)?;
    let mut rep = FreeRep::new(gens, names)?;
    for i in 1..=b {
        rep = rep.with_label(&format!("gamma{i}"), slots[i - 1].clone());
    }
    for (j, h) in handles.iter().enumerate() {
        rep = rep.with_label(&format!("g{}", j + 1), h.boundary.clone());
    }
    for (k, f) in curves.iter().enumerate() {
        rep = rep.with_label(&format!("f{}", k + 1), f.clone());
    }
    for (j, h) in handles.iter().enumerate() {
        rep = rep
            .with_label(&format!("w1_{}", j + 1), h.w1.clone())
            .with_label(&format!("w2_{}", j + 1), h.w2.clone());
    }

    let surface = Surface {
        spec: spec.clone(),
        rep: Arc::new(rep),
        pants,
        handles,
        slots,
    };
    check_assembly(&surface, &slot_values, &handle_lengths)?;
    Ok(surface)
}

type Placement = (
    Vec<Mob>,
    Vec<Option<Mob>>,
    Vec<PantsPiece>,
    Vec<HandlePiece>,
);

/// Translation moving the normalized mean of the axis points to the origin.
pub(crate) fn centering<'a>(elements: impl Iterator<Item = &'a Mob>) -> Result<Mob> {
    let mut sum = Vec3::zeros();
    for g in elements {
        sum += null_frame(&mob_to_iso(g))?.axis_point();
    }
    let p = sum / (-lorentz_form(&sum, &sum)).sqrt();
    translation_to_origin(&p)
}

fn slot_name(i: usize, b: usize) -> String {
    if i <= b {
        format!("gamma{i}")
    } else {
        format!("g{}", i - b)
    }
}

/// Every slot word evaluates to the piece element it was glued from, and
/// every labelled curve has the prescribed length.
fn check_assembly(s: &Surface, slot_values: &[Option<Mob>], handle_lengths: &[f64]) -> Result<()> {
    let rep = &s.rep;
    for (i, w) in s.slots.iter().enumerate() {
        let name = slot_name(i + 1, s.spec.b);
        let got = rep.evaluate(w)?;
        if let Some(expect) = slot_values[i] {
            if !got.mob().approx_eq(&expect, 1e-8) {
                return Err(Error::GluingMismatch {
                    curve: name,
                    reason: "boundary words of adjacent pieces disagree \
                             (possibly lost precision in long products)"
                        .into(),
                });
            }
        }
        let want = if i < s.spec.b {
            s.spec.boundary_lengths[i]
        } else {
            handle_lengths[i - s.spec.b]
        };
        let len = translation_length(&got)?;
        if (len - want).abs() > 1e-8 * (1.0 + want) {
            return Err(Error::GluingMismatch {
                curve: name,
                reason: format!("length {len} instead of {want}"),
            });
        }
    }
    for (k, &want) in s.spec.curve_lengths.iter().enumerate() {
        let len = translation_length(&rep.evaluate_label(&format!("f{}", k + 1))?)?;
        if (len - want).abs() > 1e-8 * (1.0 + want) {
            return Err(Error::GluingMismatch {
                curve: format!("f{}", k + 1),
                reason: format!("length {len} instead of {want}"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{axis_relation, AxisRelation};

    #[test]
    fn word_reduction_and_inverse() {
        let w = Word::new([(0, 1), (1, 1), (1, -1), (2, -1)]);
        assert_eq!(w, Word::new([(0, 1), (2, -1)]));
        assert!(w.concat(&w.inverse()).is_empty());
        assert_eq!(Word::gen(3).pow(-2), Word::new([(3, -1), (3, -1)]));
        let c = Word::commutator(&Word::gen(0), &Word::gen(1));
        assert_eq!(c.len(), 4);
        assert_eq!(c.rotate(1), Word::new([(1, 1), (0, -1), (1, -1), (0, 1)]));
        let conj = Word::gen(2).concat(&c).concat(&Word::gen(2).inverse());
        assert_eq!(conj.cyclically_reduced(), c);
    }

    #[test]
    fn empty_word_is_identity() {
        let rep = build_pants(2.0, 2.0, 2.0).unwrap();
        let id = rep.evaluate(&Word::empty()).unwrap();
        assert_eq!(id.classify(), Classification::Identity);
        assert!(matches!(
            rep.evaluate(&Word::gen(5)),
            Err(Error::IndexOutOfRange { index: 5, rank: 2 })
        ));
    }

    #[test]
    fn pants_equilateral_trace() {
        let rep = build_pants(2.0, 2.0, 2.0).unwrap();
        let g3 = rep.evaluate_label("g3").unwrap();
        assert!((g3.mob().abs_trace() - 2.0 * 1f64.cosh()).abs() < 1e-12);
        let prod = rep.evaluate(&rep.parse_word("g1 g2 g3").unwrap()).unwrap();
        assert_eq!(prod.classify(), Classification::Identity);
    }

    #[test]
    fn pants_lengths_and_sides() {
        for &(l1, l2, l3) in &[(1.0, 2.0, 3.0), (0.5, 5.0, 0.7), (4.0, 4.0, 0.5)] {
            let rep = build_pants(l1, l2, l3).unwrap();
            let gs: Vec<Iso> = ["g1", "g2", "g3"]
                .iter()
                .map(|n| rep.evaluate_label(n).unwrap())
                .collect();
            for (g, l) in gs.iter().zip([l1, l2, l3]) {
                assert!((translation_length(g).unwrap() - l).abs() < 1e-9);
            }
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    assert!(matches!(
                        axis_relation(&gs[i], &gs[j]).unwrap(),
                        AxisRelation::Disjoint { .. }
                    ));
                    let p = null_frame(&gs[j]).unwrap().axis_point();
                    assert!(axis_side(&gs[i], &p).unwrap() > 0.0);
                }
            }
        }
        assert!(matches!(
            build_pants(0.0, 1.0, 1.0),
            Err(Error::InvalidLength(_))
        ));
    }

    #[test]
    fn torus_builder() {
        let l = 2.0 * (1.0 + 2f64.sqrt()).acosh();
        let t = build_once_holed_torus(l, l, std::f64::consts::FRAC_PI_2).unwrap();
        let c = t.evaluate_label("g1").unwrap();
        assert!(c.mob().abs_trace() > 2.0);
        assert!(torus_commutator_trace(l, l, std::f64::consts::FRAC_PI_2) < -2.0);
        let w1 = t.evaluate_label("w1").unwrap();
        let w2 = t.evaluate_label("w2").unwrap();
        match axis_relation(&w1, &w2).unwrap() {
            AxisRelation::Cross { angle, .. } => {
                assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-9)
            }
            other => panic!("{other:?}"),
        }
        let id = t.evaluate(&t.parse_word("g1 g2 g3").unwrap()).unwrap();
        assert_eq!(id.classify(), Classification::Identity);
        // the handle sits on the negative side of its boundary
        let p = null_frame(&w1).unwrap().axis_point();
        assert!(axis_side(&c, &p).unwrap() < 0.0);
        assert!(matches!(
            build_once_holed_torus(0.1, 0.1, std::f64::consts::FRAC_PI_2),
            Err(Error::NotDiscrete { .. })
        ));
        assert!(matches!(
            build_once_holed_torus(1.0, 1.0, 0.0),
            Err(Error::InvalidAngle(_))
        ));
    }

    fn spec(g: usize, b: usize) -> SurfaceSpec {
        let k = (g + b).saturating_sub(3);
        SurfaceSpec {
            g,
            b,
            boundary_lengths: (0..b).map(|i| 1.0 + 0.3 * i as f64).collect(),
            curve_lengths: (0..k).map(|i| 1.5 + 0.2 * i as f64).collect(),
            twists: (0..k).map(|i| 0.3 - 0.4 * i as f64).collect(),
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

    #[test]
    fn surface_label_bookkeeping() {
        let s = assemble_surface(&spec(0, 4)).unwrap();
        assert_eq!(s.rep.rank(), 3);
        assert!(s.rep.label("f1").is_ok());
        assert!(s.rep.label("f2").is_err());

        let s = assemble_surface(&spec(1, 2)).unwrap();
        assert_eq!(s.rep.rank(), 3);
        for name in ["gamma1", "gamma2", "g1", "w1_1", "w2_1"] {
            assert!(s.rep.label(name).is_ok(), "{name}");
        }
        assert!(s.rep.label("f1").is_err());
        assert_eq!(s.pants.len(), 1);

        let s = assemble_surface(&spec(2, 1)).unwrap();
        assert_eq!(s.rep.rank(), 4);
        assert_eq!(s.pants.len(), 1);

        let s = assemble_surface(&spec(1, 4)).unwrap();
        assert_eq!(s.spec.inner_curves(), 2);
        assert_eq!(s.rep.rank(), 5);
        assert_eq!(s.spec.dimension(), 12);

        assert!(matches!(
            assemble_surface(&spec(0, 2)),
            Err(Error::InvalidSurface(_))
        ));
    }

    #[test]
    fn surface_pieces_close_up() {
        for (g, b) in [(0, 3), (0, 5), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)] {
            let s = assemble_surface(&spec(g, b)).unwrap();
            let rep = &s.rep;
            let all = s.slots.iter().fold(Word::empty(), |a, w| a.concat(w));
            assert!(all.is_empty(), "slot product reduces to 1");
            for p in &s.pants {
                let gs: Vec<Iso> = p
                    .boundary
                    .iter()
                    .map(|w| rep.evaluate(w).unwrap())
                    .collect();
                let prod = rep
                    .evaluate(&p.boundary[0].concat(&p.boundary[1]).concat(&p.boundary[2]))
                    .unwrap();
                assert_eq!(prod.classify(), Classification::Identity);
                for i in 0..3 {
                    for j in 0..3 {
                        if i != j {
                            let q = null_frame(&gs[j]).unwrap().axis_point();
                            assert!(axis_side(&gs[i], &q).unwrap() > 0.0);
                        }
                    }
                }
            }
            for h in &s.handles {
                let c = rep.evaluate(&h.boundary).unwrap();
                let w1 = rep.evaluate(&h.w1).unwrap();
                let q = null_frame(&w1).unwrap().axis_point();
                assert!(axis_side(&c, &q).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn once_holed_torus_surface() {
        let mut sp = spec(1, 1);
        sp.boundary_lengths = vec![torus_boundary_length(&sp.handles[0]).unwrap()];
        let s = assemble_surface(&sp).unwrap();
        assert_eq!(s.rep.rank(), 2);
        let c = s.rep.evaluate_label("gamma1").unwrap();
        assert!((translation_length(&c).unwrap() - sp.boundary_lengths[0]).abs() < 1e-9);
    }

    #[test]
    fn parse_words() {
        let s = assemble_surface(&spec(1, 2)).unwrap();
        let w = s.rep.parse_word("w1_1 w2_1^-1 gamma2^2").unwrap();
        assert_eq!(w, Word::new([(1, 1), (2, -1), (0, 1), (0, 1)]));
        assert_eq!(s.rep.display_word(&w), "w1_1 w2_1^-1 gamma2 gamma2");
        assert_eq!(s.rep.parse_word("g1").unwrap(), *s.rep.label("g1").unwrap());
        assert!(s.rep.parse_word("nope").is_err());
    }
}
