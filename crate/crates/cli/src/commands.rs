use std::fs;
use std::path::Path;
use std::sync::Arc;

use margulis::cocycle::CocycleJson;
use margulis::fuchsian::{
    assemble_surface, torus_commutator_trace, FreeRep, Surface, SurfaceSpec, Word,
};
use margulis::glue::{CoordinateSystem, Coords, GluePartition};
use margulis::lorentz::translation_length;
use margulis::sample;
use margulis::torus::torus_report;
use margulis::twistflow::{
    verify_cosine_formula, verify_nonseparating, AlternatingWord, CosineCheck,
};
use margulis::Error;
use serde::{Deserialize, Serialize};

use crate::output::{Cell, Table};

pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RIGHT_ANGLE: i32 = 3;
pub const EXIT_UNSUPPORTED_CURVE: i32 = 4;

/// A failed run: exit code plus a machine-readable diagnostic.
#[derive(Debug, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: i32,
    pub error: &'static str,
    pub message: String,
}

impl Failure {
    pub fn input(error: &'static str, message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            error,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let (code, error) = match &e {
            Error::RightAngle { .. } => (EXIT_RIGHT_ANGLE, "right-angle"),
            Error::RightAngleHandle { .. } => (EXIT_RIGHT_ANGLE, "right-angle-handle"),
            Error::InvalidLength(_) => (EXIT_INPUT, "invalid-length"),
            Error::InvalidAngle(_) => (EXIT_INPUT, "invalid-angle"),
            Error::InvalidSurface(_) => (EXIT_INPUT, "invalid-surface"),
            Error::NotDiscrete { .. } => (EXIT_INPUT, "not-discrete"),
            Error::InvalidWord(_) => (EXIT_INPUT, "invalid-word"),
            Error::UnknownLabel(_) => (EXIT_INPUT, "unknown-label"),
            Error::DimensionMismatch { .. } => (EXIT_INPUT, "dimension-mismatch"),
            Error::InvalidPartition(_) => (EXIT_INPUT, "invalid-partition"),
            Error::NonHyperbolicBoundary => (EXIT_INPUT, "non-hyperbolic-boundary"),
            _ => (EXIT_NUMERIC, "numeric"),
        };
        Failure {
            code,
            error,
            message: e.to_string(),
        }
    }
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

/// What a subcommand produced: a JSON document, a flat table for CSV, and
/// whether every check passed.
pub struct Outcome {
    pub json: String,
    pub table: Table,
    pub pass: bool,
}

fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CmdResult<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::input("malformed-json", format!("{}: {e}", path.display())))
}

pub fn load_surface(path: &Path) -> CmdResult<Surface> {
    let spec: SurfaceSpec = read_json(path)?;
    Ok(assemble_surface(&spec)?)
}

#[derive(Serialize)]
struct SurfaceInfo {
    g: usize,
    b: usize,
    rank: usize,
    dimension: usize,
}

impl SurfaceInfo {
    fn of(s: &Surface) -> SurfaceInfo {
        SurfaceInfo {
            g: s.spec.g,
            b: s.spec.b,
            rank: s.spec.rank(),
            dimension: s.spec.dimension(),
        }
    }
}

// surface

#[derive(Serialize)]
struct GeneratorRow {
    name: String,
    matrix: [[f64; 2]; 2],
    trace: f64,
    length: f64,
}

#[derive(Serialize)]
struct CurveRow {
    name: String,
    word: String,
    length: f64,
    expected: Option<f64>,
    error: Option<f64>,
}

#[derive(Serialize)]
struct AngleRow {
    handle: usize,
    theta: f64,
}

#[derive(Serialize)]
struct SurfaceSummary {
    surface: SurfaceInfo,
    generators: Vec<GeneratorRow>,
    curves: Vec<CurveRow>,
    angles: Vec<AngleRow>,
    max_length_error: f64,
    tolerance: f64,
    pass: bool,
}

/// Length the spec prescribes for a labelled curve, if any.
fn expected_length(spec: &SurfaceSpec, name: &str) -> Option<f64> {
    let index = |prefix: &str| {
        name.strip_prefix(prefix)?
            .parse::<usize>()
            .ok()?
            .checked_sub(1)
    };
    if let Some(i) = index("gamma") {
        return spec.boundary_lengths.get(i).copied();
    }
    if let Some(i) = index("f") {
        return spec.curve_lengths.get(i).copied();
    }
    if let Some(i) = index("w1_") {
        return spec.handles.get(i).map(|h| h.l1);
    }
    if let Some(i) = index("w2_") {
        return spec.handles.get(i).map(|h| h.l2);
    }
    if let Some(i) = index("g") {
        let h = spec.handles.get(i)?;
        return Some(2.0 * (0.5 * torus_commutator_trace(h.l1, h.l2, h.theta).abs()).acosh());
    }
    None
}

pub fn surface(spec_path: &Path, tol: f64) -> CmdResult<Outcome> {
    let s = load_surface(spec_path)?;
    let rep = &s.rep;
    let mut generators = Vec::new();
    for (name, g) in rep.names().iter().zip(rep.generators()) {
        let m = g.mob().matrix();
        generators.push(GeneratorRow {
            name: name.clone(),
            matrix: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
            trace: g.mob().trace(),
            length: translation_length(g)?,
        });
    }
    let mut curves = Vec::new();
    let mut max_err: f64 = 0.0;
    for (name, w) in rep.labels() {
        let length = translation_length(&rep.evaluate(w)?)?;
        let expected = expected_length(&s.spec, name);
        let error = expected.map(|e| (length - e).abs());
        if let Some(e) = error {
            max_err = max_err.max(e);
        }
        curves.push(CurveRow {
            name: name.clone(),
            word: rep.display_word(w),
            length,
            expected,
            error,
        });
    }
    let angles = s
        .spec
        .handles
        .iter()
        .enumerate()
        .map(|(j, h)| AngleRow {
            handle: j + 1,
            theta: h.theta,
        })
        .collect();

    let mut table = Table::new(vec!["name", "word", "length", "expected", "error"]);
    for c in &curves {
        table.push(vec![
            c.name.as_str().into(),
            c.word.clone().into(),
            c.length.into(),
            c.expected.map_or(Cell::Text(String::new()), Cell::Num),
            c.error.map_or(Cell::Text(String::new()), Cell::Num),
        ]);
    }
    let pass = max_err <= tol;
    let summary = SurfaceSummary {
        surface: SurfaceInfo::of(&s),
        generators,
        curves,
        angles,
        max_length_error: max_err,
        tolerance: tol,
        pass,
    };
    Ok(Outcome {
        json: crate::output::to_json(&summary),
        table,
        pass,
    })
}

// coords

#[derive(Deserialize)]
#[serde(untagged)]
enum CoordsInput {
    One(Coords),
    Many(Vec<Coords>),
}

/// `alpha1, alpha2, ..., kappa1, ...` in the order of `Coords::to_vec`.
fn slot_names(c: &Coords) -> Vec<String> {
    let parts: [(&str, usize); 7] = [
        ("alpha", c.alpha.len()),
        ("kappa", c.kappa.len()),
        ("beta", c.beta.len()),
        ("zeta1_", c.zeta1.len()),
        ("zeta2_", c.zeta2.len()),
        ("tau", c.tau.len()),
        ("eps", c.eps.len()),
    ];
    parts
        .iter()
        .flat_map(|(p, n)| (1..=*n).map(move |i| format!("{p}{i}")))
        .collect()
}

#[derive(Serialize)]
struct CoordsRow {
    input: Coords,
    measured: Coords,
    max_residual: f64,
    cocycle: CocycleJson,
}

#[derive(Serialize)]
struct CoordsReport {
    surface: SurfaceInfo,
    slots: Vec<String>,
    tolerance: f64,
    vectors: Vec<CoordsRow>,
    max_residual: f64,
    pass: bool,
}

pub enum CoordsSource<'a> {
    File(&'a Path),
    Random { count: usize, seed: u64 },
}

pub fn coords(
    spec_path: &Path,
    source: CoordsSource,
    tol: f64,
    cocycle_out: Option<&Path>,
) -> CmdResult<Outcome> {
    let s = load_surface(spec_path)?;
    let (g, b) = (s.spec.g, s.spec.b);
    let inputs = match source {
        CoordsSource::File(p) => match read_json::<CoordsInput>(p)? {
            CoordsInput::One(c) => vec![c],
            CoordsInput::Many(v) => v,
        },
        CoordsSource::Random { count, seed } => {
            let mut rng = sample::rng(seed);
            (0..count)
                .map(|_| sample::coords(&mut rng, g, b, 1.0))
                .collect::<margulis::Result<_>>()?
        }
    };
    for c in &inputs {
        c.check_shape(g, b)?;
    }
    let cs = CoordinateSystem::new(&s)?;
    let names = slot_names(&Coords::zeros(g, b));
    let mut table = Table::new(vec!["vector", "slot", "input", "measured", "residual"]);
    let mut vectors = Vec::with_capacity(inputs.len());
    let mut max_res: f64 = 0.0;
    for (i, c) in inputs.into_iter().enumerate() {
        let u = cs.coords_to_cocycle(&c)?;
        let measured = cs.cocycle_to_coords(&u)?;
        for ((name, x), y) in names.iter().zip(c.to_vec()).zip(measured.to_vec()) {
            table.push(vec![
                i.into(),
                name.as_str().into(),
                x.into(),
                y.into(),
                (x - y).abs().into(),
            ]);
        }
        let r = c.max_abs_diff(&measured);
        max_res = max_res.max(r);
        vectors.push(CoordsRow {
            input: c,
            measured,
            max_residual: r,
            cocycle: u.to_json(),
        });
    }
    if let Some(path) = cocycle_out {
        let cocycles: Vec<&CocycleJson> = vectors.iter().map(|v| &v.cocycle).collect();
        fs::write(path, crate::output::to_json(&cocycles))
            .map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))?;
    }
    let pass = max_res <= tol;
    let report = CoordsReport {
        surface: SurfaceInfo::of(&s),
        slots: names,
        tolerance: tol,
        vectors,
        max_residual: max_res,
        pass,
    };
    Ok(Outcome {
        json: crate::output::to_json(&report),
        table,
        pass,
    })
}

// verify-cosine

/// The curve a twist runs along.
enum Curve {
    /// Separating: inner curve `f_k` or handle curve `g_j`.
    Split(GluePartition),
    /// Non-separating handle generator, with the generator crossing it once.
    Handle { curve: usize, dual: usize },
}

fn parse_curve(s: &Surface, name: &str, experimental: bool) -> CmdResult<Curve> {
    let unsupported = |msg: String| Failure {
        code: EXIT_UNSUPPORTED_CURVE,
        error: "unsupported-curve",
        message: msg,
    };
    let num = |t: &str| {
        t.trim_start_matches('_')
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
    };
    if let Some(k) = name.strip_prefix('f').and_then(num) {
        if k > s.spec.inner_curves() {
            return Err(Failure::input(
                "unknown-curve",
                format!("no inner curve f{k}"),
            ));
        }
        return Ok(Curve::Split(GluePartition::along_curve(s, k)?));
    }
    if let Some(rest) = name.strip_prefix('w') {
        let (which, j) = rest
            .split_once('_')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .filter(|&(a, j)| (a == 1 || a == 2) && j >= 1 && j <= s.spec.g)
            .ok_or_else(|| {
                Failure::input("unknown-curve", format!("no handle generator {name}"))
            })?;
        if !experimental {
            return Err(unsupported(format!(
                "{name} is non-separating; the cosine formula is only established for separating curves (pass --experimental to compute both sides anyway)"
            )));
        }
        let gens = s.handle_generators(j);
        let (curve, dual) = if which == 1 {
            (gens[0], gens[1])
        } else {
            (gens[1], gens[0])
        };
        return Ok(Curve::Handle { curve, dual });
    }
    if name.starts_with("gamma") {
        return Err(unsupported(format!(
            "{name} is a boundary curve and carries no twist"
        )));
    }
    if let Some(j) = name.strip_prefix('g').and_then(num) {
        if j > s.spec.g {
            return Err(Failure::input(
                "unknown-curve",
                format!("no handle curve g{j}"),
            ));
        }
        if s.spec.pants_count() == 0 {
            return Err(unsupported(format!(
                "{name} is the boundary of S_1,1 and carries no twist"
            )));
        }
        return Ok(Curve::Split(GluePartition::along_handle(s, j)?));
    }
    Err(Failure::input(
        "unknown-curve",
        format!("unrecognized curve {name:?}"),
    ))
}

/// One word per line, tokens as accepted by `FreeRep::parse_word`; blank
/// lines and `#` comments are ignored.
fn read_words(rep: &FreeRep, path: &Path) -> CmdResult<Vec<Word>> {
    read_text(path)?
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| Ok(rep.parse_word(l)?))
        .collect()
}

#[derive(Serialize)]
struct CheckRow {
    #[serde(flatten)]
    check: CosineCheck,
    pass: bool,
}

#[derive(Serialize)]
struct SkipRow {
    word: String,
    reason: String,
}

#[derive(Serialize)]
struct CosineReport {
    surface: SurfaceInfo,
    curve: String,
    experimental: bool,
    /// False for non-separating curves: residuals are reported, not checked.
    asserted: bool,
    tol_alg: f64,
    tol_fd: f64,
    checks: Vec<CheckRow>,
    skipped: Vec<SkipRow>,
    passed: usize,
    failed: usize,
}

pub enum WordSource<'a> {
    File(&'a Path),
    Random { count: usize, seed: u64 },
}

pub struct Tolerances {
    pub alg: f64,
    pub fd: f64,
}

/// Errors that mean "this word is outside the formula's hypotheses" rather
/// than a failed run.
fn is_skip(e: &Error) -> bool {
    matches!(
        e,
        Error::AxesDontCross { .. } | Error::NotHyperbolic { .. } | Error::StepTooLarge { .. }
    )
}

pub fn verify_cosine(
    spec_path: &Path,
    curve_name: &str,
    words: WordSource,
    tol: Tolerances,
    experimental: bool,
) -> CmdResult<Outcome> {
    let s = load_surface(spec_path)?;
    let rep: &Arc<FreeRep> = &s.rep;
    let curve = parse_curve(&s, curve_name, experimental)?;
    let words: Vec<Word> = match words {
        WordSource::File(p) => read_words(rep, p)?,
        WordSource::Random { count, seed } => {
            let mut rng = sample::rng(seed);
            let all: Vec<usize> = (0..rep.rank()).collect();
            (0..count)
                .map(|i| match &curve {
                    Curve::Split(p) => sample::alternating_word(&mut rng, p, 5, 3).word(),
                    Curve::Handle { .. } => {
                        sample::word(&mut rng, &all, 2 + i % 6).cyclically_reduced()
                    }
                })
                .collect()
        }
    };

    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for w in &words {
        let shown = rep.display_word(w);
        if w.cyclically_reduced().is_empty() {
            skipped.push(SkipRow {
                word: shown,
                reason: "trivial word".into(),
            });
            continue;
        }
        let result = match &curve {
            Curve::Split(p) => {
                AlternatingWord::from_word(p, w).and_then(|a| verify_cosine_formula(rep, p, &a))
            }
            Curve::Handle { curve, dual } => verify_nonseparating(rep, *curve, *dual, w),
        };
        match result {
            Ok(check) => {
                let pass = check.passes(tol.alg, tol.fd);
                checks.push(CheckRow { check, pass });
            }
            Err(e) if is_skip(&e) => skipped.push(SkipRow {
                word: shown,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
    }

    let asserted = matches!(curve, Curve::Split(_));
    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    let mut table = Table::new(vec![
        "word",
        "mar",
        "cosine_sum",
        "fd_derivative",
        "residual_algebraic",
        "residual_fd",
        "pass",
    ]);
    for c in &checks {
        table.push(vec![
            c.check.word.clone().into(),
            c.check.mar.into(),
            c.check.cosine_sum.into(),
            c.check.fd_derivative.into(),
            c.check.residual_algebraic.into(),
            c.check.residual_fd.into(),
            c.pass.into(),
        ]);
    }
    let report = CosineReport {
        surface: SurfaceInfo::of(&s),
        curve: curve_name.to_string(),
        experimental,
        asserted,
        tol_alg: tol.alg,
        tol_fd: tol.fd,
        checks,
        skipped,
        passed,
        failed,
    };
    Ok(Outcome {
        json: crate::output::to_json(&report),
        table,
        pass: !asserted || failed == 0,
    })
}

// torus-report

#[derive(Serialize)]
struct TorusOut {
    #[serde(flatten)]
    report: margulis::torus::TorusReport,
    right_angle: bool,
    tolerance: f64,
    pass: bool,
}

pub fn torus(l1: f64, l2: f64, theta: f64, tol: f64) -> CmdResult<Outcome> {
    let r = torus_report(l1, l2, theta)?;
    let pass = r.residual_g1 <= tol && r.residual_w1w2 <= tol;
    let mut table = Table::new(vec!["quantity", "value"]);
    let mut row = |name: String, x: f64| table.push(vec![name.into(), x.into()]);
    row("lambda1".into(), r.lambda1);
    row("lambda2".into(), r.lambda2);
    row("K".into(), r.k);
    row("K_prime".into(), r.k_prime);
    if let Some(k) = r.k_right_angle {
        row("K_right_angle".into(), k);
    }
    let labels = ["zeta1", "zeta2", "a", "b", "c", "d"];
    for (l, x) in labels.iter().zip(r.coefficients_g1) {
        row(format!("g1_{l}"), x);
    }
    for (l, x) in labels.iter().zip(r.coefficients_w1w2) {
        row(format!("w1w2_{l}"), x);
    }
    row("residual_g1".into(), r.residual_g1);
    row("residual_w1w2".into(), r.residual_w1w2);
    let right_angle = r.k_right_angle.is_some();
    let out = TorusOut {
        report: r,
        right_angle,
        tolerance: tol,
        pass,
    };
    Ok(Outcome {
        json: crate::output::to_json(&out),
        table,
        pass,
    })
}
