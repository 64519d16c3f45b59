//! Catalog of example fields with known self-continuity verdicts, closed-form
//! reference trajectories and growth constants.
//!
//! Scalar axis functions are named `g` and given as expressions in the axis
//! coordinate (for example `g=1 + x2*x2`). References are expression vectors
//! in `t` and are only stored when they are piecewise linear, so that the
//! discretized path is an exact solution.

use serde_json::{json, Value};
use thiserror::Error;

use crate::expr::{fmt_vector, Expr, Scope};
use crate::field::{norm, parse_field_expr, GrowthBound, VectorFieldDef};
use crate::path::{uniform_times, Path, PathError};
use crate::probe::Verdict;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZooError {
    #[error("unknown zoo entry '{0}'")]
    UnknownEntry(String),
    #[error("entry '{entry}' has no parameter '{param}'")]
    UnknownParam { entry: String, param: String },
    #[error("parameter '{param}': {msg}")]
    BadParam { param: String, msg: String },
}

const CATALOG: &[(&str, &str)] = &[
    ("intro-pair", "f = (-1, sign x1) with axis value (0, 1)"),
    (
        "diverge-intro",
        "f = (-sign x1, 1) with axis value (0, g(x2))",
    ),
    ("radial-unit", "f = x/|x| with f(0) = n"),
    ("rot-unit", "f = Qx/|x| with f(0) = v, Q the quarter turn"),
    (
        "rot3d-axis",
        "3-D rotation about the x3 axis, axis value (0, 0, g(x3))",
    ),
    (
        "rot-annulus",
        "f = Qx/(|x|(|x|-1)), invariant unit circle, f(0) = 0",
    ),
    ("spiral-sin", "f = (sin(1/|x|), cos(1/|x|)) with f(0) = v"),
    (
        "converge-axis",
        "f = (-sign x1, 1), sliding on the axis with (0, g(x2))",
    ),
    (
        "diverge-axis",
        "f = (sign x1, 1), axis value (0, g(x2)) or biased",
    ),
    (
        "cross-axis",
        "f = (0, sign x1) with axis value (1, 0), as printed",
    ),
    (
        "cross-axis-swapped",
        "f = (sign x1, 0) with axis value (1, 0)",
    ),
    (
        "cross-axis-vertical",
        "f = (0, sign x1) with axis value (0, g(x2))",
    ),
    ("power-radial", "u = |x|^alpha x on the unit ball in R^N"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ParamValue {
    pub name: String,
    pub value: String,
    pub default: String,
    pub doc: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictPoint {
    pub point: Vec<f64>,
    pub expected: Verdict,
}

/// A closed-form path `t -> position(t)` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub position: Vec<Expr>,
    pub horizon: f64,
    /// Kinks of the closed form; always kept as nodes when discretizing.
    pub breakpoints: Vec<f64>,
    /// `Some(E)` when the path is a generalized solution only and its error
    /// functional is the documented positive value rather than zero.
    pub generalized_only: Option<f64>,
    pub note: String,
}

impl Reference {
    pub fn at(&self, t: f64) -> Vec<f64> {
        let s = Scope {
            x: &[],
            eps: 0.0,
            t,
            j: 0.0,
        };
        self.position.iter().map(|e| e.eval(&s)).collect()
    }

    pub fn start(&self) -> Vec<f64> {
        self.at(0.0)
    }

    /// Uniform nodes on `[0, horizon]` merged with the breakpoints.
    pub fn discretize(&self, n_nodes: usize) -> Result<Path, PathError> {
        let mut times = uniform_times(0.0, self.horizon, n_nodes);
        for &b in &self.breakpoints {
            if b > 0.0 && b < self.horizon {
                times.push(b);
            }
        }
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * self.horizon.max(1.0));
        let points = times.iter().map(|&t| self.at(t)).collect();
        Path::new(times, points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZooEntry {
    pub name: String,
    pub summary: String,
    pub field: VectorFieldDef,
    pub params: Vec<ParamValue>,
    pub verdicts: Vec<VerdictPoint>,
    pub references: Vec<Reference>,
    pub growth: Option<GrowthBound>,
    /// Analytic Jacobian, row-major `N x N`, when the entry provides one.
    pub gradient: Option<Vec<Expr>>,
    pub notes: String,
}

impl ZooEntry {
    pub fn dim(&self) -> usize {
        self.field.components().len()
    }

    /// JSON sidecar: parameters, verdicts, references and growth constants.
    pub fn metadata(&self) -> Value {
        json!({
            "name": self.name,
            "summary": self.summary,
            "params": self.params.iter().map(|p| json!({
                "name": p.name, "value": p.value, "default": p.default, "doc": p.doc,
            })).collect::<Vec<_>>(),
            "verdicts": self.verdicts.iter().map(|v| json!({
                "point": v.point, "expected": v.expected,
            })).collect::<Vec<_>>(),
            "references": self.references.iter().map(|r| json!({
                "position": fmt_vector(&r.position),
                "horizon": r.horizon,
                "breakpoints": r.breakpoints,
                "generalized_only": r.generalized_only,
                "note": r.note,
            })).collect::<Vec<_>>(),
            "growth": self.growth,
            "gradient": self.gradient.as_ref().map(|g| g.iter().map(|e| e.to_string()).collect::<Vec<_>>()),
            "notes": self.notes,
        })
    }
}

/// Every catalog entry as `(name, summary)` in a fixed order.
pub fn list() -> Vec<(&'static str, &'static str)> {
    CATALOG.to_vec()
}

/// Every entry at its default parameters.
pub fn all() -> Vec<ZooEntry> {
    CATALOG
        .iter()
        .map(|(n, _)| instantiate(n, &[]).expect("catalog defaults are valid"))
        .collect()
}

pub fn entry(name: &str) -> Result<ZooEntry, ZooError> {
    instantiate(name, &[])
}

/// Builds a concrete entry; `params` are `(name, value)` overrides.
pub fn instantiate(name: &str, params: &[(String, String)]) -> Result<ZooEntry, ZooError> {
    let summary = CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| ZooError::UnknownEntry(name.into()))?;
    let mut p = Params::new(name, params);
    let mut e = match name {
        "intro-pair" => intro_pair(&mut p),
        "diverge-intro" => diverge_intro(&mut p),
        "radial-unit" => radial_unit(&mut p),
        "rot-unit" => rot_unit(&mut p),
        "rot3d-axis" => rot3d_axis(&mut p),
        "rot-annulus" => rot_annulus(&mut p),
        "spiral-sin" => spiral_sin(&mut p),
        "converge-axis" => converge_axis(&mut p),
        "diverge-axis" => diverge_axis(&mut p),
        "cross-axis" => cross_axis(&mut p),
        "cross-axis-swapped" => cross_axis_swapped(&mut p),
        "cross-axis-vertical" => cross_axis_vertical(&mut p),
        "power-radial" => power_radial(&mut p),
        _ => unreachable!("catalog and builders agree"),
    }?;
    p.finish()?;
    e.name = name.into();
    e.summary = summary.into();
    e.params = p.values;
    Ok(e)
}

struct Params<'a> {
    entry: &'a str,
    given: &'a [(String, String)],
    values: Vec<ParamValue>,
}

impl<'a> Params<'a> {
    fn new(entry: &'a str, given: &'a [(String, String)]) -> Self {
        Self {
            entry,
            given,
            values: Vec::new(),
        }
    }

    fn raw(&mut self, name: &str, default: &str, doc: &str) -> String {
        let value = self
            .given
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.trim().to_string())
            .unwrap_or_else(|| default.to_string());
        self.values.push(ParamValue {
            name: name.into(),
            value: value.clone(),
            default: default.into(),
            doc: doc.into(),
        });
        value
    }

    fn bad(name: &str, msg: impl Into<String>) -> ZooError {
        ZooError::BadParam {
            param: name.into(),
            msg: msg.into(),
        }
    }

    fn vector(&mut self, name: &str, default: &str, doc: &str) -> Result<Vec<f64>, ZooError> {
        let raw = self.raw(name, default, doc);
        let inner = raw.trim_start_matches('(').trim_end_matches(')');
        let v: Result<Vec<f64>, _> = inner.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if !v.is_empty() && v.iter().all(|c| c.is_finite()) => Ok(v),
            _ => Err(Self::bad(
                name,
                format!("expected a comma-separated vector, got '{raw}'"),
            )),
        }
    }

    fn number(&mut self, name: &str, default: &str, doc: &str) -> Result<f64, ZooError> {
        let raw = self.raw(name, default, doc);
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Self::bad(name, format!("expected a number, got '{raw}'"))),
        }
    }

    /// An expression in the single coordinate `x<axis>`.
    fn axis_expr(&mut self, name: &str, axis: usize, doc: &str) -> Result<Expr, ZooError> {
        let raw = self.raw(name, "1", doc);
        let e = Expr::parse(&raw).map_err(|e| Self::bad(name, e.to_string()))?;
        let s = e.symbols();
        let only_axis = (0..s.max_x).all(|k| k + 1 == axis || !e.uses_var(k));
        if s.eps || s.t || s.j || !only_axis {
            return Err(Self::bad(name, format!("may only use x{axis}")));
        }
        Ok(e)
    }

    fn choice(&mut self, name: &str, options: &[&str], doc: &str) -> Result<String, ZooError> {
        let raw = self.raw(name, options[0], doc);
        if options.contains(&raw.as_str()) {
            Ok(raw)
        } else {
            Err(Self::bad(
                name,
                format!("expected one of {options:?}, got '{raw}'"),
            ))
        }
    }

    fn finish(&self) -> Result<(), ZooError> {
        for (k, _) in self.given {
            if !self.values.iter().any(|v| &v.name == k) {
                return Err(ZooError::UnknownParam {
                    entry: self.entry.into(),
                    param: k.clone(),
                });
            }
        }
        Ok(())
    }
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

fn field(text: &str) -> VectorFieldDef {
    parse_field_expr(text).unwrap_or_else(|e| panic!("catalog field does not parse: {e}: {text}"))
}

fn exprs(src: &[&str]) -> Vec<Expr> {
    src.iter()
        .map(|s| Expr::parse(s).unwrap_or_else(|e| panic!("catalog expression {s}: {e}")))
        .collect()
}

fn vp(point: &[f64], expected: Verdict) -> VerdictPoint {
    VerdictPoint {
        point: point.to_vec(),
        expected,
    }
}

fn reference(position: &[&str], horizon: f64, breakpoints: &[f64], note: &str) -> Reference {
    Reference {
        position: exprs(position),
        horizon,
        breakpoints: breakpoints.to_vec(),
        generalized_only: None,
        note: note.into(),
    }
}

fn fmt_num(v: f64) -> String {
    Expr::Num(v).to_string()
}

fn num_vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|c| fmt_num(*c)).collect();
    format!("({})", parts.join(", "))
}

fn growth(c1: f64, c0: f64) -> Option<GrowthBound> {
    Some(GrowthBound::new(c1, c0).expect("catalog growth constants are valid"))
}

fn base(f: VectorFieldDef, notes: &str) -> ZooEntry {
    ZooEntry {
        name: String::new(),
        summary: String::new(),
        field: f,
        params: Vec::new(),
        verdicts: Vec::new(),
        references: Vec::new(),
        growth: None,
        gradient: None,
        notes: notes.into(),
    }
}

const SC: Verdict = Verdict::SelfContinuous;
const NOT_SC: Verdict = Verdict::NotSelfContinuous;
const TRIVIAL: Verdict = Verdict::TriviallySelfContinuous;

fn intro_pair(_: &mut Params) -> Result<ZooEntry, ZooError> {
    let mut e = base(
        field("dim 2; on x1 == 0 => (0, 1); f = (-1, sign(x1))"),
        "Introductory field. Solutions starting on the axis exist for any axis \
         value; the value (0, 1) makes the field self-continuous there and adds \
         the vertical solution.",
    );
    e.verdicts = vec![
        vp(&[0.0, 0.0], SC),
        vp(&[1.0, 0.0], SC),
        vp(&[-1.0, 2.0], SC),
    ];
    e.references = vec![
        reference(
            &["1 - t", "min(t, 2 - t)"],
            1.5,
            &[1.0],
            "crosses the axis at t = 1",
        ),
        reference(&["0", "t"], 1.0, &[], "vertical solution on the axis"),
        reference(&["-t", "-t"], 1.0, &[], "leaves the axis to the left"),
    ];
    e.growth = growth(0.0, 2f64.sqrt());
    Ok(e)
}

fn diverge_intro(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let g = p.axis_expr("g", 2, "axis speed g(x2); must be continuous")?;
    let mut e = base(
        field(&format!(
            "dim 2; on x1 == 0 => (0, {g}); f = (-sign(x1), 1)"
        )),
        "Introductory field whose solutions through the axis depend on the axis \
         value; (0, g(x2)) with continuous g is the only self-continuous choice.",
    );
    e.verdicts = vec![vp(&[0.5, 0.0], SC), vp(&[-0.5, 1.0], SC)];
    if is_one(&g) {
        e.verdicts.push(vp(&[0.0, 0.0], SC));
        e.references = vec![
            reference(
                &["max(0.5 - t, 0)", "t"],
                1.5,
                &[0.5],
                "reaches the axis and slides",
            ),
            reference(&["0", "t"], 1.0, &[], "on the axis"),
        ];
        e.growth = growth(0.0, 2f64.sqrt());
    }
    Ok(e)
}

fn radial_unit(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let n = p.vector(
        "n",
        "1,0",
        "value at the origin; its length sets the dimension",
    )?;
    let dim = n.len();
    let xs: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    let r = format!("norm({})", xs.join(", "));
    let comps: Vec<String> = xs.iter().map(|x| format!("{x} / {r}")).collect();
    let mut e = base(
        field(&format!(
            "dim {dim}; on {r} == 0 => {}; f = ({})",
            num_vector(&n),
            comps.join(", ")
        )),
        "Unit radial field. Self-continuous at the origin exactly when |n| = 1 \
         (or trivially when n = 0); every nonzero n admits the radial solution \
         t n/|n|.",
    );
    let len = norm(&n);
    let origin = vec![0.0; dim];
    let at_origin = if len == 0.0 {
        TRIVIAL
    } else if (len - 1.0).abs() <= 1e-12 {
        SC
    } else {
        NOT_SC
    };
    e.verdicts.push(vp(&origin, at_origin));
    let mut a = origin.clone();
    a[0] = 3.0;
    if dim > 1 {
        a[1] = 4.0;
    }
    e.verdicts.push(vp(&a, SC));
    let mut b = origin.clone();
    b[dim - 1] = -0.5;
    e.verdicts.push(vp(&b, SC));
    if len == 0.0 {
        e.references.push(Reference {
            position: vec![Expr::Num(0.0); dim],
            horizon: 1.0,
            breakpoints: Vec::new(),
            generalized_only: None,
            note: "equilibrium at the origin".into(),
        });
    } else {
        let dir: Vec<String> = n
            .iter()
            .map(|c| format!("{} * t", fmt_num(c / len)))
            .collect();
        let refs: Vec<&str> = dir.iter().map(String::as_str).collect();
        e.references.push(reference(
            &refs,
            1.0,
            &[],
            "radial solution from the origin",
        ));
    }
    let a_dir: Vec<f64> = a.iter().map(|c| c / norm(&a)).collect();
    let from_a: Vec<String> = a
        .iter()
        .zip(&a_dir)
        .map(|(c, d)| format!("{} + {} * t", fmt_num(*c), fmt_num(*d)))
        .collect();
    let refs: Vec<&str> = from_a.iter().map(String::as_str).collect();
    e.references
        .push(reference(&refs, 1.0, &[], "radial solution off the origin"));
    e.growth = growth(0.0, len.max(1.0));
    Ok(e)
}

fn rot_unit(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let v = p.vector("v", "1,0", "value at the origin")?;
    if v.len() != 2 {
        return Err(Params::bad(
            "v",
            "rot-unit is planar; v needs two components",
        ));
    }
    let mut e = base(
        field(&format!(
            "dim 2; on norm(x1, x2) == 0 => {}; f = (x2 / norm(x1, x2), -x1 / norm(x1, x2))",
            num_vector(&v)
        )),
        "Unit rotation field. Not self-continuous at the origin for any v != 0; \
         v = 0 turns the origin into an equilibrium. Circles are solutions off \
         the origin but are not piecewise linear, so no reference is stored.",
    );
    let at_origin = if norm(&v) == 0.0 { TRIVIAL } else { NOT_SC };
    e.verdicts = vec![
        vp(&[0.0, 0.0], at_origin),
        vp(&[1.0, 0.0], SC),
        vp(&[0.3, -0.4], SC),
    ];
    if norm(&v) == 0.0 {
        e.references.push(reference(
            &["0", "0"],
            1.0,
            &[],
            "equilibrium at the origin",
        ));
    }
    e.growth = growth(0.0, norm(&v).max(1.0));
    Ok(e)
}

fn rot3d_axis(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let g = p.axis_expr("g", 3, "axis speed g(x3); must be continuous")?;
    let mut e = base(
        field(&format!(
            "dim 3; on norm(x1, x2) == 0 => (0, 0, {g}); \
             f = (x2 / norm(x1, x2), -x1 / norm(x1, x2), x3 / norm(x1, x2))"
        )),
        "Rotation about the vertical axis with the third component scaled by the \
         distance to it. Self-continuous; solutions starting on the axis stay on \
         it. |f| is unbounded near the axis, so no growth bound is stored.",
    );
    e.verdicts = vec![vp(&[1.0, 0.0, 0.0], SC), vp(&[0.5, 0.5, 1.0], SC)];
    if is_one(&g) {
        e.verdicts.push(vp(&[0.0, 0.0, 0.0], SC));
        e.verdicts.push(vp(&[0.0, 0.0, 2.0], SC));
        e.references.push(reference(
            &["0", "0", "t"],
            1.0,
            &[],
            "motion along the axis",
        ));
    }
    Ok(e)
}

fn rot_annulus(_: &mut Params) -> Result<ZooEntry, ZooError> {
    let mut e = base(
        field(
            "dim 2; on norm(x1, x2) == 0 => (0, 0); on abs(norm(x1, x2) - 1) <= 1e-12 => (x2, -x1); \
             f = (x2 / (norm(x1, x2) * (norm(x1, x2) - 1)), -x1 / (norm(x1, x2) * (norm(x1, x2) - 1)))",
        ),
        "Rotation with speed blowing up at the unit circle. The circle carries \
         the tangent Qx (making it invariant) and the origin is an equilibrium. \
         The circle matches tangent germs, not rays; probe it with a germ. The \
         circle membership test uses a 1e-12 band.",
    );
    e.verdicts = vec![
        vp(&[0.0, 0.0], TRIVIAL),
        vp(&[0.5, 0.0], SC),
        vp(&[2.0, 0.0], SC),
    ];
    e.references.push(reference(
        &["0", "0"],
        1.0,
        &[],
        "equilibrium at the origin",
    ));
    Ok(e)
}

fn spiral_sin(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let v = p.vector("v", "0,0", "value at the origin")?;
    if v.len() != 2 {
        return Err(Params::bad(
            "v",
            "spiral-sin is planar; v needs two components",
        ));
    }
    let mut e = base(
        field(&format!(
            "dim 2; on norm(x1, x2) == 0 => {}; f = (sin(1 / norm(x1, x2)), cos(1 / norm(x1, x2)))",
            num_vector(&v)
        )),
        "Unit field spinning infinitely fast near the origin. Only v = 0 makes it \
         self-continuous. For v != 0 the sampled ray limit oscillates, so the \
         numerical verdict is Inconclusive rather than NotSelfContinuous.",
    );
    let at_origin = if norm(&v) == 0.0 {
        TRIVIAL
    } else {
        Verdict::Inconclusive
    };
    e.verdicts = vec![
        vp(&[0.0, 0.0], at_origin),
        vp(&[1.0, 0.0], SC),
        vp(&[0.2, 0.1], SC),
    ];
    if norm(&v) == 0.0 {
        e.references.push(reference(
            &["0", "0"],
            1.0,
            &[],
            "equilibrium at the origin",
        ));
    }
    e.growth = growth(0.0, norm(&v).max(1.0));
    Ok(e)
}

fn converge_axis(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let axis = p.choice(
        "axis",
        &["g", "printed"],
        "axis value: (0, g(x2)), or (1, 0) for the non-self-continuous variant",
    )?;
    let g = p.axis_expr("g", 2, "axis speed g(x2); must be continuous")?;
    let printed = axis == "printed";
    let value = if printed {
        "(1, 0)".to_string()
    } else {
        format!("(0, {g})")
    };
    let mut e = base(
        field(&format!("dim 2; on x1 == 0 => {value}; f = (-sign(x1), 1)")),
        "Both half planes push toward the vertical axis. With axis value (0, g) \
         the field is self-continuous, solutions reach the axis in finite time \
         and slide along it. The printed variant (1, 0) is not self-continuous \
         on the axis.",
    );
    e.verdicts = vec![vp(&[0.5, 0.0], SC), vp(&[-0.3, 1.0], SC)];
    if printed {
        e.verdicts.push(vp(&[0.0, 0.0], NOT_SC));
        e.verdicts.push(vp(&[0.0, 5.0], NOT_SC));
        e.growth = growth(0.0, 2f64.sqrt());
    } else if is_one(&g) {
        e.verdicts.push(vp(&[0.0, 0.0], SC));
        e.verdicts.push(vp(&[0.0, 5.0], SC));
        e.references = vec![
            reference(
                &["max(0.5 - t, 0)", "t"],
                1.5,
                &[0.5],
                "slides after t = 0.5",
            ),
            reference(&["0", "t"], 1.0, &[], "on the axis"),
            reference(&["min(t - 0.5, 0)", "t"], 1.5, &[0.5], "from the left"),
        ];
        e.growth = growth(0.0, 2f64.sqrt());
    }
    Ok(e)
}

fn diverge_axis(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let bias = p.choice(
        "bias",
        &["none", "right", "left"],
        "axis value (0, g), or the right (1, 1) / left (-1, 1) closure",
    )?;
    let g = p.axis_expr("g", 2, "axis speed g(x2) when bias = none")?;
    let value = match bias.as_str() {
        "right" => "(1, 1)".to_string(),
        "left" => "(-1, 1)".to_string(),
        _ => format!("(0, {g})"),
    };
    let mut e = base(
        field(&format!("dim 2; on x1 == 0 => {value}; f = (sign(x1), 1)")),
        "Both half planes push away from the axis. Self-continuous for every \
         choice; with axis value (0, g) there are three solutions from each axis \
         point, the biased closures lose the vertical one.",
    );
    e.verdicts = vec![vp(&[1.0, 0.0], SC), vp(&[-1.0, 2.0], SC)];
    let default = bias == "none" && is_one(&g);
    if bias != "none" || default {
        e.verdicts.push(vp(&[0.0, 0.0], SC));
        e.growth = growth(0.0, 2f64.sqrt());
    }
    e.references
        .push(reference(&["1 + t", "t"], 1.0, &[], "off the axis"));
    if bias != "left" {
        e.references.push(reference(
            &["t", "t"],
            1.0,
            &[],
            "leaves the axis to the right",
        ));
    }
    if bias != "right" {
        e.references.push(reference(
            &["-t", "t"],
            1.0,
            &[],
            "leaves the axis to the left",
        ));
    }
    if default {
        e.references
            .push(reference(&["0", "t"], 1.0, &[], "stays on the axis"));
    }
    Ok(e)
}

fn cross_axis(_: &mut Params) -> Result<ZooEntry, ZooError> {
    let mut e = base(
        field("dim 2; on x1 == 0 => (1, 0); f = (0, sign(x1))"),
        "Stored as printed. Not self-continuous on the axis. The horizontal \
         curves (t, 0) are generalized solutions only: their residual is (−1, 1) \
         with norm sqrt(2). The approximants (t, 1/j) are not integral curves of \
         this field; see cross-axis-swapped.",
    );
    e.verdicts = vec![
        vp(&[0.0, 0.0], NOT_SC),
        vp(&[0.0, 3.0], NOT_SC),
        vp(&[1.0, 0.0], SC),
        vp(&[-2.0, 1.0], SC),
    ];
    e.references = vec![
        Reference {
            generalized_only: Some(2f64.sqrt()),
            ..reference(
                &["t", "0"],
                1.0,
                &[],
                "horizontal generalized solution, E = sqrt(2) T",
            )
        },
        reference(&["1", "t"], 1.0, &[], "vertical, right half plane"),
        reference(&["-1", "-t"], 1.0, &[], "vertical, left half plane"),
    ];
    e.growth = growth(0.0, 1.0);
    Ok(e)
}

fn cross_axis_swapped(_: &mut Params) -> Result<ZooEntry, ZooError> {
    let mut e = base(
        field("dim 2; on x1 == 0 => (1, 0); f = (sign(x1), 0)"),
        "Component-swapped reading of cross-axis: the horizontal lines (t, c) \
         are genuine integral curves, so (t, 1/j) -> (t, 0) holds with zero error.",
    );
    e.verdicts = vec![
        vp(&[0.0, 0.0], SC),
        vp(&[0.0, 2.0], SC),
        vp(&[1.0, 1.0], SC),
        vp(&[-1.0, 0.0], SC),
    ];
    e.references = vec![
        reference(&["t", "0"], 1.0, &[], "horizontal, to the right"),
        reference(&["t", "0.5"], 1.0, &[], "approximant j = 2"),
        reference(&["-t", "0"], 1.0, &[], "horizontal, to the left"),
    ];
    e.growth = growth(0.0, 1.0);
    Ok(e)
}

fn cross_axis_vertical(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let g = p.axis_expr("g", 2, "axis speed g(x2); must be continuous")?;
    let mut e = base(
        field(&format!("dim 2; on x1 == 0 => (0, {g}); f = (0, sign(x1))")),
        "Variation of cross-axis with axis value (0, g): self-continuous, with a \
         vertical solution on the axis in addition to the horizontal generalized \
         ones (E = sqrt(2) T).",
    );
    e.verdicts = vec![vp(&[1.0, 0.0], SC), vp(&[-1.0, 0.0], SC)];
    if is_one(&g) {
        e.verdicts.push(vp(&[0.0, 0.0], SC));
        e.references = vec![
            reference(&["0", "t"], 1.0, &[], "vertical on the axis"),
            Reference {
                generalized_only: Some(2f64.sqrt()),
                ..reference(&["t", "0"], 1.0, &[], "horizontal generalized solution")
            },
            reference(&["1", "t"], 1.0, &[], "vertical, right half plane"),
        ];
        e.growth = growth(0.0, 1.0);
    }
    Ok(e)
}

fn power_radial(p: &mut Params) -> Result<ZooEntry, ZooError> {
    let alpha = p.number("alpha", "-1.5", "exponent, in (-N, -1]")?;
    let n = p.number("N", "3", "dimension, 2..=8")?;
    if n.fract() != 0.0 || !(2.0..=8.0).contains(&n) {
        return Err(Params::bad("N", "must be an integer in 2..=8"));
    }
    let n = n as usize;
    if !(alpha > -(n as f64) && alpha <= -1.0) {
        return Err(Params::bad("alpha", format!("must lie in (-{n}, -1]")));
    }
    let xs: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    let r = format!("norm({})", xs.join(", "));
    let a = fmt_num(alpha);
    let comps: Vec<String> = xs.iter().map(|x| format!("pow({r}, {a}) * {x}")).collect();
    let mut e = base(
        field(&format!(
            "dim {n}; domain ball ({}) 1; off {r} == 0; f = ({})",
            vec!["0"; n].join(", "),
            comps.join(", ")
        )),
        &format!(
            "Sobolev field on the unit ball, in W^(1,p) for alpha in (-N/p, -1) \
             (metadata only: p is never used). For alpha < -1 no radial limit \
             exists at the origin, so no representative is self-continuous there; \
             alpha = -1 is the unit radial field. Undefined at the origin. \
             Admissible interval here: (-{n}/p, -1)."
        ),
    );
    let mut a1 = vec![0.0; n];
    a1[0] = 0.5;
    let mut a2 = vec![0.1; n];
    a2[1] = -0.2;
    e.verdicts = vec![vp(&a1, SC), vp(&a2, SC)];
    let mut grad = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { " + 1" } else { "" };
            grad.push(format!(
                "pow({r}, {a}) * ({a} * {} * {} / ({r} * {r}){delta})",
                xs[i], xs[j]
            ));
        }
    }
    let grad_refs: Vec<&str> = grad.iter().map(String::as_str).collect();
    e.gradient = Some(exprs(&grad_refs));
    if alpha == -1.0 {
        let mut pos = vec!["0".to_string(); n];
        pos[0] = "0.5 + t".into();
        let refs: Vec<&str> = pos.iter().map(String::as_str).collect();
        e.references
            .push(reference(&refs, 0.4, &[], "radial motion inside the ball"));
    }
    Ok(e)
}
