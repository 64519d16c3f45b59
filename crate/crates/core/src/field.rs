//! Vector fields with explicit values on their discontinuity sets.
//!
//! A field file looks like
//!
//! ```text
//! dim 2; on x1 == 0 => (0, 1); f = (-sign(x1), 1)
//! ```
//!
//! Overrides are tried in declaration order before the default components.
//! Two optional clauses may follow the `dim` header: `domain box (lo) (hi);`
//! or `domain ball (center) radius;` restricts the open domain, and
//! `off <predicate>;` marks points where the field is undefined unless an
//! override claims them.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{fmt_vector, Expr, ParseError, Parser, Predicate, Scope, Tok};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("point {0:?} lies outside the field domain")]
    OutsideDomain(Vec<f64>),
    #[error("field is undefined at {0:?}")]
    Undefined(Vec<f64>),
    #[error("field value is not finite at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("dimension mismatch: field has dim {expected}, point has {got}")]
    Dim { expected: usize, got: usize },
}

impl FieldError {
    /// The offending point, when the error concerns one.
    pub fn point(&self) -> Option<&[f64]> {
        match self {
            FieldError::OutsideDomain(p) | FieldError::Undefined(p) | FieldError::NonFinite(p) => {
                Some(p)
            }
            FieldError::Dim { .. } => None,
        }
    }
}

/// Anything that can be sampled as `f: R^N -> R^N`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), FieldError>;

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        (**self).eval_into(x, out)
    }
}

/// Adapter turning a closure into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), FieldError> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), FieldError> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        (self.f)(x, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    AllSpace,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub excluded: Option<Predicate>,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self {
            kind: DomainKind::AllSpace,
            excluded: None,
        }
    }
}

impl DomainSpec {
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            DomainKind::AllSpace => true,
            DomainKind::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *l < *v && *v < *h),
            DomainKind::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() < *radius
            }
        }
    }
}

/// Linear growth constants: `|f(z)| <= c1 |z| + c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub c1: f64,
    pub c0: f64,
}

impl GrowthBound {
    pub fn new(c1: f64, c0: f64) -> Result<Self, String> {
        if !(c1 >= 0.0 && c1.is_finite()) {
            return Err(format!("growth constant c1 must be >= 0, got {c1}"));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(format!("growth constant c0 must be > 0, got {c0}"));
        }
        Ok(Self { c1, c0 })
    }

    pub fn at(&self, norm: f64) -> f64 {
        self.c1 * norm + self.c0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub when: Predicate,
    pub value: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldDef {
    dim: usize,
    components: Vec<Expr>,
    overrides: Vec<Override>,
    domain: DomainSpec,
}

fn check_vars(
    exprs: impl IntoIterator<Item = crate::expr::Symbols>,
    dim: usize,
    allow_eps: bool,
    at: (usize, usize),
) -> Result<(), ParseError> {
    for s in exprs {
        if s.max_x > dim {
            return Err(ParseError::new(
                at.0,
                at.1,
                format!(
                    "unknown identifier 'x{}' in a {dim}-dimensional field",
                    s.max_x
                ),
            ));
        }
        if s.eps && !allow_eps {
            return Err(ParseError::new(at.0, at.1, "unknown identifier 'eps'"));
        }
        if s.t {
            return Err(ParseError::new(at.0, at.1, "unknown identifier 't'"));
        }
        if s.j {
            return Err(ParseError::new(at.0, at.1, "unknown identifier 'j'"));
        }
    }
    Ok(())
}

pub(crate) fn parse_vector_n(
    p: &mut Parser,
    dim: usize,
    allow_eps: bool,
) -> Result<Vec<Expr>, ParseError> {
    let at = (p.peek().line, p.peek().col);
    let v = p.vector()?;
    if v.len() != dim {
        return Err(ParseError::new(
            at.0,
            at.1,
            format!(
                "arity mismatch: expected {dim} components, found {}",
                v.len()
            ),
        ));
    }
    check_vars(v.iter().map(Expr::symbols), dim, allow_eps, at)?;
    Ok(v)
}

fn parse_predicate_n(p: &mut Parser, dim: usize) -> Result<Predicate, ParseError> {
    let at = (p.peek().line, p.peek().col);
    let pred = p.predicate()?;
    check_vars([pred.symbols()], dim, false, at)?;
    Ok(pred)
}

fn constant_vector(p: &mut Parser, dim: usize) -> Result<Vec<f64>, ParseError> {
    let v = parse_vector_n(p, dim, false)?;
    Ok(v.iter().map(|e| e.eval(&Scope::point(&[]))).collect())
}

pub(crate) fn parse_header(p: &mut Parser) -> Result<usize, ParseError> {
    p.keyword("dim")?;
    let at = (p.peek().line, p.peek().col);
    let dim = p.integer()?;
    if dim == 0 {
        return Err(ParseError::new(at.0, at.1, "dim must be at least 1"));
    }
    p.expect(Tok::Semi)?;
    Ok(dim)
}

/// Parses the field-definition grammar.
pub fn parse_field_expr(text: &str) -> Result<VectorFieldDef, ParseError> {
    let mut p = Parser::new(text)?;
    let dim = parse_header(&mut p)?;
    let mut domain = DomainSpec::default();
    if p.at_keyword("domain") {
        p.bump();
        let at = (p.peek().line, p.peek().col);
        if p.at_keyword("all") {
            p.bump();
        } else if p.at_keyword("box") {
            p.bump();
            let lo = constant_vector(&mut p, dim)?;
            let hi = constant_vector(&mut p, dim)?;
            if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
                return Err(ParseError::new(
                    at.0,
                    at.1,
                    "box needs lo < hi componentwise",
                ));
            }
            domain.kind = DomainKind::Box { lo, hi };
        } else if p.at_keyword("ball") {
            p.bump();
            let center = constant_vector(&mut p, dim)?;
            let radius = p.expr()?.eval(&Scope::point(&[]));
            if !(radius > 0.0) {
                return Err(ParseError::new(at.0, at.1, "ball radius must be positive"));
            }
            domain.kind = DomainKind::Ball { center, radius };
        } else {
            return Err(p.err_here("expected 'all', 'box' or 'ball'"));
        }
        p.expect(Tok::Semi)?;
    }
    if p.at_keyword("off") {
        p.bump();
        domain.excluded = Some(parse_predicate_n(&mut p, dim)?);
        p.expect(Tok::Semi)?;
    }
    let mut overrides = Vec::new();
    while p.at_keyword("on") {
        p.bump();
        let when = parse_predicate_n(&mut p, dim)?;
        p.expect(Tok::Arrow)?;
        let value = parse_vector_n(&mut p, dim, false)?;
        p.expect(Tok::Semi)?;
        overrides.push(Override { when, value });
    }
    p.keyword("f")?;
    p.expect(Tok::Assign)?;
    let components = parse_vector_n(&mut p, dim, false)?;
    if p.peek().tok == Tok::Semi {
        p.bump();
    }
    p.expect_end()?;
    Ok(VectorFieldDef {
        dim,
        components,
        overrides,
        domain,
    })
}

impl VectorFieldDef {
    pub fn new(
        components: Vec<Expr>,
        overrides: Vec<Override>,
        domain: DomainSpec,
    ) -> Result<Self, String> {
        let dim = components.len();
        if dim == 0 {
            return Err("a field needs at least one component".into());
        }
        if overrides.iter().any(|o| o.value.len() != dim) {
            return Err(format!("every override needs exactly {dim} components"));
        }
        Ok(Self {
            dim,
            components,
            overrides,
            domain,
        })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn overrides(&self) -> &[Override] {
        &self.overrides
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Same field with every override dropped and `excluded` marking the
    /// points they used to claim.
    pub fn without_overrides(&self, excluded: Predicate) -> Self {
        Self {
            dim: self.dim,
            components: self.components.clone(),
            overrides: Vec::new(),
            domain: DomainSpec {
                kind: self.domain.kind.clone(),
                excluded: Some(excluded),
            },
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.eval(x)
    }

    /// Canonical text form, parseable by [`parse_field_expr`].
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for VectorFieldDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nums = |v: &[f64]| fmt_vector(&v.iter().map(|c| Expr::Num(*c)).collect::<Vec<_>>());
        write!(f, "dim {};", self.dim)?;
        match &self.domain.kind {
            DomainKind::AllSpace => {}
            DomainKind::Box { lo, hi } => write!(f, " domain box {} {};", nums(lo), nums(hi))?,
            DomainKind::Ball { center, radius } => {
                write!(f, " domain ball {} {};", nums(center), Expr::Num(*radius))?
            }
        }
        if let Some(ex) = &self.domain.excluded {
            write!(f, " off {ex};")?;
        }
        for o in &self.overrides {
            write!(f, " on {} => {};", o.when, fmt_vector(&o.value))?;
        }
        write!(f, " f = {}", fmt_vector(&self.components))
    }
}

impl VectorField for VectorFieldDef {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::Dim {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(FieldError::OutsideDomain(x.to_vec()));
        }
        let s = Scope::point(x);
        let branch = match self.overrides.iter().find(|o| o.when.holds(&s)) {
            Some(o) => &o.value,
            None => {
                if self.domain.excluded.as_ref().is_some_and(|p| p.holds(&s)) {
                    return Err(FieldError::Undefined(x.to_vec()));
                }
                &self.components
            }
        };
        for (o, e) in out.iter_mut().zip(branch) {
            *o = e.eval(&s);
            if !o.is_finite() {
                return Err(FieldError::NonFinite(x.to_vec()));
            }
        }
        Ok(())
    }
}

/// A germ curve `phi(eps; x)` with its velocity, both as expressions in
/// `eps` and the base point `x1..xN`.
#[derive(Debug, Clone, PartialEq)]
pub struct GermCurveDef {
    pub position: Vec<Expr>,
    pub velocity: Vec<Expr>,
    pub eps_max: f64,
}

impl GermCurveDef {
    pub fn new(position: Vec<Expr>, velocity: Vec<Expr>, eps_max: f64) -> Result<Self, String> {
        if position.is_empty() || position.len() != velocity.len() {
            return Err("germ position and velocity need the same non-zero length".into());
        }
        if !(eps_max > 0.0) {
            return Err("germ eps_max must be positive".into());
        }
        Ok(Self {
            position,
            velocity,
            eps_max,
        })
    }

    /// The straight germ `x + eps f(x)` for a constant velocity `v`.
    pub fn ray(v: &[f64]) -> Self {
        let position = v
            .iter()
            .enumerate()
            .map(|(i, vi)| {
                Expr::Bin(
                    crate::expr::BinOp::Add,
                    Box::new(Expr::Var(i)),
                    Box::new(Expr::Bin(
                        crate::expr::BinOp::Mul,
                        Box::new(Expr::Eps),
                        Box::new(Expr::Num(*vi)),
                    )),
                )
            })
            .collect();
        let velocity = v.iter().map(|vi| Expr::Num(*vi)).collect();
        Self {
            position,
            velocity,
            eps_max: f64::INFINITY,
        }
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn position_at(&self, eps: f64, base: &[f64]) -> Vec<f64> {
        let s = Scope {
            x: base,
            eps,
            t: 0.0,
            j: 0.0,
        };
        self.position.iter().map(|e| e.eval(&s)).collect()
    }

    pub fn velocity_at(&self, eps: f64, base: &[f64]) -> Vec<f64> {
        let s = Scope {
            x: base,
            eps,
            t: 0.0,
            j: 0.0,
        };
        self.velocity.iter().map(|e| e.eval(&s)).collect()
    }

    /// Parses `dim N; phi = (...); dphi = (...); epsmax = <expr>`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut p = Parser::new(text)?;
        let dim = parse_header(&mut p)?;
        p.keyword("phi")?;
        p.expect(Tok::Assign)?;
        let position = parse_vector_n(&mut p, dim, true)?;
        p.expect(Tok::Semi)?;
        p.keyword("dphi")?;
        p.expect(Tok::Assign)?;
        let velocity = parse_vector_n(&mut p, dim, true)?;
        let mut eps_max = f64::INFINITY;
        if p.peek().tok == Tok::Semi {
            p.bump();
            if p.at_keyword("epsmax") {
                p.bump();
                p.expect(Tok::Assign)?;
                let at = (p.peek().line, p.peek().col);
                eps_max = p.expr()?.eval(&Scope::point(&[]));
                if !(eps_max > 0.0) {
                    return Err(ParseError::new(at.0, at.1, "epsmax must be positive"));
                }
                if p.peek().tok == Tok::Semi {
                    p.bump();
                }
            }
        }
        p.expect_end()?;
        Ok(Self {
            position,
            velocity,
            eps_max,
        })
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub samples: usize,
    pub skipped: usize,
    /// `max(|f(z)| - (c1 |z| + c0), 0)` over the evaluated samples, ignoring
    /// excess within [`GROWTH_ROUNDING`] of the bound.
    pub max_violation: f64,
    pub worst_point: Option<Vec<f64>>,
}

/// Relative excess attributed to rounding in the two norms.
pub const GROWTH_ROUNDING: f64 = 8.0 * f64::EPSILON;

/// Samples points uniformly in the ball of the given radius and reports the
/// largest violation of the growth bound. Undefined points are skipped.
pub fn check_growth_sample<F: VectorField + ?Sized>(
    field: &F,
    bound: GrowthBound,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> GrowthReport {
    let n = field.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GrowthReport {
        samples: n_samples,
        skipped: 0,
        max_violation: 0.0,
        worst_point: None,
    };
    let mut z = vec![0.0; n];
    let mut fz = vec![0.0; n];
    for _ in 0..n_samples {
        for c in z.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let len = norm(&z);
        let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
        for c in z.iter_mut() {
            *c *= r / len;
        }
        if field.eval_into(&z, &mut fz).is_err() {
            report.skipped += 1;
            continue;
        }
        let limit = bound.at(norm(&z));
        let excess = norm(&fz) - limit;
        if excess > GROWTH_ROUNDING * limit && excess > report.max_violation {
            report.max_violation = excess;
            report.worst_point = Some(z.clone());
        }
    }
    report
}
