//! Radial integrability check for `|x - x0|^{-N} |∇u(x)(x - x0)|` on a ball.
//!
//! In spherical coordinates around `x0` the weight `r^{-N} · r · r^{N-1}`
//! cancels, so each annulus contributes `∫∫ |∇u(x0 + r e) e| dS(e) dr`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::expr::{Expr, ParseError, Parser, Scope, Tok};
use crate::field::{parse_header, parse_vector_n, FieldError, VectorField, VectorFieldDef};

/// Radial midpoint nodes per annulus (uniform in `log r`).
pub const RADIAL_NODES: usize = 16;
/// Number of trailing increments inspected by the verdict rule.
pub const TAIL: usize = 5;
/// Decades of radius covered below `rho`.
pub const DECADES: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SobolevError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("u is undefined at radius {r}: {source}")]
    Undefined { r: f64, source: FieldError },
    #[error("gradient evaluation failed at {point:?}")]
    Gradient { point: Vec<f64> },
}

/// Source of the Jacobian `∇u`.
#[derive(Debug, Clone, PartialEq)]
pub enum GradientProvider {
    /// Row-major `N x N` matrix, entry `(i, j) = ∂u_i/∂x_j`.
    Analytic(Vec<Expr>),
    /// Central difference along the probing direction with step
    /// `step_scale · |x - x0|`.
    FiniteDifference { step_scale: f64 },
}

impl Default for GradientProvider {
    fn default() -> Self {
        GradientProvider::FiniteDifference { step_scale: 1e-6 }
    }
}

impl GradientProvider {
    /// Parses `dim N; grad = ((row1), (row2), ...)`.
    pub fn parse_analytic(text: &str) -> Result<Self, ParseError> {
        let mut p = Parser::new(text)?;
        let dim = parse_header(&mut p)?;
        p.keyword("grad")?;
        p.expect(Tok::Assign)?;
        p.expect(Tok::LParen)?;
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            if i > 0 {
                p.expect(Tok::Comma)?;
            }
            entries.extend(parse_vector_n(&mut p, dim, false)?);
        }
        p.expect(Tok::RParen)?;
        if p.peek().tok == Tok::Semi {
            p.bump();
        }
        p.expect_end()?;
        Ok(GradientProvider::Analytic(entries))
    }

    pub fn validate(&self, dim: usize) -> Result<(), SobolevError> {
        match self {
            GradientProvider::Analytic(m) if m.len() != dim * dim => {
                Err(SobolevError::Config(format!(
                    "analytic gradient has {} entries, expected {}",
                    m.len(),
                    dim * dim
                )))
            }
            GradientProvider::FiniteDifference { step_scale } if !(*step_scale > 0.0) => Err(
                SobolevError::Config("finite-difference step must be positive".into()),
            ),
            _ => Ok(()),
        }
    }

    /// `|∇u(x) e|`, where `x = x0 + r e`.
    fn directional(
        &self,
        u: &VectorFieldDef,
        x: &[f64],
        e: &[f64],
        r: f64,
    ) -> Result<f64, SobolevError> {
        let n = x.len();
        let v = match self {
            GradientProvider::Analytic(m) => {
                let s = Scope::point(x);
                let mut acc = 0.0;
                for i in 0..n {
                    let row: f64 = (0..n).map(|j| m[i * n + j].eval(&s) * e[j]).sum();
                    acc += row * row;
                }
                acc.sqrt()
            }
            GradientProvider::FiniteDifference { step_scale } => {
                let h = step_scale * r;
                let plus: Vec<f64> = x.iter().zip(e).map(|(a, b)| a + h * b).collect();
                let minus: Vec<f64> = x.iter().zip(e).map(|(a, b)| a - h * b).collect();
                let up = u
                    .eval(&plus)
                    .map_err(|source| SobolevError::Undefined { r, source })?;
                let um = u
                    .eval(&minus)
                    .map_err(|source| SobolevError::Undefined { r, source })?;
                up.iter()
                    .zip(&um)
                    .map(|(a, b)| ((a - b) / (2.0 * h)).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SobolevError::Gradient { point: x.to_vec() })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevConfig {
    pub rho: f64,
    pub n_shells: usize,
    pub n_angular: usize,
    pub seed: u64,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        SobolevConfig {
            rho: 1.0,
            n_shells: 33,
            n_angular: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrabilityVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    /// `(r_inner, integral over r_inner < |x - x0| < rho)`, outermost first.
    #[serde(serialize_with = "pairs")]
    pub shells: Vec<(f64, f64)>,
    pub verdict: IntegrabilityVerdict,
    /// Integral over `rho·1e-8 < |x - x0| < rho`; for a divergent verdict
    /// this is only the truncated value.
    pub estimate: Option<f64>,
    #[serde(skip)]
    pub increments: Vec<f64>,
    /// Per-annulus Monte Carlo standard error (zero for deterministic rules).
    #[serde(skip)]
    pub sigma: Vec<f64>,
}

fn pairs<S: Serializer>(v: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|(a, b)| [*a, *b]))
}

impl IntegrabilityReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn shells_csv(&self) -> String {
        let mut out = String::from("r_inner,partial\n");
        for (r, v) in &self.shells {
            out.push_str(&format!("{r:e},{v:e}\n"));
        }
        out
    }
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    // Γ(n/2) by the half-integer recursion.
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut k = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while k < n as f64 / 2.0 {
        gamma *= k;
        k += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma
}

/// Quadrature directions and their common weight.
fn directions(dim: usize, n: usize, rng: Option<&mut ChaCha8Rng>) -> (Vec<Vec<f64>>, f64) {
    match dim {
        1 => (vec![vec![1.0], vec![-1.0]], 1.0),
        2 => {
            let step = std::f64::consts::TAU / n as f64;
            let dirs = (0..n)
                .map(|i| {
                    let a = (i as f64 + 0.5) * step;
                    vec![a.cos(), a.sin()]
                })
                .collect();
            (dirs, step)
        }
        3 => (
            crate::probe::fibonacci_sphere(n),
            4.0 * std::f64::consts::PI / n as f64,
        ),
        _ => {
            let rng = rng.expect("monte carlo needs a generator");
            let dirs = (0..n)
                .map(|_| loop {
                    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                    let len = crate::field::norm(&v);
                    if len > 1e-12 {
                        break v.iter().map(|c| c / len).collect();
                    }
                })
                .collect();
            (dirs, sphere_area(dim) / n as f64)
        }
    }
}

/// `(integral, standard error)` over the annulus `[r_lo, r_hi]`.
#[allow(clippy::too_many_arguments)]
fn annulus(
    u: &VectorFieldDef,
    grad: &GradientProvider,
    x0: &[f64],
    r_lo: f64,
    r_hi: f64,
    dirs: &[Vec<f64>],
    weight: f64,
    monte_carlo: bool,
) -> Result<(f64, f64), SobolevError> {
    let (s_lo, s_hi) = (r_lo.ln(), r_hi.ln());
    let ds = (s_hi - s_lo) / RADIAL_NODES as f64;
    let mut per_dir = vec![0.0; dirs.len()];
    let mut x = vec![0.0; x0.len()];
    for k in 0..RADIAL_NODES {
        let r = (s_lo + (k as f64 + 0.5) * ds).exp();
        for (d, e) in dirs.iter().enumerate() {
            for i in 0..x.len() {
                x[i] = x0[i] + r * e[i];
            }
            u.eval(&x)
                .map_err(|source| SobolevError::Undefined { r, source })?;
            per_dir[d] += grad.directional(u, &x, e, r)? * r * ds;
        }
    }
    let total: f64 = per_dir.iter().sum::<f64>() * weight;
    let sigma = if monte_carlo && dirs.len() > 1 {
        let m = dirs.len() as f64;
        let mean = total / (weight * m);
        let var = per_dir.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        weight * m * (var / m).sqrt()
    } else {
        0.0
    };
    Ok((total, sigma))
}

/// Verdict over the per-annulus increments (outermost first).
pub fn classify_increments(increments: &[f64], total: f64) -> IntegrabilityVerdict {
    if increments.len() < TAIL {
        return IntegrabilityVerdict::Inconclusive;
    }
    let tail = &increments[increments.len() - TAIL..];
    let tol_abs = 1e-6 * (1.0 + total);
    let floor = 1e-3 * tol_abs;
    let shrinking = tail.windows(2).all(|w| w[1] <= w[0] + floor);
    if tail.iter().all(|&d| d <= tol_abs) && shrinking {
        return IntegrabilityVerdict::Convergent;
    }
    let growing = tail.windows(2).all(|w| w[0] > 0.0 && w[1] >= 1.05 * w[0]);
    if growing && tail[TAIL - 1] > tol_abs {
        return IntegrabilityVerdict::Divergent;
    }
    IntegrabilityVerdict::Inconclusive
}

pub fn check_integrability(
    u: &VectorFieldDef,
    grad: &GradientProvider,
    x0: &[f64],
    cfg: &SobolevConfig,
) -> Result<IntegrabilityReport, SobolevError> {
    let dim = u.dim();
    if x0.len() != dim {
        return Err(SobolevError::Config(format!(
            "x0 has {} components, field has dim {dim}",
            x0.len()
        )));
    }
    if !(cfg.rho > 0.0) || !cfg.rho.is_finite() {
        return Err(SobolevError::Config("rho must be positive".into()));
    }
    if cfg.n_shells < 2 {
        return Err(SobolevError::Config("need at least 2 shells".into()));
    }
    if cfg.n_angular == 0 {
        return Err(SobolevError::Config("need at least 1 angular node".into()));
    }
    grad.validate(dim)?;

    let radii: Vec<f64> = (0..cfg.n_shells)
        .map(|k| cfg.rho * 10f64.powf(-DECADES * k as f64 / (cfg.n_shells - 1) as f64))
        .collect();
    let monte_carlo = dim >= 4;
    let shared = (!monte_carlo).then(|| directions(dim, cfg.n_angular, None));

    let parts: Vec<(f64, f64)> = (0..cfg.n_shells - 1)
        .into_par_iter()
        .map(|k| {
            let (r_hi, r_lo) = (radii[k], radii[k + 1]);
            match &shared {
                Some((dirs, w)) => annulus(u, grad, x0, r_lo, r_hi, dirs, *w, false),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(k as u64);
                    let (dirs, w) = directions(dim, cfg.n_angular, Some(&mut rng));
                    annulus(u, grad, x0, r_lo, r_hi, &dirs, w, true)
                }
            }
        })
        .collect::<Result<_, _>>()?;

    let mut shells = Vec::with_capacity(cfg.n_shells);
    shells.push((radii[0], 0.0));
    let mut running = 0.0;
    for (k, (inc, _)) in parts.iter().enumerate() {
        running += inc;
        shells.push((radii[k + 1], running));
    }
    let increments: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let verdict = classify_increments(&increments, running);
    Ok(IntegrabilityReport {
        shells,
        verdict,
        estimate: running.is_finite().then_some(running),
        increments,
        sigma: parts.iter().map(|p| p.1).collect(),
    })
}
