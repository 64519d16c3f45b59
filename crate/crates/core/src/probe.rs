//! Numerical self-continuity probes.
//!
//! A probe samples the one-sided limit along a geometric schedule
//! `eps_k = eps0 * ratio^k` and classifies the residual sequence. The limit is
//! only ever sampled, so the verdict is ternary plus the vacuous case `f(x) = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{dist, norm, FieldError, GermCurveDef, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("field evaluation failed at the base point: {0}")]
    Base(#[source] FieldError),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("germ does not start at the base point: {0}")]
    GermMismatch(String),
    #[error("dimension {0} is not supported (2 or 3 only)")]
    UnsupportedDim(usize),
    #[error("dimension mismatch: field has dim {expected}, got {got}")]
    Dim { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
    pub tol: f64,
    pub stall_threshold: f64,
}

impl Default for ProbeSchedule {
    fn default() -> Self {
        Self {
            eps0: 1e-2,
            ratio: 0.5,
            count: 24,
            tol: 1e-6,
            stall_threshold: 1e-3,
        }
    }
}

/// Number of times a non-admissible starting `eps` is shrunk by `ratio`.
const MAX_SHRINKS: i32 = 40;

impl ProbeSchedule {
    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |m: &str| Err(ProbeError::Schedule(m.into()));
        if !(self.eps0 > 0.0) {
            return bad("eps0 must be positive");
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return bad("ratio must lie in (0, 1)");
        }
        if self.count < 4 {
            return bad("count must be at least 4");
        }
        if !(self.tol > 0.0 && self.stall_threshold > 0.0) {
            return bad("tol and stall_threshold must be positive");
        }
        if !(self.eps0 * self.ratio.powi(self.count as i32 - 1) > 1e-300) {
            return bad("schedule underflows");
        }
        Ok(())
    }

    pub fn eps(&self, start: f64, k: usize) -> f64 {
        start * self.ratio.powi(k as i32)
    }

    /// Length of the tail the verdict is read from.
    pub fn tail_len(&self) -> usize {
        (self.count / 4).max(4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SelfContinuous,
    NotSelfContinuous,
    Inconclusive,
    TriviallySelfContinuous,
}

impl Verdict {
    /// True for both the sampled and the vacuous self-continuous verdicts.
    pub fn is_self_continuous(self) -> bool {
        matches!(
            self,
            Verdict::SelfContinuous | Verdict::TriviallySelfContinuous
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub point: Vec<f64>,
    /// `(eps_k, d_k)` in strictly decreasing `eps`.
    pub residuals: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub limit_estimate: Option<Vec<f64>>,
    pub diagnostics: String,
}

/// Decision rule on a residual sequence ordered by decreasing `eps`.
///
/// The tail is the last `max(4, count/4)` residuals. All tail residuals at most
/// `tol` gives `SelfContinuous`. A tail bounded below by `stall_threshold` that
/// either never decreases or stays flat within 10% of its minimum gives
/// `NotSelfContinuous`. Everything else is `Inconclusive`.
pub fn classify(residuals: &[f64], sched: &ProbeSchedule) -> Verdict {
    if residuals.is_empty() {
        return Verdict::Inconclusive;
    }
    let n = sched.tail_len().min(residuals.len());
    let tail = &residuals[residuals.len() - n..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= sched.tol {
        return Verdict::SelfContinuous;
    }
    let non_decreasing = tail.windows(2).all(|w| w[1] >= w[0]);
    let flat = max - min <= 0.1 * min;
    if min >= sched.stall_threshold && (non_decreasing || flat) {
        Verdict::NotSelfContinuous
    } else {
        Verdict::Inconclusive
    }
}

fn check_dim<F: VectorField + ?Sized>(field: &F, x: &[f64]) -> Result<(), ProbeError> {
    if field.dim() != x.len() {
        return Err(ProbeError::Dim {
            expected: field.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

fn finish(
    point: &[f64],
    residuals: Vec<(f64, f64)>,
    limit: Option<Vec<f64>>,
    skipped: usize,
    sched: &ProbeSchedule,
    mut diagnostics: String,
) -> ProbeReport {
    let ds: Vec<f64> = residuals.iter().map(|r| r.1).collect();
    let verdict = classify(&ds, sched);
    if skipped > 0 {
        diagnostics.push_str(&format!("{skipped} inadmissible samples skipped; "));
    }
    if let Some(last) = ds.last() {
        diagnostics.push_str(&format!("final residual {last:.3e}"));
    }
    ProbeReport {
        point: point.to_vec(),
        residuals,
        verdict,
        limit_estimate: limit,
        diagnostics,
    }
}

fn offset(x: &[f64], dir: &[f64], eps: f64, out: &mut [f64]) {
    for ((o, a), d) in out.iter_mut().zip(x).zip(dir) {
        *o = a + eps * d;
    }
}

/// Ray form: `d_k = |f(x + eps_k f(x)) - f(x)|`.
pub fn probe_ray<F: VectorField + ?Sized>(
    field: &F,
    x: &[f64],
    sched: &ProbeSchedule,
) -> Result<ProbeReport, ProbeError> {
    sched.validate()?;
    check_dim(field, x)?;
    let fx = field.eval(x).map_err(ProbeError::Base)?;
    if norm(&fx) == 0.0 {
        return Ok(ProbeReport {
            point: x.to_vec(),
            residuals: Vec::new(),
            verdict: Verdict::TriviallySelfContinuous,
            limit_estimate: Some(fx),
            diagnostics: "f(x) = 0: the limit condition is vacuous".into(),
        });
    }
    let n = x.len();
    let mut y = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut start = None;
    for s in 0..=MAX_SHRINKS {
        let e = sched.eps0 * sched.ratio.powi(s);
        offset(x, &fx, e, &mut y);
        if field.eval_into(&y, &mut fy).is_ok() {
            start = Some((e, s));
            break;
        }
    }
    let Some((start, shrinks)) = start else {
        return Ok(ProbeReport {
            point: x.to_vec(),
            residuals: Vec::new(),
            verdict: Verdict::Inconclusive,
            limit_estimate: None,
            diagnostics: format!(
                "no admissible eps: every sample point along the ray is undefined after {MAX_SHRINKS} shrinks"
            ),
        });
    };
    let mut residuals = Vec::with_capacity(sched.count);
    let mut limit = None;
    let mut skipped = 0;
    for k in 0..sched.count {
        let e = sched.eps(start, k);
        offset(x, &fx, e, &mut y);
        if field.eval_into(&y, &mut fy).is_err() {
            skipped += 1;
            continue;
        }
        residuals.push((e, dist(&fy, &fx)));
        limit = Some(fy.clone());
    }
    let diag = if shrinks > 0 {
        format!("eps0 shrunk {shrinks} times; ")
    } else {
        String::new()
    };
    Ok(finish(x, residuals, limit, skipped, sched, diag))
}

/// Germ form: `d_k = |phi'(eps_k) - f(phi(eps_k))|`.
///
/// With `finite_difference` the velocity is taken from central differences
/// of the position with step `eps_k * 1e-4` instead of the velocity
/// expressions.
pub fn probe_germ<F: VectorField + ?Sized>(
    field: &F,
    germ: &GermCurveDef,
    x: &[f64],
    sched: &ProbeSchedule,
    finite_difference: bool,
) -> Result<ProbeReport, ProbeError> {
    sched.validate()?;
    check_dim(field, x)?;
    if germ.dim() != x.len() {
        return Err(ProbeError::Dim {
            expected: x.len(),
            got: germ.dim(),
        });
    }
    let fx = field.eval(x).map_err(ProbeError::Base)?;
    let p0 = germ.position_at(0.0, x);
    if dist(&p0, x) > 1e-9 {
        return Err(ProbeError::GermMismatch(format!(
            "phi(0) = {p0:?} but x = {x:?}"
        )));
    }
    let v0 = germ.velocity_at(0.0, x);
    if dist(&v0, &fx) > 1e-9 {
        return Err(ProbeError::GermMismatch(format!(
            "phi'(0) = {v0:?} but f(x) = {fx:?}"
        )));
    }
    let velocity = |e: f64| -> Vec<f64> {
        if finite_difference {
            let h = e * 1e-4;
            let a = germ.position_at(e + h, x);
            let b = germ.position_at(e - h, x);
            a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        } else {
            germ.velocity_at(e, x)
        }
    };
    let n = x.len();
    let mut fy = vec![0.0; n];
    let mut start = None;
    for s in 0..=MAX_SHRINKS {
        let e = sched.eps0 * sched.ratio.powi(s);
        if e < germ.eps_max && field.eval_into(&germ.position_at(e, x), &mut fy).is_ok() {
            start = Some((e, s));
            break;
        }
    }
    let Some((start, shrinks)) = start else {
        return Ok(ProbeReport {
            point: x.to_vec(),
            residuals: Vec::new(),
            verdict: Verdict::Inconclusive,
            limit_estimate: None,
            diagnostics: "no admissible eps along the germ curve".into(),
        });
    };
    let mut residuals = Vec::with_capacity(sched.count);
    let mut limit = None;
    let mut skipped = 0;
    for k in 0..sched.count {
        let e = sched.eps(start, k);
        let y = germ.position_at(e, x);
        if field.eval_into(&y, &mut fy).is_err() {
            skipped += 1;
            continue;
        }
        residuals.push((e, dist(&velocity(e), &fy)));
        limit = Some(fy.clone());
    }
    let diag = if shrinks > 0 {
        format!("eps0 shrunk {shrinks} times; ")
    } else {
        String::new()
    };
    Ok(finish(x, residuals, limit, skipped, sched, diag))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Directions on the circle (2-D) or Fibonacci sphere (3-D).
    pub n_dirs: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub n_speeds: usize,
    /// Accept the equilibrium extension `f(x) = 0` when no moving one fits.
    pub allow_equilibrium: bool,
}

impl FitOptions {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            n_dirs: if dim == 3 { 512 } else { 64 },
            s_min: 0.05,
            s_max: 20.0,
            n_speeds: 24,
            allow_equilibrium: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionCandidate {
    pub direction: Vec<f64>,
    pub speed: f64,
    /// The proposed value `f(x) = speed * direction`.
    pub velocity: Vec<f64>,
    pub tail_residual: f64,
    pub equilibrium: bool,
    pub direction_index: usize,
    pub speed_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FitOutcome {
    Extension(ExtensionCandidate),
    NoExtensionFound { best: Option<ExtensionCandidate> },
}

fn circle_dirs(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

pub(crate) fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|c| c / n).collect()
}

/// Directions around `e` at angular offsets `spacing/2` and `spacing/4`.
fn refinement_dirs(e: &[f64], spacing: f64) -> Vec<Vec<f64>> {
    let offsets = [spacing / 2.0, spacing / 4.0];
    let mut out = Vec::new();
    if e.len() == 2 {
        let base = e[1].atan2(e[0]);
        for a in offsets {
            for s in [-1.0, 1.0] {
                let t = base + s * a;
                out.push(vec![t.cos(), t.sin()]);
            }
        }
    } else {
        // Tangent basis at e.
        let helper = if e[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let dot: f64 = helper.iter().zip(e).map(|(a, b)| a * b).sum();
        let u = normalize(helper.iter().zip(e).map(|(h, c)| h - dot * c).collect());
        let w = vec![
            e[1] * u[2] - e[2] * u[1],
            e[2] * u[0] - e[0] * u[2],
            e[0] * u[1] - e[1] * u[0],
        ];
        for a in offsets {
            for t in [&u, &w] {
                for s in [-1.0, 1.0] {
                    let k = s * a.tan();
                    out.push(normalize(
                        e.iter().zip(t.iter()).map(|(c, d)| c + k * d).collect(),
                    ));
                }
            }
        }
    }
    out
}

struct TailSampler<'a, F: ?Sized> {
    field: &'a F,
    x: &'a [f64],
    eps: Vec<f64>,
}

impl<F: VectorField + ?Sized> TailSampler<'_, F> {
    /// Max over tail samples of `|f(x + eps s e) - s e|` and the mean
    /// projection `<f, e>` (`None` when every sample is undefined).
    fn residual(&self, e: &[f64], s: f64) -> Option<(f64, f64)> {
        let n = self.x.len();
        let mut y = vec![0.0; n];
        let mut fy = vec![0.0; n];
        let (mut worst, mut proj, mut hits) = (0.0f64, 0.0, 0usize);
        for &eps in &self.eps {
            offset(self.x, e, eps * s, &mut y);
            if self.field.eval_into(&y, &mut fy).is_err() {
                continue;
            }
            let r = fy
                .iter()
                .zip(e)
                .map(|(f, d)| (f - s * d) * (f - s * d))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
            proj += fy.iter().zip(e).map(|(f, d)| f * d).sum::<f64>();
            hits += 1;
        }
        (hits > 0).then(|| (worst, proj / hits as f64))
    }

    /// Best speed for one direction: geometric grid, then projection steps.
    fn best_for(&self, e: &[f64], speeds: &[f64], di: usize) -> Option<ExtensionCandidate> {
        let mut best: Option<ExtensionCandidate> = None;
        let consider = |s: f64, si: usize, r: f64, best: &mut Option<ExtensionCandidate>| {
            if best.as_ref().is_none_or(|b| r < b.tail_residual - 1e-12) {
                *best = Some(ExtensionCandidate {
                    direction: e.to_vec(),
                    speed: s,
                    velocity: e.iter().map(|c| c * s).collect(),
                    tail_residual: r,
                    equilibrium: false,
                    direction_index: di,
                    speed_index: si,
                });
            }
        };
        let mut proj_at_best = None;
        for (si, &s) in speeds.iter().enumerate() {
            if let Some((r, p)) = self.residual(e, s) {
                let before = best.as_ref().map(|b| b.tail_residual);
                consider(s, si, r, &mut best);
                if best.as_ref().map(|b| b.tail_residual) != before {
                    proj_at_best = Some(p);
                }
            }
        }
        let mut proj = proj_at_best?;
        for it in 0..3 {
            if !(proj > 0.0) {
                break;
            }
            let Some((r, p)) = self.residual(e, proj) else {
                break;
            };
            consider(proj, speeds.len() + it, r, &mut best);
            proj = p;
        }
        best
    }
}

fn better(a: &ExtensionCandidate, b: &ExtensionCandidate) -> bool {
    a.tail_residual < b.tail_residual - 1e-12
}

/// Searches straight germs `x + eps s e` whose sampled field limit matches the
/// velocity `s e`, proposing `f(x) = s e` as a self-continuous value.
pub fn fit_germ_direction<F: VectorField + ?Sized>(
    field: &F,
    x: &[f64],
    opts: &FitOptions,
    sched: &ProbeSchedule,
) -> Result<FitOutcome, ProbeError> {
    sched.validate()?;
    check_dim(field, x)?;
    let dim = x.len();
    if dim != 2 && dim != 3 {
        return Err(ProbeError::UnsupportedDim(dim));
    }
    let dirs = if dim == 2 {
        circle_dirs(opts.n_dirs.max(1))
    } else {
        fibonacci_sphere(opts.n_dirs.max(1))
    };
    let spacing = if dim == 2 {
        std::f64::consts::TAU / dirs.len() as f64
    } else {
        (4.0 * std::f64::consts::PI / dirs.len() as f64).sqrt()
    };
    let ns = opts.n_speeds.max(1);
    let speeds: Vec<f64> = (0..ns)
        .map(|i| {
            if ns == 1 {
                opts.s_min
            } else {
                opts.s_min * (opts.s_max / opts.s_min).powf(i as f64 / (ns - 1) as f64)
            }
        })
        .collect();
    let tail_from = sched.count - (sched.count / 4).max(1);
    let sampler = TailSampler {
        field,
        x,
        eps: (tail_from..sched.count)
            .map(|k| sched.eps(sched.eps0, k))
            .collect(),
    };
    let per_dir: Vec<Option<ExtensionCandidate>> = dirs
        .par_iter()
        .enumerate()
        .map(|(di, e)| sampler.best_for(e, &speeds, di))
        .collect();
    let mut best: Option<ExtensionCandidate> = None;
    for c in per_dir.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| better(&c, b)) {
            best = Some(c);
        }
    }
    if best.is_none() {
        return Ok(FitOutcome::NoExtensionFound { best: None });
    }
    let centre = best.as_ref().unwrap().direction.clone();
    for (k, e) in refinement_dirs(&centre, spacing).into_iter().enumerate() {
        if let Some(c) = sampler.best_for(&e, &speeds, dirs.len() + k) {
            if better(&c, best.as_ref().unwrap()) {
                best = Some(c);
            }
        }
    }
    let best = best.unwrap();
    if best.tail_residual <= sched.tol * 10.0 {
        return Ok(FitOutcome::Extension(best));
    }
    if opts.allow_equilibrium {
        return Ok(FitOutcome::Extension(ExtensionCandidate {
            direction: vec![0.0; dim],
            speed: 0.0,
            velocity: vec![0.0; dim],
            tail_residual: 0.0,
            equilibrium: true,
            direction_index: usize::MAX,
            speed_index: usize::MAX,
        }));
    }
    Ok(FitOutcome::NoExtensionFound { best: Some(best) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProbe {
    pub point: Vec<f64>,
    /// `None` when the field is undefined at the node.
    pub verdict: Option<Verdict>,
    pub note: String,
}

/// Ray probes at every node of a regular grid over `[lo, hi]`; nodes are
/// ordered with the last axis varying fastest.
pub fn probe_grid<F: VectorField + ?Sized>(
    field: &F,
    lo: &[f64],
    hi: &[f64],
    resolution: &[usize],
    sched: &ProbeSchedule,
) -> Result<Vec<GridProbe>, ProbeError> {
    sched.validate()?;
    let n = field.dim();
    if lo.len() != n || hi.len() != n || resolution.len() != n {
        return Err(ProbeError::Dim {
            expected: n,
            got: lo.len().min(hi.len()).min(resolution.len()),
        });
    }
    if resolution.iter().any(|&r| r < 2) {
        return Err(ProbeError::Schedule(
            "grid resolution must be >= 2 per axis".into(),
        ));
    }
    let total: usize = resolution.iter().product();
    let nodes: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; n];
            for a in (0..n).rev() {
                let i = idx % resolution[a];
                idx /= resolution[a];
                let r = resolution[a] - 1;
                p[a] = if i == r {
                    hi[a]
                } else {
                    lo[a] + (hi[a] - lo[a]) * i as f64 / r as f64
                };
            }
            p
        })
        .collect();
    Ok(nodes
        .into_par_iter()
        .map(|p| match probe_ray(field, &p, sched) {
            Ok(r) => GridProbe {
                point: p,
                verdict: Some(r.verdict),
                note: r.diagnostics,
            },
            Err(e) => GridProbe {
                point: p,
                verdict: None,
                note: e.to_string(),
            },
        })
        .collect())
}
