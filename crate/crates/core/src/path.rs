//! Piecewise-linear paths and the discretized error functional
//! `E(y) = ∫ |y'(t) - f(y(t))| dt`.
//!
//! Each segment has a constant velocity, so only `f` needs sampling. The base
//! rule is composite midpoint, which never samples a node: nodes are where
//! paths are deliberately placed on discontinuity manifolds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{dist, norm, FieldError, GrowthBound, VectorField, GROWTH_ROUNDING};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("a path needs at least two nodes")]
    TooFewNodes,
    #[error("node times must be strictly increasing (node {0})")]
    NotIncreasing(usize),
    #[error("non-finite coordinate at node {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },
    #[error("time {t} is outside [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },
    #[error(
        "junction mismatch: first path ends at ({t0}, {x0:?}), second starts at ({t1}, {x1:?})"
    )]
    JunctionMismatch {
        t0: f64,
        x0: Vec<f64>,
        t1: f64,
        x1: Vec<f64>,
    },
    #[error("time {0} coincides with an existing node")]
    DuplicateTime(f64),
    #[error("rescaling needs a path starting at t = 0 and a positive target horizon")]
    BadRescale,
    #[error("field evaluation failed at quadrature sample t = {t}: {source}")]
    Sample {
        t: f64,
        #[source]
        source: FieldError,
    },
    #[error("path csv: {0}")]
    Csv(String),
}

/// Piecewise-linear path through nodes `(t_i, x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dim: usize,
    times: Vec<f64>,
    coords: Vec<f64>,
}

impl Path {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self, PathError> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(PathError::Dim {
                expected: dim,
                got: p.len(),
            });
        }
        if times.len() != points.len() {
            return Err(PathError::Dim {
                expected: times.len(),
                got: points.len(),
            });
        }
        Self::from_flat(dim, times, points.concat())
    }

    /// Builds a path from row-major coordinates (`coords.len() == times.len() * dim`).
    pub fn from_flat(dim: usize, times: Vec<f64>, coords: Vec<f64>) -> Result<Self, PathError> {
        if times.len() < 2 {
            return Err(PathError::TooFewNodes);
        }
        if dim == 0 || coords.len() != times.len() * dim {
            return Err(PathError::Dim {
                expected: times.len() * dim.max(1),
                got: coords.len(),
            });
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) || !times[i].is_finite() || !times[0].is_finite() {
                return Err(PathError::NotIncreasing(i));
            }
        }
        if let Some(k) = coords.iter().position(|c| !c.is_finite()) {
            return Err(PathError::NonFinite(k / dim));
        }
        Ok(Self { dim, times, coords })
    }

    /// The two-node path from `x0` at `t0` to `x1` at `t1`.
    pub fn linear(t0: f64, x0: &[f64], t1: f64, x1: &[f64]) -> Result<Self, PathError> {
        Self::new(vec![t0, t1], vec![x0.to_vec(), x1.to_vec()])
    }

    /// Samples `g(t)` at `n` uniform times on `[t0, t1]`.
    pub fn sample<G: FnMut(f64) -> Vec<f64>>(
        t0: f64,
        t1: f64,
        n: usize,
        mut g: G,
    ) -> Result<Self, PathError> {
        let times = uniform_times(t0, t1, n);
        let points = times.iter().map(|&t| g(t)).collect();
        Self::new(times, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn segments(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn start(&self) -> &[f64] {
        self.point(0)
    }

    pub fn end(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn horizon(&self) -> f64 {
        self.t_end() - self.t0()
    }

    pub fn velocity(&self, seg: usize) -> Vec<f64> {
        let dt = self.times[seg + 1] - self.times[seg];
        self.point(seg + 1)
            .iter()
            .zip(self.point(seg))
            .map(|(b, a)| (b - a) / dt)
            .collect()
    }

    /// Affine interpolation between the bracketing nodes.
    pub fn eval_at(&self, t: f64) -> Result<Vec<f64>, PathError> {
        let (t0, t1) = (self.t0(), self.t_end());
        if !(t >= t0 && t <= t1) {
            return Err(PathError::OutOfRange { t, t0, t1 });
        }
        let k = match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => return Ok(self.point(i).to_vec()),
            Err(i) => i - 1,
        };
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        Ok(lerp(self.point(k), self.point(k + 1), s))
    }

    /// Joins two paths sharing a bitwise-equal junction node.
    pub fn concat(&self, q: &Path) -> Result<Path, PathError> {
        if q.dim != self.dim {
            return Err(PathError::Dim {
                expected: self.dim,
                got: q.dim,
            });
        }
        if self.t_end() != q.t0() || self.end() != q.start() {
            return Err(PathError::JunctionMismatch {
                t0: self.t_end(),
                x0: self.end().to_vec(),
                t1: q.t0(),
                x1: q.start().to_vec(),
            });
        }
        let mut times = self.times.clone();
        times.extend_from_slice(&q.times[1..]);
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&q.coords[q.dim..]);
        Path::from_flat(self.dim, times, coords)
    }

    /// Inserts a node at `t` without changing the path as a function.
    pub fn insert_node(&self, t: f64) -> Result<Path, PathError> {
        let (t0, t1) = (self.t0(), self.t_end());
        if !(t > t0 && t < t1) {
            return Err(PathError::OutOfRange { t, t0, t1 });
        }
        let k = match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(_) => return Err(PathError::DuplicateTime(t)),
            Err(i) => i,
        };
        let x = self.eval_at(t)?;
        let mut times = self.times.clone();
        times.insert(k, t);
        let mut coords = self.coords.clone();
        let at = k * self.dim;
        coords.splice(at..at, x);
        Path::from_flat(self.dim, times, coords)
    }

    /// Maps a path on `[0, r]` to `[0, s]` by `y(τ) = x(rτ/s)`.
    pub fn rescale(&self, s: f64) -> Result<Path, PathError> {
        if self.t0() != 0.0 || !(s > 0.0) || !s.is_finite() {
            return Err(PathError::BadRescale);
        }
        let r = self.t_end();
        if s == r {
            return Ok(self.clone());
        }
        let mut times: Vec<f64> = self.times.iter().map(|t| t * s / r).collect();
        *times.last_mut().unwrap() = s;
        Path::from_flat(self.dim, times, self.coords.clone())
    }

    /// Sup-norm distance, exact for two polylines on the same interval.
    pub fn sup_distance(&self, other: &Path) -> Result<f64, PathError> {
        let mut ts: Vec<f64> = self.times.iter().chain(&other.times).copied().collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let lo = self.t0().max(other.t0());
        let hi = self.t_end().min(other.t_end());
        let mut best: f64 = 0.0;
        for t in ts.into_iter().filter(|t| *t >= lo && *t <= hi) {
            best = best.max(dist(&self.eval_at(t)?, &other.eval_at(t)?));
        }
        Ok(best)
    }

    /// Largest `|x(t)|` over nodes and segment midpoints.
    pub fn max_norm(&self) -> f64 {
        let mut m = self.points().map(norm).fold(0.0, f64::max);
        for k in 0..self.segments() {
            m = m.max(norm(&lerp(self.point(k), self.point(k + 1), 0.5)));
        }
        m
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.dim {
            write!(out, ",x{i}").unwrap();
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            write!(out, "{t:.16e}").unwrap();
            for c in self.point(k) {
                write!(out, ",{c:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Path, PathError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| PathError::Csv("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let dim = cols.len().saturating_sub(1);
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=dim).map(|i| format!("x{i}")))
            .collect();
        if dim == 0 || cols != expected {
            return Err(PathError::Csv(format!("bad header '{header}'")));
        }
        let mut times = Vec::new();
        let mut coords = Vec::new();
        for (row, line) in lines.enumerate() {
            let vals: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse()).collect();
            let vals = vals.map_err(|e| PathError::Csv(format!("row {}: {e}", row + 1)))?;
            if vals.len() != dim + 1 {
                return Err(PathError::Csv(format!(
                    "row {}: expected {} columns, found {}",
                    row + 1,
                    dim + 1,
                    vals.len()
                )));
            }
            times.push(vals[0]);
            coords.extend_from_slice(&vals[1..]);
        }
        Path::from_flat(dim, times, coords)
    }
}

pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut times: Vec<f64> = (0..n)
        .map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64)
        .collect();
    times[n - 1] = t1;
    times
}

/// `a + s (b - a)` componentwise; exact when `a_i == b_i`.
pub(crate) fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a + s * (b - a)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub base_subsamples: usize,
    pub adaptive: bool,
    pub max_depth: u32,
    pub jump_threshold: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            base_subsamples: 16,
            adaptive: true,
            max_depth: 6,
            jump_threshold: 0.5,
        }
    }
}

impl QuadratureSpec {
    pub fn fixed(base_subsamples: usize) -> Self {
        Self {
            base_subsamples,
            adaptive: false,
            ..Self::default()
        }
    }
}

/// Per-segment contribution to `E` with bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentError {
    pub value: f64,
    pub evals: usize,
    /// Deepest bisection level reached (0 when no panel was refined).
    pub depth: u32,
}

struct SegmentIntegrator<'a, F: ?Sized> {
    field: &'a F,
    xa: &'a [f64],
    xb: &'a [f64],
    ta: f64,
    dt: f64,
    v: Vec<f64>,
    vnorm: f64,
    quad: &'a QuadratureSpec,
    x: Vec<f64>,
    evals: usize,
    depth: u32,
}

impl<F: VectorField + ?Sized> SegmentIntegrator<'_, F> {
    fn sample(&mut self, s: f64, out: &mut [f64]) -> Result<(), PathError> {
        for ((x, a), b) in self.x.iter_mut().zip(self.xa).zip(self.xb) {
            *x = a + s * (b - a);
        }
        self.evals += 1;
        self.field
            .eval_into(&self.x, out)
            .map_err(|source| PathError::Sample {
                t: self.ta + s * self.dt,
                source,
            })
    }

    fn residual(&self, f: &[f64]) -> f64 {
        self.v
            .iter()
            .zip(f)
            .map(|(v, f)| (v - f) * (v - f))
            .sum::<f64>()
            .sqrt()
    }

    fn jump(&self, a: &[f64], b: &[f64]) -> bool {
        dist(a, b) > self.quad.jump_threshold * (1.0 + self.vnorm)
    }

    fn jumps(&self, f: &[f64], left: Option<&[f64]>, right: Option<&[f64]>) -> bool {
        left.is_some_and(|l| self.jump(f, l)) || right.is_some_and(|r| self.jump(f, r))
    }

    /// Panel `[lo, hi]` (in segment fraction) with midpoint value `fm`,
    /// flanked by the midpoint values of its neighbours.
    fn refine(
        &mut self,
        lo: f64,
        hi: f64,
        fm: &[f64],
        left: Option<&[f64]>,
        right: Option<&[f64]>,
        depth: u32,
    ) -> Result<f64, PathError> {
        let width = (hi - lo) * self.dt;
        self.depth = self.depth.max(depth);
        if depth >= self.quad.max_depth {
            return Ok(width * self.residual(fm));
        }
        let n = fm.len();
        let mid = 0.5 * (lo + hi);
        let mut fl = vec![0.0; n];
        let mut fr = vec![0.0; n];
        self.sample(0.5 * (lo + mid), &mut fl)?;
        self.sample(0.5 * (mid + hi), &mut fr)?;
        self.depth = self.depth.max(depth + 1);
        let l = if self.jumps(&fl, left, Some(&fr)) {
            self.refine(lo, mid, &fl, left, Some(&fr), depth + 1)?
        } else {
            0.5 * width * self.residual(&fl)
        };
        let r = if self.jumps(&fr, Some(&fl), right) {
            self.refine(mid, hi, &fr, Some(&fl), right, depth + 1)?
        } else {
            0.5 * width * self.residual(&fr)
        };
        Ok(l + r)
    }
}

/// Integrates `|v - f(x(t))|` over one constant-velocity segment.
pub fn segment_error<F: VectorField + ?Sized>(
    field: &F,
    ta: f64,
    xa: &[f64],
    tb: f64,
    xb: &[f64],
    quad: &QuadratureSpec,
) -> Result<SegmentError, PathError> {
    let dt = tb - ta;
    let v: Vec<f64> = xb.iter().zip(xa).map(|(b, a)| (b - a) / dt).collect();
    let n = xa.len();
    let mut it = SegmentIntegrator {
        field,
        xa,
        xb,
        ta,
        dt,
        vnorm: norm(&v),
        v,
        quad,
        x: vec![0.0; n],
        evals: 0,
        depth: 0,
    };
    let m = quad.base_subsamples.max(1);
    let h = 1.0 / m as f64;
    let mut fs = vec![0.0; m * n];
    for k in 0..m {
        let s = (k as f64 + 0.5) * h;
        it.sample(s, &mut fs[k * n..(k + 1) * n])?;
    }
    let mut value = 0.0;
    for k in 0..m {
        let fk = &fs[k * n..(k + 1) * n];
        let left = (k > 0).then(|| &fs[(k - 1) * n..k * n]);
        let right = (k + 1 < m).then(|| &fs[(k + 1) * n..(k + 2) * n]);
        let rough = quad.adaptive && quad.max_depth > 0 && it.jumps(fk, left, right);
        let lo = k as f64 * h;
        let hi = if k + 1 == m { 1.0 } else { (k + 1) as f64 * h };
        value += if rough {
            it.refine(lo, hi, fk, left, right, 0)?
        } else {
            (hi - lo) * dt * it.residual(fk)
        };
    }
    Ok(SegmentError {
        value,
        evals: it.evals,
        depth: it.depth,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub value: f64,
    pub per_segment: Vec<f64>,
    pub depth: Vec<u32>,
    pub evals: usize,
}

/// The discretized error functional, summed over segments in index order.
pub fn error_functional<F: VectorField + ?Sized>(
    field: &F,
    p: &Path,
    quad: &QuadratureSpec,
) -> Result<ErrorReport, PathError> {
    if field.dim() != p.dim() {
        return Err(PathError::Dim {
            expected: field.dim(),
            got: p.dim(),
        });
    }
    let mut per_segment = Vec::with_capacity(p.segments());
    let mut depth = Vec::with_capacity(p.segments());
    let mut evals = 0;
    for k in 0..p.segments() {
        let s = segment_error(
            field,
            p.times[k],
            p.point(k),
            p.times[k + 1],
            p.point(k + 1),
            quad,
        )?;
        per_segment.push(s.value);
        depth.push(s.depth);
        evals += s.evals;
    }
    Ok(ErrorReport {
        value: per_segment.iter().sum(),
        per_segment,
        depth,
        evals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub margin: f64,
    pub bound: f64,
    pub max_norm: f64,
}

/// Checks `|y(t)| <= (T c0 + |x0| + E) e^{c1 T}` at nodes and segment midpoints,
/// allowing a `GROWTH_ROUNDING` relative excess. `margin` is the raw difference.
pub fn apriori_bound_check(p: &Path, bound: GrowthBound, e_value: f64) -> BoundCheck {
    let horizon = p.horizon();
    let b = (horizon * bound.c0 + norm(p.start()) + e_value) * (bound.c1 * horizon).exp();
    let max_norm = p.max_norm();
    BoundCheck {
        // Equality cases (radial motion at full speed) round either way.
        holds: max_norm <= b + GROWTH_ROUNDING * b,
        margin: b - max_norm,
        bound: b,
        max_norm,
    }
}
