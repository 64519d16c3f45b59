//! Derivative-free minimization of the discretized error functional over the
//! node positions of a polyline with a fixed time grid.
//!
//! The search moves one node coordinate at a time, so only the two segments
//! touching that node are re-integrated per trial. Restarts run in parallel
//! with independent seeded generators and are reduced by
//! `(e_value, restart index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::expr::{Expr, Predicate, Scope};
use crate::field::{dist, VectorField};
use crate::germstep::{integrate_with, StepConfig, StepError, StepMode};
use crate::path::{
    error_functional, segment_error, uniform_times, Path, PathError, QuadratureSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error("initialization failed: {0}")]
    Init(String),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("every restart failed; first failure: {0}")]
    AllRestartsFailed(String),
}

/// Initial path for restart 0; jittered copies seed the other restarts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Straight line to `guess`, to the fixed end point, or to `x0 + T f(x0)`.
    LinearToGuess(Option<Vec<f64>>),
    /// Plain germ stepping with step `h` (default: an eighth of the node spacing).
    GermPlain { h: Option<f64> },
    /// Snap-mode germ stepping; snap times are added to the node grid.
    GermSnap {
        h: Option<f64>,
        manifold: Predicate,
        tol: f64,
    },
    /// An explicit path on `[0, T]`; its node times become the grid.
    Path(Path),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptConfig {
    pub n_nodes: usize,
    /// Field evaluations for the whole run, split evenly across restarts.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitSpec,
    /// Initial pattern step; `None` means `0.1 * scale` with `scale` the
    /// diameter of the initial path (or 1 for a point).
    pub step0: Option<f64>,
    pub shrink: f64,
    pub min_step: f64,
    /// Standard deviation of restart jitter relative to `scale`.
    pub jitter: f64,
    pub quad: QuadratureSpec,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            n_nodes: 64,
            budget: 2_000_000,
            restarts: 8,
            seed: 0,
            init: InitSpec::LinearToGuess(None),
            step0: None,
            shrink: 0.5,
            min_step: 1e-9,
            jitter: 0.05,
            quad: QuadratureSpec::default(),
        }
    }
}

impl OptConfig {
    fn validate(&self) -> Result<(), OptError> {
        let bad = |m: &str| Err(OptError::Config(m.into()));
        if self.n_nodes < 2 {
            return bad("n_nodes must be at least 2");
        }
        if self.budget == 0 {
            return bad("budget must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.min_step > 0.0) {
            return bad("min_step must be positive");
        }
        if let Some(s) = self.step0 {
            if !(s > 0.0) {
                return bad("step0 must be positive");
            }
        }
        if !(self.jitter >= 0.0) {
            return bad("jitter must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Budget,
    MinStep,
    /// The error reached exactly zero; no move can improve it.
    ZeroError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartSummary {
    pub restart: usize,
    /// `None` when the restart's initial path could not be evaluated.
    pub e_value: Option<f64>,
    pub evals: usize,
    pub terminated_by: Option<Termination>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub path: Path,
    pub e_value: f64,
    /// `(evaluations, best E)` of the winning restart.
    pub trace: Vec<(usize, f64)>,
    pub restarts_summary: Vec<RestartSummary>,
    pub terminated_by: Termination,
    pub best_restart: usize,
}

impl OptResult {
    pub fn to_json(&self, path_file: Option<&str>) -> Value {
        json!({
            "e_value": self.e_value,
            "terminated_by": self.terminated_by,
            "trace": self.trace,
            "restarts_summary": self.restarts_summary,
            "best_restart": self.best_restart,
            "path_file": path_file,
        })
    }
}

/// Mutable search state over the free node coordinates.
pub struct SearchState<'a> {
    field: &'a dyn VectorField,
    quad: QuadratureSpec,
    dim: usize,
    times: Vec<f64>,
    coords: Vec<f64>,
    first_free: usize,
    end_free: usize,
    seg: Vec<f64>,
    evals: usize,
    budget: usize,
    trace: Vec<(usize, f64)>,
}

impl<'a> SearchState<'a> {
    fn new(
        field: &'a dyn VectorField,
        quad: QuadratureSpec,
        init: &Path,
        fixed_end: bool,
        budget: usize,
    ) -> Result<Self, PathError> {
        let rep = error_functional(field, init, &quad)?;
        let n = init.len();
        let mut s = Self {
            field,
            quad,
            dim: init.dim(),
            times: init.times().to_vec(),
            coords: init.coords().to_vec(),
            first_free: 1,
            end_free: if fixed_end { n - 1 } else { n },
            seg: rep.per_segment,
            evals: rep.evals,
            budget,
            trace: Vec::new(),
        };
        s.record();
        Ok(s)
    }

    pub fn n_vars(&self) -> usize {
        (self.end_free - self.first_free) * self.dim
    }

    pub fn total(&self) -> f64 {
        self.seg.iter().sum()
    }

    pub fn evals(&self) -> usize {
        self.evals
    }

    pub fn exhausted(&self) -> bool {
        self.evals >= self.budget
    }

    fn record(&mut self) {
        let e = self.total();
        if self.trace.last().is_none_or(|&(_, b)| e < b) {
            self.trace.push((self.evals, e));
        }
    }

    fn segment(&mut self, k: usize) -> f64 {
        let d = self.dim;
        match segment_error(
            self.field,
            self.times[k],
            &self.coords[k * d..(k + 1) * d],
            self.times[k + 1],
            &self.coords[(k + 1) * d..(k + 2) * d],
            &self.quad,
        ) {
            Ok(s) => {
                self.evals += s.evals;
                s.value
            }
            Err(_) => {
                self.evals += self.quad.base_subsamples;
                f64::INFINITY
            }
        }
    }

    /// Moves free variable `var` by `delta` and keeps the move only if the
    /// error of the two adjacent segments strictly decreases.
    pub fn try_move(&mut self, var: usize, delta: f64) -> bool {
        let node = self.first_free + var / self.dim;
        let idx = node * self.dim + var % self.dim;
        let old = self.coords[idx];
        let new = old + delta;
        if new == old || !new.is_finite() {
            return false;
        }
        let has_right = node + 1 < self.times.len();
        let before = self.seg[node - 1] + if has_right { self.seg[node] } else { 0.0 };
        self.coords[idx] = new;
        let left = self.segment(node - 1);
        let right = if has_right { self.segment(node) } else { 0.0 };
        if left + right < before {
            self.seg[node - 1] = left;
            if has_right {
                self.seg[node] = right;
            }
            true
        } else {
            self.coords[idx] = old;
            false
        }
    }

    fn path(&self) -> Path {
        Path::from_flat(self.dim, self.times.clone(), self.coords.clone())
            .expect("search keeps a valid path")
    }
}

/// A search strategy over [`SearchState`].
pub trait Strategy: Sync {
    fn run(&self, state: &mut SearchState<'_>, step0: f64) -> Termination;
}

/// Compass search: cycle through coordinates trying `+step` then `-step`,
/// repeat a successful move while it keeps improving, and shrink the step
/// after a full cycle without success.
#[derive(Debug, Clone, Copy)]
pub struct Compass {
    pub shrink: f64,
    pub min_step: f64,
}

impl Strategy for Compass {
    fn run(&self, s: &mut SearchState<'_>, step0: f64) -> Termination {
        let mut step = step0;
        loop {
            if s.total() == 0.0 {
                return Termination::ZeroError;
            }
            if step < self.min_step {
                return Termination::MinStep;
            }
            let mut improved = false;
            for var in 0..s.n_vars() {
                for dir in [1.0, -1.0] {
                    if s.exhausted() {
                        s.record();
                        return Termination::Budget;
                    }
                    if s.try_move(var, dir * step) {
                        improved = true;
                        let mut repeats = 0;
                        while repeats < 4 && !s.exhausted() && s.try_move(var, dir * step) {
                            repeats += 1;
                        }
                        break;
                    }
                }
            }
            s.record();
            if !improved {
                step *= self.shrink;
            }
        }
    }
}

/// Plain germ stepping from the start of `base` up to `frac` of the horizon,
/// then a straight segment to `z`, resampled on the node times of `base`.
fn germ_then_segment(field: &dyn VectorField, base: &Path, z: &[f64], frac: f64) -> Option<Path> {
    let horizon = base.horizon();
    let spacing = horizon / (base.len() - 1) as f64;
    let cfg = StepConfig::plain((spacing / 8.0).min(frac * horizon), frac * horizon);
    let (free, _) = integrate_with(field, base.start(), &cfg, &QuadratureSpec::fixed(1)).ok()?;
    let seg = Path::linear(free.t_end(), free.end(), horizon, z).ok()?;
    let joined = free.concat(&seg).ok()?;
    Path::new(base.times().to_vec(), resample(&joined, base.times())).ok()
}

fn diameter(p: &Path) -> f64 {
    let mut d: f64 = 0.0;
    let start = p.start();
    for x in p.points() {
        d = d.max(dist(x, start));
    }
    d
}

/// Merges event times into a grid: an event within `1e-9` of a grid spacing
/// replaces the grid time, otherwise it is inserted.
fn merge_events(mut grid: Vec<f64>, events: &[f64]) -> Vec<f64> {
    let spacing = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    let last = grid.len() - 1;
    for &e in events {
        if !(e > grid[0] && e < grid[last]) {
            continue;
        }
        match grid.iter().position(|g| (g - e).abs() <= 1e-9 * spacing) {
            Some(0) => {}
            Some(i) if i == grid.len() - 1 => {}
            Some(i) => grid[i] = e,
            None => grid.push(e),
        }
    }
    grid.sort_by(f64::total_cmp);
    grid
}

fn resample(p: &Path, grid: &[f64]) -> Vec<Vec<f64>> {
    grid.iter()
        .map(|&t| {
            let t = t.clamp(p.t0(), p.t_end());
            p.eval_at(t).expect("clamped into range")
        })
        .collect()
}

/// Builds the initial path on the node grid.
fn build_init<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    horizon: f64,
    end: Option<&[f64]>,
    cfg: &OptConfig,
) -> Result<Path, OptError> {
    let grid = uniform_times(0.0, horizon, cfg.n_nodes);
    let spacing = horizon / (cfg.n_nodes - 1) as f64;
    let germ = |mode: StepMode, h: Option<f64>| -> Result<(Path, Vec<f64>), OptError> {
        let h = h.unwrap_or(spacing / 8.0).min(horizon);
        let cfg_step = StepConfig {
            h,
            mode,
            t_end: horizon,
        };
        let (p, rep) = integrate_with(field, x0, &cfg_step, &QuadratureSpec::fixed(1))?;
        Ok((p, rep.snap_times))
    };
    let (grid, mut points) = match &cfg.init {
        InitSpec::LinearToGuess(guess) => {
            let target = match (end, guess) {
                (Some(z), _) => z.to_vec(),
                (None, Some(g)) => g.clone(),
                (None, None) => {
                    let f0 = field
                        .eval(x0)
                        .map_err(|e| OptError::Init(format!("f(x0): {e}")))?;
                    x0.iter().zip(&f0).map(|(a, f)| a + horizon * f).collect()
                }
            };
            if target.len() != x0.len() {
                return Err(OptError::Config("guess has the wrong dimension".into()));
            }
            let line = Path::linear(0.0, x0, horizon, &target)?;
            let pts = resample(&line, &grid);
            (grid, pts)
        }
        InitSpec::GermPlain { h } => {
            let (p, _) = germ(StepMode::Plain, *h)?;
            let pts = resample(&p, &grid);
            (grid, pts)
        }
        InitSpec::GermSnap { h, manifold, tol } => {
            let (p, events) = germ(
                StepMode::Snap {
                    manifold: manifold.clone(),
                    tol: *tol,
                },
                *h,
            )?;
            let grid = merge_events(grid, &events);
            let pts = resample(&p, &grid);
            (grid, pts)
        }
        InitSpec::Path(p) => {
            if p.dim() != x0.len() || p.t0() != 0.0 || (p.t_end() - horizon).abs() > 1e-12 * horizon
            {
                return Err(OptError::Init(format!(
                    "initial path must span [0, {horizon}] in dimension {}",
                    x0.len()
                )));
            }
            let mut times = p.times().to_vec();
            *times.last_mut().unwrap() = horizon;
            (times, p.points().map(<[f64]>::to_vec).collect())
        }
    };
    points[0] = x0.to_vec();
    if let Some(z) = end {
        // Linear correction so the path ends exactly at z.
        let last = points.len() - 1;
        let miss: Vec<f64> = z.iter().zip(&points[last]).map(|(a, b)| a - b).collect();
        if miss.iter().any(|m| *m != 0.0) {
            for (t, p) in grid.iter().zip(points.iter_mut()).skip(1) {
                let s = t / horizon;
                for (c, m) in p.iter_mut().zip(&miss) {
                    *c += s * m;
                }
            }
        }
        points[last] = z.to_vec();
    }
    Ok(Path::new(grid, points)?)
}

fn jittered(init: &Path, sigma: f64, fixed_end: bool, rng: &mut ChaCha8Rng) -> Path {
    let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let d = init.dim();
    let n = init.len();
    let mut coords = init.coords().to_vec();
    let end = if fixed_end { n - 1 } else { n };
    for c in &mut coords[d..end * d] {
        *c += normal.sample(rng);
    }
    Path::from_flat(d, init.times().to_vec(), coords).expect("jitter keeps a valid path")
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

struct Outcome {
    path: Path,
    e_value: f64,
    trace: Vec<(usize, f64)>,
    evals: usize,
    terminated_by: Termination,
}

fn run_search(
    field: &dyn VectorField,
    init: &Path,
    fixed_end: bool,
    step0: f64,
    per_restart: usize,
    cfg: &OptConfig,
) -> Result<Outcome, PathError> {
    let mut s = SearchState::new(field, cfg.quad, init, fixed_end, per_restart)?;
    let strategy = Compass {
        shrink: cfg.shrink,
        min_step: cfg.min_step,
    };
    let terminated_by = strategy.run(&mut s, step0);
    let e_value = s.total();
    Ok(Outcome {
        path: s.path(),
        e_value,
        trace: s.trace,
        evals: s.evals,
        terminated_by,
    })
}

fn minimize<F: VectorField>(
    field: &F,
    x0: &[f64],
    horizon: f64,
    end: Option<&[f64]>,
    cfg: &OptConfig,
    warm: Option<Path>,
) -> Result<OptResult, OptError> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(OptError::Config("horizon must be positive".into()));
    }
    if field.dim() != x0.len() || end.is_some_and(|z| z.len() != x0.len()) {
        return Err(OptError::Config("dimension mismatch".into()));
    }
    let fixed_end = end.is_some();
    let base = build_init(field, x0, horizon, end, cfg)?;
    let scale = match diameter(&base) {
        d if d > 0.0 => d,
        _ => 1.0,
    };
    let step0 = cfg.step0.unwrap_or(0.1 * scale);
    let per_restart = (cfg.budget / cfg.restarts).max(1);
    let mut seeds: Vec<Path> = Vec::with_capacity(cfg.restarts);
    if let Some(w) = warm {
        seeds.push(w);
    }
    seeds.push(base.clone());
    let field_dyn: &dyn VectorField = field;
    let outcomes: Vec<Result<Outcome, PathError>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let germ_jump = match (end, k % 2) {
                (Some(z), 1) => {
                    germ_then_segment(field_dyn, &base, z, 1.0 - 0.5f64.powi((k as i32 + 1) / 2))
                }
                _ => None,
            };
            let init = match (seeds.get(k), germ_jump) {
                (Some(p), _) => p.clone(),
                (None, Some(p)) => p,
                (None, None) => {
                    let mut rng = restart_rng(cfg.seed, k);
                    jittered(&base, cfg.jitter * scale, fixed_end, &mut rng)
                }
            };
            run_search(field_dyn, &init, fixed_end, step0, per_restart, cfg)
        })
        .collect();
    let mut summary = Vec::with_capacity(outcomes.len());
    let mut best: Option<(usize, Outcome)> = None;
    let mut first_err = None;
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                summary.push(RestartSummary {
                    restart: k,
                    e_value: Some(o.e_value),
                    evals: o.evals,
                    terminated_by: Some(o.terminated_by),
                });
                if best.as_ref().is_none_or(|(_, b)| o.e_value < b.e_value) {
                    best = Some((k, o));
                }
            }
            Err(e) => {
                summary.push(RestartSummary {
                    restart: k,
                    e_value: None,
                    evals: 0,
                    terminated_by: None,
                });
                first_err.get_or_insert(e.to_string());
            }
        }
    }
    let (best_restart, o) =
        best.ok_or_else(|| OptError::AllRestartsFailed(first_err.unwrap_or_default()))?;
    Ok(OptResult {
        path: o.path,
        e_value: o.e_value,
        trace: o.trace,
        restarts_summary: summary,
        terminated_by: o.terminated_by,
        best_restart,
    })
}

/// Estimates `m(T)`: the least error over paths on `[0, T]` starting at `x0`.
pub fn minimize_fixed_start<F: VectorField>(
    field: &F,
    x0: &[f64],
    horizon: f64,
    cfg: &OptConfig,
) -> Result<OptResult, OptError> {
    minimize(field, x0, horizon, None, cfg, None)
}

/// Estimates `G(z)`: the least error over paths from `x0` to `z` on `[0, r]`.
pub fn minimize_two_point<F: VectorField>(
    field: &F,
    x0: &[f64],
    z: &[f64],
    r: f64,
    cfg: &OptConfig,
) -> Result<OptResult, OptError> {
    minimize(field, x0, r, Some(z), cfg, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValuePoint {
    pub r: f64,
    pub m_estimate: f64,
    pub result: OptResult,
}

/// `m(r)` along an increasing grid. Each `r` after the first gets the
/// previous optimum, extended by one plain germ step, as restart 0.
pub fn value_function<F: VectorField>(
    field: &F,
    x0: &[f64],
    r_grid: &[f64],
    cfg: &OptConfig,
) -> Result<Vec<ValuePoint>, OptError> {
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0)) {
        return Err(OptError::Config("r grid must be positive".into()));
    }
    if r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(OptError::Config(
            "r grid must be strictly increasing".into(),
        ));
    }
    let mut out: Vec<ValuePoint> = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let warm = match out.last() {
            Some(prev) => extend_warm(field, &prev.result.path, r, cfg),
            None => None,
        };
        let result = minimize(field, x0, r, None, cfg, warm)?;
        out.push(ValuePoint {
            r,
            m_estimate: result.e_value,
            result,
        });
    }
    Ok(out)
}

/// Previous optimum plus one linear germ step to time `r`, resampled on the
/// grid `r` uses.
fn extend_warm<F: VectorField + ?Sized>(
    field: &F,
    prev: &Path,
    r: f64,
    cfg: &OptConfig,
) -> Option<Path> {
    let end = prev.end();
    let f = field.eval(end).ok()?;
    let dt = r - prev.t_end();
    let next: Vec<f64> = end.iter().zip(&f).map(|(a, v)| a + dt * v).collect();
    let mut times = prev.times().to_vec();
    let mut points: Vec<Vec<f64>> = prev.points().map(<[f64]>::to_vec).collect();
    times.push(r);
    points.push(next);
    let extended = Path::new(times, points).ok()?;
    let grid = match &cfg.init {
        InitSpec::Path(_) => return None,
        _ => uniform_times(0.0, r, cfg.n_nodes),
    };
    let pts = resample(&extended, &grid);
    Path::new(grid, pts).ok()
}

/// A path family `j -> x_j` given by expressions in `t` and `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFamily {
    pub position: Vec<Expr>,
    pub n_nodes: usize,
}

impl PathFamily {
    /// Parses a vector such as `(t, 1/j)`.
    pub fn parse(text: &str, n_nodes: usize) -> Result<Self, crate::expr::ParseError> {
        let t = text.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .unwrap_or(t);
        let position = split_top_level(inner)
            .into_iter()
            .map(Expr::parse)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { position, n_nodes })
    }

    pub fn generate(&self, j: u32, horizon: f64) -> Result<Path, PathError> {
        Path::sample(0.0, horizon, self.n_nodes, |t| {
            let s = Scope {
                x: &[],
                eps: 0.0,
                t,
                j: j as f64,
            };
            self.position.iter().map(|e| e.eval(&s)).collect()
        })
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub tol_e: f64,
    pub tol_sup: f64,
    pub quad: QuadratureSpec,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tol_e: 1e-3,
            tol_sup: 0.05,
            quad: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyEntry {
    pub j: u32,
    #[serde(rename = "E")]
    pub e: f64,
    pub sup_dist: f64,
    pub start_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "failing_clause", rename_all = "snake_case")]
pub enum VerifyVerdict {
    Accepted,
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub per_j: Vec<VerifyEntry>,
    #[serde(flatten)]
    pub verdict: VerifyVerdict,
    pub note: String,
}

const VERIFY_NOTE: &str = "surrogate check: E(x_j) non-increasing with final value <= tol_e, \
     and sup-norm distance <= tol_sup at the largest j; sup-norm convergence replaces weak \
     W^(1,1) convergence and equi-integrability of x_j' is not checked";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("family member j = {j} spans [{t0}, {t1}], candidate spans [{c0}, {c1}]")]
    Horizon {
        j: u32,
        t0: f64,
        t1: f64,
        c0: f64,
        c1: f64,
    },
    #[error("empty j list")]
    Empty,
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Checks a candidate generalized solution against an approximating family.
pub fn verify_generalized<F, G>(
    field: &F,
    x: &Path,
    family: G,
    j_list: &[u32],
    cfg: &VerifyConfig,
) -> Result<VerifyReport, VerifyError>
where
    F: VectorField + ?Sized,
    G: Fn(u32) -> Result<Path, PathError>,
{
    if j_list.is_empty() {
        return Err(VerifyError::Empty);
    }
    let mut per_j = Vec::with_capacity(j_list.len());
    for &j in j_list {
        let xj = family(j)?;
        let tol = 1e-12 * x.horizon().max(1.0);
        if (xj.t0() - x.t0()).abs() > tol || (xj.t_end() - x.t_end()).abs() > tol {
            return Err(VerifyError::Horizon {
                j,
                t0: xj.t0(),
                t1: xj.t_end(),
                c0: x.t0(),
                c1: x.t_end(),
            });
        }
        let e = error_functional(field, &xj, &cfg.quad)?.value;
        per_j.push(VerifyEntry {
            j,
            e,
            sup_dist: xj.sup_distance(x)?,
            start_dist: dist(xj.start(), x.start()),
        });
    }
    let last = per_j.last().expect("non-empty");
    let verdict = if per_j.windows(2).any(|w| w[1].e > w[0].e + 1e-12) {
        VerifyVerdict::Rejected("E(x_j) increases along j".into())
    } else if last.e > cfg.tol_e {
        VerifyVerdict::Rejected(format!(
            "final E = {:e} exceeds tol_e = {:e}",
            last.e, cfg.tol_e
        ))
    } else if last.sup_dist > cfg.tol_sup {
        VerifyVerdict::Rejected(format!(
            "final sup distance {:e} exceeds tol_sup = {:e}",
            last.sup_dist, cfg.tol_sup
        ))
    } else {
        VerifyVerdict::Accepted
    };
    Ok(VerifyReport {
        per_j,
        verdict,
        note: VERIFY_NOTE.into(),
    })
}
