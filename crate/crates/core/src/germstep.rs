//! Constructive integrator assembling germs: linear steps `x + h f(x)`, user
//! germ curves, or linear steps that snap onto a named manifold.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, Predicate, RelOp, Scope};
use crate::field::{dist, FieldError, GermCurveDef, VectorField};
use crate::path::{error_functional, Path, PathError, QuadratureSpec};

/// Interior germ samples per step in germ mode.
pub const GERM_CHORDS: usize = 8;
/// Bisection iterations when locating a manifold crossing.
pub const SNAP_BISECTIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("invalid step configuration: {0}")]
    Config(String),
    #[error("field undefined at the initial point: {0}")]
    Start(#[source] FieldError),
    #[error("non-finite value during integration at t = {t}: {source}")]
    NonFinite {
        t: f64,
        #[source]
        source: FieldError,
    },
    #[error("germ does not start at x = {x:?} with velocity f(x) (t = {t})")]
    GermMismatch { t: f64, x: Vec<f64> },
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepMode {
    Plain,
    Germ(GermCurveDef),
    /// Snap onto the manifold where the predicate's two sides agree.
    Snap {
        manifold: Predicate,
        tol: f64,
    },
}

impl StepMode {
    pub fn label(&self) -> String {
        match self {
            StepMode::Plain => "plain".into(),
            StepMode::Germ(_) => "germ".into(),
            StepMode::Snap { manifold, tol } => format!("snap:{manifold}:{tol:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub h: f64,
    pub mode: StepMode,
    pub t_end: f64,
}

impl StepConfig {
    pub fn plain(h: f64, t_end: f64) -> Self {
        Self {
            h,
            mode: StepMode::Plain,
            t_end,
        }
    }

    fn validate(&self) -> Result<(), StepError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(StepError::Config("t_end must be positive".into()));
        }
        if !(self.h > 0.0 && self.h <= self.t_end) {
            return Err(StepError::Config("h must lie in (0, t_end]".into()));
        }
        if let StepMode::Snap { tol, .. } = self.mode {
            if !(tol > 0.0) {
                return Err(StepError::Config("snap tolerance must be positive".into()));
            }
        }
        if let StepMode::Germ(g) = &self.mode {
            if self.h > g.eps_max {
                return Err(StepError::Config(format!(
                    "h = {} exceeds the germ's eps_max = {}",
                    self.h, g.eps_max
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub h: f64,
    pub mode: String,
    pub steps: usize,
    #[serde(rename = "E_total")]
    pub e_total: f64,
    #[serde(rename = "E_per_step")]
    pub e_per_step: Vec<f64>,
    pub truncated: bool,
    /// Times at which snap mode placed a node on the manifold.
    pub snap_times: Vec<f64>,
}

/// Runs the germ construction from `x0` at `t = 0`.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    cfg: &StepConfig,
) -> Result<(Path, StepReport), StepError> {
    integrate_with(field, x0, cfg, &QuadratureSpec::default())
}

pub fn integrate_with<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    cfg: &StepConfig,
    quad: &QuadratureSpec,
) -> Result<(Path, StepReport), StepError> {
    cfg.validate()?;
    if field.dim() != x0.len() {
        return Err(PathError::Dim {
            expected: field.dim(),
            got: x0.len(),
        }
        .into());
    }
    let n = x0.len();
    let mut times = vec![0.0];
    let mut coords = x0.to_vec();
    // Index into `times` where each step starts.
    let mut step_starts = Vec::new();
    let mut snap_times = Vec::new();
    let mut truncated = false;
    let mut fx = vec![0.0; n];
    let mut t = 0.0;
    let mut x = x0.to_vec();
    while t < cfg.t_end {
        match field.eval_into(&x, &mut fx) {
            Ok(()) => {}
            Err(e @ FieldError::NonFinite(_)) => return Err(StepError::NonFinite { t, source: e }),
            Err(e) if times.len() == 1 => return Err(StepError::Start(e)),
            Err(_) => {
                // The step into the undefined point is dropped: its error
                // cannot be evaluated.
                truncated = true;
                let keep = step_starts.pop().unwrap_or(0) + 1;
                times.truncate(keep);
                coords.truncate(keep * n);
                break;
            }
        }
        let remaining = cfg.t_end - t;
        // Absorb a final sliver into the last step instead of emitting it.
        let dt = if remaining <= cfg.h * (1.0 + 1e-9) {
            remaining
        } else {
            cfg.h
        };
        step_starts.push(times.len() - 1);
        match &cfg.mode {
            StepMode::Plain => {
                let y: Vec<f64> = x.iter().zip(&fx).map(|(a, f)| a + dt * f).collect();
                t = next_time(t, dt, cfg.t_end);
                x = y;
            }
            StepMode::Germ(g) => {
                if dist(&g.position_at(0.0, &x), &x) > 1e-9
                    || dist(&g.velocity_at(0.0, &x), &fx) > 1e-9
                {
                    return Err(StepError::GermMismatch { t, x });
                }
                let base = x.clone();
                let m = GERM_CHORDS + 1;
                for i in 1..m {
                    let e = dt * i as f64 / m as f64;
                    let p = g.position_at(e, &base);
                    check_finite(&p, t + e)?;
                    times.push(t + e);
                    coords.extend_from_slice(&p);
                }
                x = g.position_at(dt, &base);
                check_finite(&x, t + dt)?;
                t = next_time(t, dt, cfg.t_end);
            }
            StepMode::Snap { manifold, tol } => {
                let y: Vec<f64> = x.iter().zip(&fx).map(|(a, f)| a + dt * f).collect();
                match snap(manifold, *tol, &x, &y) {
                    Some((theta, z)) if theta < 1.0 => {
                        t += theta * dt;
                        snap_times.push(t);
                        x = z;
                    }
                    Some((_, z)) => {
                        t = next_time(t, dt, cfg.t_end);
                        snap_times.push(t);
                        x = z;
                    }
                    None => {
                        t = next_time(t, dt, cfg.t_end);
                        x = y;
                    }
                }
            }
        }
        check_finite(&x, t)?;
        times.push(t);
        coords.extend_from_slice(&x);
    }
    if times.len() < 2 {
        return Err(StepError::Path(PathError::TooFewNodes));
    }
    let path = Path::from_flat(n, times, coords)?;
    let rep = error_functional(field, &path, quad)?;
    step_starts.truncate(path.segments());
    let mut e_per_step = Vec::with_capacity(step_starts.len());
    for (k, &s) in step_starts.iter().enumerate() {
        let end = step_starts.get(k + 1).copied().unwrap_or(path.segments());
        e_per_step.push(rep.per_segment[s..end].iter().sum());
    }
    let report = StepReport {
        h: cfg.h,
        mode: cfg.mode.label(),
        steps: e_per_step.len(),
        e_total: rep.value,
        e_per_step,
        truncated,
        snap_times,
    };
    Ok((path, report))
}

fn next_time(t: f64, dt: f64, t_end: f64) -> f64 {
    if t_end - t <= dt {
        t_end
    } else {
        t + dt
    }
}

fn check_finite(x: &[f64], t: f64) -> Result<(), StepError> {
    if x.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(StepError::NonFinite {
            t,
            source: FieldError::NonFinite(x.to_vec()),
        })
    }
}

/// Locates the manifold along the step `x -> y`.
///
/// Returns the step fraction and the snapped node, or `None` when the step
/// neither crosses the manifold nor ends within `tol` of it. A start point
/// already on the manifold never snaps.
fn snap(manifold: &Predicate, tol: f64, x: &[f64], y: &[f64]) -> Option<(f64, Vec<f64>)> {
    let level = |p: &[f64]| manifold.level(&Scope::point(p));
    let a = level(x);
    let b = level(y);
    if a == 0.0 {
        return None;
    }
    let theta = if a.signum() != b.signum() {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..SNAP_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + mid * (b - a)).collect();
            let m = level(&z);
            if m == 0.0 {
                hi = mid;
                break;
            }
            if m.signum() == a.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    } else if b.abs() <= tol {
        1.0
    } else {
        return None;
    };
    let mut z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + theta * (b - a)).collect();
    project(manifold, &mut z);
    Some((theta, z))
}

/// Exact projection for manifolds of the form `x_i == expr` with `expr` free
/// of `x_i`; other manifolds keep the bisection point.
fn project(manifold: &Predicate, z: &mut [f64]) {
    if manifold.op != RelOp::Eq {
        return;
    }
    let (var, other) = match (&manifold.lhs, &manifold.rhs) {
        (Expr::Var(i), e) | (e, Expr::Var(i)) => (*i, e),
        _ => return,
    };
    if var >= z.len() || other.uses_var(var) {
        return;
    }
    z[var] = other.eval(&Scope::point(z));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::parse_field_expr;
    use crate::zoo;

    fn snap_axis() -> StepMode {
        StepMode::Snap {
            manifold: Predicate::parse("x1 == 0").unwrap(),
            tol: 1e-9,
        }
    }

    #[test]
    fn radial_unit_from_origin() {
        let f = zoo::entry("radial-unit").unwrap().field;
        let (p, r) = integrate(&f, &[0.0, 0.0], &StepConfig::plain(0.25, 1.0)).unwrap();
        assert_eq!(p.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        for (k, x) in p.points().enumerate() {
            assert_eq!(x, &[k as f64 / 4.0, 0.0]);
        }
        assert!(r.e_total <= 1e-12);
        assert_eq!(r.steps, 4);
        assert!(!r.truncated);
    }

    #[test]
    fn zero_field_is_constant() {
        let f = parse_field_expr("dim 2; f = (0, 0)").unwrap();
        let (p, r) = integrate(&f, &[1.0, -2.0], &StepConfig::plain(0.3, 1.0)).unwrap();
        assert!(p.points().all(|x| x == [1.0, -2.0]));
        assert_eq!(r.e_total, 0.0);
        assert_eq!(p.t_end(), 1.0);
    }

    #[test]
    fn plain_chatters_on_the_sliding_axis() {
        let f = zoo::entry("converge-axis").unwrap().field;
        for h in [0.1, 0.05, 0.025] {
            let (_, r) = integrate(&f, &[0.5, 0.0], &StepConfig::plain(h, 1.5)).unwrap();
            assert!(r.e_total >= 0.1, "h = {h}: E = {}", r.e_total);
        }
    }

    #[test]
    fn snap_slides_exactly() {
        let f = zoo::entry("converge-axis").unwrap().field;
        let cfg = StepConfig {
            h: 0.1,
            mode: snap_axis(),
            t_end: 1.5,
        };
        let (p, r) = integrate(&f, &[0.5, 0.0], &cfg).unwrap();
        assert!(r.e_total <= 1e-6, "{}", r.e_total);
        assert_eq!(r.snap_times.len(), 1);
        assert!((r.snap_times[0] - 0.5).abs() < 1e-9);
        assert_eq!(p.end()[0], 0.0);
        assert!((p.end()[1] - 1.5).abs() < 1e-9);
        // off-grid crossing: bisection places the node on the axis
        let (p, r) = integrate(&f, &[0.33, 0.0], &StepConfig { h: 0.1, ..cfg }).unwrap();
        assert!(r.e_total <= 1e-5, "{}", r.e_total);
        assert!((r.snap_times[0] - 0.33).abs() < 1e-6);
        assert_eq!(p.end()[0], 0.0);
    }

    #[test]
    fn snap_stays_within_the_step() {
        let f = zoo::entry("converge-axis").unwrap().field;
        let cfg = StepConfig {
            h: 0.07,
            mode: snap_axis(),
            t_end: 1.0,
        };
        let (p, _) = integrate(&f, &[0.2, 0.1], &cfg).unwrap();
        for k in 0..p.segments() {
            let x = p.point(k);
            let fx = f.eval(x).unwrap();
            let step: f64 = fx.iter().map(|c| c * c).sum::<f64>().sqrt() * 0.07;
            assert!(dist(x, p.point(k + 1)) <= step * (1.0 + 1e-12));
        }
    }

    #[test]
    fn germ_mode_uses_chords() {
        let f = zoo::entry("converge-axis").unwrap().field;
        let g = GermCurveDef::parse("dim 2; phi = (x1, x2 + eps); dphi = (0, 1)").unwrap();
        let cfg = StepConfig {
            h: 0.25,
            mode: StepMode::Germ(g),
            t_end: 1.0,
        };
        let (p, r) = integrate(&f, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(p.len(), 4 * (GERM_CHORDS + 1) + 1);
        assert_eq!(r.steps, 4);
        assert_eq!(r.e_total, 0.0);
        let err = integrate(&f, &[0.5, 0.0], &cfg).unwrap_err();
        assert!(matches!(err, StepError::GermMismatch { .. }));
    }

    #[test]
    fn truncates_on_undefined() {
        let f = parse_field_expr("dim 1; off x1 > 1; f = (1)").unwrap();
        let (p, r) = integrate(&f, &[0.0], &StepConfig::plain(0.3, 2.0)).unwrap();
        assert!(r.truncated);
        assert!((p.end()[0] - 0.9).abs() < 1e-12);
        assert_eq!(p.end()[0], p.point(p.len() - 1)[0]);
        let g = parse_field_expr("dim 1; f = (1 / x1)").unwrap();
        assert!(matches!(
            integrate(&g, &[0.0], &StepConfig::plain(0.3, 2.0)),
            Err(StepError::NonFinite { .. })
        ));
    }

    #[test]
    fn final_step_is_shortened() {
        let f = parse_field_expr("dim 1; f = (1)").unwrap();
        let (p, _) = integrate(&f, &[0.0], &StepConfig::plain(0.4, 1.0)).unwrap();
        assert_eq!(p.times().len(), 4);
        assert_eq!(p.t_end(), 1.0);
        assert!((p.end()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic() {
        let f = zoo::entry("spiral-sin").unwrap().field;
        let cfg = StepConfig::plain(0.01, 1.0);
        let a = integrate(&f, &[0.3, 0.1], &cfg).unwrap();
        let b = integrate(&f, &[0.3, 0.1], &cfg).unwrap();
        assert_eq!(a, b);
    }
}
