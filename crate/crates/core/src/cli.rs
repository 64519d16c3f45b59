//! Command-line frontend. Every run writes its outputs plus a
//! `<command>.run.json` report into `--out-dir`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::expr::Predicate;
use crate::field::{parse_field_expr, GermCurveDef, VectorField, VectorFieldDef};
use crate::germstep::{integrate, StepConfig, StepMode};
use crate::path::Path;
use crate::probe::{
    fit_germ_direction, probe_germ, probe_grid, probe_ray, FitOptions, ProbeSchedule,
};
use crate::sobolev::{check_integrability, GradientProvider, SobolevConfig};
use crate::varmin::{
    minimize_fixed_start, minimize_two_point, value_function, verify_generalized, InitSpec,
    OptConfig, PathFamily, VerifyConfig,
};
use crate::zoo::{self, ZooEntry};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub const SEED_ENV: &str = "SELFCONT_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

fn input<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{what}: {e}"))
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "selfcont",
    version,
    about = "Generalized solutions of discontinuous ODEs"
)]
pub struct Cli {
    /// Directory for all output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// RNG seed; falls back to SELFCONT_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Ray (or germ) self-continuity probe at a point or over a grid.
    Probe(ProbeArgs),
    /// Search a direction and speed under which the ray limit exists.
    GermDirection(GermDirectionArgs),
    /// Germ stepping from x0.
    Integrate(IntegrateArgs),
    /// Minimize the error functional over polylines.
    Minimize(MinimizeArgs),
    /// Estimate the value function m(r) on a grid of horizons.
    Mvalue(MvalueArgs),
    /// Check a candidate against an approximating family.
    Verify(VerifyArgs),
    /// Radial integrability test for a Sobolev field.
    Sobolev(SobolevArgs),
    /// Built-in example fields.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
}

#[derive(Debug, Subcommand, Serialize)]
pub enum ZooAction {
    /// Print the catalog.
    List,
    /// Write an entry's field file and metadata.
    Export {
        name: String,
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct FieldSource {
    /// Field definition file.
    #[arg(long, conflicts_with = "zoo")]
    pub field: Option<PathBuf>,
    /// Zoo entry name.
    #[arg(long)]
    pub zoo: Option<String>,
    /// Zoo parameter override, repeatable.
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 1e-2)]
    pub eps0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    #[arg(long, default_value_t = 24)]
    pub count: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub stall: f64,
}

impl ScheduleArgs {
    fn schedule(&self) -> ProbeSchedule {
        ProbeSchedule {
            eps0: self.eps0,
            ratio: self.ratio,
            count: self.count,
            tol: self.tol,
            stall_threshold: self.stall,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub source: FieldSource,
    /// Base point, e.g. `0,0`.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "grid")]
    pub at: Option<String>,
    /// Grid box `LO:HI` and resolution, e.g. `--grid -1,-1:1,1 5,5`.
    #[arg(long, num_args = 2, value_names = ["BOX", "RES"], allow_hyphen_values = true, conflicts_with = "at")]
    pub grid: Option<Vec<String>>,
    /// Germ curve file; probes along the germ instead of the ray.
    #[arg(long)]
    pub germ: Option<PathBuf>,
    /// With --germ: use finite differences of the position instead of dphi.
    #[arg(long, requires = "germ")]
    pub finite_difference: bool,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GermDirectionArgs {
    #[command(flatten)]
    pub source: FieldSource,
    #[arg(long, allow_hyphen_values = true)]
    pub at: String,
    /// Number of grid directions (default depends on dimension).
    #[arg(long)]
    pub dirs: Option<usize>,
    #[arg(long)]
    pub speeds: Option<usize>,
    #[arg(long)]
    pub s_min: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    /// Do not fall back to the equilibrium extension.
    #[arg(long)]
    pub no_equilibrium: bool,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub source: FieldSource,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    /// `plain`, `snap:PRED:TOL` or `germ:FILE`.
    #[arg(long, default_value = "plain")]
    pub mode: String,
    /// Path CSV (default: `integrate.csv` in the output directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OptArgs {
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2_000_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// `linear`, `linear:Z`, `germ`, `germ:H`, `snap:PRED:TOL` or `path:FILE`.
    #[arg(long, default_value = "linear", allow_hyphen_values = true)]
    pub init: String,
}

#[derive(Debug, Args, Serialize)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub source: FieldSource,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Fixed end point; switches to the two-point problem.
    #[arg(long, allow_hyphen_values = true)]
    pub end: Option<String>,
    #[command(flatten)]
    pub opt: OptArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MvalueArgs {
    #[command(flatten)]
    pub source: FieldSource,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long, default_value = "0.25,0.5,1")]
    pub rgrid: String,
    #[command(flatten)]
    pub opt: OptArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: FieldSource,
    /// Candidate path CSV.
    #[arg(long)]
    pub path: PathBuf,
    /// Family position in `t` and `j`, e.g. `(t, 1/j)`.
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value = "1,2,4,8,16,32")]
    pub jlist: String,
    #[arg(long, default_value_t = 257)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol_e: f64,
    #[arg(long, default_value_t = 0.05)]
    pub tol_sup: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SobolevArgs {
    #[command(flatten)]
    pub source: FieldSource,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 33)]
    pub shells: usize,
    #[arg(long, default_value_t = 256)]
    pub angular: usize,
    /// `fd`, `fd:SCALE`, `analytic:FILE` or `analytic` (zoo-stored gradient).
    #[arg(long, default_value = "fd")]
    pub grad: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub timing: Timing,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Collected outputs of one run.
struct Run {
    out_dir: PathBuf,
    outputs: Vec<String>,
    summary: String,
}

impl Run {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        self.write_at(&path, contents)
    }

    fn write_at(&mut self, path: &FsPath, contents: &str) -> Result<(), CliError> {
        fs::write(path, contents)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(v).expect("json value serializes");
        self.write(name, &(text + "\n"))
    }
}

/// Prints a line, ignoring a closed stdout.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|c| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad vector component '{c}' in '{s}'")))
        })
        .collect()
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|c| {
            c.parse::<T>()
                .map_err(|_| CliError::Usage(format!("bad list entry '{c}' in '{s}'")))
        })
        .collect()
}

fn split_kv(raw: &[String]) -> Result<Vec<(String, String)>, CliError> {
    raw.iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| CliError::Usage(format!("--param expects K=V, got '{p}'")))
        })
        .collect()
}

fn read(path: &FsPath) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_field(src: &FieldSource) -> Result<(VectorFieldDef, Option<ZooEntry>), CliError> {
    match (&src.field, &src.zoo) {
        (Some(file), None) => {
            if !src.params.is_empty() {
                return Err(CliError::Usage("--param only applies to --zoo".into()));
            }
            let text = read(file)?;
            let f = parse_field_expr(&text).map_err(input(&file.display().to_string()))?;
            Ok((f, None))
        }
        (None, Some(name)) => {
            let e = zoo::instantiate(name, &split_kv(&src.params)?).map_err(input("zoo"))?;
            Ok((e.field.clone(), Some(e)))
        }
        _ => Err(CliError::Usage(
            "give exactly one of --field FILE or --zoo NAME".into(),
        )),
    }
}

fn point_for(field: &VectorFieldDef, s: &str) -> Result<Vec<f64>, CliError> {
    let x = parse_vector(s)?;
    if x.len() != field.dim() {
        return Err(CliError::Usage(format!(
            "point '{s}' has {} components, field has dim {}",
            x.len(),
            field.dim()
        )));
    }
    Ok(x)
}

fn parse_snap(spec: &str) -> Result<(Predicate, f64), CliError> {
    let (pred, tol) = spec
        .rsplit_once(':')
        .ok_or_else(|| CliError::Usage(format!("expected PRED:TOL, got '{spec}'")))?;
    let tol: f64 = tol
        .parse()
        .map_err(|_| CliError::Usage(format!("bad snap tolerance '{tol}'")))?;
    let pred = Predicate::parse(pred).map_err(input("snap predicate"))?;
    Ok((pred, tol))
}

fn parse_mode(spec: &str) -> Result<StepMode, CliError> {
    if spec == "plain" {
        return Ok(StepMode::Plain);
    }
    if let Some(rest) = spec.strip_prefix("snap:") {
        let (manifold, tol) = parse_snap(rest)?;
        return Ok(StepMode::Snap { manifold, tol });
    }
    if let Some(file) = spec.strip_prefix("germ:") {
        let text = read(FsPath::new(file))?;
        let g = GermCurveDef::parse(&text).map_err(input(file))?;
        return Ok(StepMode::Germ(g));
    }
    Err(CliError::Usage(format!(
        "unknown mode '{spec}' (plain | snap:PRED:TOL | germ:FILE)"
    )))
}

fn parse_init(spec: &str) -> Result<InitSpec, CliError> {
    let (head, rest) = match spec.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (spec, None),
    };
    match (head, rest) {
        ("linear", None) => Ok(InitSpec::LinearToGuess(None)),
        ("linear", Some(z)) => Ok(InitSpec::LinearToGuess(Some(parse_vector(z)?))),
        ("germ", None) => Ok(InitSpec::GermPlain { h: None }),
        ("germ", Some(h)) => {
            let h = h
                .parse()
                .map_err(|_| CliError::Usage(format!("bad germ step '{h}'")))?;
            Ok(InitSpec::GermPlain { h: Some(h) })
        }
        ("snap", Some(r)) => {
            let (manifold, tol) = parse_snap(r)?;
            Ok(InitSpec::GermSnap {
                h: None,
                manifold,
                tol,
            })
        }
        ("path", Some(file)) => {
            let p = Path::from_csv(&read(FsPath::new(file))?).map_err(input(file))?;
            Ok(InitSpec::Path(p))
        }
        _ => Err(CliError::Usage(format!("unknown init '{spec}'"))),
    }
}

fn opt_config(a: &OptArgs, seed: u64) -> Result<OptConfig, CliError> {
    Ok(OptConfig {
        n_nodes: a.nodes,
        budget: a.budget,
        restarts: a.restarts,
        seed,
        init: parse_init(&a.init)?,
        ..OptConfig::default()
    })
}

fn seed_from(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}='{v}' is not an integer"))),
        Err(_) => Ok(0),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Probe(_) => "probe",
        Command::GermDirection(_) => "germ-direction",
        Command::Integrate(_) => "integrate",
        Command::Minimize(_) => "minimize",
        Command::Mvalue(_) => "mvalue",
        Command::Verify(_) => "verify",
        Command::Sobolev(_) => "sobolev",
        Command::Zoo {
            action: ZooAction::List,
        } => "zoo-list",
        Command::Zoo {
            action: ZooAction::Export { .. },
        } => "zoo-export",
    }
}

fn dispatch(cmd: &Command, seed: u64, run: &mut Run) -> Result<(), CliError> {
    match cmd {
        Command::Probe(a) => cmd_probe(a, run),
        Command::GermDirection(a) => cmd_germ_direction(a, run),
        Command::Integrate(a) => cmd_integrate(a, run),
        Command::Minimize(a) => cmd_minimize(a, seed, run),
        Command::Mvalue(a) => cmd_mvalue(a, seed, run),
        Command::Verify(a) => cmd_verify(a, run),
        Command::Sobolev(a) => cmd_sobolev(a, seed, run),
        Command::Zoo { action } => cmd_zoo(action, run),
    }
}

fn cmd_probe(a: &ProbeArgs, run: &mut Run) -> Result<(), CliError> {
    let (field, _) = load_field(&a.source)?;
    let sched = a.schedule.schedule();
    if let Some(g) = &a.grid {
        let (lo, hi) = g[0]
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("grid box must be LO:HI, got '{}'", g[0])))?;
        let (lo, hi) = (point_for(&field, lo)?, point_for(&field, hi)?);
        let mut res: Vec<usize> = parse_list(&g[1])?;
        if res.len() == 1 {
            res = vec![res[0]; field.dim()];
        }
        let cells = probe_grid(&field, &lo, &hi, &res, &sched).map_err(numerical)?;
        let sc = cells
            .iter()
            .filter(|c| c.verdict.is_some_and(|v| v.is_self_continuous()))
            .count();
        run.write_json(
            "probe_grid.json",
            &json!({ "schedule": sched, "cells": cells }),
        )?;
        run.summary = format!("probed {} grid nodes, {sc} self-continuous", cells.len());
        return Ok(());
    }
    let x = point_for(
        &field,
        a.at.as_deref().expect("clap requires --at or --grid"),
    )?;
    let rep = match &a.germ {
        Some(file) => {
            let g =
                GermCurveDef::parse(&read(file)?).map_err(input(&file.display().to_string()))?;
            probe_germ(&field, &g, &x, &sched, a.finite_difference).map_err(numerical)?
        }
        None => probe_ray(&field, &x, &sched).map_err(numerical)?,
    };
    run.summary = format!("verdict {:?} at {:?}", rep.verdict, x);
    run.write_json("probe.json", &json!({ "schedule": sched, "report": rep }))
}

fn cmd_germ_direction(a: &GermDirectionArgs, run: &mut Run) -> Result<(), CliError> {
    let (field, _) = load_field(&a.source)?;
    let x = point_for(&field, &a.at)?;
    let mut opts = FitOptions::for_dim(field.dim());
    if let Some(n) = a.dirs {
        opts.n_dirs = n;
    }
    if let Some(n) = a.speeds {
        opts.n_speeds = n;
    }
    if let Some(s) = a.s_min {
        opts.s_min = s;
    }
    if let Some(s) = a.s_max {
        opts.s_max = s;
    }
    opts.allow_equilibrium = !a.no_equilibrium;
    let out = fit_germ_direction(&field, &x, &opts, &a.schedule.schedule()).map_err(numerical)?;
    run.summary = match &out {
        crate::probe::FitOutcome::Extension(c) => {
            format!(
                "extension f(x) = {:?}, tail residual {:e}",
                c.velocity, c.tail_residual
            )
        }
        crate::probe::FitOutcome::NoExtensionFound { .. } => "no extension found".into(),
    };
    run.write_json(
        "germ_direction.json",
        &json!({ "options": opts, "outcome": out }),
    )
}

fn cmd_integrate(a: &IntegrateArgs, run: &mut Run) -> Result<(), CliError> {
    let (field, _) = load_field(&a.source)?;
    let x0 = point_for(&field, &a.x0)?;
    let cfg = StepConfig {
        h: a.h,
        mode: parse_mode(&a.mode)?,
        t_end: a.horizon,
    };
    let (path, rep) = integrate(&field, &x0, &cfg).map_err(numerical)?;
    let csv = a
        .out
        .clone()
        .unwrap_or_else(|| run.out_dir.join("integrate.csv"));
    run.write_at(&csv, &path.to_csv())?;
    run.summary = format!("{} steps, E = {:e}", rep.steps, rep.e_total);
    run.write_json(
        "integrate.json",
        &json!({ "report": rep, "path_file": csv.display().to_string() }),
    )
}

fn cmd_minimize(a: &MinimizeArgs, seed: u64, run: &mut Run) -> Result<(), CliError> {
    let (field, _) = load_field(&a.source)?;
    let x0 = point_for(&field, &a.x0)?;
    let cfg = opt_config(&a.opt, seed)?;
    let res = match &a.end {
        Some(z) => minimize_two_point(&field, &x0, &point_for(&field, z)?, a.horizon, &cfg),
        None => minimize_fixed_start(&field, &x0, a.horizon, &cfg),
    }
    .map_err(numerical)?;
    run.write("minimize_path.csv", &res.path.to_csv())?;
    let path_file = run.outputs.last().cloned();
    run.summary = format!("E = {:e} ({:?})", res.e_value, res.terminated_by);
    run.write_json("minimize.json", &res.to_json(path_file.as_deref()))
}

fn cmd_mvalue(a: &MvalueArgs, seed: u64, run: &mut Run) -> Result<(), CliError> {
    let (field, _) = load_field(&a.source)?;
    let x0 = point_for(&field, &a.x0)?;
    let grid: Vec<f64> = parse_list(&a.rgrid)?;
    let cfg = opt_config(&a.opt, seed)?;
    let pts = value_function(&field, &x0, &grid, &cfg).map_err(numerical)?;
    let mut csv = String::from("r,m_estimate\n");
    let mut rows = Vec::new();
    for p in &pts {
        csv.push_str(&format!("{:e},{:e}\n", p.r, p.m_estimate));
        rows.push(json!({
            "r": p.r,
            "m_estimate": p.m_estimate,
            "terminated_by": p.result.terminated_by,
            "best_restart": p.result.best_restart,
            "restarts_summary": p.result.restarts_summary,
        }));
    }
    run.write("mvalue.csv", &csv)?;
    let max = pts.iter().map(|p| p.m_estimate).fold(0.0, f64::max);
    run.summary = format!("{} horizons, max m = {max:e}", pts.len());
    run.write_json("mvalue.json", &json!({ "points": rows }))
}

fn cmd_verify(a: &VerifyArgs, run: &mut Run) -> Result<(), CliError> {
    let (field, _) = load_field(&a.source)?;
    let text = read(&a.path)?;
    let x = Path::from_csv(&text).map_err(input(&a.path.display().to_string()))?;
    if x.dim() != field.dim() {
        return Err(CliError::Usage("path and field dimensions differ".into()));
    }
    let fam = PathFamily::parse(&a.family, a.nodes).map_err(input("family"))?;
    if fam.position.len() != field.dim() {
        return Err(CliError::Usage("family and field dimensions differ".into()));
    }
    let jlist: Vec<u32> = parse_list(&a.jlist)?;
    let cfg = VerifyConfig {
        tol_e: a.tol_e,
        tol_sup: a.tol_sup,
        ..VerifyConfig::default()
    };
    let horizon = x.horizon();
    let rep = verify_generalized(&field, &x, |j| fam.generate(j, horizon), &jlist, &cfg)
        .map_err(numerical)?;
    run.summary = format!("{:?}", rep.verdict);
    run.write_json(
        "verify.json",
        &serde_json::to_value(&rep).expect("report serializes"),
    )
}

fn cmd_sobolev(a: &SobolevArgs, seed: u64, run: &mut Run) -> Result<(), CliError> {
    let (field, entry) = load_field(&a.source)?;
    let x0 = point_for(&field, &a.x0)?;
    let grad = match a.grad.as_str() {
        "fd" => GradientProvider::default(),
        "analytic" => match entry.as_ref().and_then(|e| e.gradient.clone()) {
            Some(g) => GradientProvider::Analytic(g),
            None => {
                return Err(CliError::Usage(
                    "this field stores no gradient; use analytic:FILE or fd".into(),
                ))
            }
        },
        s => {
            if let Some(scale) = s.strip_prefix("fd:") {
                let step_scale = scale
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad fd scale '{scale}'")))?;
                GradientProvider::FiniteDifference { step_scale }
            } else if let Some(file) = s.strip_prefix("analytic:") {
                GradientProvider::parse_analytic(&read(FsPath::new(file))?).map_err(input(file))?
            } else {
                return Err(CliError::Usage(format!("unknown gradient '{s}'")));
            }
        }
    };
    grad.validate(field.dim())
        .map_err(|e| CliError::Input(e.to_string()))?;
    let cfg = SobolevConfig {
        rho: a.rho,
        n_shells: a.shells,
        n_angular: a.angular,
        seed,
    };
    let rep = check_integrability(&field, &grad, &x0, &cfg).map_err(numerical)?;
    run.write("sobolev_shells.csv", &rep.shells_csv())?;
    run.summary = format!("{:?}, estimate {:?}", rep.verdict, rep.estimate);
    run.write_json("sobolev.json", &rep.to_json())
}

fn cmd_zoo(action: &ZooAction, run: &mut Run) -> Result<(), CliError> {
    match action {
        ZooAction::List => {
            let entries = zoo::list();
            let width = entries.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
            for (name, summary) in &entries {
                say(&format!("{name:<width$}  {summary}"));
            }
            run.summary = format!("{} entries", entries.len());
            Ok(())
        }
        ZooAction::Export { name, params } => {
            let e = zoo::instantiate(name, &split_kv(params)?).map_err(input("zoo"))?;
            run.write(&format!("{name}.fld"), &(e.field.to_text() + "\n"))?;
            run.write_json(&format!("{name}.json"), &e.metadata())?;
            run.summary = format!("exported {name}");
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(report_path) => {
            say(&format!("run report: {}", report_path.display()));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and writes its RunReport; returns the report path.
pub fn execute(cli: &Cli) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let seed = seed_from(cli.seed)?;
    fs::create_dir_all(&cli.out_dir).map_err(|e| {
        CliError::Numerical(format!("cannot create {}: {e}", cli.out_dir.display()))
    })?;
    let mut run = Run {
        out_dir: cli.out_dir.clone(),
        outputs: Vec::new(),
        summary: String::new(),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(numerical)?;
    pool.install(|| dispatch(&cli.command, seed, &mut run))?;

    let name = command_name(&cli.command);
    let inputs = serde_json::to_value(&cli.command).expect("arguments serialize");
    let mut canonical = BTreeMap::new();
    canonical.insert("arguments".to_string(), inputs);
    canonical.insert(
        "out_dir".to_string(),
        json!(cli.out_dir.display().to_string()),
    );
    let report = RunReport {
        command: name.into(),
        inputs: json!(canonical),
        seed,
        outputs: run.outputs.clone(),
        timing: Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
        },
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let report_path = cli.out_dir.join(format!("{name}.run.json"));
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&report_path, text + "\n")
        .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", report_path.display())))?;
    say(&run.summary);
    Ok(report_path)
}
