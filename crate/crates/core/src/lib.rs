//! Generalized solutions of discontinuous autonomous ODE systems
//! `x' = f(x)`.
//!
//! The crate probes whether a field is *self-continuous* (the limit of
//! `f(x + eps f(x))` as `eps -> 0+` equals `f(x)`, or a germ curve does the
//! same job), builds candidate solutions by stepping along germs or by
//! minimizing the error functional `E(y) = ∫ |y' - f(y)| dt` over
//! piecewise-linear paths, and checks the radial integrability condition for
//! Sobolev fields.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod expr;
pub mod field;
pub mod germstep;
pub mod path;
pub mod probe;
pub mod sobolev;
pub mod varmin;
pub mod zoo;

pub use expr::{Expr, ParseError, Predicate};
pub use field::{
    check_growth_sample, parse_field_expr, DomainKind, DomainSpec, FieldError, FnField,
    GermCurveDef, GrowthBound, GrowthReport, Override, VectorField, VectorFieldDef,
};
pub use germstep::{integrate, integrate_with, StepConfig, StepError, StepMode, StepReport};
pub use path::{
    apriori_bound_check, error_functional, segment_error, BoundCheck, ErrorReport, Path, PathError,
    QuadratureSpec,
};
pub use probe::{
    classify, fit_germ_direction, probe_germ, probe_grid, probe_ray, ExtensionCandidate,
    FitOptions, FitOutcome, GridProbe, ProbeError, ProbeReport, ProbeSchedule, Verdict,
};
pub use sobolev::{
    check_integrability, GradientProvider, IntegrabilityReport, IntegrabilityVerdict,
    SobolevConfig, SobolevError,
};
pub use varmin::{
    minimize_fixed_start, minimize_two_point, value_function, verify_generalized, Compass,
    InitSpec, OptConfig, OptError, OptResult, PathFamily, RestartSummary, SearchState, Strategy,
    Termination, ValuePoint, VerifyConfig, VerifyEntry, VerifyError, VerifyReport, VerifyVerdict,
};
pub use zoo::{Reference, VerdictPoint, ZooEntry, ZooError};
