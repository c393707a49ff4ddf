//! Batch driver behind the `acforms` binary: builds fixtures from a run
//! configuration and writes JSON reports and CSV tables.

pub mod config;
mod verify;

pub use config::RunConfig;
pub use verify::{run_suite, Check, Suite, SuiteReport};

use crate::error::{Error, Result};
use crate::exterior::{FormField, ValueKind};
use crate::fixtures;
use crate::geometry::{
    expr::Expr, make_alpha, make_constant_ac, make_flat_torus, make_s6_octonionic_ac, make_sphere_chart,
    make_sphere_chart_at, make_warped_torus, standard_complex, ACStructure, AlphaSpec, AuxiliaryOneForm, ChartGeometry,
};
use crate::variational::{
    classify, extend, functional_value, restrict_domain, run_flow, stability_probe, ClassificationReport, FlowRecord,
    Functional, ProbeTable,
};
use config::{AlphaKind, ManifoldKind, PathKind, StructureKind};
use nalgebra::DMatrix;
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// Exit status for an error: 2 for usage and configuration problems, 1 for
/// failures of the computation itself.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Argument(_)
        | Error::Expression(_)
        | Error::MissingAlpha
        | Error::IntegrationUnsupported
        | Error::Variant(_) => 2,
        _ => 1,
    }
}

pub fn build_geometry(cfg: &RunConfig) -> Result<Arc<ChartGeometry>> {
    let m = &cfg.manifold;
    match m.kind {
        ManifoldKind::FlatTorus => make_flat_torus(m.n, m.res),
        ManifoldKind::WarpedTorus => make_warped_torus(m.n, m.res, m.amplitude),
        ManifoldKind::SphereChart if m.center.is_empty() => make_sphere_chart(m.n, m.res, m.cutoff),
        ManifoldKind::SphereChart => make_sphere_chart_at(m.n, m.res, m.cutoff, &m.center),
    }
}

/// Row-major matrix from `"a, b; c, d"` (entries may also be space separated).
pub fn parse_matrix(text: &str, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n * n);
    let rows: Vec<&str> = text.split(';').collect();
    if rows.len() != n {
        return Err(Error::Config(format!("structure.matrix has {} rows, expected {n}", rows.len())));
    }
    for row in rows {
        let entries: Vec<&str> = row.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if entries.len() != n {
            return Err(Error::Config(format!("structure.matrix row '{}' has {} entries, expected {n}", row.trim(), entries.len())));
        }
        for e in entries {
            out.push(e.parse().map_err(|_| Error::Config(format!("structure.matrix entry '{e}' is not a number")))?);
        }
    }
    Ok(out)
}

pub fn build_structure(cfg: &RunConfig, geom: &Arc<ChartGeometry>) -> Result<ACStructure> {
    let s = &cfg.structure;
    let n = geom.n();
    let j0 = match &s.matrix {
        Some(text) => parse_matrix(text, n)?,
        None => standard_complex(n),
    };
    let rejected = |e: Error| match e {
        Error::NotAlmostComplex { residual } => {
            Error::Config(format!("structure.matrix does not square to -Id (residual {residual:.3e})"))
        }
        e => e,
    };
    match s.kind {
        StructureKind::Constant => make_constant_ac(geom, &j0).map_err(rejected),
        StructureKind::Perturbed => {
            make_constant_ac(geom, &j0).map_err(rejected)?;
            fixtures::perturbed_ac(geom, &j0, s.epsilon, s.seed)
        }
        StructureKind::Octonionic => make_s6_octonionic_ac(geom),
    }
}

pub fn build_alpha(cfg: &RunConfig, geom: &Arc<ChartGeometry>) -> Result<Option<AuxiliaryOneForm>> {
    let Some(a) = &cfg.alpha else { return Ok(None) };
    let spec = match a.kind {
        AlphaKind::Axis => AlphaSpec::Axis(a.axis.unwrap_or(0)),
        AlphaKind::Gradient => AlphaSpec::Gradient(Expr::parse(a.f.as_deref().unwrap_or(""))?),
    };
    make_alpha(geom, &spec).map(Some).map_err(|e| match e {
        Error::Index { index, n } => Error::Config(format!("alpha uses coordinate {index} on a {n}-dimensional chart")),
        Error::TrivialAlpha => Error::Config("alpha vanishes identically".into()),
        e => e,
    })
}

/// The configured α, or `dx_0` when none is given.
pub fn alpha_or_default(cfg: &RunConfig, geom: &Arc<ChartGeometry>) -> Result<(AuxiliaryOneForm, String)> {
    match build_alpha(cfg, geom)? {
        Some(a) => {
            let label = match cfg.alpha.as_ref().map(|a| a.kind) {
                Some(AlphaKind::Gradient) => format!("d({})", cfg.alpha.as_ref().and_then(|a| a.f.clone()).unwrap_or_default()),
                _ => format!("dx{}", cfg.alpha.as_ref().and_then(|a| a.axis).unwrap_or(0)),
            };
            Ok((a, label))
        }
        None => Ok((make_alpha(geom, &AlphaSpec::Axis(0))?, "dx0".into())),
    }
}

pub fn build_functional(cfg: &RunConfig, geom: &Arc<ChartGeometry>) -> Result<Functional> {
    let alpha = build_alpha(cfg, geom)?;
    Functional::new(cfg.functional_variant()?, alpha.as_ref())
}

/// Structure field along the configured probe path at time `t`.
pub fn probe_path(cfg: &RunConfig, base: &ACStructure) -> impl Fn(f64) -> Result<FormField> {
    let p = cfg.probe.clone();
    let base = base.clone();
    let generator = fixtures::random_matrix(base.geometry().n(), p.seed) * p.strength;
    move |t| match p.path {
        PathKind::Constant => Ok(base.field().clone()),
        PathKind::Exit => Ok(base.field().scale(1.0 + (t - p.exit_t).max(0.0))),
        PathKind::Conjugation => conjugate(&base, &(&generator * t).exp()),
    }
}

/// `P A P⁻¹` at every node.
fn conjugate(a: &ACStructure, p: &DMatrix<f64>) -> Result<FormField> {
    let geom = a.geometry();
    let n = geom.n();
    let inv = p.clone().try_inverse().ok_or_else(|| Error::Argument("conjugating matrix is singular".into()))?;
    let mut data = vec![0.0; geom.node_count() * n * n];
    for (node, out) in data.chunks_mut(n * n).enumerate() {
        let m = p * a.matrix(node) * &inv;
        for j in 0..n {
            for k in 0..n {
                out[j * n + k] = m[(k, j)];
            }
        }
    }
    FormField::from_data(geom, 1, ValueKind::Tangent, data)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(path: Option<&str>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(Path::new(p), bytes),
        None => std::io::stdout().write_all(bytes).map_err(Error::Io),
    }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports serialize");
    out.push(b'\n');
    out
}

fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Serialize)]
struct Provenance {
    program: &'static str,
    version: &'static str,
    config: String,
}

impl Provenance {
    fn of(cfg: &RunConfig) -> Self {
        Self { program: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION"), config: cfg.canonical() }
    }
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    alpha: String,
    #[serde(flatten)]
    report: &'a ClassificationReport,
    provenance: Provenance,
}

/// Classification of the configured structure, with the label of the α used.
pub fn classify_config(cfg: &RunConfig) -> Result<(ClassificationReport, String)> {
    let geom = build_geometry(cfg)?;
    let a = build_structure(cfg, &geom)?;
    let (alpha, label) = alpha_or_default(cfg, &geom)?;
    Ok((classify(&a, &alpha, cfg.tolerance.c, cfg.tolerance.floor)?, label))
}

/// Exit status 1 when the verdicts break a lattice implication.
pub fn cmd_classify(cfg: &RunConfig) -> Result<i32> {
    let (report, label) = classify_config(cfg)?;
    emit(cfg.output.report.as_deref(), &json(&ClassifyOutput { alpha: label, report: &report, provenance: Provenance::of(cfg) }))?;
    Ok(if report.lattice_consistent() { 0 } else { 1 })
}

#[derive(Serialize)]
struct FunctionalOutput {
    variant: String,
    extension: &'static str,
    geometry: String,
    value: f64,
    provenance: Provenance,
}

/// Value of the configured functional on the extended structure, with the
/// functional and geometry it was evaluated on.
pub fn evaluate_functional(cfg: &RunConfig) -> Result<(f64, Functional, Arc<ChartGeometry>)> {
    cfg.require_integration()?;
    let geom = build_geometry(cfg)?;
    let f = build_functional(cfg, &geom)?;
    let a = build_structure(cfg, &geom)?;
    let value = functional_value(&extend(a.field(), &f, cfg.structure.extension)?, &f)?;
    if !value.is_finite() {
        return Err(Error::FlowDivergence { step: 0 });
    }
    Ok((value, f, geom))
}

pub fn cmd_functional(cfg: &RunConfig) -> Result<i32> {
    let (value, f, geom) = evaluate_functional(cfg)?;
    let out = FunctionalOutput {
        variant: f.variant().to_string(),
        extension: cfg.structure.extension.name(),
        geometry: geom.label().to_string(),
        value,
        provenance: Provenance::of(cfg),
    };
    emit(cfg.output.report.as_deref(), &json(&out))?;
    Ok(0)
}

#[derive(Serialize)]
struct FlowOutput {
    variant: String,
    dt: f64,
    steps: usize,
    /// Largest single-step increase of the functional.
    max_increase: f64,
    trace: Vec<FlowRecord>,
    provenance: Provenance,
}

/// The CSV trace is written even when the flow diverges, up to the last
/// finite step.
pub fn cmd_flow(cfg: &RunConfig) -> Result<i32> {
    cfg.require_integration()?;
    let geom = build_geometry(cfg)?;
    let f = build_functional(cfg, &geom)?;
    let a = build_structure(cfg, &geom)?;
    let gamma = restrict_domain(&extend(a.field(), &f, cfg.structure.extension)?, f.variant())?;
    let mut trace = Vec::new();
    let result = run_flow(&gamma, &f, cfg.flow.dt, cfg.flow.steps, |r| trace.push(r));
    let rows: Vec<Vec<f64>> = trace.iter().map(|r| vec![r.step as f64, r.functional, r.el_residual]).collect();
    let table = csv_table(&["step", "functional", "el_residual"], &rows)?;
    emit(cfg.output.csv.as_deref(), &table)?;
    result?;
    if let Some(path) = cfg.output.report.as_deref() {
        let max_increase = trace.windows(2).map(|w| w[1].functional - w[0].functional).fold(0.0, f64::max);
        let out = FlowOutput {
            variant: f.variant().to_string(),
            dt: cfg.flow.dt,
            steps: cfg.flow.steps,
            max_increase,
            trace,
            provenance: Provenance::of(cfg),
        };
        write_atomic(Path::new(path), &json(&out))?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct ProbeOutput {
    /// Exploratory: finite-t samples along one path, not a statement about
    /// the limit.
    note: &'static str,
    variant: String,
    path: PathKind,
    #[serde(flatten)]
    table: ProbeTable,
    provenance: Provenance,
}

pub fn cmd_probe(cfg: &RunConfig) -> Result<i32> {
    cfg.require_integration()?;
    let geom = build_geometry(cfg)?;
    let f = build_functional(cfg, &geom)?;
    let a = build_structure(cfg, &geom)?;
    let table = stability_probe(probe_path(cfg, &a), &f, &cfg.probe.t, cfg.structure.extension)?;
    let rows: Vec<Vec<f64>> = table.rows.iter().map(|r| vec![r.t, r.functional, r.derivative]).collect();
    emit(cfg.output.csv.as_deref(), &csv_table(&["t", "functional", "derivative"], &rows)?)?;
    let out = ProbeOutput {
        note: "exploratory finite-t probe; the t -> infinity limit is not certified",
        variant: f.variant().to_string(),
        path: cfg.probe.path,
        table,
        provenance: Provenance::of(cfg),
    };
    match cfg.output.report.as_deref() {
        Some(p) => write_atomic(Path::new(p), &json(&out))?,
        None if cfg.output.csv.is_some() => emit(None, &json(&out))?,
        None => eprintln!("tail_trend = {}", out.table.tail_trend),
    }
    Ok(0)
}

/// Exit status 1 when any non-informational check fails.
pub fn cmd_verify(suite: Suite, cfg: &RunConfig) -> Result<i32> {
    let report = run_suite(suite, cfg)?;
    emit(cfg.output.report.as_deref(), &json(&report))?;
    Ok(if report.passed { 0 } else { 1 })
}
