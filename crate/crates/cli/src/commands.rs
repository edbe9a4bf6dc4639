//! Command handlers: resolve models from flags or files, run the solvers,
//! and assemble deterministic reports (JSON and CSV carry the same
//! columns; complex scalars appear as re/im pairs).

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use nhspectra::cf_matrix::{default_sigma_max, singular_values_mcf};
use nhspectra::cf_scalar::{cf_recurrence, cf_tail_limit, fixed_point_analysis, Stability};
use nhspectra::hermitize::singular_values_direct;
use nhspectra::model::{parse_model_spec, ModelFamily, ModelSpec, TridiagonalOperator};
use nhspectra::spectral::{ep_scan, eigenvalues_dense};
use nhspectra::Error;

use crate::output::{complex_json, fmt_f64, json_f64, to_json_string, CsvTable};

/// A CLI failure: machine-readable code, human message, process exit code.
#[derive(Debug)]
pub struct CliErr {
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
}

impl CliErr {
    pub fn input(code: &'static str, message: impl Into<String>) -> Self {
        CliErr {
            code,
            message: message.into(),
            exit: 2,
        }
    }
}

/// Exit statuses: 1 for computational failures, 2 for bad input.
pub fn from_core(e: Error) -> CliErr {
    let (code, exit) = match &e {
        Error::PivotBreakdown { .. } => ("PIVOT_BREAKDOWN", 1),
        Error::GridTooCoarse { .. } => ("GRID_TOO_COARSE", 1),
        Error::Eigensolver(_) => ("EIGENSOLVER_FAILURE", 1),
        Error::NotHermitian(_) => ("NOT_HERMITIAN", 1),
        Error::DegenerateMap => ("DEGENERATE_MAP", 2),
        Error::DimensionTooLarge { .. } => ("DIMENSION_TOO_LARGE", 2),
        Error::MalformedInput(_) => ("MALFORMED_INPUT", 2),
        Error::InconsistentDimensions(_) => ("INCONSISTENT_DIMENSIONS", 2),
        Error::UnknownVariant(_) => ("UNKNOWN_VARIANT", 2),
        Error::NonFinite(_) => ("NON_FINITE", 2),
    };
    CliErr {
        code,
        exit,
        message: e.to_string(),
    }
}

/// Model selection shared by every command.
#[derive(Debug, Clone)]
pub enum ModelSource {
    Ubh {
        particles: usize,
        gamma: Option<f64>,
        v: f64,
        c: f64,
    },
    Bh {
        particles: usize,
        epsilon: Complex64,
        v: Complex64,
        c: Complex64,
    },
    NonBh5 {
        gamma: Option<f64>,
    },
    File {
        path: String,
    },
}

impl ModelSource {
    /// Resolve to a concrete model (gamma must be fixed).
    pub fn to_spec(&self) -> Result<ModelSpec, CliErr> {
        match self {
            ModelSource::Ubh {
                particles,
                gamma,
                v,
                c,
            } => Ok(ModelSpec::UnconventionalBh {
                particles: *particles,
                gamma: gamma.ok_or_else(|| {
                    CliErr::input("MISSING_PARAMETER", "--ubh requires --gamma")
                })?,
                v: *v,
                c: *c,
            }),
            ModelSource::Bh {
                particles,
                epsilon,
                v,
                c,
            } => Ok(ModelSpec::BoseHubbard {
                particles: *particles,
                epsilon: *epsilon,
                v: *v,
                c: *c,
            }),
            ModelSource::NonBh5 { gamma } => Ok(ModelSpec::NonBh5 {
                gamma: gamma.ok_or_else(|| {
                    CliErr::input("MISSING_PARAMETER", "--nonbh5 requires --gamma")
                })?,
            }),
            ModelSource::File { path } => {
                let text = read_model_file(Path::new(path))?;
                parse_model_spec(&text).map_err(from_core)
            }
        }
    }

    /// Resolve to a one-parameter family for scans and sweeps (the swept
    /// parameter enters as the imaginary on-site imbalance).
    pub fn to_family(&self) -> Result<ModelFamily, CliErr> {
        match self {
            ModelSource::Ubh { particles, v, c, .. } => Ok(ModelFamily::BoseHubbardGamma {
                particles: *particles,
                v: Complex64::new(*v, 0.0),
                c: Complex64::new(*c, 0.0),
            }),
            ModelSource::Bh {
                particles, v, c, ..
            } => Ok(ModelFamily::BoseHubbardGamma {
                particles: *particles,
                v: *v,
                c: *c,
            }),
            ModelSource::NonBh5 { .. } => Ok(ModelFamily::NonBh5),
            ModelSource::File { .. } => Err(CliErr::input(
                "NOT_A_FAMILY",
                "parameter sweeps need a parametric model (--ubh, --bh or --nonbh5), not --file",
            )),
        }
    }

    /// Canonical echo for the config block.
    pub fn describe(&self) -> Value {
        match self {
            ModelSource::Ubh {
                particles,
                gamma,
                v,
                c,
            } => json!({
                "type": "ubh",
                "particles": particles,
                "gamma": gamma.map(json_f64).unwrap_or(Value::Null),
                "v": json_f64(*v),
                "c": json_f64(*c),
            }),
            ModelSource::Bh {
                particles,
                epsilon,
                v,
                c,
            } => json!({
                "type": "bh",
                "particles": particles,
                "epsilon": complex_json(*epsilon),
                "v": complex_json(*v),
                "c": complex_json(*c),
            }),
            ModelSource::NonBh5 { gamma } => json!({
                "type": "nonbh5",
                "gamma": gamma.map(json_f64).unwrap_or(Value::Null),
            }),
            ModelSource::File { path } => json!({ "type": "file", "path": path }),
        }
    }
}

fn read_model_file(path: &Path) -> Result<String, CliErr> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliErr::input(
                "INPUT_NOT_FOUND",
                format!("model file {} not found", path.display()),
            )
        } else {
            CliErr::input("IO_ERROR", format!("cannot read {}: {e}", path.display()))
        }
    })
}

fn build(spec: &ModelSpec) -> Result<TridiagonalOperator, CliErr> {
    spec.build().map_err(from_core)
}

/// One result column: a name plus a JSON value and its CSV cell.
struct Col {
    name: String,
    json: Value,
    cell: String,
}

fn col_f64(name: impl Into<String>, x: f64) -> Col {
    Col {
        name: name.into(),
        json: json_f64(x),
        cell: fmt_f64(x),
    }
}

fn col_bool(name: impl Into<String>, b: bool) -> Col {
    Col {
        name: name.into(),
        json: Value::Bool(b),
        cell: b.to_string(),
    }
}

fn col_str(name: impl Into<String>, s: impl Into<String>) -> Col {
    let s = s.into();
    Col {
        name: name.into(),
        json: Value::String(s.clone()),
        cell: s,
    }
}

fn col_usize(name: impl Into<String>, n: usize) -> Col {
    Col {
        name: name.into(),
        json: Value::Number(n.into()),
        cell: n.to_string(),
    }
}

fn push_complex(cols: &mut Vec<Col>, name: &str, z: Complex64) {
    cols.push(col_f64(format!("{name}_re"), z.re));
    cols.push(col_f64(format!("{name}_im"), z.im));
}

/// Assemble a single-row report whose JSON object and CSV row carry the
/// same columns.
fn scalar_report(
    command: &'static str,
    config: Value,
    cols: Vec<Col>,
    grouped: Vec<(&'static str, Value)>,
    warning: Option<String>,
) -> Report {
    let mut result = Map::new();
    // grouped values (arrays) come first so the JSON carries structure the
    // flat CSV cannot; the flat columns follow
    for (k, v) in grouped {
        result.insert(k.to_string(), v);
    }
    let mut header = Vec::with_capacity(cols.len());
    let mut row = Vec::with_capacity(cols.len());
    for c in cols {
        result.insert(c.name.clone(), c.json);
        header.push(c.name);
        row.push(c.cell);
    }
    Report::Scalar {
        command,
        config,
        result: Value::Object(result),
        header,
        row,
        warning,
    }
}

/// `model`: validate, summarize, optionally emit the document.
pub fn run_model(source: &ModelSource, emit: bool) -> Result<Report, CliErr> {
    let spec = source.to_spec()?;
    if emit {
        return Ok(Report::Raw(spec.to_document()));
    }
    let h = build(&spec)?;
    let cols = vec![
        col_usize("dim", h.dim()),
        col_bool("complex_symmetric", h.is_complex_symmetric()),
        col_bool("hermitian", h.is_hermitian()),
        col_f64("max_norm", h.max_norm()),
    ];
    Ok(scalar_report(
        "model",
        json!({ "model": source.describe() }),
        cols,
        vec![],
        None,
    ))
}

/// `spectrum`: dense eigenvalues with determinant residuals.
pub fn run_spectrum(source: &ModelSource) -> Result<Report, CliErr> {
    let h = build(&source.to_spec()?)?;
    let report = eigenvalues_dense(&h).map_err(from_core)?;
    let mut cols = Vec::new();
    for (k, e) in report.eigenvalues.iter().enumerate() {
        push_complex(&mut cols, &format!("e{k}"), *e);
    }
    for (k, r) in report.residuals.iter().enumerate() {
        cols.push(col_f64(format!("res{k}"), *r));
    }
    cols.push(col_bool("all_real", report.all_real));
    let grouped = vec![(
        "eigenvalues",
        Value::Array(
            report
                .eigenvalues
                .iter()
                .map(|e| complex_json(*e))
                .collect(),
        ),
    )];
    Ok(scalar_report(
        "spectrum",
        json!({ "model": source.describe() }),
        cols,
        grouped,
        None,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvMethod {
    Mcf,
    Direct,
}

#[derive(Debug, Clone)]
pub struct SvOptions {
    pub method: SvMethod,
    pub sigma_max: Option<f64>,
    pub grid: usize,
    pub tol: f64,
}

fn sv_once(h: &TridiagonalOperator, opts: &SvOptions) -> Result<Vec<f64>, Error> {
    match opts.method {
        SvMethod::Direct => singular_values_direct(h),
        SvMethod::Mcf => {
            let smax = opts.sigma_max.unwrap_or_else(|| default_sigma_max(h));
            singular_values_mcf(h, smax, opts.grid, opts.tol)
        }
    }
}

/// `singular-values`: continued-fraction secular roots by default, with
/// automatic fallback to the dense product when the grid cannot separate
/// the roots.
pub fn run_singular_values(source: &ModelSource, opts: &SvOptions) -> Result<Report, CliErr> {
    let h = build(&source.to_spec()?)?;
    let (sv, warning) = match sv_once(&h, opts) {
        Ok(sv) => (sv, None),
        Err(e @ Error::GridTooCoarse { .. }) if opts.method == SvMethod::Mcf => {
            let sv = singular_values_direct(&h).map_err(from_core)?;
            (sv, Some(format!("fell back to the direct method: {e}")))
        }
        Err(e) => return Err(from_core(e)),
    };
    let config = json!({
        "model": source.describe(),
        "method": if opts.method == SvMethod::Mcf { "mcf" } else { "direct" },
        "grid": opts.grid,
        "tol": json_f64(opts.tol),
        "sigma_max": opts.sigma_max.map(json_f64).unwrap_or(Value::Null),
    });
    let cols = sv
        .iter()
        .enumerate()
        .map(|(k, s)| col_f64(format!("sigma{k}"), *s))
        .collect();
    Ok(scalar_report("singular-values", config, cols, vec![], warning))
}

/// `green`: scalar continued-fraction resolvent entry at one shift.
pub fn run_green(source: &ModelSource, z: Complex64) -> Result<Report, CliErr> {
    let h = build(&source.to_spec()?)?;
    let r = cf_recurrence(&h, z).map_err(from_core)?;
    let mut cols = Vec::new();
    push_complex(&mut cols, "z", z);
    push_complex(&mut cols, "green", r.value);
    Ok(scalar_report(
        "green",
        json!({ "model": source.describe(), "z": complex_json(z) }),
        cols,
        vec![],
        None,
    ))
}

/// `ep-scan`: exceptional points of the gamma family.
pub fn run_ep_scan(
    source: &ModelSource,
    range: (f64, f64),
    steps: usize,
) -> Result<Report, CliErr> {
    if steps < 8 {
        return Err(CliErr::input("BAD_RANGE", "ep-scan needs --steps >= 8"));
    }
    if range.0 >= range.1 {
        return Err(CliErr::input("BAD_RANGE", "range must satisfy lo < hi"));
    }
    let family = source.to_family()?;
    let report = ep_scan(&family, range.0, range.1, steps).map_err(from_core)?;
    let mut cols = Vec::new();
    for (k, (loc, ord)) in report
        .locations
        .iter()
        .zip(&report.orders)
        .enumerate()
    {
        cols.push(col_f64(format!("location{k}"), *loc));
        cols.push(col_usize(format!("order{k}"), *ord));
    }
    cols.push(col_f64("gap_min", report.gap_min));
    cols.push(col_f64("eigvec_condition", report.eigvec_condition));
    cols.push(col_bool("reality_boundary", report.reality_boundary));
    let config = json!({
        "model": source.describe(),
        "range": [json_f64(range.0), json_f64(range.1)],
        "steps": steps,
    });
    Ok(scalar_report("ep-scan", config, cols, vec![], None))
}

/// `fixed-point`: both roots of the tail map plus the iteration from f0.
#[allow(clippy::too_many_arguments)]
pub fn run_fixed_point(
    alpha: Complex64,
    beta: Complex64,
    energy: Complex64,
    f0: Complex64,
    max_iter: usize,
    tol: f64,
) -> Result<Report, CliErr> {
    if max_iter == 0 {
        return Err(CliErr::input("BAD_RANGE", "--max-iter must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(CliErr::input("BAD_RANGE", "--tol must be positive"));
    }
    let report = fixed_point_analysis(alpha, beta, energy).map_err(from_core)?;
    let stable = match report.stable {
        Stability::Plus => "plus",
        Stability::Minus => "minus",
        Stability::None => "none",
        Stability::Marginal => "marginal",
    };
    let mut cols = Vec::new();
    push_complex(&mut cols, "f_plus", report.f_plus);
    push_complex(&mut cols, "f_minus", report.f_minus);
    cols.push(col_f64("deriv_plus", report.deriv_plus));
    cols.push(col_f64("deriv_minus", report.deriv_minus));
    cols.push(col_str("stable", stable));
    match cf_tail_limit(alpha, beta, energy, f0, max_iter, tol) {
        Ok(r) => {
            push_complex(&mut cols, "limit", r.value);
            cols.push(col_bool("converged", r.converged));
            cols.push(col_usize("iterations", r.iterations));
            cols.push(col_str("iteration_status", "ok"));
        }
        Err(e) => {
            cols.push(col_str("iteration_status", from_core(e).code));
        }
    }
    let config = json!({
        "alpha": complex_json(alpha),
        "beta": complex_json(beta),
        "energy": complex_json(energy),
        "f0": complex_json(f0),
        "max_iter": max_iter,
        "tol": json_f64(tol),
    });
    Ok(scalar_report("fixed-point", config, cols, vec![], None))
}

/// Quantity evaluated per sweep row.
pub enum SweepKind {
    Spectrum,
    SingularValues(SvOptions),
    Green { z_real: (f64, f64), z_imag: f64 },
}

/// `sweep`: evaluate over a grid with `steps` points; rows stay in
/// ascending parameter order and per-row failures land in the status
/// column without aborting the sweep.
pub fn run_sweep(
    source: &ModelSource,
    kind: &SweepKind,
    range: Option<(f64, f64)>,
    steps: usize,
) -> Result<Report, CliErr> {
    if steps < 1 {
        return Err(CliErr::input("BAD_RANGE", "sweep needs --steps >= 1"));
    }
    let grid = |lo: f64, hi: f64| -> Result<Vec<f64>, CliErr> {
        if steps > 1 && lo >= hi {
            return Err(CliErr::input("BAD_RANGE", "range must satisfy lo < hi"));
        }
        Ok((0..steps)
            .map(|i| {
                if steps == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (steps - 1) as f64
                }
            })
            .collect())
    };

    match kind {
        SweepKind::Spectrum => {
            let (lo, hi) = range
                .ok_or_else(|| CliErr::input("BAD_RANGE", "sweep needs --range lo hi"))?;
            let family = source.to_family()?;
            let gammas = grid(lo, hi)?;
            let results: Vec<Result<Vec<Complex64>, Error>> = with_pool(|| {
                gammas
                    .par_iter()
                    .map(|g| eigenvalues_dense(&family.build(*g)).map(|s| s.eigenvalues))
                    .collect()
            })?;
            let mut header = vec!["gamma".to_string(), "status".to_string()];
            for k in 0..family.dim() {
                header.push(format!("e{k}_re"));
                header.push(format!("e{k}_im"));
            }
            let rows = assemble_rows(&header, &gammas, results, |vals, row| {
                for e in vals {
                    row.push(fmt_f64(e.re));
                    row.push(fmt_f64(e.im));
                }
            });
            Ok(sweep_report("spectrum", source, (lo, hi), steps, header, rows))
        }
        SweepKind::SingularValues(opts) => {
            let (lo, hi) = range
                .ok_or_else(|| CliErr::input("BAD_RANGE", "sweep needs --range lo hi"))?;
            let family = source.to_family()?;
            let gammas = grid(lo, hi)?;
            let results: Vec<Result<Vec<f64>, Error>> = with_pool(|| {
                gammas
                    .par_iter()
                    .map(|g| {
                        let h = family.build(*g);
                        sv_once(&h, opts).or_else(|e| match e {
                            Error::GridTooCoarse { .. } if opts.method == SvMethod::Mcf => {
                                singular_values_direct(&h)
                            }
                            other => Err(other),
                        })
                    })
                    .collect()
            })?;
            let mut header = vec!["gamma".to_string(), "status".to_string()];
            for k in 0..family.dim() {
                header.push(format!("sigma{k}"));
            }
            let rows = assemble_rows(&header, &gammas, results, |vals, row| {
                for s in vals {
                    row.push(fmt_f64(*s));
                }
            });
            Ok(sweep_report(
                "singular-values",
                source,
                (lo, hi),
                steps,
                header,
                rows,
            ))
        }
        SweepKind::Green { z_real, z_imag } => {
            let h = build(&source.to_spec()?)?;
            let xs = grid(z_real.0, z_real.1)?;
            let results: Vec<Result<Complex64, Error>> = with_pool(|| {
                xs.par_iter()
                    .map(|x| cf_recurrence(&h, Complex64::new(*x, *z_imag)).map(|r| r.value))
                    .collect()
            })?;
            let header = vec![
                "z_re".to_string(),
                "z_im".to_string(),
                "status".to_string(),
                "green_re".to_string(),
                "green_im".to_string(),
            ];
            let mut rows = Vec::with_capacity(xs.len());
            for (x, res) in xs.iter().zip(results) {
                let mut row = vec![fmt_f64(*x), fmt_f64(*z_imag)];
                match res {
                    Ok(v) => {
                        row.push("ok".into());
                        row.push(fmt_f64(v.re));
                        row.push(fmt_f64(v.im));
                    }
                    Err(e) => {
                        row.push(from_core(e).code.into());
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
                rows.push(row);
            }
            Ok(sweep_report("green", source, *z_real, steps, header, rows))
        }
    }
}

fn assemble_rows<T>(
    header: &[String],
    params: &[f64],
    results: Vec<Result<T, Error>>,
    fill: impl Fn(&T, &mut Vec<String>),
) -> Vec<Vec<String>> {
    let width = header.len();
    params
        .iter()
        .zip(results)
        .map(|(g, res)| {
            let mut row = vec![fmt_f64(*g)];
            match res {
                Ok(vals) => {
                    row.push("ok".into());
                    fill(&vals, &mut row);
                }
                Err(e) => row.push(from_core(e).code.into()),
            }
            row.resize(width, String::new());
            row
        })
        .collect()
}

fn sweep_report(
    quantity: &'static str,
    source: &ModelSource,
    range: (f64, f64),
    steps: usize,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
) -> Report {
    let config = json!({
        "model": source.describe(),
        "quantity": quantity,
        "range": [json_f64(range.0), json_f64(range.1)],
        "steps": steps,
    });
    Report::Sweep {
        config,
        header,
        rows,
    }
}

/// Run sweep rows inside a worker pool bounded by NHSPECTRA_THREADS
/// (unset: the default pool).
fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, CliErr> {
    match std::env::var("NHSPECTRA_THREADS") {
        Ok(v) => {
            let n: usize = v.parse().unwrap_or(0);
            if n == 0 {
                return Err(CliErr::input(
                    "BAD_ENVIRONMENT",
                    format!("NHSPECTRA_THREADS must be a positive integer, got {v:?}"),
                ));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliErr {
                    code: "POOL_FAILURE",
                    message: e.to_string(),
                    exit: 1,
                })?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// A finished command ready to render.
pub enum Report {
    /// Pre-rendered text (model --emit).
    Raw(String),
    /// Single-evaluation result: one JSON object / one CSV row.
    Scalar {
        command: &'static str,
        config: Value,
        result: Value,
        header: Vec<String>,
        row: Vec<String>,
        warning: Option<String>,
    },
    /// Grid result: JSON rows / CSV table.
    Sweep {
        config: Value,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    },
}

impl Report {
    pub fn render(&self, csv: bool) -> String {
        match self {
            Report::Raw(text) => {
                let mut s = text.clone();
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s
            }
            Report::Scalar {
                command,
                config,
                result,
                header,
                row,
                warning,
            } => {
                if csv {
                    let mut comments = vec![
                        format!("nhspectra {command}"),
                        format!("config: {}", to_json_string(config)),
                    ];
                    if let Some(w) = warning {
                        comments.push(format!("warning: {w}"));
                    }
                    CsvTable {
                        comments,
                        header: header.clone(),
                        rows: vec![row.clone()],
                    }
                    .render()
                } else {
                    let mut top = Map::new();
                    top.insert("command".into(), Value::String((*command).into()));
                    top.insert("config".into(), config.clone());
                    top.insert("result".into(), result.clone());
                    if let Some(w) = warning {
                        top.insert("warning".into(), Value::String(w.clone()));
                    }
                    let mut s = to_json_string(&Value::Object(top));
                    s.push('\n');
                    s
                }
            }
            Report::Sweep {
                config,
                header,
                rows,
            } => {
                if csv {
                    CsvTable {
                        comments: vec![
                            "nhspectra sweep".to_string(),
                            format!("config: {}", to_json_string(config)),
                        ],
                        header: header.clone(),
                        rows: rows.clone(),
                    }
                    .render()
                } else {
                    let json_rows: Vec<Value> = rows
                        .iter()
                        .map(|r| {
                            let mut obj = Map::new();
                            for (k, v) in header.iter().zip(r) {
                                obj.insert(k.clone(), cell_to_json(v));
                            }
                            Value::Object(obj)
                        })
                        .collect();
                    let mut top = Map::new();
                    top.insert("command".into(), Value::String("sweep".into()));
                    top.insert("config".into(), config.clone());
                    top.insert("rows".into(), Value::Array(json_rows));
                    let mut s = to_json_string(&Value::Object(top));
                    s.push('\n');
                    s
                }
            }
        }
    }
}

fn cell_to_json(cell: &str) -> Value {
    if cell.is_empty() {
        Value::Null
    } else if cell == "true" || cell == "false" {
        Value::Bool(cell == "true")
    } else if let Ok(x) = cell.parse::<f64>() {
        json_f64(x)
    } else {
        Value::String(cell.to_string())
    }
}
