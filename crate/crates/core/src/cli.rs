//! Command-line front end: argument parsing, config merging, tables and exit codes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{Value, json};

use sphcoh::bargmann::{StateSource, husimi_on_grid, resolve_identity_matrix, identity_deviation, round_trip_error, sb_inverse};
use sphcoh::basis::{BasisLabel, BasisSpec};
use sphcoh::coherent::{CoherentState, certified_cutoff, position_wavefunction_batch, relative_tail};
use sphcoh::kernels::{KernelEvalRequest, KernelMethod, evaluate_rho, nu};
use sphcoh::model::{ComplexSpherePoint, ModelParams, PhasePoint, complexify};
use sphcoh::quadrature::{FiberWeight, QuadratureSpec, phase_point, tangent_frame};
use sphcoh::verify::{Suite, VerifyOptions, run_suite};
use sphcoh::Error;

pub const THREADS_ENV: &str = "SPHCOH_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sphcoh", version, about = "Heat kernels, coherent states and the Segal–Bargmann transform on S^d")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads; defaults to $SPHCOH_THREADS, then the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file whose keys mirror the flags; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Record wall-clock time in the metadata (makes output run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    Sphere,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    ThetaSum,
    Spectral,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of ρ_τ on S^d or ν on H^d.
    Kernel(KernelArgs),
    /// Position wavefunction of a coherent state along a great circle.
    Coherent(CoherentArgs),
    /// Segal–Bargmann transform of a state on a phase-space grid.
    Transform(TransformArgs),
    /// Transform followed by the fiber inversion, against the original state.
    Invert(InvertArgs),
    /// Husimi density on the quadrature grid, with node weights.
    Husimi(HusimiArgs),
    /// Gram matrix of the phase-space resolution of the identity.
    ResolveIdentity(ResolveArgs),
    /// Run invariant suites and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = Space::Sphere)]
    pub space: Space,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Heat time; `--time` is an alias.
    #[arg(long, visible_alias = "time", allow_hyphen_values = true)]
    pub tau: f64,
    /// Real angle grid `start:stop:count` (sphere).
    #[arg(long)]
    pub theta: Option<String>,
    /// Constant imaginary part added to every angle.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_im: Option<f64>,
    /// Radius grid `start:stop:count` (hyperbolic).
    #[arg(long)]
    pub radius: Option<String>,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
}

/// Either `--tau` alone or the full physical quadruple.
#[derive(Debug, Args, Clone)]
pub struct Units {
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CoherentArgs {
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub units: Units,
    /// Label position, comma separated (on the sphere of radius r).
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Label momentum, comma separated (tangent at x).
    #[arg(long, allow_hyphen_values = true)]
    pub p: String,
    /// Number of points on the great circle through x.
    #[arg(long, default_value_t = 64)]
    pub points: usize,
}

#[derive(Debug, Args, Clone)]
pub struct StateArgs {
    /// `fourier:N`, `harmonic:L,M`, `zonal:L`, `point:x0,x1,...` or `random:SEED[:DEGREE]`.
    #[arg(long, allow_hyphen_values = true)]
    pub state: Option<String>,
    /// JSON state: a serialized state or `{"dim", "cutoff", "coefficients": [[re, im], ...]}`.
    #[arg(long)]
    pub state_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub units: Units,
    #[command(flatten)]
    pub state: StateArgs,
    /// Position angle grid along the great circle in the (x0, x1) plane.
    #[arg(long, default_value = "0:3.141592653589793:9")]
    pub theta: String,
    /// Momentum grid along the circle's tangent.
    #[arg(long, default_value = "0:1:5")]
    pub p: String,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub units: Units,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value = "0:3.141592653589793:9")]
    pub theta: String,
}

#[derive(Debug, Args)]
pub struct HusimiArgs {
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub units: Units,
    #[command(flatten)]
    pub state: StateArgs,
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub units: Units,
    /// Largest |n| (d = 1) or degree (d = 2).
    #[arg(long, default_value_t = 4)]
    pub cutoff: usize,
    /// Use the inversion density in place of the resolution density.
    #[arg(long)]
    pub negative_control: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suites to run; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub dim: Vec<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub negative_controls: bool,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::UnsupportedDimension(_)
            | Error::DimensionMismatch { .. }
            | Error::ConstraintViolation { .. } => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_NUMERICAL, message: format!("i/o: {e}") }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

const SUBCOMMANDS: [&str; 7] = ["kernel", "coherent", "transform", "invert", "husimi", "resolve-identity", "verify"];

/// Inserts flags from `--config` right after the subcommand, so later command-line flags
/// override them.
pub fn merge_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = strs.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::usage(format!("cannot read config {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("config {path} is not JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(Failure::usage(format!("config {path} must be a JSON object")));
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (key, v) in &map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => extra.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                for item in items {
                    extra.push(flag.clone().into());
                    extra.push(scalar(item)?.into());
                }
            }
            other => {
                extra.push(flag.into());
                extra.push(scalar(other)?.into());
            }
        }
    }
    let Some(pos) = strs.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(args);
    };
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn scalar(v: &Value) -> CliResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(Failure::usage(format!("unsupported config value {v}"))),
    }
}

/// Thread count from the flag, then the environment.
pub fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        if n == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// `start:stop:count`, inclusive of both ends.
pub fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Failure::usage(format!("range {s:?} must be start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn parse_vector(s: &str, name: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::usage(format!("--{name}: cannot parse {t:?}"))))
        .collect()
}

impl Units {
    fn params(&self, dim: usize) -> CliResult<ModelParams> {
        let quad = [self.radius, self.mass, self.omega, self.hbar];
        let given = quad.iter().filter(|v| v.is_some()).count();
        match (self.tau, given) {
            (Some(_), n) if n > 0 => Err(Failure::usage("give either --tau or --radius --mass --omega --hbar, not both")),
            (Some(t), _) => Ok(ModelParams::dimensionless(dim, t)?),
            (None, 4) => Ok(ModelParams::new(dim, self.radius.unwrap(), self.mass.unwrap(), self.omega.unwrap(), self.hbar.unwrap())?),
            (None, 0) => Err(Failure::usage("missing --tau (or the full --radius --mass --omega --hbar)")),
            (None, _) => Err(Failure::usage("--radius --mass --omega --hbar must be given together")),
        }
    }
}

fn params_json(p: &ModelParams) -> Value {
    json!({"d": p.d, "r": p.r, "m": p.m, "omega": p.omega, "hbar": p.hbar, "tau": p.tau()})
}

impl StateArgs {
    fn source(&self, dim: usize) -> CliResult<StateSource> {
        let src = match (&self.state, &self.state_file) {
            (Some(_), Some(_)) => return Err(Failure::usage("give --state or --state-file, not both")),
            (None, None) => return Err(Failure::usage("missing --state or --state-file")),
            (Some(s), None) => parse_state(s, dim)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
                state_from_json(&text)?
            }
        };
        if src.dim() != dim {
            return Err(Failure::usage(format!("state lives on S^{} but --dim is {dim}", src.dim())));
        }
        Ok(src)
    }
}

fn parse_state(s: &str, dim: usize) -> CliResult<StateSource> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let bad = || Failure::usage(format!("cannot parse state {s:?}"));
    let ints = |t: &str| -> CliResult<Vec<i64>> { t.split(',').map(|v| v.trim().parse::<i64>().map_err(|_| bad())).collect() };
    let north: Vec<f64> = (0..=dim).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    Ok(match kind {
        "fourier" => {
            let n = ints(rest)?;
            if n.len() != 1 {
                return Err(bad());
            }
            StateSource::Basis { dim: 1, label: BasisLabel::Fourier(n[0]) }
        }
        "harmonic" => {
            let v = ints(rest)?;
            if v.len() != 2 || v[0] < 0 || v[1].abs() > v[0] {
                return Err(bad());
            }
            StateSource::Basis { dim: 2, label: BasisLabel::Harmonic { l: v[0] as usize, m: v[1] } }
        }
        "zonal" => {
            let (deg, axis) = rest.split_once('@').unwrap_or((rest, ""));
            let degree: usize = deg.trim().parse().map_err(|_| bad())?;
            let axis = if axis.is_empty() { north } else { parse_vector(axis, "state")? };
            StateSource::Zonal { degree, axis }
        }
        "point" => StateSource::PointMass { x: parse_vector(rest, "state")? },
        "random" => {
            let (seed, deg) = rest.split_once(':').unwrap_or((rest, "2"));
            let seed: u64 = seed.trim().parse().map_err(|_| bad())?;
            let deg: usize = deg.trim().parse().map_err(|_| bad())?;
            StateSource::random(dim, deg, seed)?
        }
        _ => return Err(bad()),
    })
}

fn state_from_json(text: &str) -> CliResult<StateSource> {
    if let Ok(s) = serde_json::from_str::<StateSource>(text) {
        return Ok(s);
    }
    #[derive(serde::Deserialize)]
    struct Coeffs {
        dim: usize,
        cutoff: usize,
        coefficients: Vec<Complex64>,
    }
    let c: Coeffs = serde_json::from_str(text).map_err(|e| Failure::usage(format!("state file: {e}")))?;
    let spec = BasisSpec::new(c.dim, c.cutoff, 0)?;
    if c.coefficients.len() != spec.size() {
        return Err(Failure::usage(format!(
            "state file: {} coefficients given, the basis has {}",
            c.coefficients.len(),
            spec.size()
        )));
    }
    Ok(StateSource::Coefficients { spec, values: c.coefficients })
}

/// A cell of an output table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        // normalise −0
        return format!("{:.16e}", 0.0);
    }
    format!("{v:.16e}")
}

pub struct Table {
    pub metadata: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { metadata: BTreeMap::new(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn meta(&mut self, key: &str, v: Value) {
        self.metadata.insert(key.to_string(), v);
    }

    pub fn render(&self, format: Format) -> CliResult<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                for (k, v) in &self.metadata {
                    write!(buf, "# {k}: {v}\r\n")?;
                }
                {
                    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut buf);
                    w.write_record(&self.columns).map_err(csv_err)?;
                    for row in &self.rows {
                        w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
                    }
                    w.flush()?;
                }
                Ok(buf)
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
                    .collect();
                let doc = json!({"metadata": self.metadata, "rows": rows});
                let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| Failure { code: EXIT_NUMERICAL, message: e.to_string() })?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

fn csv_err(e: csv::Error) -> Failure {
    Failure { code: EXIT_NUMERICAL, message: format!("csv: {e}") }
}

fn kernel_method(m: MethodArg) -> KernelMethod {
    match m {
        MethodArg::Auto => KernelMethod::Auto,
        MethodArg::ThetaSum => KernelMethod::ThetaSum,
        MethodArg::Spectral => KernelMethod::Spectral,
    }
}

fn cmd_kernel(a: &KernelArgs) -> CliResult<Table> {
    match a.space {
        Space::Sphere => {
            if a.radius.is_some() {
                return Err(Failure::usage("--radius is the hyperbolic grid; use --theta on the sphere"));
            }
            let im = a.theta_im.unwrap_or(0.0);
            let grid = parse_range(a.theta.as_deref().unwrap_or("0:3.141592653589793:33"))?;
            let method = kernel_method(a.method);
            let evals: Vec<_> = {
                use rayon::prelude::*;
                grid.par_iter()
                    .map(|&t| evaluate_rho(&KernelEvalRequest::new(a.dim, a.tau, Complex64::new(t, im)).with_method(method)))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let mut t = Table::new(&["theta_re", "theta_im", "value_re", "value_im", "method", "terms", "error_bound"]);
            t.meta("space", json!("sphere"));
            t.meta("dim", json!(a.dim));
            t.meta("tau", json!(a.tau));
            t.meta("requested_method", json!(method.name()));
            for (th, e) in grid.iter().zip(evals) {
                t.rows.push(vec![
                    Cell::Num(*th),
                    Cell::Num(im),
                    Cell::Num(e.value.re),
                    Cell::Num(e.value.im),
                    Cell::Text(e.method.name().into()),
                    Cell::Int(e.terms as i64),
                    Cell::Num(e.error_bound),
                ]);
            }
            Ok(t)
        }
        Space::Hyperbolic => {
            if a.theta.is_some() || a.theta_im.is_some() {
                return Err(Failure::usage("--theta applies to the sphere; use --radius on H^d"));
            }
            let grid = parse_range(a.radius.as_deref().unwrap_or("0:5:51"))?;
            let mut t = Table::new(&["radius", "value"]);
            t.meta("space", json!("hyperbolic"));
            t.meta("dim", json!(a.dim));
            t.meta("time", json!(a.tau));
            for r in grid {
                t.rows.push(vec![Cell::Num(r), Cell::Num(nu(a.dim, a.tau, r)?)]);
            }
            Ok(t)
        }
    }
}

fn cmd_coherent(a: &CoherentArgs) -> CliResult<Table> {
    let params = a.units.params(a.dim)?;
    let pt = PhasePoint::new(&params, parse_vector(&a.x, "x")?, parse_vector(&a.p, "p")?)?;
    let label = complexify(&params, &pt);
    let tau = params.tau();
    let state = CoherentState::new(ComplexSpherePoint::new(1.0, label.unit_coords())?, tau)?;
    let x: Vec<f64> = pt.x().iter().map(|v| v / params.r).collect();
    let pn = pt.momentum_norm();
    let v: Vec<f64> = if pn > 0.0 { pt.p().iter().map(|t| t / pn).collect() } else { tangent_frame(&x)[0].clone() };
    if a.points == 0 {
        return Err(Failure::usage("--points must be positive"));
    }
    let angles: Vec<f64> = (0..a.points).map(|k| 2.0 * std::f64::consts::PI * k as f64 / a.points as f64).collect();
    let pts: Vec<ComplexSpherePoint> = angles
        .iter()
        .map(|t| ComplexSpherePoint::from_real(1.0, &x.iter().zip(&v).map(|(xi, vi)| t.cos() * xi + t.sin() * vi).collect::<Vec<_>>()))
        .collect::<Result<_, _>>()?;
    let psi = position_wavefunction_batch(&state, &pts)?;
    let norm2 = state.norm_squared()?;
    let mut cols: Vec<String> = vec!["angle".into()];
    cols.extend((0..=a.dim).map(|k| format!("x{k}")));
    cols.extend(["psi_re", "psi_im", "density"].map(String::from));
    let mut t = Table::new(&[]);
    t.columns = cols;
    let alpha = label.alpha() / (params.r * params.r);
    let cutoff = certified_cutoff(a.dim, tau, alpha, 1e-14);
    t.meta("params", params_json(&params));
    t.meta("label_re", json!(label.unit_coords().iter().map(|z| z.re).collect::<Vec<_>>()));
    t.meta("label_im", json!(label.unit_coords().iter().map(|z| z.im).collect::<Vec<_>>()));
    t.meta("norm_squared", json!(norm2));
    t.meta("certified_cutoff", json!(cutoff));
    t.meta("relative_tail", json!(relative_tail(a.dim, tau, alpha, cutoff)));
    for ((ang, p), z) in angles.iter().zip(&pts).zip(&psi) {
        let mut row = vec![Cell::Num(*ang)];
        row.extend(p.coords().iter().map(|c| Cell::Num(c.re)));
        row.extend([Cell::Num(z.re), Cell::Num(z.im), Cell::Num(z.norm_sqr() / norm2)]);
        t.rows.push(row);
    }
    Ok(t)
}

fn circle_point(dim: usize, theta: f64) -> Vec<f64> {
    (0..=dim).map(|k| match k { 0 => theta.cos(), 1 => theta.sin(), _ => 0.0 }).collect()
}

fn circle_tangent(dim: usize, theta: f64) -> Vec<f64> {
    (0..=dim).map(|k| match k { 0 => -theta.sin(), 1 => theta.cos(), _ => 0.0 }).collect()
}

fn state_meta(t: &mut Table, params: &ModelParams, f: &StateSource) -> CliResult<()> {
    t.meta("params", params_json(params));
    t.meta("state", serde_json::to_value(f).map_err(|e| Failure::usage(e.to_string()))?);
    Ok(())
}

fn quadrature_for(f: &StateSource, tau: f64) -> CliResult<QuadratureSpec> {
    let degree = f.max_degree().ok_or_else(|| Failure::usage("this command needs a band-limited state, not a point mass"))?;
    Ok(QuadratureSpec::for_degree(f.dim(), tau, degree)?)
}

fn quad_meta(t: &mut Table, q: &QuadratureSpec) {
    t.meta(
        "quadrature",
        json!({"exactness": q.options.exactness, "radial_order": q.options.radial_order, "p_max": q.p_max, "nodes": q.node_count()}),
    );
}

fn cmd_transform(a: &TransformArgs) -> CliResult<Table> {
    let params = a.units.params(a.dim)?;
    let f = a.state.source(a.dim)?;
    let tau = params.tau();
    let thetas = parse_range(&a.theta)?;
    let ps = parse_range(&a.p)?;
    let mut cols: Vec<String> = vec!["theta".into(), "p".into()];
    for k in 0..=a.dim {
        cols.push(format!("a{k}_re"));
        cols.push(format!("a{k}_im"));
    }
    cols.extend(["value_re", "value_im"].map(String::from));
    let mut t = Table::new(&[]);
    t.columns = cols;
    state_meta(&mut t, &params, &f)?;
    let grid: Vec<(f64, f64, Vec<Complex64>)> = thetas
        .iter()
        .flat_map(|&th| ps.iter().map(move |&p| (th, p)))
        .map(|(th, p)| (th, p, phase_point(&circle_point(a.dim, th), p, &circle_tangent(a.dim, th))))
        .collect();
    let values: Vec<Complex64> = {
        use rayon::prelude::*;
        grid.par_iter().map(|(_, _, z)| f.transform_at(tau, z)).collect::<Result<_, _>>()?
    };
    for ((th, p, z), v) in grid.iter().zip(values) {
        let mut row = vec![Cell::Num(*th), Cell::Num(*p)];
        for c in z {
            row.push(Cell::Num(c.re));
            row.push(Cell::Num(c.im));
        }
        row.extend([Cell::Num(v.re), Cell::Num(v.im)]);
        t.rows.push(row);
    }
    Ok(t)
}

fn cmd_invert(a: &InvertArgs) -> CliResult<Table> {
    let params = a.units.params(a.dim)?;
    let f = a.state.source(a.dim)?;
    let tau = params.tau();
    let q = quadrature_for(&f, tau)?;
    let thetas = parse_range(&a.theta)?;
    let mut t = Table::new(&["theta", "f_re", "f_im", "recovered_re", "recovered_im", "abs_error"]);
    state_meta(&mut t, &params, &f)?;
    quad_meta(&mut t, &q);
    t.meta("l2_round_trip_error", json!(round_trip_error(&f, &q, FiberWeight::Inversion)?));
    let rows: Vec<(f64, Complex64, Complex64)> = {
        use rayon::prelude::*;
        thetas
            .par_iter()
            .map(|&th| {
                let x = circle_point(a.dim, th);
                let back = sb_inverse(|z| f.transform_at(tau, z), &x, &q)?;
                Ok((th, f.eval(&x)?, back))
            })
            .collect::<Result<_, Error>>()?
    };
    let mut worst = 0.0f64;
    for (th, orig, back) in rows {
        let err = (orig - back).norm();
        worst = worst.max(err);
        t.rows.push(vec![Cell::Num(th), Cell::Num(orig.re), Cell::Num(orig.im), Cell::Num(back.re), Cell::Num(back.im), Cell::Num(err)]);
    }
    t.meta("max_abs_error", json!(worst));
    Ok(t)
}

fn cmd_husimi(a: &HusimiArgs) -> CliResult<Table> {
    let params = a.units.params(a.dim)?;
    let f = a.state.source(a.dim)?;
    let q = quadrature_for(&f, params.tau())?;
    let nodes = husimi_on_grid(&f, &q)?;
    let mut cols: Vec<String> = (0..=a.dim).map(|k| format!("x{k}")).collect();
    cols.push("p".into());
    cols.extend((0..=a.dim).map(|k| format!("u{k}")));
    cols.extend(["weight", "density"].map(String::from));
    let mut t = Table::new(&[]);
    t.columns = cols;
    state_meta(&mut t, &params, &f)?;
    quad_meta(&mut t, &q);
    let mass = sphcoh::special::pairwise_sum_real(&nodes.iter().map(|n| n.weight * n.density).collect::<Vec<_>>());
    t.meta("mass", json!(mass));
    for n in nodes {
        let mut row: Vec<Cell> = n.x.iter().map(|v| Cell::Num(*v)).collect();
        row.push(Cell::Num(n.p));
        row.extend(n.u.iter().map(|v| Cell::Num(*v)));
        row.extend([Cell::Num(n.weight), Cell::Num(n.density)]);
        t.rows.push(row);
    }
    Ok(t)
}

fn label_text(l: BasisLabel) -> String {
    match l {
        BasisLabel::Fourier(n) => format!("n={n}"),
        BasisLabel::Harmonic { l, m } => format!("l={l} m={m}"),
    }
}

fn cmd_resolve(a: &ResolveArgs) -> CliResult<Table> {
    let params = a.units.params(a.dim)?;
    let basis = BasisSpec::new(a.dim, a.cutoff, 0)?;
    let q = QuadratureSpec::for_degree(a.dim, params.tau(), a.cutoff)?;
    let weight = if a.negative_control { FiberWeight::Inversion } else { FiberWeight::Resolution };
    let m = resolve_identity_matrix(&basis, &q, weight)?;
    let mut t = Table::new(&["i", "j", "label_i", "label_j", "value_re", "value_im"]);
    t.meta("params", params_json(&params));
    t.meta("cutoff", json!(a.cutoff));
    t.meta("fiber_weight", json!(format!("{weight:?}")));
    t.meta("max_deviation_from_identity", json!(identity_deviation(&m)));
    quad_meta(&mut t, &q);
    for i in 0..basis.size() {
        for j in 0..basis.size() {
            let z = m[(i, j)];
            t.rows.push(vec![
                Cell::Int(i as i64),
                Cell::Int(j as i64),
                Cell::Text(label_text(basis.label(i))),
                Cell::Text(label_text(basis.label(j))),
                Cell::Num(z.re),
                Cell::Num(z.im),
            ]);
        }
    }
    Ok(t)
}

/// Runs the suites; the boolean is whether every check passed.
fn cmd_verify(a: &VerifyArgs) -> CliResult<(Vec<u8>, bool)> {
    let suites: Vec<Suite> = if a.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        a.suite
            .iter()
            .map(|s| Suite::parse(s).ok_or_else(|| Failure::usage(format!("unknown suite {s:?}"))))
            .collect::<CliResult<_>>()?
    };
    let opts = VerifyOptions {
        dims: if a.dim.is_empty() { vec![1, 2, 3] } else { a.dim.clone() },
        tau: a.tau,
        negative_controls: a.negative_controls,
        seed: a.seed,
    };
    let mut checks = Vec::new();
    for s in suites {
        checks.extend(run_suite(s, &opts)?);
    }
    let pass = checks.iter().all(|c| c.pass);
    let doc = json!({
        "metadata": {"suites": checks.iter().map(|c| c.suite).collect::<std::collections::BTreeSet<_>>(),
                     "dims": opts.dims, "tau": opts.tau, "negative_controls": opts.negative_controls, "seed": opts.seed},
        "checks": checks,
        "pass": pass,
    });
    let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| Failure { code: EXIT_NUMERICAL, message: e.to_string() })?;
    out.push(b'\n');
    Ok((out, pass))
}

fn emit(cli: &Cli, bytes: &[u8]) -> CliResult<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => match std::io::stdout().write_all(bytes) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

/// Runs a parsed command and returns the exit code.
pub fn execute(cli: &Cli) -> CliResult<i32> {
    let start = Instant::now();
    if let Command::Verify(v) = &cli.command {
        let (bytes, pass) = cmd_verify(v)?;
        emit(cli, &bytes)?;
        return Ok(if pass { EXIT_OK } else { EXIT_VERIFY_FAILED });
    }
    let (name, mut table) = match &cli.command {
        Command::Kernel(a) => ("kernel", cmd_kernel(a)?),
        Command::Coherent(a) => ("coherent", cmd_coherent(a)?),
        Command::Transform(a) => ("transform", cmd_transform(a)?),
        Command::Invert(a) => ("invert", cmd_invert(a)?),
        Command::Husimi(a) => ("husimi", cmd_husimi(a)?),
        Command::ResolveIdentity(a) => ("resolve-identity", cmd_resolve(a)?),
        Command::Verify(_) => unreachable!(),
    };
    table.meta("command", json!(name));
    table.meta("version", json!(env!("CARGO_PKG_VERSION")));
    if cli.timing {
        table.meta("elapsed_seconds", json!(start.elapsed().as_secs_f64()));
    }
    emit(cli, &table.render(cli.format)?)?;
    Ok(EXIT_OK)
}

/// Full entry point: config merge, parsing, thread pool, execution.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_NUMERICAL;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
