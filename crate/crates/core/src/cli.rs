//! Subcommands of the `confsets` binary. Inputs are CSV matrices and JSON
//! configs; every report embeds the resolved config and seed.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use confsets::calibrate::{calibrate_ellipse, calibrate_hull, consistent_set, CalibrationResult, HullCalibrationConfig};
use confsets::coverage::{min_coverage, McConfig};
use confsets::io::{self, read_matrix_csv, read_vector_csv, SCHEMA};
use confsets::lasso::solve_lasso_penalties;
use confsets::rng::with_threads;
use confsets::shapes::{ConfidenceShape, Ellipse};
use confsets::simulate::{
    block_design, consistent_regime_experiment, coverage_profile, whitened_design, ConsistentConfig, DesignFamily,
    GridSpec,
};
use confsets::{Error, GramData, LinearModel, SignVector, TuningVector};

const BOUNDARY_POINTS: usize = 512;

#[derive(Debug, Parser)]
#[command(name = "confsets", version, about = "Confidence sets centered at the componentwise-tuned Lasso")]
pub struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Seed for every random draw; required by stochastic subcommands
    /// unless the config carries one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the Lasso to a design and response given as CSV.
    Solve {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Comma-separated penalties, one per column.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Vec<f64>,
        /// Least squares (all penalties zero).
        #[arg(long, conflicts_with = "lambda")]
        ls: bool,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Calibrate the least-squares and Lasso ellipses.
    Ellipse {
        #[arg(long)]
        config: PathBuf,
        /// Also write both boundaries as CSV (p = 2).
        #[arg(long)]
        boundary: Option<PathBuf>,
    },
    /// Calibrate the hull of shifted ellipses by Monte Carlo.
    Shape {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        boundary: Option<PathBuf>,
    },
    /// Minimal coverage of a shape over all sign vectors.
    Coverage {
        #[arg(long)]
        config: PathBuf,
    },
    /// Empirical coverage profile over a grid of true parameters.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Also write the per-point table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Worst-grid coverage under consistent tuning for several sample sizes.
    Consistent {
        #[arg(long)]
        config: PathBuf,
    },
    /// Boundary polyline of a two-dimensional shape as CSV.
    Boundary {
        /// JSON file holding a shape, or a report containing one.
        #[arg(long)]
        shape: PathBuf,
        #[arg(long, default_value_t = BOUNDARY_POINTS)]
        points: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_non_convergence() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(Error::Json(e))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult<()> {
    with_threads(cli.global.threads, || dispatch(cli))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Solve { x, y, lambda, ls, sigma } => {
            json_only(g, "solve")?;
            let x = read_matrix_csv(x)?;
            let y = read_vector_csv(y)?;
            let model = LinearModel::new(x, y, *sigma)?;
            let lambda = if *ls { vec![0.0; model.p()] } else { lambda.clone() };
            let sol = solve_lasso_penalties(&model, &lambda)?;
            emit(g, &to_pretty(&sol)?)
        }
        Command::Ellipse { config, boundary } => {
            json_only(g, "ellipse")?;
            let (raw, cfg): (Value, EllipseConfig) = load_config(config)?;
            let (gram, tuning, sigma) = cfg.problem.resolve()?;
            let zero = TuningVector::new(vec![0.0; gram.dim()], tuning.regime().clone())?;
            let ls = calibrate_ellipse(&gram, &zero, sigma, cfg.alpha)?;
            let lasso = calibrate_ellipse(&gram, &tuning, sigma, cfg.alpha)?;
            if let Some(path) = boundary {
                let mut csv = CsvBoundary::new();
                csv.shape("ls", &ls.shape)?;
                csv.shape("lasso", &lasso.shape)?;
                write_file(path, &csv.finish())?;
            }
            let report = envelope(
                "ellipse",
                None,
                raw,
                json!({ "k_star_ls": ls.k_star, "k_star_lasso": lasso.k_star, "ls": ls, "lasso": lasso }),
            );
            emit(g, &to_pretty(&report)?)
        }
        Command::Shape { config, boundary } => {
            json_only(g, "shape")?;
            let (mut raw, cfg): (Value, ShapeConfig) = load_config(config)?;
            let seed = resolve_seed(g.seed, cfg.seed, &mut raw)?;
            let (gram, tuning, sigma) = cfg.problem.resolve()?;
            let hull_cfg = HullCalibrationConfig {
                mc: McConfig::new(cfg.n_samples, seed),
                tol: cfg.tol,
                max_iterations: cfg.max_iterations,
            };
            let hull = calibrate_hull(&gram, &tuning, sigma, cfg.alpha, &hull_cfg)?;
            let ellipse = calibrate_ellipse(&gram, &tuning, sigma, cfg.alpha)?;
            if let Some(path) = boundary {
                write_file(path, &hull_boundary_csv(&hull, &gram)?)?;
            }
            let report = envelope(
                "shape",
                Some(seed),
                raw,
                json!({ "hull": hull, "lasso_ellipse_k": ellipse.k_star }),
            );
            emit(g, &to_pretty(&report)?)
        }
        Command::Coverage { config } => {
            let (mut raw, cfg): (Value, CoverageConfig) = load_config(config)?;
            let seed = resolve_seed(g.seed, cfg.seed, &mut raw)?;
            let (gram, tuning, sigma) = cfg.problem.resolve()?;
            let report = min_coverage(&cfg.shape, &gram, &tuning, sigma, &McConfig::new(cfg.n_samples, seed))?;
            match g.format {
                Format::Csv => emit(g, &report.to_csv()),
                Format::Json => emit(g, &to_pretty(&envelope("coverage", Some(seed), raw, report))?),
            }
        }
        Command::Simulate { config, csv } => {
            let (mut raw, cfg): (Value, SimulateConfig) = load_config(config)?;
            let seed = resolve_seed(g.seed, cfg.seed, &mut raw)?;
            let (model, tuning) = cfg.build(seed)?;
            let gram = GramData::from_matrix(model.x().tr_mul(model.x()) / model.n() as f64)?;
            let shape = match &cfg.shape {
                Some(s) => s.clone(),
                None => calibrate_ellipse(&gram, &tuning, model.sigma(), cfg.alpha)?.shape,
            };
            let profile = coverage_profile(&model, &tuning, &shape, &cfg.grid, cfg.reps, seed)?;
            let formula = min_coverage(&shape, &gram, &tuning, model.sigma(), &McConfig::new(cfg.formula_samples, seed))?;
            if let Some(path) = csv {
                write_file(path, &profile.to_csv())?;
            }
            match g.format {
                Format::Csv => emit(g, &profile.to_csv()),
                Format::Json => {
                    let result = json!({
                        "shape": shape,
                        "formula_min_coverage": formula.min_coverage,
                        "formula_argmin_d": formula.argmin_d,
                        "profile": profile,
                    });
                    emit(g, &to_pretty(&envelope("simulate", Some(seed), raw, result))?)
                }
            }
        }
        Command::Consistent { config } => {
            let text = fs::read_to_string(config)?;
            let mut raw: Value = serde_json::from_str(&text)?;
            let seed = resolve_seed(g.seed, raw.get("seed").and_then(Value::as_u64), &mut raw)?;
            let cfg: ConsistentConfig = serde_json::from_value(raw.clone())?;
            if cfg.d_scale == 1.0 {
                log::warn!("d_scale = 1 is the boundary case; the report carries no coverage guarantee");
            }
            let report = consistent_regime_experiment(&cfg)?;
            let gram = GramData::from_matrix(cfg.c.clone())?;
            let sets = cfg
                .n_list
                .iter()
                .map(|&n| {
                    let ls = cfg.lambda_scale * (n as f64).powf(cfg.lambda_exponent);
                    consistent_set(&gram, &cfg.lambda0, ls, n, cfg.d_scale).map(ConfidenceShape::Parallelogram)
                })
                .collect::<confsets::Result<Vec<_>>>()?;
            match g.format {
                Format::Csv => {
                    let mut out = String::from("n,lambda_star,rate,worst_coverage,worst_stderr,boundary_coverage,boundary_stderr\n");
                    for r in &report.rows {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            r.n,
                            r.lambda_star,
                            r.rate,
                            r.worst_coverage,
                            r.worst_std_error,
                            r.boundary_coverage,
                            r.boundary_std_error
                        ));
                    }
                    emit(g, &out)
                }
                Format::Json => {
                    let result = json!({ "report": report, "sets": sets });
                    emit(g, &to_pretty(&envelope("consistent", Some(seed), raw, result))?)
                }
            }
        }
        Command::Boundary { shape, points } => {
            let value: Value = serde_json::from_str(&fs::read_to_string(shape)?)?;
            let shapes = find_shapes(&value);
            if shapes.is_empty() {
                return Err(CliError::Usage(format!("no shape found in {}", shape.display())));
            }
            let mut csv = CsvBoundary::new();
            for (id, v) in shapes {
                let s: ConfidenceShape = serde_json::from_value(v.clone())?;
                csv.points = *points;
                csv.shape(&id, &s)?;
            }
            emit(g, &csv.finish())
        }
    }
}

fn json_only(g: &GlobalArgs, command: &str) -> CliResult<()> {
    if g.format == Format::Csv {
        return Err(CliError::Usage(format!("`{command}` writes JSON only; use --boundary for CSV")));
    }
    Ok(())
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<(Value, T)> {
    let text = fs::read_to_string(path)?;
    let raw: Value = serde_json::from_str(&text)?;
    let cfg = serde_json::from_value(raw.clone())?;
    Ok((raw, cfg))
}

/// The flag wins over the config; the resolved seed is written back into
/// the embedded config.
fn resolve_seed(flag: Option<u64>, from_config: Option<u64>, raw: &mut Value) -> CliResult<u64> {
    let seed = flag
        .or(from_config)
        .ok_or_else(|| CliError::Usage("this subcommand is stochastic: pass --seed or set \"seed\" in the config".into()))?;
    if let Value::Object(map) = raw {
        map.insert("seed".into(), json!(seed));
    }
    Ok(seed)
}

fn envelope<T: Serialize>(command: &str, seed: Option<u64>, config: Value, result: T) -> Value {
    let mut v = json!({
        "schema": SCHEMA,
        "command": command,
        "config": config,
        "result": result,
    });
    if let Some(s) = seed {
        v["seed"] = json!(s);
    }
    v
}

fn to_pretty<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn emit(g: &GlobalArgs, text: &str) -> CliResult<()> {
    match &g.output {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)?;
    Ok(())
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum RegimeChoice {
    #[default]
    FiniteSample,
    Conservative,
}

/// `C` directly or through a design CSV, plus the penalties.
#[derive(Debug, Deserialize)]
struct ProblemConfig {
    #[serde(default)]
    c: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    x_csv: Option<PathBuf>,
    #[serde(default)]
    n: Option<usize>,
    lambda: Vec<f64>,
    #[serde(default)]
    regime: RegimeChoice,
    #[serde(default = "one")]
    sigma: f64,
}

impl ProblemConfig {
    fn resolve(&self) -> CliResult<(GramData, TuningVector, f64)> {
        let (c, n) = match (&self.c, &self.x_csv) {
            (Some(rows), None) => (io::rows_to_matrix(rows)?, self.n),
            (None, Some(path)) => {
                let x = read_matrix_csv(path)?;
                let n = x.nrows();
                (x.tr_mul(&x) / n as f64, Some(self.n.unwrap_or(n)))
            }
            _ => return Err(CliError::Usage("config needs exactly one of \"c\" and \"x_csv\"".into())),
        };
        let gram = GramData::from_matrix(c)?;
        let tuning = match self.regime {
            RegimeChoice::FiniteSample => {
                let n = n.ok_or_else(|| CliError::Usage("finite-sample configs need \"n\"".into()))?;
                TuningVector::finite_sample(self.lambda.clone(), n)?
            }
            RegimeChoice::Conservative => TuningVector::conservative(self.lambda.clone())?,
        };
        Ok((gram, tuning, self.sigma))
    }
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
struct EllipseConfig {
    #[serde(flatten)]
    problem: ProblemConfig,
    #[serde(default = "default_alpha")]
    alpha: f64,
}

#[derive(Debug, Deserialize)]
struct ShapeConfig {
    #[serde(flatten)]
    problem: ProblemConfig,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "hull_samples")]
    n_samples: usize,
    #[serde(default = "hull_tol")]
    tol: f64,
    #[serde(default = "hull_iterations")]
    max_iterations: usize,
    #[serde(default)]
    seed: Option<u64>,
}

fn hull_samples() -> usize {
    100_000
}

fn hull_tol() -> f64 {
    0.002
}

fn hull_iterations() -> usize {
    60
}

#[derive(Debug, Deserialize)]
struct CoverageConfig {
    #[serde(flatten)]
    problem: ProblemConfig,
    shape: ConfidenceShape,
    #[serde(default = "mc_samples")]
    n_samples: usize,
    #[serde(default)]
    seed: Option<u64>,
}

fn mc_samples() -> usize {
    McConfig::DEFAULT_SAMPLES
}

#[derive(Debug, Deserialize)]
struct DesignConfig {
    #[serde(default)]
    c: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    family: DesignFamily,
    #[serde(default)]
    x_csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct SimulateConfig {
    design: DesignConfig,
    lambda: Vec<f64>,
    #[serde(default = "one")]
    sigma: f64,
    /// Shape to test; the calibrated Lasso ellipse at `alpha` when absent.
    #[serde(default)]
    shape: Option<ConfidenceShape>,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    grid: GridSpec,
    reps: usize,
    #[serde(default = "formula_samples")]
    formula_samples: usize,
    #[serde(default)]
    seed: Option<u64>,
}

fn formula_samples() -> usize {
    100_000
}

impl SimulateConfig {
    fn build(&self, seed: u64) -> CliResult<(LinearModel, TuningVector)> {
        let d = &self.design;
        let x = match (&d.c, &d.x_csv) {
            (Some(rows), None) => {
                let gram = GramData::from_matrix(io::rows_to_matrix(rows)?)?;
                let n = d.n.ok_or_else(|| CliError::Usage("design needs \"n\"".into()))?;
                match d.family {
                    DesignFamily::Block => block_design(&gram, n)?,
                    DesignFamily::Whitened => whitened_design(&gram, n, seed)?,
                }
            }
            (None, Some(path)) => read_matrix_csv(path)?,
            _ => return Err(CliError::Usage("design needs exactly one of \"c\" and \"x_csv\"".into())),
        };
        let n = x.nrows();
        let model = LinearModel::new(x, DVector::zeros(n), self.sigma)?;
        let tuning = TuningVector::finite_sample(self.lambda.clone(), n)?;
        Ok((model, tuning))
    }
}

struct CsvBoundary {
    out: String,
    points: usize,
}

impl CsvBoundary {
    fn new() -> Self {
        Self {
            out: String::from("x,y,shape_id\n"),
            points: BOUNDARY_POINTS,
        }
    }

    fn row(&mut self, x: f64, y: f64, id: &str) {
        self.out.push_str(&format!("{x},{y},{id}\n"));
    }

    fn shape(&mut self, id: &str, shape: &ConfidenceShape) -> CliResult<()> {
        for [x, y] in shape.boundary_polyline(self.points)? {
            self.row(x, y, id);
        }
        Ok(())
    }

    fn finish(self) -> String {
        self.out
    }
}

/// Hull outline, the shifted ellipses and their centers.
fn hull_boundary_csv(result: &CalibrationResult, gram: &GramData) -> CliResult<String> {
    let ConfidenceShape::Hull(hull) = &result.shape else {
        return Err(CliError::Usage("expected a hull".into()));
    };
    let mut csv = CsvBoundary::new();
    csv.shape("hull", &result.shape)?;
    for (d, s) in SignVector::enumerate(gram.dim()).zip(hull.shifts()) {
        let tag: String = d.signs().iter().map(|v| if *v > 0 { 'p' } else { 'm' }).collect();
        let e = Ellipse::new(gram.c().clone(), hull.k(), s.clone())?;
        csv.shape(&format!("ellipse_{tag}"), &ConfidenceShape::Ellipse(e))?;
        csv.row(s[0], s[1], &format!("center_{tag}"));
    }
    Ok(csv.finish())
}

/// Shapes in a JSON document: the document itself, or any `shape`-like
/// fields nested in a report.
fn find_shapes(v: &Value) -> Vec<(String, Value)> {
    fn is_shape(v: &Value) -> bool {
        v.get("type").and_then(Value::as_str).is_some_and(|t| {
            matches!(t, "ellipse" | "hull" | "parallelogram" | "box" | "point_cloud")
        })
    }
    fn walk(v: &Value, path: &str, out: &mut Vec<(String, Value)>) {
        if is_shape(v) {
            let id = if path.is_empty() { "shape".to_string() } else { path.to_string() };
            out.push((id, v.clone()));
            return;
        }
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    if k == "config" {
                        continue;
                    }
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(child, &p, out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(child, &format!("{path}[{i}]"), out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(v, "", &mut out);
    out
}
