//! Command-line front end: single evaluations, bound sweeps, sampling, Abel solves
//! and reproducible parameter sweeps written as JSON or tidy CSV.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use mittag::abel::{self, AbelProblem, CaputoProblem, Forcing, RLCauchyProblem, SolutionTrace};
use mittag::bounds::{self, BoundGrid, BoundKind};
use mittag::crossings::{self, ProbeGrid};
use mittag::random::{self, BetaLaw, GeneratorSpec, RngSeed, DEFAULT_TRUNCATION};
use mittag::special::{gamma, pochhammer_ratio};
use mittag::{eval_ml, eval_ml_report, eval_ml_scaled, EvalConfig, MLParams, Method};

pub const TOOL: &str = "mittag";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "mittag", version, about = "Mittag-Leffler functions from the command line")]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct TolArgs {
    /// Relative tolerance for every numerical routine.
    #[arg(long, global = true, default_value_t = 1e-12)]
    rel_tol: f64,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate E_{alpha,beta} at one point.
    Eval {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, default_value = "auto")]
        method: String,
        /// plain, power, neg-power, rescaled-beta or rescaled-gamma.
        #[arg(long, default_value = "plain")]
        transform: String,
        #[arg(long)]
        json: bool,
    },
    /// Crossing points and extrema.
    Crossing {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        /// x_ab, yz, x_star or mode.
        #[arg(long, default_value = "x_ab")]
        kind: String,
    },
    /// Check a bound over a grid; lists accept `a,b,c` or `start:stop:count[:geom]`.
    Bounds {
        #[arg(long)]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        beta: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        x: String,
        /// Also write every envelope as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a seeded sample.
    Sample {
        /// stable, ml, pillai, v, atom, t, tpower, m0 or mtilde.
        #[arg(long)]
        generator: String,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
        truncation: usize,
        /// Write the draws as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an Abel equation or fractional Cauchy problem on a uniform grid.
    Abel {
        /// second, rl or caputo.
        #[arg(long, default_value = "second")]
        problem: String,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 257)]
        nodes: usize,
        /// one, zero, exp, step, or a CSV file whose last column holds g at the nodes.
        #[arg(long, default_value = "one")]
        forcing: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe an unproven claim numerically.
    Probe {
        #[arg(long)]
        id: String,
    },
    /// Run a sweep described by a JSON spec file.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit code:
/// 0 on success, 1 on domain or I/O errors, 2 on usage errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut out = std::io::stdout().lock();
    match run(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("usage error: {e}");
                2
            } else {
                eprintln!("error: {}", one_line(&e));
                1
            }
        }
    }
}

fn one_line(e: &anyhow::Error) -> String {
    e.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ").replace('\n', " ")
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = EvalConfig::new(cli.tol.rel_tol, 1e-300, 10_000, 200)?;
    match cli.cmd {
        Cmd::Eval { alpha, beta, x, method, transform, json } => {
            let method: Method = method.parse().map_err(|e: mittag::Error| usage(e.to_string()))?;
            let t: Transform = transform.parse()?;
            let (value, used) = eval_point(t, alpha, beta, x, method, &cfg)?;
            if json {
                let v = json!({"alpha": alpha, "beta": beta, "x": x, "transform": t.name(), "value": value, "method": used.to_string()});
                writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
            } else {
                writeln!(out, "{}", value)?;
            }
        }
        Cmd::Crossing { alpha, beta, lambda, kind } => {
            let v = crossing_json(&kind, alpha, beta, lambda, &cfg)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Cmd::Bounds { kind, alpha, beta, x, out: path } => {
            let kind: BoundKind = kind.parse().map_err(|e: mittag::Error| usage(e.to_string()))?;
            let grid = BoundGrid { alphas: parse_axis(&alpha)?, betas: parse_axis(&beta)?, xs: parse_axis(&x)? };
            let rep = bounds::sweep_check(kind, &grid, &cfg)?;
            if let Some(p) = path {
                let record = bounds_record(&rep, json!({"task": "bounds", "kind": kind.name(), "grid": grid}));
                emit_plot_data(&record, &p)?;
            }
            let summary = json!({
                "kind": kind.name(),
                "grid": grid,
                "points": rep.points,
                "skipped": rep.skipped,
                "overflowed": rep.overflowed,
                "violations": rep.violations,
                "max_slack": rep.max_slack,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
        }
        Cmd::Sample { generator, alpha, beta, n, seed, truncation, out: path } => {
            let spec = generator_spec(&generator, alpha, beta, truncation)?;
            let batch = random::sample(spec, n, RngSeed(seed))?;
            let (mean, se) = random::mean_se(&batch.values);
            if let Some(p) = path {
                let mut record = RunRecord::new(json!({"task": "sample", "spec": spec, "n": n, "seed": seed}), &["index", "value"]);
                for (i, v) in batch.values.iter().enumerate() {
                    record.rows.push(vec![Cell::Int(i as u64), Cell::Num(*v)]);
                }
                emit_plot_data(&record, &p)?;
            }
            let mut summary = json!({"spec": spec, "n": n, "seed": seed, "mean": mean, "se": se, "tail_log_sd": batch.tail_log_sd});
            if spec.is_positive() {
                let (lm, lse) = random::log_mean(&batch);
                summary["log_mean"] = json!(lm);
                summary["log_mean_se"] = json!(lse);
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
        }
        Cmd::Abel { problem, alpha, lambda, mu, t_max, nodes, forcing, out: path } => {
            let grid = abel::uniform_grid(t_max, nodes)?;
            let g = load_forcing(&forcing, &grid)?;
            let trace = solve_abel(&problem, alpha, lambda, mu, t_max, g, &cfg)?;
            if let Some(p) = path {
                let spec = json!({"task": "abel", "problem": problem, "alpha": alpha, "lambda": lambda, "mu": mu, "t_max": t_max, "nodes": nodes, "forcing": forcing});
                emit_plot_data(&abel_record(&trace, spec), &p)?;
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&trace)?)?;
        }
        Cmd::Probe { id } => {
            let grid = ProbeGrid::default_for(&id).map_err(|e| usage(e.to_string()))?;
            let rep = crossings::probe_conjecture(&id, &grid, &cfg)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&rep)?)?;
        }
        Cmd::Sweep { spec, out: path } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let sweep: SweepSpec = serde_json::from_str(&text).map_err(|e| usage(format!("bad sweep spec: {e}")))?;
            let record = run_sweep(&sweep, &cfg)?;
            match path.or_else(|| sweep.output.clone()) {
                Some(p) => {
                    match sweep.format {
                        Format::Csv => emit_plot_data(&record, &p)?,
                        Format::Json => write_atomic(&p, serde_json::to_string_pretty(&record.to_json())?.as_bytes())?,
                    }
                    writeln!(out, "{} rows written to {}", record.rows.len(), p.display())?;
                }
                None => match sweep.format {
                    Format::Csv => out.write_all(record.to_csv()?.as_bytes())?,
                    Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&record.to_json())?)?,
                },
            }
        }
    }
    Ok(())
}

/// How the argument of `E_{alpha,beta}` is formed from `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// `E_{alpha,beta}(x)`.
    #[default]
    Plain,
    /// `E_{alpha,beta}(x^alpha)`.
    Power,
    /// `E_{alpha,beta}(-x^alpha)`.
    NegPower,
    /// `Gamma(beta) E_{alpha,beta}((beta)_alpha x)`.
    RescaledBeta,
    /// `E_alpha(Gamma(1+alpha) x)`.
    RescaledGamma,
}

impl Transform {
    fn name(&self) -> &'static str {
        match self {
            Transform::Plain => "plain",
            Transform::Power => "power",
            Transform::NegPower => "neg-power",
            Transform::RescaledBeta => "rescaled-beta",
            Transform::RescaledGamma => "rescaled-gamma",
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "plain" => Transform::Plain,
            "power" => Transform::Power,
            "neg-power" => Transform::NegPower,
            "rescaled-beta" => Transform::RescaledBeta,
            "rescaled-gamma" => Transform::RescaledGamma,
            other => return Err(usage(format!("unknown transform {other:?}"))),
        })
    }
}

fn eval_point(t: Transform, alpha: f64, beta: f64, x: f64, method: Method, cfg: &EvalConfig) -> mittag::Result<(f64, Method)> {
    let p = MLParams::new(alpha, beta)?;
    match t {
        Transform::Plain => eval_ml_report(p, x, method, cfg).map(|r| (r.value, r.method)),
        Transform::Power | Transform::NegPower => {
            let sign = if t == Transform::Power { 1.0 } else { -1.0 };
            mittag::eval_ml_power_ab(p, x, sign, method, cfg).map(|v| (v, method))
        }
        Transform::RescaledBeta => eval_ml_scaled(p, pochhammer_ratio(alpha, beta)? * x, method, cfg).map(|v| (v, method)),
        Transform::RescaledGamma => eval_ml(MLParams::one(alpha)?, gamma(1.0 + alpha)? * x, method, cfg).map(|v| (v, method)),
    }
}

fn crossing_json(kind: &str, alpha: f64, beta: Option<f64>, lambda: f64, cfg: &EvalConfig) -> anyhow::Result<Value> {
    let need_beta = || beta.ok_or_else(|| usage(format!("--beta is required for {kind}")));
    Ok(match kind {
        "x_ab" => {
            let b = need_beta()?;
            let r = crossings::find_x_ab_lambda(alpha, b, lambda, cfg)?;
            json!({"kind": kind, "alpha": alpha, "beta": b, "lambda": lambda, "result": r})
        }
        "yz" => {
            let b = need_beta()?;
            let (y, z) = crossings::find_yz(alpha, b, cfg)?;
            json!({"kind": kind, "alpha": alpha, "beta": b, "y": y, "z": z})
        }
        "x_star" => {
            let b = need_beta()?;
            let r = crossings::find_x_star(alpha, b, cfg)?;
            json!({"kind": kind, "alpha": alpha, "beta": b, "result": r})
        }
        "mode" => {
            let (r, m) = crossings::find_mode_m(alpha, cfg)?;
            let (lo, hi) = crossings::mode_bounds(alpha)?;
            json!({"kind": kind, "alpha": alpha, "result": r, "extremum": m, "bounds": [lo, hi]})
        }
        other => return Err(usage(format!("unknown crossing kind {other:?}; expected x_ab, yz, x_star or mode"))),
    })
}

fn generator_spec(name: &str, alpha: f64, beta: Option<f64>, truncation: usize) -> anyhow::Result<GeneratorSpec> {
    let product = |law| GeneratorSpec::BetaProduct { product: law, truncation };
    let spec = match name {
        "stable" => GeneratorSpec::Stable { alpha },
        "ml" => GeneratorSpec::MittagLefflerM { alpha },
        "pillai" => GeneratorSpec::Pillai { alpha },
        "v" => GeneratorSpec::StableRatioV { alpha },
        "atom" => GeneratorSpec::AtomX { alpha },
        "t" => product(BetaLaw::T { alpha }),
        "tpower" => product(BetaLaw::TPower { alpha }),
        "m0" => product(BetaLaw::ScaledM0 { alpha }),
        "mtilde" => {
            let beta = beta.ok_or_else(|| usage("--beta is required for mtilde"))?;
            product(BetaLaw::MTilde { alpha, beta })
        }
        other => return Err(usage(format!("unknown generator {other:?}"))),
    };
    spec.validate()?;
    Ok(spec)
}

fn load_forcing(spec: &str, grid: &[f64]) -> anyhow::Result<Vec<f64>> {
    if let Ok(f) = spec.parse::<Forcing>() {
        return Ok(f.sample(grid));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(usage(format!("forcing {spec:?} is neither a built-in nor an existing file")));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_path(path)?;
    let mut g = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let last = rec.iter().last().unwrap_or("").trim();
        match last.parse::<f64>() {
            Ok(v) => g.push(v),
            Err(_) if g.is_empty() => continue,
            Err(_) => bail!("{}: cannot parse {last:?} as a number", path.display()),
        }
    }
    if g.len() != grid.len() {
        bail!("{}: {} forcing values for {} nodes", path.display(), g.len(), grid.len());
    }
    Ok(g)
}

fn solve_abel(problem: &str, alpha: f64, lambda: f64, mu: f64, t_max: f64, g: Vec<f64>, cfg: &EvalConfig) -> anyhow::Result<SolutionTrace> {
    Ok(match problem {
        "second" => abel::solve_second_kind(&AbelProblem { alpha, lambda, t_max, g }, cfg)?,
        "rl" => abel::solve_rl_cauchy(&RLCauchyProblem { alpha, lambda, mu, t_max, g }, cfg)?,
        "caputo" => abel::solve_caputo(&CaputoProblem { alpha, lambda, mu, t_max, g }, cfg)?,
        other => return Err(usage(format!("unknown problem {other:?}; expected second, rl or caputo"))),
    })
}

/// One parameter axis: a value, a list, or a linear/geometric range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Value(f64),
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        count: usize,
        #[serde(default)]
        scale: Scale,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Geometric,
}

impl Axis {
    pub fn values(&self) -> anyhow::Result<Vec<f64>> {
        match self {
            Axis::Value(v) => Ok(vec![*v]),
            Axis::List(v) if v.is_empty() => bail!("empty list"),
            Axis::List(v) => Ok(v.clone()),
            Axis::Range { start, stop, count, scale } => range(*start, *stop, *count, *scale),
        }
    }
}

fn range(start: f64, stop: f64, count: usize, scale: Scale) -> anyhow::Result<Vec<f64>> {
    if count == 0 {
        bail!("range count must be at least 1");
    }
    if !start.is_finite() || !stop.is_finite() {
        bail!("range ends must be finite");
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let h = 1.0 / (count - 1) as f64;
    Ok(match scale {
        Scale::Linear => (0..count).map(|i| if i == count - 1 { stop } else { start + (stop - start) * i as f64 * h }).collect(),
        Scale::Geometric => {
            if !(start > 0.0 && stop > 0.0) {
                bail!("geometric range needs positive ends");
            }
            let r = (stop / start).ln();
            (0..count).map(|i| if i == count - 1 { stop } else { start * (r * i as f64 * h).exp() }).collect()
        }
    })
}

/// `a`, `a,b,c`, or `start:stop:count[:geom]`.
pub fn parse_axis(s: &str) -> anyhow::Result<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| usage(format!("cannot parse {t:?} as a number")));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(usage(format!("range {s:?} must be start:stop:count[:geom]")));
        }
        let count = parts[2].trim().parse::<usize>().map_err(|_| usage(format!("bad count in {s:?}")))?;
        let scale = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") | Some("linear") => Scale::Linear,
            Some("geom") | Some("geometric") => Scale::Geometric,
            Some(o) => return Err(usage(format!("unknown scale {o:?}"))),
        };
        return range(num(parts[0])?, num(parts[1])?, count, scale).map_err(|e| usage(e.to_string()));
    }
    s.split(',').map(num).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Eval,
    Crossing,
    Bounds,
    Sample,
    Abel,
    Probe,
}

/// A reproducible experiment; every emitted file carries it verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub task: Task,
    #[serde(default)]
    pub alpha: Option<Axis>,
    #[serde(default)]
    pub beta: Option<Axis>,
    #[serde(default)]
    pub x: Option<Axis>,
    #[serde(default)]
    pub lambda: Option<Axis>,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default)]
    pub method: Option<String>,
    /// Bound kind for `bounds`.
    #[serde(default)]
    pub kind: Option<String>,
    /// Generator name for `sample`.
    #[serde(default)]
    pub generator: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub truncation: Option<usize>,
    /// `second`, `rl` or `caputo` for `abel`.
    #[serde(default)]
    pub problem: Option<String>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub forcing: Option<String>,
    /// Conjecture id for `probe`; all of them when absent.
    #[serde(default)]
    pub conjecture: Option<String>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Results of one run with enough context to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub spec: Value,
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl RunRecord {
    pub fn new(spec: Value, columns: &[&str]) -> RunRecord {
        RunRecord {
            spec,
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(|c| serde_json::to_value(c).unwrap_or(Value::Null))).collect()))
            .collect();
        json!({"tool": self.tool, "version": self.version, "timestamp": self.timestamp, "spec": self.spec, "results": rows})
    }

    /// Comment header (tool, spec, then timestamp), column header and rows, `\n`-terminated.
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut head = String::new();
        head.push_str(&format!("# tool: {} {}\n", self.tool, self.version));
        head.push_str(&format!("# spec: {}\n", serde_json::to_string(&self.spec)?));
        head.push_str(&format!("# timestamp: {}\n", self.timestamp));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| anyhow!("csv: {e}"))?)?;
        Ok(head + &body)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory, renamed into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| anyhow!("renaming into {}: {}", path.display(), e.error))?;
    Ok(())
}

/// Tidy CSV for external plotting.
pub fn emit_plot_data(record: &RunRecord, path: &Path) -> anyhow::Result<()> {
    write_atomic(path, record.to_csv()?.as_bytes())
}

fn bounds_record(rep: &bounds::SweepReport, spec: Value) -> RunRecord {
    let mut record = RunRecord::new(spec, &["kind", "alpha", "beta", "x", "lo", "value", "hi", "holds"]);
    for (env, (a, b, x)) in rep.rows.iter().zip(&rep.row_params) {
        record.rows.push(vec![
            Cell::Text(env.kind.name().to_string()),
            Cell::Num(*a),
            Cell::Num(*b),
            Cell::Num(*x),
            Cell::Num(env.lo),
            Cell::Num(env.value),
            Cell::Num(env.hi),
            Cell::Text(env.holds().to_string()),
        ]);
    }
    record
}

fn abel_record(trace: &SolutionTrace, spec: Value) -> RunRecord {
    let mut record = RunRecord::new(spec, &["x", "value", "kernel"]);
    for ((x, v), k) in trace.nodes.iter().zip(&trace.values).zip(&trace.kernel) {
        record.rows.push(vec![Cell::Num(*x), Cell::Num(*v), Cell::Num(*k)]);
    }
    record
}

fn axis(a: &Option<Axis>, name: &str, default: Option<f64>) -> anyhow::Result<Vec<f64>> {
    match (a, default) {
        (Some(a), _) => a.values().map_err(|e| usage(format!("{name}: {e}"))),
        (None, Some(d)) => Ok(vec![d]),
        (None, None) => Err(usage(format!("sweep spec needs `{name}`"))),
    }
}

fn product3(a: &[f64], b: &[f64], c: &[f64], keep: impl Fn(f64, f64) -> bool) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &x in a {
        for &y in b {
            if keep(x, y) {
                out.extend(c.iter().map(|&z| (x, y, z)));
            }
        }
    }
    out
}

/// Evaluates `f` on every point, in parallel, keeping the input order.
fn par_map<P: Sync, R: Send>(points: &[P], f: impl Fn(&P) -> anyhow::Result<R> + Sync) -> anyhow::Result<Vec<R>> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(points.len().max(1));
    let chunk = points.len().div_ceil(workers).max(1);
    let results: Vec<anyhow::Result<Vec<R>>> = std::thread::scope(|s| {
        let handles: Vec<_> = points.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<anyhow::Result<Vec<R>>>())).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("worker panicked")))).collect()
    });
    let mut out = Vec::with_capacity(points.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Runs a sweep; the returned record is complete or the call fails, so no partial output is ever written.
pub fn run_sweep(spec: &SweepSpec, cfg: &EvalConfig) -> anyhow::Result<RunRecord> {
    let echo = serde_json::to_value(spec)?;
    match spec.task {
        Task::Eval => {
            let method: Method = spec.method.as_deref().unwrap_or("auto").parse().map_err(|e: mittag::Error| usage(e.to_string()))?;
            let (alphas, betas, xs) = (axis(&spec.alpha, "alpha", None)?, axis(&spec.beta, "beta", Some(1.0))?, axis(&spec.x, "x", None)?);
            let points = product3(&alphas, &betas, &xs, |_, _| true);
            let t = spec.transform;
            let rows = par_map(&points, |&(a, b, x)| {
                let (v, m) = eval_point(t, a, b, x, method, cfg).with_context(|| format!("alpha = {a}, beta = {b}, x = {x}"))?;
                Ok(vec![Cell::Num(a), Cell::Num(b), Cell::Num(x), Cell::Num(v), Cell::Text(m.to_string())])
            })?;
            let mut r = RunRecord::new(echo, &["alpha", "beta", "x", "value", "method"]);
            r.rows = rows;
            Ok(r)
        }
        Task::Crossing => {
            let (alphas, betas, lambdas) =
                (axis(&spec.alpha, "alpha", None)?, axis(&spec.beta, "beta", None)?, axis(&spec.lambda, "lambda", Some(1.0))?);
            // only pairs with alpha < beta define a crossing
            let points = product3(&alphas, &betas, &lambdas, |a, b| a < b);
            let rows = par_map(&points, |&(a, b, l)| {
                let r = crossings::find_x_ab_lambda(a, b, l, cfg).with_context(|| format!("alpha = {a}, beta = {b}, lambda = {l}"))?;
                Ok(vec![Cell::Num(a), Cell::Num(b), Cell::Num(l), Cell::Num(r.root), Cell::Num(r.bracket_lo), Cell::Num(r.bracket_hi)])
            })?;
            let mut r = RunRecord::new(echo, &["alpha", "beta", "lambda", "root", "lo", "hi"]);
            r.rows = rows;
            Ok(r)
        }
        Task::Bounds => {
            let kind: BoundKind = spec.kind.as_deref().ok_or_else(|| usage("sweep spec needs `kind`"))?.parse().map_err(|e: mittag::Error| usage(e.to_string()))?;
            let grid = BoundGrid {
                alphas: axis(&spec.alpha, "alpha", None)?,
                betas: axis(&spec.beta, "beta", Some(1.0))?,
                xs: axis(&spec.x, "x", Some(0.0))?,
            };
            let rep = bounds::sweep_check(kind, &grid, cfg)?;
            Ok(bounds_record(&rep, echo))
        }
        Task::Sample => {
            let name = spec.generator.as_deref().ok_or_else(|| usage("sweep spec needs `generator`"))?;
            let n = spec.n.unwrap_or(10_000);
            let trunc = spec.truncation.unwrap_or(DEFAULT_TRUNCATION);
            let (alphas, betas) = (axis(&spec.alpha, "alpha", None)?, axis(&spec.beta, "beta", Some(f64::NAN))?);
            let points: Vec<(usize, f64, f64)> =
                alphas.iter().flat_map(|&a| betas.iter().map(move |&b| (a, b))).enumerate().map(|(i, (a, b))| (i, a, b)).collect();
            let rows = par_map(&points, |&(i, a, b)| {
                let g = generator_spec(name, a, if b.is_nan() { None } else { Some(b) }, trunc)?;
                // one seed per grid point, derived deterministically from the spec seed
                let seed = spec.seed.wrapping_add(i as u64);
                let batch = random::sample(g, n, RngSeed(seed))?;
                let (m, se) = random::mean_se(&batch.values);
                Ok(vec![Cell::Num(a), Cell::Num(b), Cell::Int(n as u64), Cell::Int(seed), Cell::Num(m), Cell::Num(se)])
            })?;
            let mut r = RunRecord::new(echo, &["alpha", "beta", "n", "seed", "mean", "se"]);
            r.rows = rows;
            Ok(r)
        }
        Task::Abel => {
            let problem = spec.problem.clone().unwrap_or_else(|| "second".into());
            let t_max = spec.t_max.unwrap_or(1.0);
            let nodes = spec.nodes.unwrap_or(257);
            let forcing = spec.forcing.clone().unwrap_or_else(|| "one".into());
            let mu = spec.mu.unwrap_or(0.0);
            let (alphas, lambdas) = (axis(&spec.alpha, "alpha", None)?, axis(&spec.lambda, "lambda", None)?);
            let grid = abel::uniform_grid(t_max, nodes)?;
            let g = load_forcing(&forcing, &grid)?;
            let points: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| lambdas.iter().map(move |&l| (a, l))).collect();
            let blocks = par_map(&points, |&(a, l)| {
                let tr = solve_abel(&problem, a, l, mu, t_max, g.clone(), cfg).with_context(|| format!("alpha = {a}, lambda = {l}"))?;
                Ok(tr.nodes.iter().zip(&tr.values).map(|(x, v)| vec![Cell::Num(a), Cell::Num(l), Cell::Num(*x), Cell::Num(*v)]).collect::<Vec<_>>())
            })?;
            let mut r = RunRecord::new(echo, &["alpha", "lambda", "x", "value"]);
            r.rows = blocks.into_iter().flatten().collect();
            Ok(r)
        }
        Task::Probe => {
            let ids: Vec<String> = match &spec.conjecture {
                Some(id) => vec![id.clone()],
                None => crossings::CONJECTURES.iter().map(|s| s.to_string()).collect(),
            };
            let mut r = RunRecord::new(echo, &["conjecture", "grid", "violations", "min_margin"]);
            for id in ids {
                let grid = ProbeGrid::default_for(&id).map_err(|e| usage(e.to_string()))?;
                let rep = crossings::probe_conjecture(&id, &grid, cfg)?;
                r.rows.push(vec![Cell::Text(id), Cell::Text(rep.grid), Cell::Int(rep.violations.len() as u64), Cell::Num(rep.min_margin)]);
            }
            Ok(r)
        }
    }
}
