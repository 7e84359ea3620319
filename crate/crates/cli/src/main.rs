//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (invalid density, divergence,
//! degenerate data, failed run), 2 unreadable or malformed input.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use switchover::density::Tolerances;
use switchover::executor::{self, Candidate, CommandCandidate, Manifest, ProfileConfig, Task};
use switchover::expected_time::{et_monte_carlo, et_quadrature, McConfig};
use switchover::io::{self as sio, fmt_num, CurvePoint};
use switchover::density::Rect;
use switchover::mle::{count_membership, log_likelihood, BoxPartition};
use switchover::optimizer::{self, ScanConfig};
use switchover::{
    auto_partition, dominance_check, fit_k, EtEvaluator, Expectation, JointDensity, PartitionStrategy, QuadConfig,
    Schedule, TimingSamples,
};

#[derive(Parser)]
#[command(name = "switchover", version, about = "Switch-time scheduling for portfolios of equivalent algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArg {
    /// Destination file, `-` for standard output.
    #[arg(long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct DensityArg {
    /// Density spec (JSON).
    #[arg(long)]
    density: PathBuf,
}

#[derive(Args)]
struct ToleranceArg {
    /// Absolute quadrature tolerance (for `validate`: the mass tolerance of exact forms).
    #[arg(long)]
    tolerance: Option<f64>,
}

impl ToleranceArg {
    fn quad(&self) -> QuadConfig {
        let mut q = QuadConfig::default();
        if let Some(t) = self.tolerance {
            q.abs_tol = t;
        }
        q
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Closed form where available, quadrature otherwise.
    Auto,
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Check a density spec; exit 0 iff valid.
    Validate {
        #[command(flatten)]
        density: DensityArg,
        #[command(flatten)]
        tol: ToleranceArg,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Expected time over a grid of switch times, as CSV.
    Curve {
        #[command(flatten)]
        density: DensityArg,
        /// `LO:HI:STEP`, inclusive.
        #[arg(long)]
        tau_grid: String,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Required with `--method monte-carlo`.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        tol: ToleranceArg,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Switch time minimizing the expected time.
    Optimize {
        #[command(flatten)]
        density: DensityArg,
        /// Observed timings, checked for a dominating algorithm.
        #[arg(long)]
        timings: Option<PathBuf>,
        /// Scan range and resolution `LO:HI:STEP` for non-step densities.
        #[arg(long)]
        tau_grid: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        tol: ToleranceArg,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Maximum-likelihood step density from a timing CSV.
    Fit {
        #[arg(long)]
        timings: PathBuf,
        /// `uniform:NX,NY` or `quantile:NX,NY`.
        #[arg(long, default_value = "quantile:4,4")]
        partition: PartitionStrategy,
        /// Fixed boxes instead of a grid: JSON array of `{"a","b","c","d"}` rectangles.
        #[arg(long)]
        boxes: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Monte Carlo expected time for a schedule.
    Simulate {
        #[command(flatten)]
        density: DensityArg,
        /// Budgets `τ₁[,τ₂,…]`.
        #[arg(long)]
        tau: String,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Seeded synthetic timings drawn from a density, as a timing CSV.
    Sample {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Time every candidate of a manifest on every task.
    Profile {
        #[arg(long)]
        manifest: PathBuf,
        /// One task per line.
        #[arg(long)]
        tasks: PathBuf,
        /// Per-run safety cap in milliseconds.
        #[arg(long, default_value_t = 1_000_000)]
        cap_ms: u64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Run the derived algorithm on every task.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        /// Budgets in seconds, `τ₁[,τ₂,…]`; one fewer than the candidates.
        #[arg(long, default_value = "")]
        tau: String,
        #[command(flatten)]
        out: OutputArg,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<switchover::Error>() {
            return if err.is_input_error() { 2 } else { 1 };
        }
        if cause.is::<io::Error>() || cause.is::<InputError>() {
            return 2;
        }
    }
    1
}

/// Malformed command-line values or input files outside the library's own parsers.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn write_out(path: &Path, text: &str) -> Result<()> {
    if path == Path::new("-") {
        let mut out = io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()?;
    } else {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn load_density(arg: &DensityArg) -> Result<JointDensity> {
    Ok(JointDensity::load(&arg.density)?)
}

fn parse_taus(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| InputError(format!("bad budget '{s}'")).into()))
        .collect()
}

fn read_tasks(path: &Path) -> Result<Vec<Task>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(Task::named).collect())
}

/// Rounds every float in a JSON tree to 12 significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            fmt_num(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn pretty(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_json(v)).expect("JSON values serialize");
    s.push('\n');
    s
}

fn expectation_json(e: Expectation) -> Value {
    match e {
        Expectation::Finite(v) => json!(v),
        Expectation::Divergent => json!("divergent"),
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Validate { density, tol, out } => {
            let d = load_density(&density)?;
            let mut t = Tolerances::default();
            if let Some(v) = tol.tolerance {
                t.exact_mass = v;
            }
            let report = d.validate_with(&t);
            let mut text = format!("{} density: ", d.kind());
            text.push_str(&report.to_string());
            text.push('\n');
            write_out(&out.output, &text)?;
            Ok(if report.is_valid() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Curve { density, tau_grid, method, samples, seed, tol, out } => {
            let d = load_density(&density)?;
            let taus = sio::parse_tau_grid(&tau_grid)?;
            let quad = tol.quad();
            let points = match method {
                Method::Auto => {
                    let ev = EtEvaluator::new(&d, &quad)?;
                    taus.iter().map(|&tau| Ok(CurvePoint { tau, result: ev.et(tau)? })).collect::<Result<Vec<_>>>()?
                }
                Method::Quadrature => taus
                    .iter()
                    .map(|&tau| Ok(CurvePoint { tau, result: et_quadrature(&d, tau, &quad)? }))
                    .collect::<Result<Vec<_>>>()?,
                Method::MonteCarlo => {
                    let Some(seed) = seed else { bail!(InputError("--method monte-carlo needs --seed".into())) };
                    let mc = McConfig::new(samples, seed);
                    taus.iter()
                        .map(|&tau| Ok(CurvePoint { tau, result: et_monte_carlo(&d, &Schedule::single(tau)?, &mc)? }))
                        .collect::<Result<Vec<_>>>()?
                }
            };
            let mut buf = Vec::new();
            sio::write_curve(&mut buf, &points)?;
            write_out(&out.output, &String::from_utf8(buf)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize { density, timings, tau_grid, format, tol, out } => {
            let d = load_density(&density)?;
            let quad = tol.quad();
            let mut scan = ScanConfig::default();
            if let Some(g) = tau_grid {
                let grid = sio::parse_tau_grid(&g)?;
                if grid.len() < 2 {
                    bail!(InputError(format!("tau grid '{g}' needs at least two points")));
                }
                scan.range = Some((grid[0], grid[grid.len() - 1]));
                scan.grid_points = grid.len();
            }
            let dominant = match &timings {
                Some(p) => {
                    let samples = sio::load_timings(p)?;
                    let dom = dominance_check(&samples);
                    if let Some(i) = dom {
                        eprintln!(
                            "warning: algorithm {i} is at least as fast on all {} observed tasks; switching cannot beat it there",
                            samples.len()
                        );
                    }
                    dom
                }
                None => None,
            };
            let rep = optimizer::optimize(&d, &quad, &scan)?;
            let text = match format {
                Format::Text => rep.to_string(),
                Format::Json => pretty(json!({
                    "tau_star": rep.tau_star,
                    "et_star": rep.et_star,
                    "e_pi1": expectation_json(rep.e_pi1),
                    "e_pi2": expectation_json(rep.e_pi2),
                    "relative_gain": rep.relative_gain,
                    "candidates_evaluated": rep.candidates.len(),
                    "dominant_algorithm": dominant,
                })),
            };
            write_out(&out.output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit { timings, partition, boxes, out } => {
            let samples = sio::load_timings(&timings)?;
            let part = match boxes {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let rects: Vec<Rect<f64>> = serde_json::from_str(&text)
                        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
                    BoxPartition::new(rects)?
                }
                None => auto_partition(&samples, partition)?,
            };
            let fitted = fit_k(&part, &samples)?;
            let counts = count_membership(&part, &samples);
            eprintln!(
                "fit: {} samples, {} of {} cells nonempty, log-likelihood {}",
                samples.len(),
                fitted.boxes.len(),
                part.len(),
                fmt_num(log_likelihood(&fitted, &samples))
            );
            log::info!("cell counts {:?}", counts.counts);
            let spec: JointDensity = fitted.into();
            let value: Value = serde_json::from_str(&spec.to_json())?;
            write_out(&out.output, &pretty(value))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { density, tau, samples, seed, out } => {
            let d = load_density(&density)?;
            let schedule = Schedule::new(parse_taus(&tau)?)?;
            let r = et_monte_carlo(&d, &schedule, &McConfig::new(samples, seed))?;
            let text = pretty(json!({
                "budgets": schedule.budgets(),
                "et": expectation_json(r.value),
                "method": r.method.to_string(),
                "stderr": r.stderr,
                "samples": samples,
                "seed": seed,
            }));
            write_out(&out.output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample { density, samples, seed, out } => {
            let d = load_density(&density)?;
            let pairs = d.sample(seed, samples)?;
            let ts = TimingSamples::new(pairs)?;
            let mut buf = Vec::new();
            sio::write_timings(&mut buf, &ts)?;
            write_out(&out.output, &String::from_utf8(buf)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Profile { manifest, tasks, cap_ms, out } => {
            let cands = Manifest::load(&manifest)?.candidates()?;
            let portfolio: Vec<&dyn Candidate> = cands.iter().map(|c| c as &dyn Candidate).collect();
            let tasks = read_tasks(&tasks)?;
            let cfg = ProfileConfig { safety_cap: Duration::from_millis(cap_ms), ..ProfileConfig::default() };
            let report = executor::profile(&portfolio, &tasks, &cfg)?;
            for ex in &report.excluded {
                eprintln!("warning: excluded task {} ({}): {}", ex.task_id, ex.candidate, ex.reason);
            }
            let text = if report.candidates.len() == 2 {
                let mut buf = Vec::new();
                sio::write_timings(&mut buf, &report.samples()?)?;
                String::from_utf8(buf)?
            } else {
                let mut s = String::from("task_id");
                for i in 1..=report.candidates.len() {
                    s.push_str(&format!(",t{i}"));
                }
                s.push('\n');
                for (id, row) in &report.rows {
                    s.push_str(id);
                    for t in row {
                        s.push(',');
                        s.push_str(&fmt_num(*t));
                    }
                    s.push('\n');
                }
                s
            };
            write_out(&out.output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { manifest, tasks, tau, out } => {
            let cands: Vec<CommandCandidate> = Manifest::load(&manifest)?.candidates()?;
            let portfolio: Vec<&dyn Candidate> = cands.iter().map(|c| c as &dyn Candidate).collect();
            let schedule = Schedule::new(parse_taus(&tau)?)?;
            let mut text = String::new();
            for task in read_tasks(&tasks)? {
                let run = executor::run_derived(&portfolio, &schedule, &task)?;
                let mut record = serde_json::to_value(&run.record)?;
                record["output"] = json!(run.output);
                text.push_str(&serde_json::to_string(&round_json(record))?);
                text.push('\n');
            }
            write_out(&out.output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

