//! Command-line surface for the walk toolkit.
//!
//! Subcommands: `simulate` (exact evolution to CSV/PGM), `shape` (Gauss-map
//! image cloud and density image), `compare` (exact vs predicted
//! probabilities), `critical` (per-direction critical-point reports), and
//! `check` (the numerical self-check battery).
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical check failure.

mod checks;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qrw2d::asymptotics::{direction_report, Direction};
use qrw2d::model::{CoinModel, ModelDescriptor};
use qrw2d::render::{cloud_csv, cloud_pgm, profile_csv, profile_pgm, Scale};
use qrw2d::simulate::evolve;
use qrw2d::tolerances::Tolerances;
use qrw2d::variety::Variety;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    CheckFailed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::CheckFailed(_) => 3,
            CliError::Io(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "qrw2d", version, about = "2-D quantum walk simulator and asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model descriptor: inline JSON or a path to a JSON file.
    #[arg(long)]
    model: String,
    /// Tolerance override, repeatable: --tol name=value.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the walk exactly and write the probability profile.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of time steps.
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Start chirality vector: e1..e4 or eight comma-separated numbers
        /// re1,im1,...,re4,im4 (normalized to unit length required).
        #[arg(long, default_value = "e1")]
        start: String,
        /// Output base path; writes `<out>.csv` and/or `<out>.pgm`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Both)]
        format: FormatArg,
        #[arg(long, value_enum, default_value_t = ScaleArg::Log)]
        scale: ScaleArg,
        /// CSV row threshold on probability.
        #[arg(long, default_value_t = 1e-16)]
        threshold: f64,
    },
    /// Render the feasible-region image of the Gauss map.
    Shape {
        #[command(flatten)]
        model: ModelArgs,
        /// Grid resolution per torus axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Output base path; writes `<out>.csv` and/or `<out>.pgm`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Both)]
        format: FormatArg,
        /// Pixel resolution of the density image.
        #[arg(long, default_value_t = 512)]
        pixels: usize,
    },
    /// Compare exact probabilities with stationary-phase predictions.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        /// Direction r,s,n; repeatable.
        #[arg(long = "dir", value_name = "R,S,N", required = true)]
        dirs: Vec<String>,
        /// Start vector; `all` sweeps the four basis chiralities.
        #[arg(long, default_value = "e1")]
        start: String,
        /// Output JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report critical points and predicted probabilities per direction.
    Critical {
        #[command(flatten)]
        model: ModelArgs,
        /// Direction r,s,n; repeatable.
        #[arg(long = "dir", value_name = "R,S,N", required = true)]
        dirs: Vec<String>,
        #[arg(long, default_value = "e1")]
        start: String,
        /// Also run the exact simulation for each n and attach it.
        #[arg(long, default_value_t = false)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical self-check battery.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        /// Torality sample count.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Pgm,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_model(args: &ModelArgs) -> Result<(CoinModel, Tolerances), CliError> {
    load_model_with(args, false)
}

/// `lenient` admits a non-unitary custom coin; only `check` uses it, so the
/// suite can diagnose broken input instead of refusing it.
fn load_model_with(args: &ModelArgs, lenient: bool) -> Result<(CoinModel, Tolerances), CliError> {
    let text = if args.model.trim_start().starts_with('{') {
        args.model.clone()
    } else {
        std::fs::read_to_string(&args.model)
            .map_err(|e| CliError::Config(format!("cannot read model file `{}`: {e}", args.model)))?
    };
    let descriptor =
        ModelDescriptor::parse(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let model = if lenient {
        descriptor.to_model_lenient()
    } else {
        descriptor.to_model()
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let mut tol = Tolerances::default();
    for entry in &args.tol {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--tol needs name=value, got `{entry}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Config(format!("--tol {name}: `{value}` is not a number")))?;
        tol.set(name.trim(), value)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok((model, tol))
}

fn parse_start(text: &str) -> Result<[Complex64; 4], CliError> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match text {
        "e1" => return Ok([one, zero, zero, zero]),
        "e2" => return Ok([zero, one, zero, zero]),
        "e3" => return Ok([zero, zero, one, zero]),
        "e4" => return Ok([zero, zero, zero, one]),
        _ => {}
    }
    let nums: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("bad --start `{text}`")))?;
    if nums.len() != 8 {
        return Err(CliError::Config(
            "--start takes e1..e4 or eight numbers re1,im1,...,re4,im4".into(),
        ));
    }
    Ok(std::array::from_fn(|k| {
        Complex64::new(nums[2 * k], nums[2 * k + 1])
    }))
}

fn parse_dir(text: &str) -> Result<Direction, CliError> {
    let parts: Vec<i64> = text
        .split(',')
        .map(|s| s.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("bad --dir `{text}`")))?;
    if parts.len() != 3 || parts[2] < 1 {
        return Err(CliError::Config(format!(
            "--dir takes r,s,n with n >= 1, got `{text}`"
        )));
    }
    Ok(Direction::new(parts[0], parts[1], parts[2]))
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

#[derive(Serialize)]
struct StartSweep {
    start: String,
    directions: Vec<qrw2d::asymptotics::CriticalPointReport>,
    median_relative_error: Option<f64>,
}

#[derive(Serialize)]
struct CompareSummary {
    sweeps: Vec<StartSweep>,
}

fn compare_one_start(
    variety: &Variety,
    model: &CoinModel,
    label: &str,
    start: [Complex64; 4],
    dirs: &[Direction],
    tol: &Tolerances,
) -> Result<StartSweep, CliError> {
    let mut times: Vec<i64> = dirs.iter().map(|d| d.n).collect();
    times.sort_unstable();
    times.dedup();
    let mut grids = std::collections::BTreeMap::new();
    for &n in &times {
        let field =
            evolve(model, start, n as usize).map_err(|e| CliError::Config(e.to_string()))?;
        grids.insert(n, field.probability_profile());
    }
    let mut reports = Vec::new();
    let mut rels = Vec::new();
    for &dir in dirs {
        let exact = grids[&dir.n].at(dir.r as i32, dir.s as i32);
        let report = direction_report(variety, dir, start, Some(exact), tol);
        if let Some(pred) = report.predicted_probability {
            if exact > 0.0 && pred > 0.0 {
                rels.push((pred - exact).abs() / exact);
            }
        }
        reports.push(report);
    }
    rels.sort_by(f64::total_cmp);
    let median = (!rels.is_empty()).then(|| rels[rels.len() / 2]);
    Ok(StartSweep {
        start: label.to_string(),
        directions: reports,
        median_relative_error: median,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            model,
            n,
            start,
            out,
            format,
            scale,
            threshold,
        } => {
            let (m, _tol) = load_model(&model)?;
            if n > 4096 {
                return Err(CliError::Config(format!(
                    "--n {n} needs a {0}x{0} lattice box; the dense simulator is sized for n <= 4096",
                    2 * n + 1
                )));
            }
            let start = parse_start(&start)?;
            let field = evolve(&m, start, n).map_err(|e| CliError::Config(e.to_string()))?;
            let grid = field.probability_profile();
            if matches!(format, FormatArg::Csv | FormatArg::Both) {
                write_out(
                    &out.with_extension("csv"),
                    profile_csv(&grid, threshold).as_bytes(),
                )?;
            }
            if matches!(format, FormatArg::Pgm | FormatArg::Both) {
                let scale = match scale {
                    ScaleArg::Linear => Scale::Linear,
                    ScaleArg::Log => Scale::Log,
                };
                write_out(&out.with_extension("pgm"), &profile_pgm(&grid, scale))?;
            }
            Ok(())
        }
        Command::Shape {
            model,
            grid,
            out,
            format,
            pixels,
        } => {
            let (m, tol) = load_model(&model)?;
            if grid == 0 {
                return Err(CliError::Config("--grid must be positive".into()));
            }
            let variety = Variety::with_tolerances(m, tol);
            let cloud = variety.feasible_region_image(grid);
            if matches!(format, FormatArg::Csv | FormatArg::Both) {
                write_out(&out.with_extension("csv"), cloud_csv(&cloud).as_bytes())?;
            }
            if matches!(format, FormatArg::Pgm | FormatArg::Both) {
                write_out(&out.with_extension("pgm"), &cloud_pgm(&cloud, pixels))?;
            }
            Ok(())
        }
        Command::Compare {
            model,
            dirs,
            start,
            out,
        } => {
            let (m, tol) = load_model(&model)?;
            let dirs = dirs
                .iter()
                .map(|d| parse_dir(d))
                .collect::<Result<Vec<_>, _>>()?;
            let variety = Variety::with_tolerances(m.clone(), tol.clone());
            let starts: Vec<(String, [Complex64; 4])> = if start == "all" {
                ["e1", "e2", "e3", "e4"]
                    .iter()
                    .map(|s| Ok((s.to_string(), parse_start(s)?)))
                    .collect::<Result<_, CliError>>()?
            } else {
                vec![(start.clone(), parse_start(&start)?)]
            };
            let mut sweeps = Vec::new();
            for (label, vec) in starts {
                sweeps.push(compare_one_start(&variety, &m, &label, vec, &dirs, &tol)?);
            }
            let summary = CompareSummary { sweeps };
            let json = serde_json::to_string_pretty(&summary).expect("serialize");
            match out {
                Some(path) => write_out(&path, json.as_bytes())?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Critical {
            model,
            dirs,
            start,
            exact,
            out,
        } => {
            let (m, tol) = load_model(&model)?;
            let start = parse_start(&start)?;
            let dirs = dirs
                .iter()
                .map(|d| parse_dir(d))
                .collect::<Result<Vec<_>, _>>()?;
            let variety = Variety::with_tolerances(m.clone(), tol.clone());
            let mut reports = Vec::new();
            for dir in dirs {
                let exact_p = if exact {
                    let field = evolve(&m, start, dir.n as usize)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    Some(field.probability_profile().at(dir.r as i32, dir.s as i32))
                } else {
                    None
                };
                reports.push(direction_report(&variety, dir, start, exact_p, &tol));
            }
            let json = serde_json::to_string_pretty(&reports).expect("serialize");
            match out {
                Some(path) => write_out(&path, json.as_bytes())?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Check {
            model,
            samples,
            format,
        } => {
            let (m, tol) = load_model_with(&model, true)?;
            let report = checks::run_checks(&m, &tol, samples);
            match format {
                ReportFormat::Text => print!("{}", report.to_text()),
                ReportFormat::Json => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("serialize"))
                }
            }
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!(
                    "{} of {} checks failed",
                    report.failures(),
                    report.checks.len()
                )))
            }
        }
    }
}
