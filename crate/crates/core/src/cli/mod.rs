//! Command-line front end: problem files in, JSON, CSV and SVG out.

mod output;
mod problem_file;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::SpeedBracket;
use crate::error::WaveError;
use crate::expr::ExprError;
use crate::model::{decompose, validate_hypotheses, Decomposition, HypothesisCheck, SignInterval};
use crate::shoot::ThresholdResult;
use crate::wave::{
    compute_c_hat, corollary_one_existence_at_c_hat, existence_at, wave_report, Exists, Threshold,
    WaveReport,
};

pub use output::{profile_csv, profile_svg, read_profile_csv};
pub use problem_file::{FileOptions, Loaded, ProblemFile};

/// Environment variable capping the worker threads of `sweep`.
pub const THREADS_ENV: &str = "WAVEKIT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    ProblemFile { path: PathBuf, message: String },
    #[error("in `{key}`: {source}")]
    Expression { key: String, source: ExprError },
    #[error("hypotheses fail: {0}")]
    HypothesesFail(String),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 hypothesis, 3 parse, 4 usage, 5 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::HypothesesFail(_) => 2,
            CliError::ProblemFile { .. } | CliError::Expression { .. } => 3,
            CliError::Io { .. } | CliError::Usage(_) => 4,
            CliError::Wave(e) => match e {
                WaveError::Hypothesis { .. } | WaveError::Plateau { .. } => 2,
                WaveError::Expr(_) => 3,
                WaveError::InvalidInput(_) => 4,
                _ => 5,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wavekit",
    version,
    about = "Threshold speeds and profiles of travelling wavefronts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Input {
    /// TOML problem file.
    pub file: PathBuf,
    /// Parameter binding `NAME=VALUE`, overriding `[params]`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

impl Input {
    fn load(&self) -> Result<Loaded, CliError> {
        let overrides: BTreeMap<String, f64> = self.params.iter().cloned().collect();
        ProblemFile::read(&self.file)?.load(&self.file, &overrides)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Checks the hypotheses of the existence theory.
    Validate(Input),
    /// Computes the threshold speed and its analytic bracket.
    Threshold(Input),
    /// Decides existence at one speed and writes the profile.
    Wave {
        #[command(flatten)]
        input: Input,
        /// Absolute wave speed.
        #[arg(
            long,
            allow_negative_numbers = true,
            conflicts_with = "speed_offset",
            required_unless_present = "speed_offset"
        )]
        speed: Option<f64>,
        /// Speed relative to the threshold.
        #[arg(long, allow_negative_numbers = true)]
        speed_offset: Option<f64>,
        /// Directory receiving `<name>.json`, `<name>.csv` and `<name>.svg`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Decides existence on an equally spaced range of speeds.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        /// Number of subintervals; `steps + 1` speeds are evaluated.
        #[arg(long)]
        steps: usize,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("value of `{name}`: {e}"))?;
    Ok((name.trim().to_string(), value))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationOutput {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<HypothesisCheck>,
    pub intervals: Vec<SignInterval>,
    pub d0: Vec<f64>,
    pub d00: Vec<f64>,
}

pub fn validate(loaded: &Loaded) -> Result<ValidationOutput, CliError> {
    let p = &loaded.problem;
    let d = decompose(p, loaded.options.scan_cells, loaded.options.tolerances)?;
    let report = validate_hypotheses(p, &d)?;
    Ok(ValidationOutput {
        name: p.name.clone(),
        passed: report.passed(),
        checks: report.checks,
        intervals: d.intervals,
        d0: d.d0,
        d00: d.d00,
    })
}

pub fn validation_table(v: &ValidationOutput) -> String {
    let mut out = format!(
        "{:<34} {:>3} {:<6} {:>12}  detail\n",
        "check", "k", "result", "u"
    );
    for c in &v.checks {
        let _ = writeln!(
            out,
            "{:<34} {:>3} {:<6} {:>12}  {}",
            c.name,
            c.k.map_or_else(|| "-".into(), |k| k.to_string()),
            if c.passed { "pass" } else { "FAIL" },
            c.violating_u
                .map_or_else(|| "-".into(), |u| format!("{u:.6}")),
            c.detail
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdOutput {
    pub name: String,
    pub c_hat: f64,
    pub c_star: f64,
    pub bracket: SpeedBracket,
    pub per_interval: Vec<ThresholdResult>,
}

/// Decomposes, validates and computes `ĉ`.
pub fn prepare(loaded: &Loaded) -> Result<(Decomposition, Threshold), CliError> {
    let p = &loaded.problem;
    let d = decompose(p, loaded.options.scan_cells, loaded.options.tolerances)?;
    let report = validate_hypotheses(p, &d)?;
    if !report.passed() {
        let names: Vec<String> = report
            .failures()
            .map(|c| match c.k {
                Some(k) => format!("{} (interval {k})", c.name),
                None => c.name.clone(),
            })
            .collect();
        return Err(CliError::HypothesesFail(names.join(", ")));
    }
    let th = compute_c_hat(p, &d, &loaded.options)?;
    Ok((d, th))
}

pub fn threshold(loaded: &Loaded) -> Result<ThresholdOutput, CliError> {
    let (_, th) = prepare(loaded)?;
    Ok(ThresholdOutput {
        name: loaded.problem.name.clone(),
        c_hat: th.c_hat,
        c_star: th.c_star,
        bracket: th.bracket,
        per_interval: th.per_interval,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    Absolute(f64),
    OffsetFromThreshold(f64),
}

/// Files written by [`wave`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFiles {
    pub json: PathBuf,
    /// Absent when no wave exists at the speed.
    pub csv: Option<PathBuf>,
    pub svg: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the full pipeline at one speed and writes the report, the profile
/// and the plots into `out_dir`.
pub fn wave(
    loaded: &Loaded,
    speed: Speed,
    out_dir: &Path,
) -> Result<(WaveReport, WaveFiles), CliError> {
    let c = match speed {
        Speed::Absolute(c) | Speed::OffsetFromThreshold(c) if !c.is_finite() => {
            return Err(CliError::Usage(format!("speed {c} is not finite")));
        }
        _ => speed,
    };
    let p = &loaded.problem;
    let (d, th) = prepare(loaded)?;
    let c = match c {
        Speed::Absolute(c) => c,
        Speed::OffsetFromThreshold(o) => th.c_hat + o,
    };
    let report = wave_report(p, &d, &th, c, &loaded.options)?;

    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let json = out_dir.join(format!("{}.json", p.name));
    write_file(&json, &report_json(&report))?;
    let csv = match &report.profile {
        Some(profile) => {
            let path = out_dir.join(format!("{}.csv", p.name));
            write_file(&path, &profile_csv(profile))?;
            Some(path)
        }
        None => None,
    };
    let svg = out_dir.join(format!("{}.svg", p.name));
    let title = format!(
        "{} at c = {}: exists {}, {}",
        p.name,
        report.c_evaluated,
        exists_str(report.verdict.exists),
        report.classification.as_str()
    );
    write_file(
        &svg,
        &profile_svg(&title, report.profile.as_ref(), &report.glued),
    )?;
    Ok((report, WaveFiles { json, csv, svg }))
}

pub fn report_json(report: &WaveReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

pub fn exists_str(e: Exists) -> &'static str {
    match e {
        Exists::Yes => "yes",
        Exists::No => "no",
        Exists::UndeterminedAtCHat => "undetermined_at_c_hat",
        Exists::Undetermined => "undetermined",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub feasible_per_interval: Vec<bool>,
    pub exists: Exists,
}

/// `steps + 1` equally spaced speeds from `from` to `to`.
pub fn sweep_speeds(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::Usage("sweep bounds must be finite".into()));
    }
    if steps == 0 || from >= to {
        return Err(CliError::Usage(format!(
            "empty sweep: need --from < --to and --steps ≥ 1, got {from}..{to} in {steps} steps"
        )));
    }
    Ok((0..=steps)
        .map(|i| {
            if i == steps {
                to
            } else {
                from + (to - from) * i as f64 / steps as f64
            }
        })
        .collect())
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

pub fn sweep(loaded: &Loaded, speeds: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let p = &loaded.problem;
    let (d, th) = prepare(loaded)?;
    let corollary = corollary_one_existence_at_c_hat(p, &d)?;
    let run = || {
        speeds
            .par_iter()
            .map(|&c| {
                let (glued, verdict) = existence_at(p, &d, &th, &corollary, c, &loaded.options)?;
                Ok(SweepRow {
                    c,
                    feasible_per_interval: glued.pieces.iter().map(|s| s.is_feasible()).collect(),
                    exists: verdict.exists,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
    };
    match thread_cap()? {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(run),
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("c,feasible_per_interval,exists\n");
    for r in rows {
        let feasible: Vec<&str> = r
            .feasible_per_interval
            .iter()
            .map(|&f| if f { "yes" } else { "no" })
            .collect();
        let _ = writeln!(
            out,
            "{},{},{}",
            r.c,
            feasible.join(";"),
            exists_str(r.exists)
        );
    }
    out
}

fn json_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate(input) => {
            let v = validate(&input.load()?)?;
            println!("{}", json_line(&v));
            eprint!("{}", validation_table(&v));
            Ok(if v.passed { 0 } else { 2 })
        }
        Command::Threshold(input) => {
            println!("{}", json_line(&threshold(&input.load()?)?));
            Ok(0)
        }
        Command::Wave {
            input,
            speed,
            speed_offset,
            out_dir,
        } => {
            let speed = match (speed, speed_offset) {
                (Some(c), _) => Speed::Absolute(c),
                (None, Some(o)) => Speed::OffsetFromThreshold(o),
                (None, None) => {
                    return Err(CliError::Usage("give --speed or --speed-offset".into()))
                }
            };
            let (report, files) = wave(&input.load()?, speed, &out_dir)?;
            print!("{}", report_json(&report));
            eprintln!("wrote {}", files.json.display());
            if let Some(csv) = &files.csv {
                eprintln!("wrote {}", csv.display());
            }
            eprintln!("wrote {}", files.svg.display());
            Ok(0)
        }
        Command::Sweep {
            input,
            from,
            to,
            steps,
            out,
        } => {
            let speeds = sweep_speeds(from, to, steps)?;
            let csv = sweep_csv(&sweep(&input.load()?, &speeds)?);
            match out {
                Some(path) => write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(0)
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
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
