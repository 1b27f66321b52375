//! Subcommand implementations shared by the binary and the tests.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, ScenarioFile, DEFAULT_DECIMATE};
use super::scenarios;
use super::summary::{summarize, ConvergenceSummary, SummaryOptions};
use super::trace_io::{write_trace, TraceFormat};
use crate::sim::{run_decimated, Scenario, SimAbort, TargetTrajectory, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ABORT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Aborted(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Aborted(_) => EXIT_ABORT,
            _ => EXIT_USAGE,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a scenario file, or a built-in scenario when `source` names one and
/// no such file exists.
pub fn load_scenario(source: &str) -> Result<ScenarioFile, CliError> {
    let path = Path::new(source);
    if !path.exists() {
        if let Some(s) = scenarios::builtin(source) {
            return Ok(ScenarioFile::from_scenario(&s, DEFAULT_DECIMATE));
        }
    }
    Ok(ScenarioFile::load(path)?)
}

/// Result of one simulation: the (possibly partial) trace and its summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Trace,
    pub summary: Option<ConvergenceSummary>,
    pub abort: Option<String>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }
}

pub fn simulate(scenario: &Scenario, decimate: usize) -> RunOutcome {
    let (trace, abort) = match run_decimated(scenario, decimate) {
        Ok(trace) => (trace, None),
        Err(SimAbort { error, partial }) => {
            let msg = SimAbort {
                error,
                partial: Trace::default(),
            }
            .to_string();
            (partial, Some(msg))
        }
    };
    let summary = summarize(&trace, &SummaryOptions::default());
    RunOutcome {
        trace,
        summary,
        abort,
    }
}

fn write_trace_file(path: &Path, trace: &Trace, format: TraceFormat) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_trace(BufWriter::new(file), trace, format).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("summaries serialize");
    fs::write(path, text + "\n").map_err(io_err(path))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub format: TraceFormat,
    /// Overrides the decimation of the scenario file.
    pub decimate: Option<usize>,
}

/// `run`: simulates one scenario, writes its trace to `out` (stdout when
/// absent) and returns the summary.
pub fn cmd_run(scenario: &str, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let file = load_scenario(scenario)?;
    let decimate = opts.decimate.unwrap_or(file.decimate);
    if decimate == 0 {
        return Err(CliError::Usage("--decimate must be at least 1".into()));
    }
    let outcome = simulate(&file.scenario(), decimate);
    match &opts.out {
        Some(path) => write_trace_file(path, &outcome.trace, opts.format)?,
        None => match write_trace(io::stdout().lock(), &outcome.trace, opts.format) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                return Err(io_err(Path::new("<stdout>"))(e))
            }
            _ => {}
        },
    }
    match &outcome.abort {
        Some(msg) => Err(CliError::Aborted(msg.clone())),
        None => Ok(outcome),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    KappaC,
    KappaEta,
    KappaXi,
    TargetSpeed,
    Dt,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] = [
        SweepParam::KappaC,
        SweepParam::KappaEta,
        SweepParam::KappaXi,
        SweepParam::TargetSpeed,
        SweepParam::Dt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::KappaC => "kappa_c",
            SweepParam::KappaEta => "kappa_eta",
            SweepParam::KappaXi => "kappa_xi",
            SweepParam::TargetSpeed => "target_speed",
            SweepParam::Dt => "dt",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario, CliError> {
        let mut s = base.clone();
        match self {
            SweepParam::KappaC => s.gains.kappa_c = value,
            SweepParam::KappaEta => s.gains.kappa_eta = value,
            SweepParam::KappaXi => s.gains.kappa_xi = value,
            SweepParam::Dt => s.dt = value,
            SweepParam::TargetSpeed => {
                if s.trajectory == TargetTrajectory::Stationary {
                    return Err(CliError::Usage(
                        "target_speed cannot be swept on a stationary target".into(),
                    ));
                }
                s.trajectory = s.trajectory.with_speed(value);
            }
        }
        s.validate()
            .map_err(|e| CliError::Usage(format!("{} = {value}: {e}", self.name())))?;
        Ok(s)
    }
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SweepParam::ALL.iter().map(|p| p.name()).collect();
                CliError::Usage(format!(
                    "unknown parameter `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    let values = list
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("`{v}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("the value list is empty".into()));
    }
    Ok(values)
}

/// One row of a combined summary table.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub label: String,
    #[serde(skip)]
    pub trace_file: PathBuf,
    pub completed: bool,
    pub summary: Option<ConvergenceSummary>,
}

pub const TABLE_COLUMNS: &str =
    "label,status,final_error_norm,settle_time,fitted_rate,fit_r2,steady_state_band,samples";

/// Renders rows as CSV with [`TABLE_COLUMNS`].
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    let mut out = format!("{TABLE_COLUMNS}\n");
    for r in rows {
        let status = if r.completed { "ok" } else { "aborted" };
        match &r.summary {
            Some(s) => writeln!(
                out,
                "{},{status},{},{},{},{},{},{}",
                r.label,
                s.final_error_norm,
                opt(s.settle_time),
                opt(s.fitted_rate),
                opt(s.fit_r2),
                s.steady_state_band,
                s.samples
            ),
            None => writeln!(out, "{},{status},,,,,,0", r.label),
        }
        .expect("writing to a string cannot fail");
    }
    out
}

fn run_batch(
    jobs: Vec<(String, Scenario)>,
    out_dir: &Path,
    format: TraceFormat,
    decimate: usize,
) -> Result<Vec<SummaryRow>, CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let rows = jobs
        .into_par_iter()
        .map(|(label, scenario)| {
            let outcome = simulate(&scenario, decimate);
            let trace_file = out_dir.join(format!("{label}.{}", format.extension()));
            write_trace_file(&trace_file, &outcome.trace, format)?;
            let row = SummaryRow {
                label: label.clone(),
                trace_file,
                completed: outcome.completed(),
                summary: outcome.summary,
            };
            write_json(&out_dir.join(format!("{label}.summary.json")), &row)?;
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = out_dir.join("summary.csv");
    fs::write(&table, summary_table(&rows)).map_err(io_err(&table))?;
    Ok(rows)
}

fn batch_status(rows: Vec<SummaryRow>) -> Result<Vec<SummaryRow>, CliError> {
    let aborted: Vec<_> = rows
        .iter()
        .filter(|r| !r.completed)
        .map(|r| r.label.as_str())
        .collect();
    if aborted.is_empty() {
        Ok(rows)
    } else {
        Err(CliError::Aborted(format!(
            "aborted runs: {}",
            aborted.join(", ")
        )))
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub out_dir: PathBuf,
    pub format: TraceFormat,
    pub decimate: Option<usize>,
}

/// `sweep`: runs the scenario once per value of `param`, in parallel. Each
/// run writes `<param>_<value>.<ext>` and a summary; `summary.csv` collects
/// them in the order given.
pub fn cmd_sweep(
    scenario: &str,
    param: &str,
    values: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<SummaryRow>, CliError> {
    let param: SweepParam = param.parse()?;
    if values.is_empty() {
        return Err(CliError::Usage("the value list is empty".into()));
    }
    let file = load_scenario(scenario)?;
    let base = file.scenario();
    let jobs = values
        .iter()
        .map(|&v| Ok((format!("{}_{v}", param.name()), param.apply(&base, v)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let decimate = opts.decimate.unwrap_or(file.decimate).max(1);
    batch_status(run_batch(jobs, &opts.out_dir, opts.format, decimate)?)
}

/// `paperpack`: runs every built-in scenario and writes its scenario file,
/// trace and summary to `out_dir`.
pub fn cmd_paperpack(out_dir: &Path, format: TraceFormat) -> Result<Vec<SummaryRow>, CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut jobs = Vec::new();
    for name in scenarios::NAMES {
        let s = scenarios::builtin(name).expect("listed scenarios exist");
        let path = out_dir.join(format!("{name}.toml"));
        let text = ScenarioFile::from_scenario(&s, DEFAULT_DECIMATE).to_toml();
        fs::write(&path, text).map_err(io_err(&path))?;
        jobs.push((name.to_string(), s));
    }
    batch_status(run_batch(jobs, out_dir, format, DEFAULT_DECIMATE)?)
}
