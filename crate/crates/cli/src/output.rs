//! Report files and exit codes.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use cirfuse_core::pipeline::{MethodComparison, WindowCount};
use cirfuse_core::{CalibrationConfig, Error, ScenarioReport, WindowConfig};
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config files. Exit 2.
    Config(String),
    /// Unreadable or inconsistent recordings, output failures. Exit 3.
    Data(String),
    /// No window produced an estimate. Exit 4.
    Degenerate(String),
}

impl CliError {
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::Config(_) => CliError::Config(e.to_string()),
            e if e.is_numerical() => CliError::Degenerate(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Degenerate(m) => f.write_str(m),
        }
    }
}

/// Settings a run used, written next to its results.
#[derive(Serialize)]
pub struct ConfigEcho {
    input: String,
    band: String,
    window_snapshots: usize,
    hop_snapshots: usize,
    nominal_rate_hz: f64,
    resolution_hz: f64,
    rank_tol: f64,
    window_count: &'static str,
    calibration: CalibrationConfig,
}

impl ConfigEcho {
    pub fn new(input: &Path, cfg: &WindowConfig, calib: &CalibrationConfig) -> Self {
        Self {
            input: input.display().to_string(),
            band: cfg.band.to_string(),
            window_snapshots: cfg.window_snapshots,
            hop_snapshots: cfg.hop_snapshots,
            nominal_rate_hz: cfg.nominal_rate_hz,
            resolution_hz: cfg.resolution_hz,
            rank_tol: cfg.rank_tol,
            window_count: match cfg.window_count {
                WindowCount::Exclusive => "exclusive",
                WindowCount::Inclusive => "inclusive",
            },
            calibration: *calib,
        }
    }
}

#[derive(Serialize)]
struct MethodSummary {
    method: String,
    windows: usize,
    estimates: usize,
    median_abs_error_hz: Option<f64>,
    median_confidence: Option<f64>,
    failures: Vec<FailureRow>,
}

#[derive(Serialize)]
struct FailureRow {
    window_start_index: usize,
    reason: String,
}

impl MethodSummary {
    fn new(r: &ScenarioReport) -> Self {
        Self {
            method: r.method.to_string(),
            windows: r.window_count(),
            estimates: r.estimates.len(),
            median_abs_error_hz: r.median_abs_error_hz,
            median_confidence: r.median_confidence,
            failures: r
                .failures
                .iter()
                .map(|f| FailureRow {
                    window_start_index: f.window_start_index,
                    reason: f.reason.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct Summary {
    ground_truth_hz: Option<f64>,
    methods: Vec<MethodSummary>,
    config: ConfigEcho,
}

impl Summary {
    pub fn single(r: &ScenarioReport, config: ConfigEcho) -> Self {
        Self {
            ground_truth_hz: r.ground_truth_hz,
            methods: vec![MethodSummary::new(r)],
            config,
        }
    }

    pub fn pair(c: &MethodComparison, config: ConfigEcho) -> Self {
        Self {
            ground_truth_hz: c.fusion.ground_truth_hz,
            methods: vec![
                MethodSummary::new(&c.selection),
                MethodSummary::new(&c.fusion),
            ],
            config,
        }
    }
}

#[derive(Serialize)]
struct WindowRow {
    window_start_index: usize,
    method: String,
    rate_hz: f64,
    confidence: f64,
    lambda: Option<f64>,
}

pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

pub fn write_windows_csv<'a>(
    path: &Path,
    reports: impl IntoIterator<Item = &'a ScenarioReport>,
) -> Result<(), CliError> {
    let fail = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    for r in reports {
        for e in &r.estimates {
            w.serialize(WindowRow {
                window_start_index: e.window_start_index,
                method: e.method.to_string(),
                rate_hz: e.rate_hz,
                confidence: e.confidence,
                lambda: e.lambda,
            })
            .map_err(fail)?;
        }
    }
    w.flush()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let fail = |e: String| CliError::Data(format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(|e| fail(e.to_string()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|e| fail(e.to_string()))
}

pub fn print_report_line(r: &ScenarioReport) {
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "{}: {} windows, {} failed, median |error| {} Hz, median confidence {}",
        r.method,
        r.window_count(),
        r.failures.len(),
        fmt(r.median_abs_error_hz),
        fmt(r.median_confidence)
    );
}

/// Exit 4 when some report has windows but none of them produced an estimate.
pub fn require_estimates(reports: &[&ScenarioReport]) -> Result<(), CliError> {
    match reports
        .iter()
        .find(|r| r.estimates.is_empty() && !r.failures.is_empty())
    {
        Some(r) => Err(CliError::Degenerate(format!(
            "{}: all {} windows failed, first: {}",
            r.method,
            r.failures.len(),
            r.failures[0].reason
        ))),
        None => Ok(()),
    }
}
