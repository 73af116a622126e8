//! Sliding-window breathing-rate estimation over a recording.

mod sweep;

pub use sweep::{run_sweep, SweepCell, SweepSpec, SweepTable};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::{calibrate, CalibrationConfig};
use crate::error::{Error, Result};
use crate::fusion::{fuse, select_bin, SnapshotMatrix, DEFAULT_RANK_TOL};
use crate::model::{CirRecording, CirSnapshot};
use crate::spectral::{
    band_energy_ratio, confidence_index, detect_peak, psd_on_grid, BandOfInterest, DftPlan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Selection,
    Fusion,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Selection => "selection",
            Method::Fusion => "fusion",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selection" => Ok(Method::Selection),
            "fusion" => Ok(Method::Fusion),
            _ => Err(Error::config(format!("unknown method `{s}`"))),
        }
    }
}

/// Which window start positions a recording of `S` snapshots yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowCount {
    /// Every window must be followed by at least one more snapshot, so hop 1
    /// gives `S - N` windows (165 for 965 snapshots of 800).
    Exclusive,
    /// Every full window counts: `floor((S - N) / hop) + 1`.
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_snapshots: usize,
    pub hop_snapshots: usize,
    pub nominal_rate_hz: f64,
    pub resolution_hz: f64,
    pub band: BandOfInterest,
    pub method: Method,
    pub rank_tol: f64,
    pub window_count: WindowCount,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_snapshots: 800,
            hop_snapshots: 1,
            nominal_rate_hz: 19.3,
            resolution_hz: 0.001,
            band: BandOfInterest::default(),
            method: Method::Fusion,
            rank_tol: DEFAULT_RANK_TOL,
            window_count: WindowCount::Exclusive,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_snapshots < 2 {
            return Err(Error::config("window_snapshots must be at least 2"));
        }
        if self.hop_snapshots == 0 {
            return Err(Error::config("hop_snapshots must be at least 1"));
        }
        if !(self.nominal_rate_hz > 0.0 && self.nominal_rate_hz.is_finite()) {
            return Err(Error::config("nominal_rate_hz must be positive"));
        }
        if !(self.resolution_hz > 0.0 && self.resolution_hz.is_finite()) {
            return Err(Error::config("resolution_hz must be positive"));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::config("rank_tol must lie in (0, 1)"));
        }
        self.band.validate_for_rate(self.nominal_rate_hz)?;
        let duration = self.window_snapshots as f64 / self.nominal_rate_hz;
        if duration * self.band.f_low_hz < 2.0 {
            return Err(Error::config(format!(
                "a {duration:.1} s window holds fewer than two periods at {} Hz",
                self.band.f_low_hz
            )));
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<DftPlan> {
        DftPlan::new(self.window_snapshots, self.nominal_rate_hz, self.band)
    }

    /// Start indices of the windows in a recording of `total` snapshots.
    pub fn window_starts(&self, total: usize) -> Vec<usize> {
        let n = self.window_snapshots;
        let last = match self.window_count {
            WindowCount::Exclusive if total > n => total - n - 1,
            WindowCount::Inclusive if total >= n => total - n,
            _ => return Vec::new(),
        };
        (0..=last).step_by(self.hop_snapshots).collect()
    }

    fn min_snapshots(&self) -> usize {
        match self.window_count {
            WindowCount::Exclusive => self.window_snapshots + 1,
            WindowCount::Inclusive => self.window_snapshots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreathingEstimate {
    pub window_start_index: usize,
    pub method: Method,
    pub rate_hz: f64,
    pub confidence: f64,
    /// Fusion objective; `None` for selection.
    pub lambda: Option<f64>,
    /// Selected bin; `None` for fusion.
    pub selected_bin: Option<usize>,
    /// In-band share of the estimation series' energy.
    pub band_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub window_start_index: usize,
    pub method: Method,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub method: Method,
    pub estimates: Vec<BreathingEstimate>,
    pub failures: Vec<WindowFailure>,
    pub ground_truth_hz: Option<f64>,
    pub median_abs_error_hz: Option<f64>,
    pub median_confidence: Option<f64>,
}

impl ScenarioReport {
    fn from_outcomes(
        method: Method,
        outcomes: Vec<std::result::Result<BreathingEstimate, WindowFailure>>,
        ground_truth_hz: Option<f64>,
    ) -> Self {
        let mut estimates = Vec::new();
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Ok(e) => estimates.push(e),
                Err(f) => failures.push(f),
            }
        }
        let median_abs_error_hz = ground_truth_hz.and_then(|truth| {
            median(
                estimates
                    .iter()
                    .map(|e| (e.rate_hz - truth).abs())
                    .collect(),
            )
        });
        let median_confidence = median(estimates.iter().map(|e| e.confidence).collect());
        Self {
            method,
            estimates,
            failures,
            ground_truth_hz,
            median_abs_error_hz,
            median_confidence,
        }
    }

    pub fn window_count(&self) -> usize {
        self.estimates.len() + self.failures.len()
    }

    pub fn abs_errors(&self) -> Option<Vec<f64>> {
        let truth = self.ground_truth_hz?;
        Some(
            self.estimates
                .iter()
                .map(|e| (e.rate_hz - truth).abs())
                .collect(),
        )
    }
}

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// Resamples a window onto the uniform grid `t0 + n / rate`, `n < len`,
/// interpolating every bin linearly between neighbouring snapshots. Grid
/// points past the last timestamp take the last snapshot.
pub fn interpolate_uniform(window: &[CirSnapshot], nominal_rate_hz: f64) -> Result<SnapshotMatrix> {
    if window.len() < 2 {
        return Err(Error::TooShort {
            snapshots: window.len(),
            required: 2,
        });
    }
    if !(nominal_rate_hz > 0.0 && nominal_rate_hz.is_finite()) {
        return Err(Error::config("nominal_rate_hz must be positive"));
    }
    let n_bins = window[0].bins.len();
    if let Some(bad) = window.iter().find(|s| s.bins.len() != n_bins) {
        return Err(Error::LengthMismatch {
            expected: n_bins,
            actual: bad.bins.len(),
        });
    }
    if let Some(i) = window
        .windows(2)
        .position(|w| w[1].timestamp_s <= w[0].timestamp_s)
    {
        return Err(Error::NonMonotonicTimestamps { index: i + 1 });
    }

    // Grid points this close to a timestamp take the snapshot verbatim.
    const SNAP: f64 = 1e-9;
    let t0 = window[0].timestamp_s;
    let last = window.len() - 1;
    let mut data = DMatrix::<Complex64>::zeros(window.len(), n_bins);
    let mut seg = 0;
    for row in 0..window.len() {
        let t = t0 + row as f64 / nominal_rate_hz;
        while seg < last && window[seg + 1].timestamp_s <= t {
            seg += 1;
        }
        let source: Vec<Complex64> = if seg == last {
            window[last].bins.clone()
        } else {
            let (a, b) = (&window[seg], &window[seg + 1]);
            let alpha = (t - a.timestamp_s) / (b.timestamp_s - a.timestamp_s);
            if alpha < SNAP {
                a.bins.clone()
            } else if alpha > 1.0 - SNAP {
                b.bins.clone()
            } else {
                a.bins
                    .iter()
                    .zip(&b.bins)
                    .map(|(u, v)| u * (1.0 - alpha) + v * alpha)
                    .collect()
            }
        };
        for (j, v) in source.into_iter().enumerate() {
            data[(row, j)] = v;
        }
    }
    SnapshotMatrix::new(data, nominal_rate_hz)
}

/// Estimates the breathing rate of one resampled window.
pub fn estimate_window(matrix: &SnapshotMatrix, cfg: &WindowConfig) -> Result<BreathingEstimate> {
    cfg.validate()?;
    let plan = cfg.plan()?;
    estimate_with_plan(matrix, cfg, cfg.method, &plan, 0)
}

fn estimate_with_plan(
    matrix: &SnapshotMatrix,
    cfg: &WindowConfig,
    method: Method,
    plan: &DftPlan,
    window_start_index: usize,
) -> Result<BreathingEstimate> {
    if matrix.rows() != cfg.window_snapshots {
        return Err(Error::Dimension(format!(
            "window has {} rows, configuration expects {}",
            matrix.rows(),
            cfg.window_snapshots
        )));
    }
    let (series, lambda, selected_bin) = match method {
        Method::Selection => {
            let (bin, x) = select_bin(matrix, plan)?;
            (x, None, Some(bin))
        }
        Method::Fusion => {
            let (weights, x) = fuse(matrix, plan, cfg.rank_tol)?;
            (x, Some(weights.lambda), None)
        }
    };
    let spectrum = psd_on_grid(&series, cfg.nominal_rate_hz, cfg.band, cfg.resolution_hz)?;
    let (rate_hz, _) = detect_peak(&spectrum);
    Ok(BreathingEstimate {
        window_start_index,
        method,
        rate_hz,
        confidence: confidence_index(&spectrum),
        lambda,
        selected_bin,
        band_ratio: band_energy_ratio(&series, plan)?,
    })
}

fn prepare(
    recording: &CirRecording,
    cfg: &WindowConfig,
    calib_cfg: &CalibrationConfig,
) -> Result<(CirRecording, Vec<usize>, DftPlan)> {
    cfg.validate()?;
    recording.validate()?;
    let starts = cfg.window_starts(recording.len());
    if starts.is_empty() {
        return Err(Error::TooShort {
            snapshots: recording.len(),
            required: cfg.min_snapshots(),
        });
    }
    let calibrated = calibrate(recording, calib_cfg)?;
    Ok((calibrated, starts, cfg.plan()?))
}

fn window_matrix(rec: &CirRecording, start: usize, cfg: &WindowConfig) -> Result<SnapshotMatrix> {
    interpolate_uniform(
        &rec.snapshots[start..start + cfg.window_snapshots],
        cfg.nominal_rate_hz,
    )
}

fn outcome(
    result: Result<BreathingEstimate>,
    start: usize,
    method: Method,
) -> std::result::Result<BreathingEstimate, WindowFailure> {
    result.map_err(|e| WindowFailure {
        window_start_index: start,
        method,
        reason: e.to_string(),
    })
}

/// Calibrates a recording and estimates every window with `cfg.method`.
pub fn run_recording(
    recording: &CirRecording,
    cfg: &WindowConfig,
    calib_cfg: &CalibrationConfig,
) -> Result<ScenarioReport> {
    let (calibrated, starts, plan) = prepare(recording, cfg, calib_cfg)?;
    let outcomes = starts
        .par_iter()
        .map(|&start| {
            let result = window_matrix(&calibrated, start, cfg)
                .and_then(|m| estimate_with_plan(&m, cfg, cfg.method, &plan, start));
            outcome(result, start, cfg.method)
        })
        .collect();
    Ok(ScenarioReport::from_outcomes(
        cfg.method,
        outcomes,
        recording.meta.ground_truth_hz,
    ))
}

/// Selection and fusion run on the same calibrated, resampled windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub selection: ScenarioReport,
    pub fusion: ScenarioReport,
}

impl MethodComparison {
    /// Windows where both methods produced an estimate, as (selection, fusion).
    pub fn paired(&self) -> Vec<(&BreathingEstimate, &BreathingEstimate)> {
        let mut fused = self.fusion.estimates.iter().peekable();
        let mut pairs = Vec::new();
        for s in &self.selection.estimates {
            while fused
                .peek()
                .is_some_and(|f| f.window_start_index < s.window_start_index)
            {
                fused.next();
            }
            if let Some(f) = fused.peek() {
                if f.window_start_index == s.window_start_index {
                    pairs.push((s, *f));
                }
            }
        }
        pairs
    }
}

pub fn compare_methods(
    recording: &CirRecording,
    cfg: &WindowConfig,
    calib_cfg: &CalibrationConfig,
) -> Result<MethodComparison> {
    let (calibrated, starts, plan) = prepare(recording, cfg, calib_cfg)?;
    let (selection, fusion): (Vec<_>, Vec<_>) = starts
        .par_iter()
        .map(|&start| match window_matrix(&calibrated, start, cfg) {
            Ok(m) => (
                outcome(
                    estimate_with_plan(&m, cfg, Method::Selection, &plan, start),
                    start,
                    Method::Selection,
                ),
                outcome(
                    estimate_with_plan(&m, cfg, Method::Fusion, &plan, start),
                    start,
                    Method::Fusion,
                ),
            ),
            Err(e) => {
                let reason = e.to_string();
                let fail = |method| WindowFailure {
                    window_start_index: start,
                    method,
                    reason: reason.clone(),
                };
                (Err(fail(Method::Selection)), Err(fail(Method::Fusion)))
            }
        })
        .unzip();
    let truth = recording.meta.ground_truth_hz;
    Ok(MethodComparison {
        selection: ScenarioReport::from_outcomes(Method::Selection, selection, truth),
        fusion: ScenarioReport::from_outcomes(Method::Fusion, fusion, truth),
    })
}
