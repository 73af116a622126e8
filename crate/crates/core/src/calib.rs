//! Delay and amplitude calibration against a static reference path.
//!
//! Each snapshot is shifted so that the reference peak (the strongest bin at
//! or after `search_start_bin`) sits at `target_ref_bin`, then scaled by a
//! positive factor so the energy of the reference peak and its neighbours is
//! `target_ref_energy`. Phase is left untouched.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{shift_zero_fill, CirRecording, CirSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub search_start_bin: usize,
    /// Bins on each side of the peak counted as reference energy.
    pub neighbor_radius: usize,
    pub target_ref_bin: usize,
    pub target_ref_energy: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            search_start_bin: 75,
            neighbor_radius: 2,
            target_ref_bin: crate::model::PRESET_REFERENCE_BIN,
            target_ref_energy: 1.0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self, n_bins: usize) -> Result<()> {
        if self.search_start_bin + 2 * self.neighbor_radius >= n_bins {
            return Err(Error::config(format!(
                "search_start_bin {} + 2 * neighbor_radius {} must be below the bin count {n_bins}",
                self.search_start_bin, self.neighbor_radius
            )));
        }
        if self.target_ref_bin >= n_bins {
            return Err(Error::config(format!(
                "target_ref_bin {} outside the {n_bins}-bin vector",
                self.target_ref_bin
            )));
        }
        if !(self.target_ref_energy > 0.0 && self.target_ref_energy.is_finite()) {
            return Err(Error::config("target_ref_energy must be positive"));
        }
        Ok(())
    }

    fn reference_window(&self, n_bins: usize) -> std::ops::Range<usize> {
        let lo = self.target_ref_bin.saturating_sub(self.neighbor_radius);
        let hi = (self.target_ref_bin + self.neighbor_radius + 1).min(n_bins);
        lo..hi
    }
}

/// Strongest bin at or after `search_start_bin`; lowest index on ties.
pub fn find_reference_peak(bins: &[Complex64], cfg: &CalibrationConfig) -> Result<usize> {
    find_peak(bins, cfg, 0)
}

fn find_peak(bins: &[Complex64], cfg: &CalibrationConfig, snapshot: usize) -> Result<usize> {
    let needed = cfg.search_start_bin + 2 * cfg.neighbor_radius + 1;
    if bins.len() < needed {
        return Err(Error::LengthMismatch {
            expected: needed,
            actual: bins.len(),
        });
    }
    let mut best = (cfg.search_start_bin, 0.0);
    for (i, v) in bins.iter().enumerate().skip(cfg.search_start_bin) {
        let magnitude = v.norm_sqr();
        if magnitude > best.1 {
            best = (i, magnitude);
        }
    }
    if best.1 == 0.0 {
        return Err(Error::ReferenceNotFound { snapshot });
    }
    Ok(best.0)
}

fn map_snapshots<F>(recording: &CirRecording, f: F) -> Result<CirRecording>
where
    F: Fn(usize, &CirSnapshot) -> Result<Vec<Complex64>> + Sync,
{
    let snapshots = recording
        .snapshots
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(CirSnapshot {
                timestamp_s: s.timestamp_s,
                bins: f(i, s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CirRecording {
        snapshots,
        nominal_rate_hz: recording.nominal_rate_hz,
        meta: recording.meta.clone(),
    })
}

/// Shifts every snapshot so its reference peak lands on `target_ref_bin`.
pub fn calibrate_delay(recording: &CirRecording, cfg: &CalibrationConfig) -> Result<CirRecording> {
    let n_bins = recording.n_bins();
    cfg.validate(n_bins)?;
    map_snapshots(recording, |i, s| {
        let peak = find_peak(&s.bins, cfg, i)?;
        let shift = cfg.target_ref_bin as isize - peak as isize;
        if 2 * shift.unsigned_abs() > n_bins {
            return Err(Error::ExcessiveShift {
                snapshot: i,
                shift,
                n_bins,
            });
        }
        Ok(shift_zero_fill(&s.bins, shift))
    })
}

/// Scales every snapshot so its reference energy equals `target_ref_energy`.
pub fn calibrate_amplitude(
    recording: &CirRecording,
    cfg: &CalibrationConfig,
) -> Result<CirRecording> {
    let n_bins = recording.n_bins();
    cfg.validate(n_bins)?;
    let window = cfg.reference_window(n_bins);
    map_snapshots(recording, |i, s| {
        let energy: f64 = s.bins[window.clone()].iter().map(Complex64::norm_sqr).sum();
        if !(energy > 0.0) {
            return Err(Error::ZeroReferenceEnergy { snapshot: i });
        }
        let scale = (cfg.target_ref_energy / energy).sqrt();
        Ok(s.bins.iter().map(|v| v * scale).collect())
    })
}

/// Delay calibration followed by amplitude calibration.
///
/// Integer alignment does not move the peak, so the amplitude step reuses
/// the aligned reference position instead of searching again.
pub fn calibrate(recording: &CirRecording, cfg: &CalibrationConfig) -> Result<CirRecording> {
    recording.validate()?;
    calibrate_amplitude(&calibrate_delay(recording, cfg)?, cfg)
}
