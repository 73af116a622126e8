//! Displacement x geometry sweeps producing a median-error table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{compare_methods, median, WindowConfig};
use crate::calib::CalibrationConfig;
use crate::error::{Error, Result};
use crate::model::{PresetKind, ScenarioPreset};

fn default_rate() -> f64 {
    0.3
}

fn default_hop() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub displacements_mm: Vec<f64>,
    /// Preset kinds, e.g. `["los", "nlos-spread"]`.
    pub presets: Vec<String>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default = "default_hop")]
    pub hop_snapshots: usize,
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn preset_kinds(&self) -> Result<Vec<PresetKind>> {
        self.presets.iter().map(|p| p.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.displacements_mm.is_empty() || self.presets.is_empty() || self.seeds.is_empty() {
            return Err(Error::config("no cases"));
        }
        if self
            .displacements_mm
            .iter()
            .any(|d| !(*d > 0.0 && d.is_finite()))
        {
            return Err(Error::config("displacements must be positive"));
        }
        if self.hop_snapshots == 0 {
            return Err(Error::config("hop_snapshots must be at least 1"));
        }
        self.preset_kinds()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub displacement_mm: f64,
    pub preset: String,
    /// Median over seeds of each seed's median absolute error.
    pub selection_median_hz: Option<f64>,
    pub fusion_median_hz: Option<f64>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub displacements_mm: Vec<f64>,
    pub presets: Vec<String>,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, displacement_mm: f64, preset: &str) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.displacement_mm == displacement_mm && c.preset == preset)
    }

    /// One row per displacement, a `Sel.`/`Fus.` column pair per preset.
    pub fn to_markdown(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "err".to_string(), |x| format!("{x:.3}"));
        let mut out = String::from("| Displacement |");
        for p in &self.presets {
            let _ = write!(out, " {p} Sel. | {p} Fus. |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---|---|".repeat(self.presets.len()));
        out.push('\n');
        for &d in &self.displacements_mm {
            let _ = write!(out, "| {d} mm |");
            for p in &self.presets {
                let cell = self.cell(d, p);
                let _ = write!(
                    out,
                    " {} | {} |",
                    fmt(cell.and_then(|c| c.selection_median_hz)),
                    fmt(cell.and_then(|c| c.fusion_median_hz))
                );
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every displacement x preset x seed case; failing seeds are recorded
/// in their cell and the sweep carries on.
pub fn run_sweep(
    spec: &SweepSpec,
    window: &WindowConfig,
    calib: &CalibrationConfig,
) -> Result<SweepTable> {
    spec.validate()?;
    let window = WindowConfig {
        hop_snapshots: spec.hop_snapshots,
        ..*window
    };
    window.validate()?;
    let kinds = spec.preset_kinds()?;
    let mut cells = Vec::new();
    for &d in &spec.displacements_mm {
        for &kind in &kinds {
            let preset = ScenarioPreset::new(kind, d * 1e-3, spec.rate_hz);
            let mut sel = Vec::new();
            let mut fus = Vec::new();
            let mut failures = Vec::new();
            for &seed in &spec.seeds {
                let result = preset
                    .scenario(seed)
                    .generate()
                    .and_then(|rec| compare_methods(&rec, &window, calib));
                match result {
                    Ok(cmp) => {
                        sel.extend(cmp.selection.median_abs_error_hz);
                        fus.extend(cmp.fusion.median_abs_error_hz);
                    }
                    Err(e) => failures.push(format!("seed {seed}: {e}")),
                }
            }
            cells.push(SweepCell {
                displacement_mm: d,
                preset: kind.name().to_string(),
                selection_median_hz: median(sel),
                fusion_median_hz: median(fus),
                failures,
            });
        }
    }
    Ok(SweepTable {
        displacements_mm: spec.displacements_mm.clone(),
        presets: kinds.iter().map(|k| k.name().to_string()).collect(),
        cells,
    })
}
