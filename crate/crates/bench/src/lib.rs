//! Fixtures shared by the benchmarks.

use cirfuse_core::calib::calibrate;
use cirfuse_core::model::PresetKind;
use cirfuse_core::pipeline::interpolate_uniform;
use cirfuse_core::{CalibrationConfig, ScenarioPreset, SnapshotMatrix, WindowConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random Hermitian matrix with entries uniform in the unit square.
pub fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&g + g.adjoint()) * Complex64::from(0.5)
}

/// First calibrated, resampled window of a preset recording.
pub fn preset_window(kind: PresetKind, cfg: &WindowConfig) -> SnapshotMatrix {
    let rec = ScenarioPreset::new(kind, 2e-3, 0.3)
        .scenario(0)
        .generate()
        .unwrap();
    let rec = calibrate(&rec, &CalibrationConfig::default()).unwrap();
    interpolate_uniform(&rec.snapshots[..cfg.window_snapshots], cfg.nominal_rate_hz).unwrap()
}
