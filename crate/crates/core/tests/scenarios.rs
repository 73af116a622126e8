use cirfuse_core::calib::calibrate;
use cirfuse_core::fusion::select_bin;
use cirfuse_core::io::{recording_from_str, recording_to_string};
use cirfuse_core::model::{generate_recording, sample_cir, PresetKind};
use cirfuse_core::pipeline::{
    compare_methods, estimate_window, interpolate_uniform, run_recording,
};
use cirfuse_core::spectral::{detect_peak, psd_on_grid};
use cirfuse_core::{
    ArtifactSpec, BandOfInterest, CalibrationConfig, Complex64, EmulatorMotion, Method,
    MultipathChannel, ScenarioPreset, WindowConfig,
};
use proptest::prelude::*;

fn single_breathing_path(bin: f64) -> MultipathChannel {
    MultipathChannel::uwb_ch2(32).with_path(Complex64::new(0.0, 1.0), bin, 2.0)
}

fn sparse_cfg(method: Method) -> WindowConfig {
    WindowConfig {
        hop_snapshots: 40,
        method,
        ..WindowConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cir_is_linear_in_paths(
        first in prop::collection::vec((0.1f64..2.0, -3.0f64..3.0, 2.0f64..28.0, 0.0f64..2.5), 1..4),
        second in prop::collection::vec((0.1f64..2.0, -3.0f64..3.0, 2.0f64..28.0, 0.0f64..2.5), 1..4),
        d in 0.0f64..0.01,
    ) {
        let build = |paths: &[(f64, f64, f64, f64)], ch: MultipathChannel| {
            paths.iter().fold(ch, |ch, &(a, p, bin, k)| ch.with_path(Complex64::from_polar(a, p), bin, k))
        };
        let base = MultipathChannel::uwb_ch2(32);
        let a = sample_cir(&build(&first, base.clone()), d);
        let b = sample_cir(&build(&second, base.clone()), d);
        let both = sample_cir(&build(&second, build(&first, base)), d);
        let scale = both.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for k in 0..32 {
            prop_assert!((both[k] - a[k] - b[k]).norm() <= 1e-12 * scale);
        }
    }
}

#[test]
fn breathing_bin_repeats_with_motion_period() {
    let rate = 19.3;
    for f in [0.2, 0.25, 0.4] {
        let rec = generate_recording(
            &single_breathing_path(10.0),
            &EmulatorMotion::sinusoid(0.006, f),
            &ArtifactSpec::default(),
            40.0,
            rate,
            5,
        )
        .unwrap();
        let x = rec.bin_series(10);
        let mean = x.iter().sum::<Complex64>() / x.len() as f64;
        let x: Vec<Complex64> = x.iter().map(|v| v - mean).collect();
        let autocorr = |lag: usize| -> f64 {
            x.iter()
                .zip(&x[lag..])
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>()
                / (x.len() - lag) as f64
        };
        let expected = rate / f;
        let lo = (expected * 0.6) as usize;
        let hi = (expected * 1.4) as usize;
        let best = (lo..=hi)
            .max_by(|&a, &b| autocorr(a).total_cmp(&autocorr(b)))
            .unwrap();
        assert!(
            (best as f64 - expected).abs() <= 1.0,
            "{f} Hz: lag {best} vs {expected}"
        );
    }
}

#[test]
fn same_seed_gives_identical_recordings() {
    let scenario = ScenarioPreset::new(PresetKind::NlosSpread, 4e-3, 0.2).scenario(42);
    assert_eq!(scenario.generate().unwrap(), scenario.generate().unwrap());
    let other = ScenarioPreset::new(PresetKind::NlosSpread, 4e-3, 0.2).scenario(43);
    assert_ne!(scenario.generate().unwrap(), other.generate().unwrap());
}

#[test]
fn random_shifts_leave_static_bins_constant() {
    let mut scenario = ScenarioPreset::new(PresetKind::Static, 2e-3, 0.3).scenario(8);
    scenario.artifacts = ArtifactSpec {
        delay_offset_bins: [-5, 5],
        ..ArtifactSpec::default()
    };
    let rec = calibrate(&scenario.generate().unwrap(), &CalibrationConfig::default()).unwrap();
    for bin in [5, 23, 41] {
        let x = rec.bin_series(bin);
        let mean = x.iter().sum::<Complex64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!(var < 1e-20, "bin {bin}: {var:e}");
    }
}

#[test]
fn calibration_restores_breathing_series() {
    let mut scenario = ScenarioPreset::new(PresetKind::Los, 3e-3, 0.3).scenario(21);
    scenario.artifacts = ArtifactSpec {
        gain_magnitude: [0.5, 2.0],
        delay_offset_bins: [-5, 5],
        ..ArtifactSpec::default()
    };
    let calib = CalibrationConfig::default();
    let restored = calibrate(&scenario.generate().unwrap(), &calib).unwrap();
    // The plate's sidelobe moves the reference energy slightly, so the clean
    // series goes through the same amplitude normalization.
    let clean = calibrate(&scenario.without_artifacts().generate().unwrap(), &calib).unwrap();
    for (x, y) in restored.bin_series(16).iter().zip(&clean.bin_series(16)) {
        assert!((x - y).norm() < 1e-9 * y.norm());
    }
}

#[test]
fn jittered_tone_is_recovered_after_interpolation() {
    let rate = 19.3;
    let band = BandOfInterest::default();
    for (seed, f) in [(1, 0.17), (2, 0.3), (3, 0.43)] {
        let rec = generate_recording(
            &single_breathing_path(10.0),
            &EmulatorMotion::sinusoid(0.004, f),
            &ArtifactSpec {
                jitter_std_s: 0.005,
                ..ArtifactSpec::default()
            },
            50.0,
            rate,
            seed,
        )
        .unwrap();
        let m = interpolate_uniform(&rec.snapshots[..800], rate).unwrap();
        let spectrum = psd_on_grid(&m.column(10), rate, band, 0.001).unwrap();
        let (peak, _) = detect_peak(&spectrum);
        assert!((peak - f).abs() <= 0.002, "{f}: {peak}");
    }
}

#[test]
fn selection_finds_the_plate_bin_in_los() {
    let rec = ScenarioPreset::new(PresetKind::Los, 2e-3, 0.3)
        .scenario(4)
        .generate()
        .unwrap();
    let rec = calibrate(&rec, &CalibrationConfig::default()).unwrap();
    let cfg = WindowConfig::default();
    let m = interpolate_uniform(&rec.snapshots[..800], cfg.nominal_rate_hz).unwrap();
    let (bin, _) = select_bin(&m, &cfg.plan().unwrap()).unwrap();
    assert_eq!(bin, 16);
}

#[test]
fn clean_los_window_gives_true_rate_with_either_method() {
    let scenario = ScenarioPreset::new(PresetKind::Los, 2e-3, 0.3)
        .scenario(0)
        .without_artifacts();
    let rec = calibrate(&scenario.generate().unwrap(), &CalibrationConfig::default()).unwrap();
    for method in [Method::Selection, Method::Fusion] {
        let cfg = WindowConfig {
            method,
            ..WindowConfig::default()
        };
        let m = interpolate_uniform(&rec.snapshots[100..900], cfg.nominal_rate_hz).unwrap();
        let est = estimate_window(&m, &cfg).unwrap();
        assert!(
            (est.rate_hz - 0.3).abs() <= 0.001,
            "{method}: {}",
            est.rate_hz
        );
    }
}

#[test]
fn comparison_matches_single_method_runs() {
    let rec = ScenarioPreset::new(PresetKind::NlosSpread, 2e-3, 0.3)
        .scenario(6)
        .generate()
        .unwrap();
    let calib = CalibrationConfig::default();
    let both = compare_methods(&rec, &sparse_cfg(Method::Fusion), &calib).unwrap();
    assert_eq!(
        both,
        compare_methods(&rec, &sparse_cfg(Method::Fusion), &calib).unwrap()
    );
    let sel = run_recording(&rec, &sparse_cfg(Method::Selection), &calib).unwrap();
    let fus = run_recording(&rec, &sparse_cfg(Method::Fusion), &calib).unwrap();
    assert_eq!(both.selection, sel);
    assert_eq!(both.fusion, fus);
    for (s, f) in both.paired() {
        assert_eq!(s.window_start_index, f.window_start_index);
        assert!(f.band_ratio >= s.band_ratio - 1e-9);
    }
}

#[test]
fn estimates_stay_inside_the_band() {
    let band = BandOfInterest::new(0.15, 0.45).unwrap();
    let rec = ScenarioPreset::new(PresetKind::Static, 2e-3, 0.3)
        .scenario(2)
        .generate()
        .unwrap();
    let cfg = WindowConfig {
        band,
        ..sparse_cfg(Method::Fusion)
    };
    let c = compare_methods(&rec, &cfg, &CalibrationConfig::default()).unwrap();
    for e in c.selection.estimates.iter().chain(&c.fusion.estimates) {
        assert!(band.contains(e.rate_hz), "{}", e.rate_hz);
    }
}

#[test]
fn serialized_recording_estimates_identically() {
    let rec = ScenarioPreset::new(PresetKind::Los, 2e-3, 0.25)
        .scenario(9)
        .generate()
        .unwrap();
    let parsed = recording_from_str(&recording_to_string(&rec)).unwrap();
    assert_eq!(parsed, rec);
    let calib = CalibrationConfig::default();
    let cfg = sparse_cfg(Method::Fusion);
    assert_eq!(
        run_recording(&parsed, &cfg, &calib).unwrap(),
        run_recording(&rec, &cfg, &calib).unwrap()
    );
}
