//! Channel model and synthetic CIR recordings.
//!
//! A [`MultipathChannel`] is a list of propagation paths, each with a complex
//! attenuation and a delay. Sampling the band-limited impulse response at the
//! receiver's bin spacing gives one CIR snapshot; moving a reflection plate
//! (the breathing emulator) changes the delay of every path coupled to it.
//! [`generate_recording`] strings snapshots together over time and injects the
//! receiver artifacts that calibration later removes.

mod scenario;

pub use scenario::{
    breathing_ac_power, noise_std_for_snr, PresetKind, Scenario, ScenarioPreset, PRESET_DIRECT_BIN,
    PRESET_DURATION_S, PRESET_N_BINS, PRESET_RATE_HZ, PRESET_REFERENCE_BIN,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier frequency of UWB channel 2, Hz.
pub const UWB_CH2_CARRIER_HZ: f64 = 3.9936e9;

/// Bandwidth of UWB channel 2, Hz.
pub const UWB_CH2_BANDWIDTH_HZ: f64 = 499.2e6;

fn default_carrier() -> f64 {
    UWB_CH2_CARRIER_HZ
}

fn default_bandwidth() -> f64 {
    UWB_CH2_BANDWIDTH_HZ
}

fn default_channel_name() -> String {
    "uwb-ch2-like".to_string()
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    /// Complex attenuation, serialized as `[re, im]`.
    pub attenuation: Complex64,
    /// Delay with the emulator plate at rest, seconds.
    pub base_delay_s: f64,
    /// Fraction of the plate displacement added to the path length.
    /// 0 is a static path, 2 a direct round-trip reflection off the plate.
    #[serde(default)]
    pub breathing_coupling: f64,
}

impl PathSpec {
    pub fn new(attenuation: Complex64, base_delay_s: f64, breathing_coupling: f64) -> Self {
        Self {
            attenuation,
            base_delay_s,
            breathing_coupling,
        }
    }

    pub fn is_static(&self) -> bool {
        self.breathing_coupling == 0.0
    }

    /// Delay for a given plate displacement.
    pub fn delay_at(&self, displacement_m: f64) -> f64 {
        self.base_delay_s + self.breathing_coupling * displacement_m / SPEED_OF_LIGHT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultipathChannel {
    /// Free-form label echoed into recording headers (no whitespace).
    #[serde(default = "default_channel_name")]
    pub name: String,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    pub n_bins: usize,
    /// Spacing between CIR bins; `1 / bandwidth_hz` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_spacing_s: Option<f64>,
    /// Bin of the static transmission-line reference path, if simulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_bin: Option<usize>,
    #[serde(default)]
    pub paths: Vec<PathSpec>,
}

impl MultipathChannel {
    /// Channel-2-like channel with no paths.
    pub fn uwb_ch2(n_bins: usize) -> Self {
        Self {
            name: default_channel_name(),
            bandwidth_hz: UWB_CH2_BANDWIDTH_HZ,
            carrier_hz: UWB_CH2_CARRIER_HZ,
            n_bins,
            bin_spacing_s: None,
            reference_bin: None,
            paths: Vec::new(),
        }
    }

    pub fn bin_spacing(&self) -> f64 {
        self.bin_spacing_s.unwrap_or(1.0 / self.bandwidth_hz)
    }

    /// Delay, in seconds, of the centre of bin `bin`.
    pub fn bin_delay(&self, bin: f64) -> f64 {
        bin * self.bin_spacing()
    }

    /// Adds a path whose delay is given in (fractional) bins.
    pub fn with_path(mut self, attenuation: Complex64, delay_bins: f64, coupling: f64) -> Self {
        let delay = self.bin_delay(delay_bins);
        self.paths.push(PathSpec::new(attenuation, delay, coupling));
        self
    }

    pub fn has_breathing_path(&self) -> bool {
        self.paths.iter().any(|p| !p.is_static())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::config("bandwidth_hz must be positive"));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(Error::config("carrier_hz must be positive"));
        }
        if self.n_bins == 0 {
            return Err(Error::config("n_bins must be positive"));
        }
        if let Some(spacing) = self.bin_spacing_s {
            if !(spacing > 0.0 && spacing.is_finite()) {
                return Err(Error::config("bin_spacing_s must be positive"));
            }
        }
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(Error::config(
                "channel name must be non-empty without whitespace",
            ));
        }
        let window = self.n_bins as f64 * self.bin_spacing();
        for (i, p) in self.paths.iter().enumerate() {
            if !(p.base_delay_s >= 0.0 && p.base_delay_s < window) {
                return Err(Error::config(format!(
                    "path {i}: base_delay_s {} outside the CIR window [0, {window})",
                    p.base_delay_s
                )));
            }
            if !(0.0..=2.0).contains(&p.breathing_coupling) {
                return Err(Error::config(format!(
                    "path {i}: breathing_coupling must lie in [0, 2]"
                )));
            }
            if !(p.attenuation.re.is_finite() && p.attenuation.im.is_finite()) {
                return Err(Error::config(format!(
                    "path {i}: attenuation must be finite"
                )));
            }
        }
        if let Some(reference) = self.reference_bin {
            if reference >= self.n_bins {
                return Err(Error::config("reference_bin outside the CIR vector"));
            }
            let spacing = self.bin_spacing();
            let matches = self
                .paths
                .iter()
                .filter(|p| p.is_static())
                .filter(|p| (p.base_delay_s / spacing - reference as f64).abs() <= 0.5)
                .count();
            if matches != 1 {
                return Err(Error::config(format!(
                    "reference_bin {reference} must match exactly one static path, found {matches}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sinusoid,
    Triangular,
}

/// Plate motion of the breathing emulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MotionFields")]
pub struct EmulatorMotion {
    pub waveform: Waveform,
    /// Peak-to-peak displacement, metres.
    pub displacement_m: f64,
    pub rate_hz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionFields {
    waveform: Waveform,
    displacement_m: f64,
    #[serde(default)]
    rate_hz: Option<f64>,
    #[serde(default)]
    speed_m_per_s: Option<f64>,
}

impl TryFrom<MotionFields> for EmulatorMotion {
    type Error = String;

    fn try_from(f: MotionFields) -> std::result::Result<Self, String> {
        let motion = match (f.rate_hz, f.speed_m_per_s) {
            (Some(rate_hz), None) => EmulatorMotion {
                waveform: f.waveform,
                displacement_m: f.displacement_m,
                rate_hz,
            },
            (None, Some(speed)) => {
                if f.waveform != Waveform::Triangular {
                    return Err("speed_m_per_s is only meaningful for triangular motion".into());
                }
                EmulatorMotion::triangular_from_speed(f.displacement_m, speed)
            }
            (Some(_), Some(_)) => {
                return Err("give either rate_hz or speed_m_per_s, not both".into())
            }
            (None, None) => return Err("missing field `rate_hz` (or `speed_m_per_s`)".into()),
        };
        motion.validate().map_err(|e| e.to_string())?;
        Ok(motion)
    }
}

impl EmulatorMotion {
    pub fn sinusoid(displacement_m: f64, rate_hz: f64) -> Self {
        Self {
            waveform: Waveform::Sinusoid,
            displacement_m,
            rate_hz,
        }
    }

    /// Constant-speed back-and-forth motion; one period covers the
    /// displacement twice, so `rate = speed / (2 * displacement)`.
    pub fn triangular_from_speed(displacement_m: f64, speed_m_per_s: f64) -> Self {
        Self {
            waveform: Waveform::Triangular,
            displacement_m,
            rate_hz: speed_m_per_s / (2.0 * displacement_m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.displacement_m > 0.0 && self.displacement_m.is_finite()) {
            return Err(Error::config("displacement_m must be positive"));
        }
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::config("rate_hz must be positive"));
        }
        Ok(())
    }

    /// Plate position at time `t`, in `[0, displacement_m]`.
    pub fn displacement_at(&self, t: f64) -> f64 {
        let d = self.displacement_m;
        match self.waveform {
            Waveform::Sinusoid => 0.5 * d * (1.0 + (2.0 * PI * self.rate_hz * t).sin()),
            Waveform::Triangular => {
                let u = (self.rate_hz * t).rem_euclid(1.0);
                d * (1.0 - (2.0 * u - 1.0).abs())
            }
        }
    }
}

/// Receiver impairments injected into synthetic recordings.
///
/// Ranges are inclusive `[low, high]`; a degenerate range always yields
/// its single value. The default is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArtifactSpec {
    /// Per-snapshot gain magnitude, drawn uniformly.
    pub gain_magnitude: [f64; 2],
    /// Per-snapshot gain phase in radians, drawn uniformly.
    pub gain_phase_rad: [f64; 2],
    /// Per-snapshot integer bin shift (positive = later), drawn uniformly.
    pub delay_offset_bins: [i64; 2],
    /// Standard deviation of the acquisition-time jitter, seconds.
    pub jitter_std_s: f64,
    /// Standard deviation of the complex noise added to each bin
    /// (`E|n|^2 = noise_std^2`).
    pub noise_std: f64,
}

impl Default for ArtifactSpec {
    fn default() -> Self {
        Self {
            gain_magnitude: [1.0, 1.0],
            gain_phase_rad: [0.0, 0.0],
            delay_offset_bins: [0, 0],
            jitter_std_s: 0.0,
            noise_std: 0.0,
        }
    }
}

impl ArtifactSpec {
    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let [gl, gh] = self.gain_magnitude;
        if !(gl > 0.0 && gl <= gh && gh.is_finite()) {
            return Err(Error::config(
                "gain_magnitude must be an ordered positive range",
            ));
        }
        let [pl, ph] = self.gain_phase_rad;
        if !(pl <= ph && pl.is_finite() && ph.is_finite()) {
            return Err(Error::config(
                "gain_phase_rad must be an ordered finite range",
            ));
        }
        let [sl, sh] = self.delay_offset_bins;
        if sl > sh {
            return Err(Error::config("delay_offset_bins must be an ordered range"));
        }
        if !(self.jitter_std_s >= 0.0 && self.jitter_std_s.is_finite()) {
            return Err(Error::config("jitter_std_s must be non-negative"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config("noise_std must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirSnapshot {
    pub timestamp_s: f64,
    pub bins: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingMeta {
    pub n_bins: usize,
    /// Breathing rate the recording was synthesized with, if known.
    pub ground_truth_hz: Option<f64>,
    pub channel: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirRecording {
    pub snapshots: Vec<CirSnapshot>,
    pub nominal_rate_hz: f64,
    pub meta: RecordingMeta,
}

impl CirRecording {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.meta.n_bins
    }

    /// Checks equal bin counts and strictly increasing timestamps.
    pub fn validate(&self) -> Result<()> {
        if !(self.nominal_rate_hz > 0.0 && self.nominal_rate_hz.is_finite()) {
            return Err(Error::config("nominal_rate_hz must be positive"));
        }
        for (i, s) in self.snapshots.iter().enumerate() {
            if s.bins.len() != self.meta.n_bins {
                return Err(Error::LengthMismatch {
                    expected: self.meta.n_bins,
                    actual: s.bins.len(),
                });
            }
            if !s.timestamp_s.is_finite() {
                return Err(Error::NonMonotonicTimestamps { index: i });
            }
        }
        if let Some(i) = self
            .snapshots
            .windows(2)
            .position(|w| w[1].timestamp_s <= w[0].timestamp_s)
        {
            return Err(Error::NonMonotonicTimestamps { index: i + 1 });
        }
        Ok(())
    }

    /// Time series of one bin across the recording.
    pub fn bin_series(&self, bin: usize) -> Vec<Complex64> {
        self.snapshots.iter().map(|s| s.bins[bin]).collect()
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`, exactly zero at nonzero integers.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x == x.round() {
        return 0.0;
    }
    let px = PI * x;
    px.sin() / px
}

/// Samples the band-limited CIR at every bin for a given plate displacement.
pub fn sample_cir(channel: &MultipathChannel, displacement_m: f64) -> Vec<Complex64> {
    let spacing_in_samples = channel.bin_spacing() * channel.bandwidth_hz;
    let mut h = vec![Complex64::new(0.0, 0.0); channel.n_bins];
    for path in &channel.paths {
        let tau = path.delay_at(displacement_m);
        let rot = Complex64::from_polar(1.0, -2.0 * PI * (channel.carrier_hz * tau).fract());
        let coeff = path.attenuation * rot;
        let offset = channel.bandwidth_hz * tau;
        for (n, bin) in h.iter_mut().enumerate() {
            *bin += coeff * sinc(n as f64 * spacing_in_samples - offset);
        }
    }
    h
}

/// Moves `bins` by `shift` positions (positive = towards later bins),
/// filling vacated positions with zeros.
pub fn shift_zero_fill(bins: &[Complex64], shift: isize) -> Vec<Complex64> {
    let n = bins.len() as isize;
    (0..n)
        .map(|i| {
            let src = i - shift;
            if (0..n).contains(&src) {
                bins[src as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Number of snapshots in a recording of the given length.
pub fn snapshot_count(duration_s: f64, nominal_rate_hz: f64) -> usize {
    // 50 s at 19.3 Hz must give 965 despite the product not being exact.
    (duration_s * nominal_rate_hz + 1e-9).floor() as usize
}

/// Synthesizes a recording.
///
/// Each snapshot `i` is acquired at `i / nominal_rate_hz` plus jitter (the
/// jittered instant drives the plate motion and is what the timestamp
/// records). The sampled CIR then gets, in order: a complex gain, an integer
/// zero-filled bin shift, and additive complex Gaussian noise.
pub fn generate_recording(
    channel: &MultipathChannel,
    motion: &EmulatorMotion,
    artifacts: &ArtifactSpec,
    duration_s: f64,
    nominal_rate_hz: f64,
    seed: u64,
) -> Result<CirRecording> {
    channel.validate()?;
    motion.validate()?;
    artifacts.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::config("duration_s must be positive"));
    }
    if !(nominal_rate_hz > 0.0 && nominal_rate_hz.is_finite()) {
        return Err(Error::config("nominal_rate_hz must be positive"));
    }
    if channel.has_breathing_path() && motion.rate_hz >= nominal_rate_hz / 2.0 {
        return Err(Error::config(
            "breathing rate must lie below the Nyquist rate",
        ));
    }
    let [shift_lo, shift_hi] = artifacts.delay_offset_bins;
    if let Some(reference) = channel.reference_bin {
        let r = reference as i64;
        if r + shift_lo < 0 || r + shift_hi >= channel.n_bins as i64 {
            return Err(Error::config(format!(
                "delay offsets {shift_lo}..={shift_hi} can move reference bin {reference} out of the {}-bin vector",
                channel.n_bins
            )));
        }
    }

    let count = snapshot_count(duration_s, nominal_rate_hz);
    let period = 1.0 / nominal_rate_hz;
    // Truncated so acquisition instants stay strictly ordered.
    let jitter_limit = 0.45 * period;
    let jitter = Normal::new(0.0, artifacts.jitter_std_s).expect("validated std");
    let noise = Normal::new(0.0, artifacts.noise_std / 2f64.sqrt()).expect("validated std");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snapshots = Vec::with_capacity(count);
    for i in 0..count {
        let nominal = i as f64 / nominal_rate_hz;
        let t = nominal + jitter.sample(&mut rng).clamp(-jitter_limit, jitter_limit);
        let magnitude = rng.random_range(artifacts.gain_magnitude[0]..=artifacts.gain_magnitude[1]);
        let phase = rng.random_range(artifacts.gain_phase_rad[0]..=artifacts.gain_phase_rad[1]);
        let shift = rng.random_range(shift_lo..=shift_hi);

        let gain = Complex64::from_polar(magnitude, phase);
        let h: Vec<Complex64> = sample_cir(channel, motion.displacement_at(t))
            .into_iter()
            .map(|v| v * gain)
            .collect();
        let mut h = shift_zero_fill(&h, shift as isize);
        if artifacts.noise_std > 0.0 {
            for v in h.iter_mut() {
                *v += Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng));
            }
        }
        snapshots.push(CirSnapshot {
            timestamp_s: t,
            bins: h,
        });
    }

    Ok(CirRecording {
        snapshots,
        nominal_rate_hz,
        meta: RecordingMeta {
            n_bins: channel.n_bins,
            ground_truth_hz: channel.has_breathing_path().then_some(motion.rate_hz),
            channel: Some(channel.name.clone()),
        },
    })
}
