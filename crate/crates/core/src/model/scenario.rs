use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    generate_recording, ArtifactSpec, CirRecording, EmulatorMotion, MultipathChannel, PathSpec,
    SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};

/// Everything needed to synthesize one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub duration_s: f64,
    pub nominal_rate_hz: f64,
    pub motion: EmulatorMotion,
    #[serde(default)]
    pub artifacts: ArtifactSpec,
    pub channel: MultipathChannel,
}

impl Scenario {
    pub fn generate(&self) -> Result<CirRecording> {
        generate_recording(
            &self.channel,
            &self.motion,
            &self.artifacts,
            self.duration_s,
            self.nominal_rate_hz,
            self.seed,
        )
    }

    /// Same scenario with every artifact disabled.
    pub fn without_artifacts(&self) -> Self {
        Self {
            artifacts: ArtifactSpec::default(),
            ..self.clone()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }
}

/// Geometry family of a built-in scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    /// One strong direct reflection off the plate, target in line of sight.
    Los,
    /// Blocked line of sight: the plate's energy is spread over several
    /// weak multi-bounce paths next to strong static clutter.
    NlosSpread,
    /// The LOS room with nothing moving.
    Static,
}

impl PresetKind {
    pub const ALL: [PresetKind; 3] = [PresetKind::Los, PresetKind::NlosSpread, PresetKind::Static];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Los => "los",
            PresetKind::NlosSpread => "nlos-spread",
            PresetKind::Static => "static",
        }
    }
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown preset kind `{s}`")))
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Built-in scenario, named like `los-2mm-0.3hz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioPreset {
    pub kind: PresetKind,
    pub displacement_m: f64,
    pub rate_hz: f64,
}

pub const PRESET_N_BINS: usize = 96;
pub const PRESET_DIRECT_BIN: f64 = 5.0;
/// About 82 bins behind the direct path, as for a 25 m transmission line
/// at 0.5 m transceiver spacing.
pub const PRESET_REFERENCE_BIN: usize = 87;
pub const PRESET_DURATION_S: f64 = 50.0;
pub const PRESET_RATE_HZ: f64 = 19.3;

const NLOS_BREATHING_BINS: [(f64, f64, f64); 4] = [
    // (bin, coupling, phase)
    (19.0, 2.0, 0.3),
    (22.0, 1.7, -1.9),
    (26.0, 1.4, 2.4),
    (31.0, 1.9, -0.6),
];

impl ScenarioPreset {
    pub fn new(kind: PresetKind, displacement_m: f64, rate_hz: f64) -> Self {
        Self {
            kind,
            displacement_m,
            rate_hz,
        }
    }

    pub fn name(&self) -> String {
        format!(
            "{}-{}mm-{}hz",
            self.kind,
            self.displacement_m * 1e3,
            self.rate_hz
        )
    }

    pub fn channel(&self) -> MultipathChannel {
        let c = Complex64::from_polar;
        let mut ch = MultipathChannel::uwb_ch2(PRESET_N_BINS);
        ch = match self.kind {
            PresetKind::Los | PresetKind::Static => {
                let coupling = if self.kind == PresetKind::Los {
                    2.0
                } else {
                    0.0
                };
                // The plate reflection is the dominant path.
                ch.with_path(c(0.5, 0.0), PRESET_DIRECT_BIN, 0.0)
                    .with_path(c(1.0, 0.7), 16.0, coupling)
                    .with_path(c(0.3, 2.1), 23.4, 0.0)
                    .with_path(c(0.15, -1.2), 41.7, 0.0)
            }
            PresetKind::NlosSpread => {
                let mut ch = ch
                    .with_path(c(0.3, 0.0), PRESET_DIRECT_BIN, 0.0)
                    .with_path(c(1.0, 1.3), 9.6, 0.0)
                    .with_path(c(0.6, -0.4), 14.3, 0.0);
                for (bin, coupling, phase) in NLOS_BREATHING_BINS {
                    ch = ch.with_path(c(0.12, phase), bin, coupling);
                }
                ch
            }
        };
        ch = ch.with_path(c(0.8, 0.0), PRESET_REFERENCE_BIN as f64, 0.0);
        ch.reference_bin = Some(PRESET_REFERENCE_BIN);
        ch.name = "uwb-ch2-like".into();
        ch
    }

    pub fn motion(&self) -> EmulatorMotion {
        EmulatorMotion::sinusoid(self.displacement_m, self.rate_hz)
    }

    pub fn artifacts(&self, channel: &MultipathChannel) -> ArtifactSpec {
        let base = ArtifactSpec {
            gain_magnitude: [0.5, 2.0],
            delay_offset_bins: [-5, 5],
            jitter_std_s: 0.005,
            ..ArtifactSpec::default()
        };
        match self.kind {
            PresetKind::Los | PresetKind::Static => ArtifactSpec {
                gain_phase_rad: [-0.05, 0.05],
                // -30 dB relative to the unit-amplitude plate reflection.
                noise_std: 10f64.powf(-30.0 / 20.0),
                ..base
            },
            PresetKind::NlosSpread => ArtifactSpec {
                gain_phase_rad: [-0.5, 0.5],
                noise_std: noise_std_for_snr(channel, &self.motion(), 0.0),
                ..base
            },
        }
    }

    pub fn scenario(&self, seed: u64) -> Scenario {
        let channel = self.channel();
        Scenario {
            seed,
            duration_s: PRESET_DURATION_S,
            nominal_rate_hz: PRESET_RATE_HZ,
            motion: self.motion(),
            artifacts: self.artifacts(&channel),
            channel,
        }
    }
}

impl FromStr for ScenarioPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::config(format!(
                "preset `{s}` is not of the form <kind>-<D>mm-<f>hz"
            ))
        };
        let (rest, rate) = s.rsplit_once('-').ok_or_else(bad)?;
        let (kind, disp) = rest.rsplit_once('-').ok_or_else(bad)?;
        let rate_hz: f64 = rate
            .strip_suffix("hz")
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        let disp_mm: f64 = disp
            .strip_suffix("mm")
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        let preset = ScenarioPreset::new(kind.parse()?, disp_mm * 1e-3, rate_hz);
        preset.motion().validate()?;
        Ok(preset)
    }
}

/// Mean power of the time-varying part of a unit path's phasor under
/// `motion`, averaged over one breathing period.
pub fn breathing_ac_power(path: &PathSpec, carrier_hz: f64, motion: &EmulatorMotion) -> f64 {
    const STEPS: usize = 4096;
    let phasors: Vec<Complex64> = (0..STEPS)
        .map(|i| {
            let t = i as f64 / (STEPS as f64 * motion.rate_hz);
            let extra = path.breathing_coupling * motion.displacement_at(t) / SPEED_OF_LIGHT;
            Complex64::from_polar(path.attenuation.norm(), -2.0 * PI * carrier_hz * extra)
        })
        .collect();
    let mean = phasors.iter().sum::<Complex64>() / STEPS as f64;
    phasors.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / STEPS as f64
}

/// Noise level giving the breathing-coupled paths an average per-bin SNR of
/// `snr_db`, where signal power is the motion-induced (AC) power of a path.
pub fn noise_std_for_snr(channel: &MultipathChannel, motion: &EmulatorMotion, snr_db: f64) -> f64 {
    let powers: Vec<f64> = channel
        .paths
        .iter()
        .filter(|p| !p.is_static())
        .map(|p| breathing_ac_power(p, channel.carrier_hz, motion))
        .collect();
    if powers.is_empty() {
        return 0.0;
    }
    let mean = powers.iter().sum::<f64>() / powers.len() as f64;
    (mean / 10f64.powf(snr_db / 10.0)).sqrt()
}
