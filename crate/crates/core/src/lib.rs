//! Breathing-rate estimation from UWB channel impulse responses.
//!
//! The crate covers the whole chain: synthetic CIR recordings ([`model`]),
//! reference-path calibration ([`calib`]), band-of-interest spectra and PSD
//! peak detection ([`spectral`]), bin selection and bin fusion ([`fusion`]),
//! sliding-window estimation ([`pipeline`]) and the text file formats
//! ([`io`]).

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calib;
pub mod error;
pub mod fusion;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use calib::CalibrationConfig;
pub use fusion::{FusionWeights, GeneralizedPair, SnapshotMatrix};
pub use model::{
    ArtifactSpec, CirRecording, CirSnapshot, EmulatorMotion, MultipathChannel, PathSpec, Scenario,
    ScenarioPreset,
};
pub use pipeline::{BreathingEstimate, Method, ScenarioReport, WindowConfig};
pub use spectral::{BandOfInterest, DftPlan, PsdSpectrum};
