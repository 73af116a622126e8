//! Band-of-interest energy and PSD peak detection.
//!
//! DFTs are unnormalized (`X[k] = sum_n x[n] e^{-j2pi kn/N}`) and power is
//! reported as `|X|^2 / N`, so the full-band power of a window equals its
//! time-domain energy.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency band of plausible breathing rates, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandOfInterest {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

impl Default for BandOfInterest {
    fn default() -> Self {
        Self {
            f_low_hz: 0.1,
            f_high_hz: 0.5,
        }
    }
}

impl BandOfInterest {
    pub fn new(f_low_hz: f64, f_high_hz: f64) -> Result<Self> {
        let band = Self {
            f_low_hz,
            f_high_hz,
        };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_low_hz > 0.0 && self.f_high_hz > self.f_low_hz && self.f_high_hz.is_finite()) {
            return Err(Error::config(format!(
                "band must satisfy 0 < low < high, got {self}"
            )));
        }
        Ok(())
    }

    pub fn validate_for_rate(&self, sample_rate_hz: f64) -> Result<()> {
        self.validate()?;
        if self.f_high_hz >= sample_rate_hz / 2.0 {
            return Err(Error::config(format!(
                "band upper edge {} Hz must lie below Nyquist ({} Hz)",
                self.f_high_hz,
                sample_rate_hz / 2.0
            )));
        }
        Ok(())
    }

    pub fn contains(&self, f: f64) -> bool {
        let tol = 1e-9 * self.f_high_hz;
        f >= self.f_low_hz - tol && f <= self.f_high_hz + tol
    }
}

impl fmt::Display for BandOfInterest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.f_low_hz, self.f_high_hz)
    }
}

impl FromStr for BandOfInterest {
    type Err = Error;

    /// Parses `low:high` in Hz.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::config(format!("band `{s}` is not of the form low:high")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("band `{s}`: `{v}` is not a number")))
        };
        BandOfInterest::new(parse(lo)?, parse(hi)?)
    }
}

/// Precomputed in-band DFT rows for one window length.
#[derive(Debug, Clone)]
pub struct DftPlan {
    window_len: usize,
    sample_rate_hz: f64,
    band: BandOfInterest,
    band_rows: Vec<usize>,
    /// Row-major `band_rows.len() x window_len` twiddles.
    twiddles: Vec<Complex64>,
}

impl DftPlan {
    pub fn new(window_len: usize, sample_rate_hz: f64, band: BandOfInterest) -> Result<Self> {
        if window_len == 0 {
            return Err(Error::config("window length must be positive"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::config("sample rate must be positive"));
        }
        band.validate()?;
        let n = window_len;
        let band_rows: Vec<usize> = (0..n)
            .filter(|&k| band.contains(signed_bin_frequency(k, n, sample_rate_hz).abs()))
            .collect();
        if band_rows.is_empty() {
            return Err(Error::config(format!(
                "no DFT bin of a {n}-sample window at {sample_rate_hz} Hz falls in band {band}"
            )));
        }
        let mut twiddles = Vec::with_capacity(band_rows.len() * n);
        for &k in &band_rows {
            twiddles.extend((0..n).map(|m| {
                // Reduce k*m modulo N before scaling to keep the angle exact.
                let idx = (k * m) % n;
                Complex64::from_polar(1.0, -2.0 * PI * idx as f64 / n as f64)
            }));
        }
        Ok(Self {
            window_len,
            sample_rate_hz,
            band,
            band_rows,
            twiddles,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn band(&self) -> BandOfInterest {
        self.band
    }

    /// DFT row indices whose frequency magnitude lies in the band.
    pub fn band_rows(&self) -> &[usize] {
        &self.band_rows
    }

    /// Frequency of row `k`, mapped to `(-rate/2, rate/2]`.
    pub fn row_frequency(&self, k: usize) -> f64 {
        signed_bin_frequency(k, self.window_len, self.sample_rate_hz)
    }

    fn check_len(&self, x: &[Complex64]) -> Result<()> {
        if x.len() != self.window_len {
            return Err(Error::LengthMismatch {
                expected: self.window_len,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// The band rows of the DFT of `x`, in `band_rows` order.
    pub fn band_spectrum(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(x)?;
        Ok(self.band_spectrum_unchecked(x))
    }

    pub(crate) fn band_spectrum_unchecked(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.twiddles
            .chunks_exact(self.window_len)
            .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }
}

fn signed_bin_frequency(k: usize, n: usize, rate: f64) -> f64 {
    let signed = if 2 * k > n {
        k as f64 - n as f64
    } else {
        k as f64
    };
    signed * rate / n as f64
}

/// In-band power `sum_{k in I} |X[k]|^2 / N`.
pub fn boi_energy(x: &[Complex64], plan: &DftPlan) -> Result<f64> {
    Ok(plan
        .band_spectrum(x)?
        .iter()
        .map(Complex64::norm_sqr)
        .sum::<f64>()
        / plan.window_len as f64)
}

/// Full-band power `||F x||^2 / N`, evaluated as `sum |x[n]|^2`.
pub fn total_energy(x: &[Complex64], plan: &DftPlan) -> Result<f64> {
    plan.check_len(x)?;
    Ok(x.iter().map(Complex64::norm_sqr).sum())
}

/// Fraction of a window's energy that falls inside the band; 0 for a zero window.
pub fn band_energy_ratio(x: &[Complex64], plan: &DftPlan) -> Result<f64> {
    let total = total_energy(x, plan)?;
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(boi_energy(x, plan)? / total)
}

/// Power spectrum sampled on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdSpectrum {
    freqs_hz: Vec<f64>,
    values: Vec<f64>,
    /// Native resolution `rate / N` of the series behind the spectrum; the
    /// grid spacing when unknown.
    cell_hz: f64,
}

impl PsdSpectrum {
    pub fn new(freqs_hz: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if freqs_hz.is_empty() {
            return Err(Error::Empty("spectrum"));
        }
        if freqs_hz.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: freqs_hz.len(),
                actual: values.len(),
            });
        }
        if freqs_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "spectrum frequencies must be strictly increasing",
            ));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::config("spectrum values must be non-negative"));
        }
        let cell_hz = match freqs_hz.as_slice() {
            [a, b, ..] => b - a,
            _ => 1.0,
        };
        Ok(Self {
            freqs_hz,
            values,
            cell_hz,
        })
    }

    /// Declares the native resolution of the underlying series, used to
    /// normalize oversampled grids in [`confidence_index`].
    pub fn with_cell_hz(mut self, cell_hz: f64) -> Self {
        if cell_hz > 0.0 && cell_hz.is_finite() {
            self.cell_hz = cell_hz;
        }
        self
    }

    /// Grid points per native resolution cell.
    pub fn oversampling(&self) -> f64 {
        match self.freqs_hz.as_slice() {
            [a, b, ..] => self.cell_hz / (b - a),
            _ => 1.0,
        }
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Grid `low, low + res, ...` up to `high` inclusive.
pub fn frequency_grid(band: BandOfInterest, resolution_hz: f64) -> Result<Vec<f64>> {
    band.validate()?;
    if !(resolution_hz > 0.0 && resolution_hz.is_finite()) {
        return Err(Error::config("resolution must be positive"));
    }
    let steps = ((band.f_high_hz - band.f_low_hz) / resolution_hz + 1e-9).floor() as usize;
    Ok((0..=steps)
        .map(|i| band.f_low_hz + i as f64 * resolution_hz)
        .collect())
}

/// DTFT power `|sum_n (x[n] - mean) e^{-j2pi f n / rate}|^2 / N` on the band grid.
pub fn psd_on_grid(
    x: &[Complex64],
    rate_hz: f64,
    band: BandOfInterest,
    resolution_hz: f64,
) -> Result<PsdSpectrum> {
    if x.is_empty() {
        return Err(Error::Empty("time series"));
    }
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(Error::config("sample rate must be positive"));
    }
    let freqs = frequency_grid(band, resolution_hz)?;
    let n = x.len();
    let mean = x.iter().sum::<Complex64>() / n as f64;
    let centered: Vec<Complex64> = x.iter().map(|v| v - mean).collect();

    // Phasor recurrence, re-anchored periodically to bound rounding drift.
    const RESYNC: usize = 128;
    let values = freqs
        .iter()
        .map(|&f| {
            let omega = -2.0 * PI * f / rate_hz;
            let step = Complex64::from_polar(1.0, omega);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut phasor = Complex64::new(1.0, 0.0);
            for (i, v) in centered.iter().enumerate() {
                if i % RESYNC == 0 {
                    phasor = Complex64::from_polar(1.0, omega * i as f64);
                }
                acc += v * phasor;
                phasor *= step;
            }
            acc.norm_sqr() / n as f64
        })
        .collect();
    Ok(PsdSpectrum::new(freqs, values)?.with_cell_hz(rate_hz / n as f64))
}

/// Global maximum of the spectrum; ties go to the lower frequency.
pub fn detect_peak(spec: &PsdSpectrum) -> (f64, f64) {
    let mut best = 0;
    for (i, &v) in spec.values.iter().enumerate().skip(1) {
        if v > spec.values[best] {
            best = i;
        }
    }
    (spec.freqs_hz[best], spec.values[best])
}

/// Gap between the two largest local maxima of the normalized spectrum.
///
/// Values are normalized to sum to one per native resolution cell, i.e. by
/// `sum(values) / oversampling`; on a grid at the native resolution this is
/// plain sum-normalization. A local maximum is strictly greater than its
/// neighbours; endpoints need only beat their single neighbour. With fewer
/// than two local maxima the largest normalized value is returned.
pub fn confidence_index(spec: &PsdSpectrum) -> f64 {
    let total: f64 = spec.values.iter().sum::<f64>() / spec.oversampling();
    if total <= 0.0 {
        return 0.0;
    }
    let v: Vec<f64> = spec.values.iter().map(|x| x / total).collect();
    let n = v.len();
    let is_peak = |i: usize| {
        let left = i == 0 || v[i] > v[i - 1];
        let right = i + 1 == n || v[i] > v[i + 1];
        left && right
    };
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut count = 0;
    for i in (0..n).filter(|&i| is_peak(i)) {
        count += 1;
        if v[i] > first {
            second = first;
            first = v[i];
        } else if v[i] > second {
            second = v[i];
        }
    }
    if count < 2 {
        return v.iter().copied().fold(0.0, f64::max);
    }
    first - second
}
