//! FFT-based spectral estimation.
//!
//! PSD convention: the mean over bins equals the mean power of the input, so a
//! white input of variance σ² gives an expected level of σ² in every bin. Bins
//! cover the full circle `[0, fs)`; bin `k` is centred at `k·fs/L`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::SampleBuffer;

fn check_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(())
}

fn transform(input: &[Complex64], sign: f64) -> Result<Vec<Complex64>> {
    let n = input.len();
    check_pow2(n)?;
    let bits = n.trailing_zeros();
    let mut data = vec![Complex64::new(0.0, 0.0); n];
    for (i, x) in input.iter().enumerate() {
        let j = if bits == 0 {
            0
        } else {
            i.reverse_bits() >> (usize::BITS - bits)
        };
        data[j] = *x;
    }
    // Twiddles for the largest stage; smaller stages stride through the table.
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, sign * TAU * k as f64 / n as f64))
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(data)
}

/// Unnormalized forward DFT `X[k] = Σ x[n]·exp(−i2πkn/N)`, radix-2.
pub fn fft(input: &[Complex64]) -> Result<Vec<Complex64>> {
    transform(input, -1.0)
}

/// Inverse DFT including the `1/N` factor, so `ifft(fft(x)) == x`.
pub fn ifft(input: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = input.len() as f64;
    let mut out = transform(input, 1.0)?;
    for v in &mut out {
        *v /= n;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Rectangular,
    Hann,
    Hamming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub length: usize,
}

impl WindowSpec {
    pub fn new(kind: WindowKind, length: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::invalid("window.length", "must be at least 2"));
        }
        Ok(Self { kind, length })
    }

    /// Periodic (DFT-even) window coefficients.
    pub fn coefficients(&self) -> Vec<f64> {
        let l = self.length as f64;
        (0..self.length)
            .map(|m| {
                let c = (2.0 * PI * m as f64 / l).cos();
                match self.kind {
                    WindowKind::Rectangular => 1.0,
                    WindowKind::Hann => 0.5 - 0.5 * c,
                    WindowKind::Hamming => 0.54 - 0.46 * c,
                }
            })
            .collect()
    }

    /// Window power `U = (1/L)·Σ w[m]²`.
    pub fn power(&self) -> f64 {
        let w = self.coefficients();
        w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsdEstimate {
    values: Vec<f64>,
    bin_width_hz: f64,
    sample_rate_hz: f64,
    n_segments_averaged: usize,
}

impl PsdEstimate {
    pub fn new(values: Vec<f64>, sample_rate_hz: f64, n_segments_averaged: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("values", "PSD must have at least one bin"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("values", "PSD values must be finite and >= 0"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample_rate_hz", "must be positive and finite"));
        }
        Ok(Self {
            bin_width_hz: sample_rate_hz / values.len() as f64,
            values,
            sample_rate_hz,
            n_segments_averaged,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn bin_width_hz(&self) -> f64 {
        self.bin_width_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn n_segments_averaged(&self) -> usize {
        self.n_segments_averaged
    }

    pub fn bin_frequency_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width_hz
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Same estimate with every value multiplied by `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Result<PsdEstimate> {
        PsdEstimate::new(
            self.values.iter().map(|v| v * c).collect(),
            self.sample_rate_hz,
            self.n_segments_averaged,
        )
    }

    /// Circular rotation by `shift` bins towards higher frequency.
    pub fn rotated(&self, shift: usize) -> PsdEstimate {
        let mut values = self.values.clone();
        let n = values.len();
        values.rotate_right(shift % n);
        PsdEstimate { values, ..self.clone() }
    }
}

/// Raw periodogram `P[k] = |X[k]|²/N`.
pub fn periodogram(buffer: &SampleBuffer) -> Result<PsdEstimate> {
    let n = buffer.len();
    let spectrum = fft(buffer.samples())?;
    let values = spectrum.iter().map(|x| x.norm_sqr() / n as f64).collect();
    PsdEstimate::new(values, buffer.sample_rate_hz(), 1)
}

/// Welch segmentation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WelchConfig {
    pub window: WindowKind,
    pub segment_len: usize,
    pub overlap: f64,
    pub min_segments: usize,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            window: WindowKind::Hann,
            segment_len: 1024,
            overlap: 0.5,
            min_segments: 1,
        }
    }
}

impl WelchConfig {
    pub fn window_spec(&self) -> Result<WindowSpec> {
        WindowSpec::new(self.window, self.segment_len)
    }

    pub fn estimate(&self, buffer: &SampleBuffer) -> Result<PsdEstimate> {
        welch(buffer, self.window_spec()?, self.overlap, self.min_segments)
    }
}

/// Number of segments Welch would average for the given geometry.
pub fn welch_segment_count(n: usize, window_len: usize, overlap_fraction: f64) -> usize {
    if window_len > n {
        return 0;
    }
    let step = welch_step(window_len, overlap_fraction);
    (n - window_len) / step + 1
}

fn welch_step(window_len: usize, overlap_fraction: f64) -> usize {
    let overlap = (overlap_fraction * window_len as f64).floor() as usize;
    (window_len - overlap.min(window_len - 1)).max(1)
}

/// Welch modified periodogram: averaged windowed-segment periodograms, each
/// normalized by `L·U` so white noise of variance σ² reads σ² in every bin.
pub fn welch(
    buffer: &SampleBuffer,
    window: WindowSpec,
    overlap_fraction: f64,
    min_segments: usize,
) -> Result<PsdEstimate> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::invalid("overlap_fraction", "must lie in [0, 1)"));
    }
    let l = window.length;
    check_pow2(l)?;
    let n = buffer.len();
    if l > n {
        return Err(Error::TooShort {
            len: n,
            reason: format!("window of {l} samples does not fit"),
        });
    }
    let segments = welch_segment_count(n, l, overlap_fraction);
    if segments < min_segments.max(1) {
        return Err(Error::TooShort {
            len: n,
            reason: format!("{segments} segments available, {min_segments} required"),
        });
    }
    let step = welch_step(l, overlap_fraction);
    let w = window.coefficients();
    let norm = l as f64 * window.power();
    let x = buffer.samples();
    let mut acc = vec![0.0; l];
    let mut seg = vec![Complex64::new(0.0, 0.0); l];
    for s in 0..segments {
        let start = s * step;
        for ((dst, src), wm) in seg.iter_mut().zip(&x[start..start + l]).zip(&w) {
            *dst = src * *wm;
        }
        let spectrum = fft(&seg)?;
        for (a, v) in acc.iter_mut().zip(&spectrum) {
            *a += v.norm_sqr() / norm;
        }
    }
    let values = acc.into_iter().map(|a| a / segments as f64).collect();
    PsdEstimate::new(values, buffer.sample_rate_hz(), segments)
}
