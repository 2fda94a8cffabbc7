//! Primary-user waveforms, noise, and the multipath fading channel.
//!
//! Everything here is complex circularly-symmetric baseband. SNR is always
//! referenced to the full sampled band at the detector input.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Seeded random stream used by every generator in the crate.
///
/// Sub-streams are derived from `(seed, label, index)` by hashing, never from
/// the parent's consumed state, so a derived stream does not depend on how
/// much of the parent has been used.
#[derive(Clone, Debug)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent, reproducible child stream for `(label, index)`.
    pub fn substream(&self, label: &str, index: u64) -> SimRng {
        SimRng::new(derive_seed(self.seed, label, index))
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed derivation: FNV-1a over the label, then splitmix mixing.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(splitmix64(seed ^ h).wrapping_add(index))
}

/// Complex baseband time series with its sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl SampleBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "buffer must hold at least one sample"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample_rate_hz", "must be positive and finite"));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::invalid("samples", "all samples must be finite"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(n: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n], sample_rate_hz)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean power `(1/N)·Σ|x[n]|²`.
    pub fn power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    /// Total energy `Σ|x[n]|²`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: f64) -> SampleBuffer {
        SampleBuffer {
            samples: self.samples.iter().map(|s| s * c).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Sample-wise sum; both buffers must have the same length and rate.
    pub fn add(&self, other: &SampleBuffer) -> Result<SampleBuffer> {
        if self.len() != other.len() {
            return Err(Error::invalid("other", "buffers differ in length"));
        }
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::invalid("other", "buffers differ in sample rate"));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(SampleBuffer {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        })
    }
}

/// One sub-band of a wideband scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subband {
    pub start_hz: f64,
    pub stop_hz: f64,
    /// Expected PSD level inside the band (power per bin, `0` for a hole).
    pub level: f64,
}

/// Consecutive sub-bands tiling `[0, total_bandwidth_hz)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubbandPlan {
    pub bands: Vec<Subband>,
    pub total_bandwidth_hz: f64,
}

impl SubbandPlan {
    pub fn new(bands: Vec<Subband>, total_bandwidth_hz: f64) -> Result<Self> {
        let plan = Self {
            bands,
            total_bandwidth_hz,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan from relative edges in `[0, 1]` and one level per band.
    pub fn from_fractions(edges: &[f64], levels: &[f64], total_bandwidth_hz: f64) -> Result<Self> {
        if edges.len() != levels.len() + 1 {
            return Err(Error::invalid("edges", "need one more edge than levels"));
        }
        let bands = edges
            .windows(2)
            .zip(levels)
            .map(|(w, &level)| Subband {
                start_hz: w[0] * total_bandwidth_hz,
                stop_hz: w[1] * total_bandwidth_hz,
                level,
            })
            .collect();
        Self::new(bands, total_bandwidth_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_bandwidth_hz.is_finite() && self.total_bandwidth_hz > 0.0) {
            return Err(Error::invalid("total_bandwidth_hz", "must be positive and finite"));
        }
        let first = self
            .bands
            .first()
            .ok_or_else(|| Error::invalid("bands", "plan has no sub-bands"))?;
        let tol = 1e-9 * self.total_bandwidth_hz;
        if first.start_hz.abs() > tol {
            return Err(Error::invalid("bands", "first sub-band must start at 0 Hz"));
        }
        for (i, b) in self.bands.iter().enumerate() {
            if !(b.level.is_finite() && b.level >= 0.0) {
                return Err(Error::invalid("bands", format!("sub-band {i} has a negative or non-finite level")));
            }
            if !(b.stop_hz > b.start_hz) {
                return Err(Error::invalid("bands", format!("sub-band {i} is empty or reversed")));
            }
            if let Some(next) = self.bands.get(i + 1) {
                if (next.start_hz - b.stop_hz).abs() > tol {
                    return Err(Error::invalid("bands", format!("sub-bands {i} and {} are not consecutive", i + 1)));
                }
            }
        }
        let last = self.bands.last().expect("nonempty");
        if (last.stop_hz - self.total_bandwidth_hz).abs() > tol {
            return Err(Error::invalid("bands", "last sub-band must end at total_bandwidth_hz"));
        }
        Ok(())
    }

    /// Level of the sub-band containing `freq_hz` (taken modulo the total bandwidth).
    pub fn level_at(&self, freq_hz: f64) -> f64 {
        let f = freq_hz.rem_euclid(self.total_bandwidth_hz);
        self.bands
            .iter()
            .find(|b| f >= b.start_hz && f < b.stop_hz)
            .or(self.bands.last())
            .map_or(0.0, |b| b.level)
    }

    /// Interior boundaries where the level actually changes.
    pub fn level_changes_hz(&self) -> Vec<f64> {
        self.bands
            .windows(2)
            .filter(|w| w[0].level != w[1].level)
            .map(|w| w[1].start_hz)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    None,
    RayleighBlock,
}

/// One multipath tap of a power-delay profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tap {
    pub delay_samples: usize,
    pub mean_power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// Received signal power over the full band relative to the noise
    /// variance. `None` leaves the signal power untouched. When
    /// `noise_variance` is zero the SNR is referenced to unit power.
    pub snr_db: Option<f64>,
    /// Per complex sample, split equally between I and Q.
    pub noise_variance: f64,
    pub taps: Vec<Tap>,
    pub fading: Fading,
}

impl ChannelSpec {
    /// Single unit tap, no fading.
    pub fn awgn(snr_db: Option<f64>, noise_variance: f64) -> Self {
        Self {
            snr_db,
            noise_variance,
            taps: vec![Tap {
                delay_samples: 0,
                mean_power: 1.0,
            }],
            fading: Fading::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::invalid("noise_variance", "must be finite and >= 0"));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() || snr == f64::INFINITY {
                return Err(Error::invalid("snr_db", "must be finite or -inf"));
            }
        }
        let first = self
            .taps
            .first()
            .ok_or_else(|| Error::invalid("taps", "at least one tap is required"))?;
        if first.delay_samples != 0 {
            return Err(Error::invalid("taps", "first tap delay must be 0"));
        }
        if self.taps.windows(2).any(|w| w[1].delay_samples <= w[0].delay_samples) {
            return Err(Error::invalid("taps", "delays must be strictly increasing"));
        }
        if self.taps.iter().any(|t| !(t.mean_power.is_finite() && t.mean_power > 0.0)) {
            return Err(Error::invalid("taps", "tap powers must be positive"));
        }
        let total: f64 = self.taps.iter().map(|t| t.mean_power).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("taps", format!("tap powers sum to {total}, expected 1")));
        }
        Ok(())
    }

    fn reference_power(&self) -> f64 {
        if self.noise_variance > 0.0 {
            self.noise_variance
        } else {
            1.0
        }
    }
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sd * re, sd * im)
}

/// Circularly-symmetric complex white Gaussian noise.
pub fn gen_awgn<R: Rng + ?Sized>(
    n: usize,
    noise_variance: f64,
    sample_rate_hz: f64,
    rng: &mut R,
) -> Result<SampleBuffer> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(noise_variance.is_finite() && noise_variance >= 0.0) {
        return Err(Error::invalid("noise_variance", "must be finite and >= 0"));
    }
    if noise_variance == 0.0 {
        return SampleBuffer::zeros(n, sample_rate_hz);
    }
    let samples = (0..n).map(|_| complex_gaussian(rng, noise_variance)).collect();
    SampleBuffer::new(samples, sample_rate_hz)
}

/// Complex exponential `amplitude·exp(i(2π·fc·n/fs + phase))`.
pub fn tone(
    fc_hz: f64,
    n: usize,
    amplitude: f64,
    sample_rate_hz: f64,
    phase: f64,
) -> Result<SampleBuffer> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample_rate_hz", "must be positive and finite"));
    }
    if !(fc_hz.abs() < sample_rate_hz / 2.0) {
        return Err(Error::invalid("fc_hz", "must lie strictly inside (-fs/2, fs/2)"));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::invalid("amplitude", "must be positive and finite"));
    }
    let step = TAU * fc_hz / sample_rate_hz;
    let samples = (0..n)
        .map(|k| Complex64::from_polar(amplitude, step * k as f64 + phase))
        .collect();
    SampleBuffer::new(samples, sample_rate_hz)
}

/// Narrowband primary signal: a tone with uniformly random phase.
pub fn gen_narrowband<R: Rng + ?Sized>(
    fc_hz: f64,
    n: usize,
    amplitude: f64,
    sample_rate_hz: f64,
    rng: &mut R,
) -> Result<SampleBuffer> {
    let phase = rng.random::<f64>() * TAU;
    tone(fc_hz, n, amplitude, sample_rate_hz, phase)
}

/// Wideband scene: band-limited Gaussian occupants shaped by brick-wall masks.
///
/// The expected PSD (bin-mean convention) equals the plan level in every
/// sub-band. Sample rate of the result is the plan's total bandwidth.
pub fn gen_wideband<R: Rng + ?Sized>(plan: &SubbandPlan, n: usize, rng: &mut R) -> Result<SampleBuffer> {
    plan.validate()?;
    if n < 64 {
        return Err(Error::invalid("n", "wideband synthesis needs at least 64 samples"));
    }
    let fs = plan.total_bandwidth_hz;
    if plan.bands.iter().all(|b| b.level == 0.0) {
        return SampleBuffer::zeros(n, fs);
    }
    let nfft = n.next_power_of_two();
    let bin_hz = fs / nfft as f64;
    let spectrum: Vec<Complex64> = (0..nfft)
        .map(|k| {
            let z = complex_gaussian(rng, nfft as f64);
            z * plan.level_at(k as f64 * bin_hz).sqrt()
        })
        .collect();
    let mut samples = spectral::ifft(&spectrum)?;
    samples.truncate(n);
    SampleBuffer::new(samples, fs)
}

/// Multipath channel with optional block Rayleigh fading, SNR scaling and AWGN.
///
/// Draw order is fixed: tap gains first, then noise. Output keeps the input
/// length; the convolution tail is dropped.
pub fn apply_channel<R: Rng + ?Sized>(
    signal: &SampleBuffer,
    channel: &ChannelSpec,
    rng: &mut R,
) -> Result<SampleBuffer> {
    channel.validate()?;
    let gains: Vec<Complex64> = match channel.fading {
        Fading::None => channel
            .taps
            .iter()
            .map(|t| Complex64::new(t.mean_power.sqrt(), 0.0))
            .collect(),
        Fading::RayleighBlock => channel
            .taps
            .iter()
            .map(|t| complex_gaussian(rng, t.mean_power))
            .collect(),
    };
    let scale = match channel.snr_db {
        None => 1.0,
        Some(snr) if snr == f64::NEG_INFINITY => 0.0,
        Some(snr) => {
            let p = signal.power();
            if p == 0.0 {
                return Err(Error::invalid("signal", "zero-power signal cannot be scaled to an SNR"));
            }
            let target = 10f64.powf(snr / 10.0) * channel.reference_power();
            (target / p).sqrt()
        }
    };
    let x = signal.samples();
    let n = x.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (tap, g) in channel.taps.iter().zip(&gains) {
        let g = g * scale;
        for (y, s) in out[tap.delay_samples.min(n)..].iter_mut().zip(x) {
            *y += g * s;
        }
    }
    if channel.noise_variance > 0.0 {
        for y in &mut out {
            *y += complex_gaussian(rng, channel.noise_variance);
        }
    }
    SampleBuffer::new(out, signal.sample_rate_hz())
}
