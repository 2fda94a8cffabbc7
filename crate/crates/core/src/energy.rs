//! Energy detector: test statistic, CFAR threshold and binary decision.
//!
//! Under `H0` the statistic over `N` complex circular Gaussian samples (or `N`
//! periodogram bins) obeys `T/σ² ~ Gamma(N, 1)`. The CFAR threshold inverts
//! that law exactly.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::checked_gamma_ur;

use crate::error::{Error, Result};
use crate::signals::{apply_channel, gen_awgn, ChannelSpec, SampleBuffer, SimRng};
use crate::spectral;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// Noise only.
    H0,
    /// Primary signal present.
    H1,
}

/// Frequency arc `[lo_hz, hi_hz)`, interpreted modulo the sample rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl Band {
    pub fn new(lo_hz: f64, hi_hz: f64) -> Result<Self> {
        let band = Self { lo_hz, hi_hz };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo_hz.is_finite() && self.hi_hz.is_finite()) {
            return Err(Error::invalid("band", "edges must be finite"));
        }
        if !(self.lo_hz < self.hi_hz) {
            return Err(Error::invalid("band", "lo_hz must be below hi_hz"));
        }
        Ok(())
    }

    pub fn width_hz(&self) -> f64 {
        self.hi_hz - self.lo_hz
    }

    /// Bins of an `bins`-point full-circle grid whose centres fall in the arc.
    pub fn bins(&self, bins: usize, sample_rate_hz: f64) -> Result<Vec<usize>> {
        self.validate()?;
        if self.width_hz() > sample_rate_hz * (1.0 + 1e-12) {
            return Err(Error::invalid("band", "wider than the sampled band"));
        }
        let df = sample_rate_hz / bins as f64;
        let width = self.width_hz();
        Ok((0..bins)
            .filter(|&k| (k as f64 * df - self.lo_hz).rem_euclid(sample_rate_hz) < width)
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub n_samples: usize,
    /// Known noise variance σ² per complex sample.
    pub noise_variance: f64,
    pub target_pfa: f64,
    pub band: Option<Band>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            n_samples: 1024,
            noise_variance: 1.0,
            target_pfa: 0.1,
            band: None,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be at least 1"));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance > 0.0) {
            return Err(Error::invalid("noise_variance", "must be positive and finite"));
        }
        if !(self.target_pfa > 0.0 && self.target_pfa < 1.0) {
            return Err(Error::invalid("target_pfa", "must lie in (0, 1)"));
        }
        if let Some(band) = &self.band {
            band.validate()?;
        }
        Ok(())
    }

    pub fn with_pfa(&self, target_pfa: f64) -> Self {
        Self { target_pfa, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionDecision {
    pub hypothesis: Hypothesis,
    pub statistic: f64,
    pub threshold: f64,
}

/// Band-restricted energy and the number of periodogram bins it summed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandEnergy {
    pub statistic: f64,
    pub bins: usize,
}

/// Energy `Σ_{k∈band} |X[k]|²/N` over the full-length periodogram.
///
/// Over the whole circle this equals `Σ|x[n]|²`. Each bin contributes an
/// independent `σ²·Exp(1)` term under `H0`, so `bins` is the Gamma shape.
pub fn band_energy(buffer: &SampleBuffer, band: &Band) -> Result<BandEnergy> {
    let psd = spectral::periodogram(buffer)?;
    let selected = band.bins(psd.bins(), psd.sample_rate_hz())?;
    if selected.is_empty() {
        return Err(Error::EmptyBand);
    }
    let v = psd.values();
    Ok(BandEnergy {
        statistic: selected.iter().map(|&k| v[k]).sum(),
        bins: selected.len(),
    })
}

pub fn test_statistic(buffer: &SampleBuffer, band: Option<&Band>) -> Result<f64> {
    match band {
        None => Ok(buffer.energy()),
        Some(b) => Ok(band_energy(buffer, b)?.statistic),
    }
}

const CFAR_MAX_ITERATIONS: usize = 400;

/// Upper quantile of `Gamma(shape, 1)`: the `x` with `Q(shape, x) = tail`.
pub fn gamma_upper_quantile(shape: f64, tail: f64) -> Result<f64> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::invalid("shape", "must be positive and finite"));
    }
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::invalid("tail", "must lie in (0, 1)"));
    }
    let survival = |x: f64| checked_gamma_ur(shape, x).map_err(|e| Error::invalid("shape", e.to_string()));
    let mut lo = 0.0;
    let mut hi = shape.max(1.0);
    let mut iterations = 0;
    while survival(hi)? > tail {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations > 64 {
            return Err(Error::NoConvergence { iterations });
        }
    }
    for _ in 0..CFAR_MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if survival(mid)? > tail {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi.max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::NoConvergence {
        iterations: CFAR_MAX_ITERATIONS,
    })
}

/// CFAR threshold λ with `P(T > λ | H0) = target_pfa` for `n_samples` terms.
pub fn cfar_threshold(config: &DetectorConfig) -> Result<f64> {
    config.validate()?;
    Ok(config.noise_variance * gamma_upper_quantile(config.n_samples as f64, config.target_pfa)?)
}

/// `H1` iff the statistic strictly exceeds the threshold; ties go to `H0`.
pub fn decide(statistic: f64, threshold: f64) -> DetectionDecision {
    debug_assert!(threshold > 0.0);
    let hypothesis = if statistic > threshold {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    DetectionDecision {
        hypothesis,
        statistic,
        threshold,
    }
}

/// Statistic of one `H1` observation: unit-power Gaussian signal through `channel`.
pub fn h1_statistic<R: Rng + ?Sized>(
    n: usize,
    channel: &ChannelSpec,
    band: Option<&Band>,
    rng: &mut R,
) -> Result<f64> {
    let buffer = h1_buffer(n, channel, rng)?;
    test_statistic(&buffer, band)
}

/// One `H1` observation. An SNR of `-inf` yields noise only.
pub fn h1_buffer<R: Rng + ?Sized>(n: usize, channel: &ChannelSpec, rng: &mut R) -> Result<SampleBuffer> {
    let signal = gen_awgn(n, 1.0, 1.0, rng)?;
    apply_channel(&signal, channel, rng)
}

pub fn h0_statistic<R: Rng + ?Sized>(
    n: usize,
    noise_variance: f64,
    band: Option<&Band>,
    rng: &mut R,
) -> Result<f64> {
    let buffer = gen_awgn(n, noise_variance, 1.0, rng)?;
    test_statistic(&buffer, band)
}

pub const MIN_EQUAL_ERROR_TRIALS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EqualErrorThreshold {
    pub threshold: f64,
    pub pfa_hat: f64,
    pub pmd_hat: f64,
    pub trials: usize,
}

/// Gaussian-approximation seed `(μ0 + μ1)/2` for the equal-error search.
pub fn gaussian_midpoint(config: &DetectorConfig, snr_db: f64) -> f64 {
    let n = config.n_samples as f64 * config.noise_variance;
    let snr = 10f64.powf(snr_db / 10.0);
    0.5 * (n + n * (1.0 + snr))
}

/// Threshold where the empirical false-alarm and missed-detection rates meet.
///
/// Both error curves are estimated once from `trials` `H0` and `H1`
/// observations (AWGN channel at `snr_db`); the search then bisects over λ on
/// the monotone difference `P̂fa − P̂md`, starting from the Gaussian midpoint.
pub fn equal_error_threshold(
    config: &DetectorConfig,
    snr_db: f64,
    trials: usize,
    rng: &mut SimRng,
) -> Result<EqualErrorThreshold> {
    config.validate()?;
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", "must be finite"));
    }
    if trials < MIN_EQUAL_ERROR_TRIALS {
        return Err(Error::invalid("trials", format!("need at least {MIN_EQUAL_ERROR_TRIALS}")));
    }
    let root = SimRng::new(rng.next_u64());
    let channel = ChannelSpec::awgn(Some(snr_db), config.noise_variance);
    let n = config.n_samples;
    let band = config.band.as_ref();
    let mut h0: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| h0_statistic(n, config.noise_variance, band, &mut root.substream("eer-h0", i)))
        .collect::<Result<_>>()?;
    let mut h1: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| h1_statistic(n, &channel, band, &mut root.substream("eer-h1", i)))
        .collect::<Result<_>>()?;
    h0.sort_by(f64::total_cmp);
    h1.sort_by(f64::total_cmp);
    let m = trials as f64;
    let rates = |lambda: f64| {
        let pfa = (h0.len() - h0.partition_point(|&t| t <= lambda)) as f64 / m;
        let pmd = h1.partition_point(|&t| t <= lambda) as f64 / m;
        (pfa, pmd)
    };

    let mut lo = 0.0;
    let mut hi = 2.0 * h0[h0.len() - 1].max(h1[h1.len() - 1]);
    let mut lambda = gaussian_midpoint(config, snr_db);
    let mut best = (f64::INFINITY, lambda, 0.0, 0.0);
    for _ in 0..200 {
        let (pfa, pmd) = rates(lambda);
        let gap = pfa - pmd;
        if gap.abs() < best.0 {
            best = (gap.abs(), lambda, pfa, pmd);
        }
        if gap == 0.0 {
            break;
        }
        if gap > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
        lambda = 0.5 * (lo + hi);
    }
    let (_, threshold, pfa_hat, pmd_hat) = best;
    Ok(EqualErrorThreshold {
        threshold,
        pfa_hat,
        pmd_hat,
        trials,
    })
}
