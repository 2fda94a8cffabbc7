//! Monte Carlo experiments for detector performance.
//!
//! Every trial draws from its own stream, derived from the master seed, an
//! experiment label and the trial index. Results are collected in index order
//! and reduced by counting, so output does not depend on thread count or
//! scheduling. Sweeps over SNR or Pfa reuse the same per-trial streams at every
//! grid point (common random numbers).
//!
//! `H1` observations carry a unit-power complex Gaussian signal scaled by the
//! channel to the requested SNR; an SNR of `-inf` is noise only. Buffers are
//! generated at a normalized sample rate of 1, so any detector band is in
//! cycles per sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{
    cfar_threshold, decide, h0_statistic, h1_buffer, test_statistic, DetectionDecision, DetectorConfig, Hypothesis,
};
use crate::error::{Error, Result};
use crate::signals::{gen_awgn, gen_wideband, ChannelSpec, Fading, SimRng, SubbandPlan, Tap};
use crate::spectral::{PsdEstimate, WelchConfig};
use crate::wavelet::{self, EdgeList, WaveletConfig};

/// Half-width of the 3σ normal-approximation binomial interval.
pub fn binomial_ci(p: f64, trials: usize) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdEstimate {
    pub pd_hat: f64,
    pub trials: usize,
    pub ci_halfwidth: f64,
    pub snr_db: f64,
    pub target_pfa: f64,
}

impl PdEstimate {
    fn from_count(detections: usize, trials: usize, snr_db: f64, target_pfa: f64) -> Self {
        let pd_hat = detections as f64 / trials as f64;
        Self {
            pd_hat,
            trials,
            ci_halfwidth: binomial_ci(pd_hat, trials),
            snr_db,
            target_pfa,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub trial_index: u64,
    pub truth: Hypothesis,
    pub decision: DetectionDecision,
    pub seed: u64,
}

/// One energy-detector trial on stream `(master, label, trial_index)`.
pub fn run_trial(
    master: &SimRng,
    label: &str,
    trial_index: u64,
    truth: Hypothesis,
    detector: &DetectorConfig,
    channel: &ChannelSpec,
    threshold: f64,
) -> Result<TrialResult> {
    let mut rng = master.substream(label, trial_index);
    let seed = rng.seed();
    let statistic = match truth {
        Hypothesis::H0 => h0_statistic(detector.n_samples, detector.noise_variance, detector.band.as_ref(), &mut rng)?,
        Hypothesis::H1 => {
            let buffer = h1_buffer(detector.n_samples, channel, &mut rng)?;
            test_statistic(&buffer, detector.band.as_ref())?
        }
    };
    Ok(TrialResult {
        trial_index,
        truth,
        decision: decide(statistic, threshold),
        seed,
    })
}

fn check_trials(trials: usize, min: usize) -> Result<()> {
    if trials < min {
        return Err(Error::invalid("trials", format!("need at least {min}")));
    }
    Ok(())
}

fn channel_at(channel: &ChannelSpec, noise_variance: f64, snr_db: f64) -> ChannelSpec {
    ChannelSpec {
        snr_db: Some(snr_db),
        noise_variance,
        ..channel.clone()
    }
}

/// Detection probability at each SNR with a CFAR threshold.
///
/// The channel's own `snr_db` and `noise_variance` are replaced by the grid
/// value and the detector's σ².
pub fn run_pd_vs_snr(
    snr_grid_db: &[f64],
    detector: &DetectorConfig,
    channel: &ChannelSpec,
    trials: usize,
    rng: &SimRng,
) -> Result<Vec<PdEstimate>> {
    detector.validate()?;
    channel.validate()?;
    check_trials(trials, 100)?;
    if snr_grid_db.is_empty() {
        return Err(Error::invalid("snr_grid_db", "grid is empty"));
    }
    let threshold = cfar_threshold(detector)?;
    let channels: Vec<ChannelSpec> = snr_grid_db
        .iter()
        .map(|&s| channel_at(channel, detector.noise_variance, s))
        .collect();
    for ch in &channels {
        ch.validate()?;
    }
    let hits: Vec<Vec<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            channels
                .iter()
                .map(|ch| {
                    run_trial(rng, "pd-vs-snr", i, Hypothesis::H1, detector, ch, threshold)
                        .map(|t| t.decision.hypothesis == Hypothesis::H1)
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    Ok(snr_grid_db
        .iter()
        .enumerate()
        .map(|(g, &snr)| {
            let count = hits.iter().filter(|row| row[g]).count();
            PdEstimate::from_count(count, trials, snr, detector.target_pfa)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pfa_target: f64,
    pub pfa_empirical: f64,
    pub pfa_ci: f64,
    pub pd_hat: f64,
    pub pd_ci: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub snr_db: f64,
    pub channel: ChannelSpec,
}

/// ROC at one SNR. Each trial yields one `H0` and one `H1` statistic that
/// are compared against every threshold of the grid, so Pd is exactly
/// nondecreasing along an increasing Pfa grid.
pub fn run_roc(
    pfa_grid: &[f64],
    snr_db: f64,
    detector: &DetectorConfig,
    channel: &ChannelSpec,
    trials: usize,
    rng: &SimRng,
) -> Result<RocCurve> {
    detector.validate()?;
    check_trials(trials, 100)?;
    if pfa_grid.is_empty() || pfa_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::invalid("pfa_grid", "values must lie in (0, 1)"));
    }
    if pfa_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("pfa_grid", "must be strictly increasing"));
    }
    let channel = channel_at(channel, detector.noise_variance, snr_db);
    channel.validate()?;
    let thresholds: Vec<f64> = pfa_grid
        .iter()
        .map(|&p| cfar_threshold(&detector.with_pfa(p)))
        .collect::<Result<_>>()?;
    let stats: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let t0 = run_trial(rng, "roc-h0", i, Hypothesis::H0, detector, &channel, thresholds[0])?;
            let t1 = run_trial(rng, "roc-h1", i, Hypothesis::H1, detector, &channel, thresholds[0])?;
            Ok((t0.decision.statistic, t1.decision.statistic))
        })
        .collect::<Result<_>>()?;
    let points = pfa_grid
        .iter()
        .zip(&thresholds)
        .map(|(&pfa, &lambda)| {
            let fa = stats.iter().filter(|s| decide(s.0, lambda).hypothesis == Hypothesis::H1).count();
            let det = stats.iter().filter(|s| decide(s.1, lambda).hypothesis == Hypothesis::H1).count();
            let pfa_empirical = fa as f64 / trials as f64;
            let pd_hat = det as f64 / trials as f64;
            RocPoint {
                pfa_target: pfa,
                pfa_empirical,
                pfa_ci: binomial_ci(pfa, trials),
                pd_hat,
                pd_ci: binomial_ci(pd_hat, trials),
                trials,
            }
        })
        .collect();
    Ok(RocCurve {
        points,
        snr_db,
        channel,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FadingComparison {
    pub awgn: Vec<PdEstimate>,
    pub rayleigh: Vec<PdEstimate>,
    pub taps: Vec<Tap>,
}

/// Two-tap power-delay profile used when none is configured.
pub fn default_fading_taps() -> Vec<Tap> {
    vec![
        Tap {
            delay_samples: 0,
            mean_power: 0.5,
        },
        Tap {
            delay_samples: 3,
            mean_power: 0.5,
        },
    ]
}

/// The same Pd sweep through a flat AWGN channel and a block Rayleigh
/// multipath channel, on identical per-trial streams.
pub fn run_fading_comparison(
    detector: &DetectorConfig,
    snr_grid_db: &[f64],
    taps: &[Tap],
    trials: usize,
    rng: &SimRng,
) -> Result<FadingComparison> {
    let awgn = ChannelSpec::awgn(None, detector.noise_variance);
    let rayleigh = ChannelSpec {
        snr_db: None,
        noise_variance: detector.noise_variance,
        taps: taps.to_vec(),
        fading: Fading::RayleighBlock,
    };
    Ok(FadingComparison {
        awgn: run_pd_vs_snr(snr_grid_db, detector, &awgn, trials, rng)?,
        rayleigh: run_pd_vs_snr(snr_grid_db, detector, &rayleigh, trials, rng)?,
        taps: taps.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiscaleSettings {
    pub n_samples: usize,
    pub noise_variance: f64,
    pub welch: WelchConfig,
    pub wavelet: WaveletConfig,
    /// Use the plan's expected PSD instead of an estimated one.
    pub noiseless: bool,
}

impl Default for MultiscaleSettings {
    fn default() -> Self {
        Self {
            n_samples: 65536,
            noise_variance: 1.0,
            welch: WelchConfig::default(),
            wavelet: WaveletConfig::default(),
            noiseless: false,
        }
    }
}

/// Per-scale curves of one realization, aligned by bin.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiscaleDemo {
    pub psd: PsdEstimate,
    pub transforms: Vec<Vec<f64>>,
    pub product: Vec<f64>,
    pub edges: EdgeList,
}

/// Expected PSD of `plan` plus white noise on a `bins`-point grid.
pub fn expected_psd(plan: &SubbandPlan, bins: usize, noise_variance: f64) -> Result<PsdEstimate> {
    plan.validate()?;
    let df = plan.total_bandwidth_hz / bins as f64;
    let values = (0..bins)
        .map(|k| plan.level_at(k as f64 * df) + noise_variance)
        .collect();
    PsdEstimate::new(values, plan.total_bandwidth_hz, 0)
}

/// One wideband scene (plan occupants plus AWGN), its Welch PSD, and the
/// multiscale curves over it.
pub fn run_multiscale_demo(plan: &SubbandPlan, settings: &MultiscaleSettings, rng: &SimRng) -> Result<MultiscaleDemo> {
    settings.wavelet.validate()?;
    let psd = if settings.noiseless {
        expected_psd(plan, settings.welch.segment_len, settings.noise_variance)?
    } else {
        let mut stream = rng.substream("multiscale", 0);
        let scene = gen_wideband(plan, settings.n_samples, &mut stream)?;
        let noise = gen_awgn(scene.len(), settings.noise_variance, scene.sample_rate_hz(), &mut stream)?;
        settings.welch.estimate(&scene.add(&noise)?)?
    };
    multiscale_curves(psd, &settings.wavelet)
}

pub fn multiscale_curves(psd: PsdEstimate, config: &WaveletConfig) -> Result<MultiscaleDemo> {
    config.validate()?;
    let transforms = wavelet::scale_transforms(&psd, config.n_scales)?;
    let product = wavelet::product_of(&transforms);
    let edges = wavelet::detect_edges(&product, &psd, config)?;
    Ok(MultiscaleDemo {
        psd,
        transforms,
        product,
        edges,
    })
}

/// Above-threshold local extrema of `|values|` farther than `tolerance`
/// bins (circularly) from every true edge.
pub fn count_spurious_extrema(values: &[f64], true_edges: &[usize], fraction: f64, tolerance: usize) -> usize {
    let n = values.len();
    wavelet::local_maxima_above(values, fraction)
        .into_iter()
        .filter(|&m| {
            true_edges.iter().all(|&e| {
                let d = m.abs_diff(e);
                d.min(n - d) > tolerance
            })
        })
        .count()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub n_samples: usize,
    pub pfa_target: f64,
    pub pfa_empirical: f64,
    pub ci_halfwidth: f64,
    pub trials: usize,
    pub within_ci: bool,
}

/// `H0`-only check of the CFAR threshold over a grid of `N` and Pfa.
///
/// Rows outside their 3σ interval are flagged, not raised.
pub fn run_cfar_calibration(
    n_grid: &[usize],
    pfa_grid: &[f64],
    noise_variance: f64,
    trials: usize,
    rng: &SimRng,
) -> Result<Vec<CalibrationRow>> {
    check_trials(trials, 10_000)?;
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        return Err(Error::invalid("noise_variance", "must be positive and finite"));
    }
    let mut rows = Vec::new();
    for &n in n_grid {
        let base = DetectorConfig {
            n_samples: n,
            noise_variance,
            target_pfa: 0.5,
            band: None,
        };
        base.validate()?;
        let label = format!("cfar-n{n}");
        let stats: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|i| h0_statistic(n, noise_variance, None, &mut rng.substream(&label, i)))
            .collect::<Result<_>>()?;
        for &pfa in pfa_grid {
            let lambda = cfar_threshold(&base.with_pfa(pfa))?;
            let alarms = stats.iter().filter(|&&t| t > lambda).count();
            let pfa_empirical = alarms as f64 / trials as f64;
            let ci = binomial_ci(pfa, trials);
            rows.push(CalibrationRow {
                n_samples: n,
                pfa_target: pfa,
                pfa_empirical,
                ci_halfwidth: ci,
                trials,
                within_ci: (pfa_empirical - pfa).abs() <= ci,
            });
        }
    }
    Ok(rows)
}
