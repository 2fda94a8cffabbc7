//! Integrated sensing pipeline.
//!
//! Welch-estimate the spectrum, measure how much of the band carries the
//! received power, and route narrowband observations to a band-restricted
//! energy detector and wideband observations to the wavelet detector.
//!
//! Pure noise spreads its power over the whole band, so it routes wideband
//! and the wavelet path then reports a single vacant sub-band.

use serde::{Deserialize, Serialize};

use crate::energy::{band_energy, cfar_threshold, decide, Band, DetectionDecision, DetectorConfig};
use crate::error::{Error, Result, Stage};
use crate::signals::SampleBuffer;
use crate::spectral::{PsdEstimate, WelchConfig};
use crate::wavelet::{detect_occupancy, EdgeList, OccupancyMap, WaveletConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouterConfig {
    pub welch: WelchConfig,
    /// Share of total PSD power that defines the occupied bandwidth.
    pub power_fraction: f64,
    /// Occupied fraction of the sampled band at or below which a signal is narrowband.
    pub narrowband_fraction: f64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            welch: WelchConfig::default(),
            power_fraction: 0.9,
            narrowband_fraction: 0.1,
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_fraction > 0.0 && self.power_fraction < 1.0) {
            return Err(Error::invalid("power_fraction", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.narrowband_fraction) {
            return Err(Error::invalid("narrowband_fraction", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.welch.overlap) {
            return Err(Error::invalid("welch.overlap", "must lie in [0, 1)"));
        }
        self.welch.window_spec().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupiedBandwidth {
    pub bandwidth_hz: f64,
    pub occupied_fraction: f64,
    /// Selected PSD bins, strongest first.
    pub bins: Vec<usize>,
}

/// Smallest set of strongest bins holding `power_fraction` of the total power.
pub fn estimate_occupied_bandwidth(psd: &PsdEstimate, power_fraction: f64) -> Result<OccupiedBandwidth> {
    if !(power_fraction > 0.0 && power_fraction < 1.0) {
        return Err(Error::invalid("power_fraction", "must lie in (0, 1)"));
    }
    let v = psd.values();
    let total = psd.total();
    if total == 0.0 {
        return Ok(OccupiedBandwidth {
            bandwidth_hz: 0.0,
            occupied_fraction: 0.0,
            bins: Vec::new(),
        });
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    // Relative slack so a perfectly flat PSD lands on ceil(fraction·bins).
    let target = power_fraction * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut count = 0;
    for &k in &order {
        acc += v[k];
        count += 1;
        if acc >= target {
            break;
        }
    }
    order.truncate(count);
    Ok(OccupiedBandwidth {
        bandwidth_hz: count as f64 * psd.bin_width_hz(),
        occupied_fraction: count as f64 / v.len() as f64,
        bins: order,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandClass {
    Narrowband,
    Wideband,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalClass {
    pub class: BandClass,
    pub occupied_bandwidth_hz: f64,
    pub occupied_fraction: f64,
}

/// Narrowband iff the occupied fraction is at most `narrowband_fraction`.
pub fn classify_signal(psd: &PsdEstimate, router: &RouterConfig) -> Result<(SignalClass, OccupiedBandwidth)> {
    router.validate()?;
    let occ = estimate_occupied_bandwidth(psd, router.power_fraction)?;
    let class = if occ.occupied_fraction <= router.narrowband_fraction {
        BandClass::Narrowband
    } else {
        BandClass::Wideband
    };
    Ok((
        SignalClass {
            class,
            occupied_bandwidth_hz: occ.bandwidth_hz,
            occupied_fraction: occ.occupied_fraction,
        },
        occ,
    ))
}

/// Shortest circular arc covering `bins` of `psd`, as a band whose edges sit
/// half a bin outside the outermost bin centres.
pub fn covering_band(bins: &[usize], psd: &PsdEstimate) -> Option<Band> {
    let n = psd.bins();
    let mut sorted: Vec<usize> = bins.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let first = *sorted.first()?;
    let last = *sorted.last()?;
    // Largest gap between consecutive occupied bins, including the wrap gap.
    let mut gap = (first + n - last, first);
    for w in sorted.windows(2) {
        if w[1] - w[0] > gap.0 {
            gap = (w[1] - w[0], w[1]);
        }
    }
    let start = gap.1;
    let span = n - gap.0 + 1;
    let df = psd.bin_width_hz();
    let lo = (start as f64 - 0.5) * df;
    Some(Band {
        lo_hz: lo,
        hi_hz: lo + span as f64 * df,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingPath {
    EnergyPath,
    WaveletPath,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathOutcome {
    Energy {
        band: Band,
        /// Periodogram bins summed into the statistic (the CFAR Gamma shape).
        bins: usize,
        decision: DetectionDecision,
    },
    Wavelet {
        edges: EdgeList,
        occupancy: OccupancyMap,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensingReport {
    pub class: SignalClass,
    pub outcome: PathOutcome,
    pub psd: PsdEstimate,
}

impl SensingReport {
    pub fn path(&self) -> SensingPath {
        match self.outcome {
            PathOutcome::Energy { .. } => SensingPath::EnergyPath,
            PathOutcome::Wavelet { .. } => SensingPath::WaveletPath,
        }
    }

    pub fn decision(&self) -> Option<&DetectionDecision> {
        match &self.outcome {
            PathOutcome::Energy { decision, .. } => Some(decision),
            PathOutcome::Wavelet { .. } => None,
        }
    }

    pub fn occupancy(&self) -> Option<&OccupancyMap> {
        match &self.outcome {
            PathOutcome::Wavelet { occupancy, .. } => Some(occupancy),
            PathOutcome::Energy { .. } => None,
        }
    }
}

/// Run the full pipeline on one observation.
///
/// On the energy path the detector's `n_samples` and `band` are replaced by
/// the occupied band found by the router; σ² and the target Pfa are used as
/// configured.
pub fn integrated_sense(
    buffer: &SampleBuffer,
    detector: &DetectorConfig,
    wavelet: &WaveletConfig,
    router: &RouterConfig,
) -> Result<SensingReport> {
    detector.validate()?;
    wavelet.validate()?;
    let psd = router.welch.estimate(buffer).map_err(|e| e.at(Stage::Welch))?;
    let (class, occ) = classify_signal(&psd, router).map_err(|e| e.at(Stage::Router))?;
    let outcome = match class.class {
        BandClass::Narrowband => {
            let fs = buffer.sample_rate_hz();
            let band = covering_band(&occ.bins, &psd).unwrap_or(Band { lo_hz: 0.0, hi_hz: fs });
            energy_path(buffer, detector, band).map_err(|e| e.at(Stage::EnergyPath))?
        }
        BandClass::Wideband => {
            let (edges, occupancy) =
                detect_occupancy(&psd, wavelet, detector.noise_variance).map_err(|e| e.at(Stage::WaveletPath))?;
            PathOutcome::Wavelet { edges, occupancy }
        }
    };
    Ok(SensingReport { class, outcome, psd })
}

fn energy_path(buffer: &SampleBuffer, detector: &DetectorConfig, band: Band) -> Result<PathOutcome> {
    let energy = band_energy(buffer, &band)?;
    let config = DetectorConfig {
        n_samples: energy.bins,
        band: Some(band),
        ..*detector
    };
    let threshold = cfar_threshold(&config)?;
    Ok(PathOutcome::Energy {
        band,
        bins: energy.bins,
        decision: decide(energy.statistic, threshold),
    })
}
