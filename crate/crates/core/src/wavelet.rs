//! Wideband detector: multiscale wavelet product over the PSD.
//!
//! The wavelet is the first derivative of a Gaussian, dilated to `s_j = 2^j`
//! bins and truncated at `±4·s_j`. Convolution is circular over the frequency
//! axis. Edges of the PSD show up as extrema that persist across scales, while
//! noise-induced extrema do not, so the pointwise product over scales keeps
//! the former and suppresses the latter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::PsdEstimate;

pub const MAX_SCALES: u32 = 8;
const SUPPORT_PER_SCALE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveletConfig {
    /// Number of dyadic scales `J`, each `s_j = 2^j` for `j = 1..=J`.
    pub n_scales: u32,
    /// Edges must exceed this fraction of the largest product magnitude.
    pub edge_threshold_fraction: f64,
    /// A sub-band is occupied when its mean level exceeds this multiple of σ².
    pub occupancy_factor: f64,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            n_scales: 3,
            edge_threshold_fraction: 0.3,
            occupancy_factor: 2.0,
        }
    }
}

impl WaveletConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_SCALES).contains(&self.n_scales) {
            return Err(Error::invalid("n_scales", format!("must lie in 1..={MAX_SCALES}")));
        }
        if !(self.edge_threshold_fraction > 0.0 && self.edge_threshold_fraction < 1.0) {
            return Err(Error::invalid("edge_threshold_fraction", "must lie in (0, 1)"));
        }
        if !(self.occupancy_factor.is_finite() && self.occupancy_factor > 0.0) {
            return Err(Error::invalid("occupancy_factor", "must be positive"));
        }
        Ok(())
    }

    /// Minimum spacing between reported edges: the full support of the `j = 1` wavelet.
    pub fn merge_distance_bins(&self) -> usize {
        2 * SUPPORT_PER_SCALE * 2
    }
}

/// Sampled derivative-of-Gaussian at scale `s`, indices `-4s..=4s`, unit L1 mass.
pub fn wavelet_taps(scale: usize) -> Vec<f64> {
    let s = scale as f64;
    let half = (SUPPORT_PER_SCALE * scale) as i64;
    let raw: Vec<f64> = (-half..=half)
        .map(|d| {
            let x = d as f64;
            -x / (s * s) * (-x * x / (2.0 * s * s)).exp()
        })
        .collect();
    let mass: f64 = raw.iter().map(|v| v.abs()).sum();
    raw.into_iter().map(|v| v / mass).collect()
}

fn min_bins(scale_index: u32) -> usize {
    (1usize << scale_index) * 8
}

/// `W_j = P ⊛ ψ_{2^j}`, circular over the frequency axis.
///
/// A rising step in the PSD yields a positive response.
pub fn wavelet_transform_psd(psd: &PsdEstimate, scale_index: u32) -> Result<Vec<f64>> {
    let bins = psd.bins();
    if scale_index == 0 || scale_index > MAX_SCALES || bins < min_bins(scale_index) {
        return Err(Error::ScaleTooLarge {
            scale_index,
            required: min_bins(scale_index.clamp(1, MAX_SCALES)),
            bins,
        });
    }
    let taps = wavelet_taps(1 << scale_index);
    let half = (taps.len() / 2) as isize;
    let p = psd.values();
    let n = bins as isize;
    Ok((0..n)
        .map(|m| {
            taps.iter()
                .enumerate()
                .map(|(i, w)| {
                    let d = i as isize - half;
                    p[(m - d).rem_euclid(n) as usize] * w
                })
                .sum()
        })
        .collect())
}

/// Per-scale transforms `W_1..W_J`.
pub fn scale_transforms(psd: &PsdEstimate, n_scales: u32) -> Result<Vec<Vec<f64>>> {
    (1..=n_scales)
        .into_par_iter()
        .map(|j| wavelet_transform_psd(psd, j))
        .collect()
}

/// Pointwise product `Π_{j=1..J} W_j`.
pub fn multiscale_product(psd: &PsdEstimate, config: &WaveletConfig) -> Result<Vec<f64>> {
    config.validate()?;
    Ok(product_of(&scale_transforms(psd, config.n_scales)?))
}

pub(crate) fn product_of(transforms: &[Vec<f64>]) -> Vec<f64> {
    let mut out = transforms[0].clone();
    for w in &transforms[1..] {
        for (o, v) in out.iter_mut().zip(w) {
            *o *= v;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub bin: usize,
    pub freq_hz: f64,
    /// Signed product value at the edge (positive for a rising step when `J` is odd).
    pub magnitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeList {
    pub edges: Vec<Edge>,
}

impl EdgeList {
    pub fn bins(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.bin).collect()
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.freq_hz).collect()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Circular local maxima of `|values|` above `fraction·max|values|`.
///
/// Plateaus report their first bin. Used for both edge detection and the
/// spurious-extrema counts in the harness.
pub fn local_maxima_above(values: &[f64], fraction: f64) -> Vec<usize> {
    let n = values.len();
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if n < 3 || max == 0.0 {
        return Vec::new();
    }
    let floor = fraction * max;
    (0..n)
        .filter(|&m| {
            let here = values[m].abs();
            let left = values[(m + n - 1) % n].abs();
            let right = values[(m + 1) % n].abs();
            here > floor && here > left && here >= right
        })
        .collect()
}

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Edges from a multiscale product: thresholded local maxima, merged so no
/// two edges are closer than one base wavelet support (the larger survives).
pub fn detect_edges(product: &[f64], psd: &PsdEstimate, config: &WaveletConfig) -> Result<EdgeList> {
    config.validate()?;
    let n = psd.bins();
    if product.len() != n {
        return Err(Error::invalid("product", "length must equal the number of PSD bins"));
    }
    // Products of rounding residue on a flat PSD are treated as zero.
    let scale = psd.values().iter().fold(0.0f64, |m, v| m.max(*v));
    let floor = (1e-9 * scale).powi(config.n_scales as i32);
    let cleaned: Vec<f64> = product
        .iter()
        .map(|&v| if v.abs() <= floor { 0.0 } else { v })
        .collect();

    let mut candidates = local_maxima_above(&cleaned, config.edge_threshold_fraction);
    candidates.sort_by(|&a, &b| cleaned[b].abs().total_cmp(&cleaned[a].abs()).then(a.cmp(&b)));
    let min_gap = config.merge_distance_bins();
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| circular_distance(c, k, n) >= min_gap) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    Ok(EdgeList {
        edges: kept
            .into_iter()
            .map(|bin| Edge {
                bin,
                freq_hz: psd.bin_frequency_hz(bin),
                magnitude: cleaned[bin],
            })
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occupancy {
    Occupied,
    Vacant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancySubband {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub status: Occupancy,
    pub mean_psd_level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMap {
    pub subbands: Vec<OccupancySubband>,
}

impl OccupancyMap {
    pub fn statuses(&self) -> Vec<Occupancy> {
        self.subbands.iter().map(|s| s.status).collect()
    }

    /// Interior boundaries between sub-bands.
    pub fn boundaries_hz(&self) -> Vec<f64> {
        self.subbands.iter().skip(1).map(|s| s.start_hz).collect()
    }
}

/// Partition `[0, fs)` at the edges and classify each part by its mean level.
///
/// Adjacent parts with the same status are coalesced, so every reported
/// boundary is a detected edge that separates occupied from vacant spectrum.
pub fn classify_subbands(
    edges: &EdgeList,
    psd: &PsdEstimate,
    noise_variance: f64,
    occupancy_factor: f64,
) -> Result<OccupancyMap> {
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        return Err(Error::invalid("noise_variance", "must be positive and finite"));
    }
    let n = psd.bins();
    if edges.edges.iter().any(|e| e.bin >= n) {
        return Err(Error::invalid("edges", "edge outside the PSD range"));
    }
    let mut cuts: Vec<usize> = edges.edges.iter().map(|e| e.bin).filter(|&b| b > 0).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(n);

    let v = psd.values();
    let level = noise_variance * occupancy_factor;
    // (start bin, stop bin, status)
    let mut parts: Vec<(usize, usize, Occupancy)> = Vec::new();
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mean = v[a..b].iter().sum::<f64>() / (b - a) as f64;
        let status = if mean > level {
            Occupancy::Occupied
        } else {
            Occupancy::Vacant
        };
        match parts.last_mut() {
            Some(last) if last.2 == status => last.1 = b,
            _ => parts.push((a, b, status)),
        }
    }
    let subbands = parts
        .into_iter()
        .map(|(a, b, status)| OccupancySubband {
            start_hz: psd.bin_frequency_hz(a),
            stop_hz: if b == n {
                psd.sample_rate_hz()
            } else {
                psd.bin_frequency_hz(b)
            },
            status,
            mean_psd_level: v[a..b].iter().sum::<f64>() / (b - a) as f64,
        })
        .collect();
    Ok(OccupancyMap { subbands })
}

/// Full wideband path: product, edges, occupancy.
pub fn detect_occupancy(
    psd: &PsdEstimate,
    config: &WaveletConfig,
    noise_variance: f64,
) -> Result<(EdgeList, OccupancyMap)> {
    let product = multiscale_product(psd, config)?;
    let edges = detect_edges(&product, psd, config)?;
    let map = classify_subbands(&edges, psd, noise_variance, config.occupancy_factor)?;
    Ok((edges, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psd(values: Vec<f64>) -> PsdEstimate {
        PsdEstimate::new(values, values_rate(), 1).unwrap()
    }

    fn values_rate() -> f64 {
        1.0
    }

    fn step(n: usize, k: usize) -> Vec<f64> {
        (0..n).map(|i| if i >= k { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn taps_are_odd_with_unit_mass() {
        for s in [2usize, 4, 8, 16] {
            let t = wavelet_taps(s);
            assert_eq!(t.len(), 8 * s + 1);
            assert!((t.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
            let h = t.len() / 2;
            for d in 1..=h {
                assert_eq!(t[h + d], -t[h - d]);
            }
            // Negative lag weights are positive: a rising edge reads positive.
            assert!(t[h - 1] > 0.0);
        }
    }

    #[test]
    fn constant_psd_is_annihilated() {
        let p = psd(vec![3.5; 256]);
        for j in 1..=4 {
            assert!(wavelet_transform_psd(&p, j).unwrap().iter().all(|v| v.abs() < 1e-9 * 3.5));
        }
        let prod = multiscale_product(&p, &WaveletConfig::default()).unwrap();
        assert!(prod.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn scale_too_large_is_rejected() {
        let p = psd(vec![1.0; 64]);
        assert!(wavelet_transform_psd(&p, 3).is_ok());
        assert!(matches!(wavelet_transform_psd(&p, 4), Err(Error::ScaleTooLarge { .. })));
        assert!(wavelet_transform_psd(&p, 0).is_err());
    }

    /// Direct (non-circular-index) evaluation of the step response, for
    /// comparison with the production convolution.
    fn step_response_oracle(n: usize, k: usize, scale: usize) -> Vec<f64> {
        let taps = wavelet_taps(scale);
        let h = (taps.len() / 2) as i64;
        let p = step(n, k);
        let mut out = vec![0.0; n];
        for (m, o) in out.iter_mut().enumerate() {
            for i in 0..n {
                for wrap in [-1i64, 0, 1] {
                    let d = m as i64 - i as i64 + wrap * n as i64;
                    if d.abs() <= h {
                        *o += p[i] * taps[(d + h) as usize];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn step_response_peaks_next_to_the_step() {
        let (n, k) = (256, 100);
        for j in 1..=4u32 {
            let w = wavelet_transform_psd(&psd(step(n, k)), j).unwrap();
            let oracle = step_response_oracle(n, k, 1 << j);
            for (a, b) in w.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12);
            }
            let max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let near = (k - 40..k + 40).max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs())).unwrap();
            assert!(near.abs_diff(k) <= 1, "j={j}: peak at {near}");
            assert!((w[near].abs() - max).abs() < 1e-12);
            assert!(w[near] > 0.0);
        }
    }

    #[test]
    fn transform_is_linear() {
        let p: Vec<f64> = (0..128).map(|i| ((i * 37) % 11) as f64).collect();
        let q: Vec<f64> = (0..128).map(|i| ((i * 13) % 7) as f64 + 0.5).collect();
        let (a, b) = (2.5, 0.75);
        let mix: Vec<f64> = p.iter().zip(&q).map(|(x, y)| a * x + b * y).collect();
        let wp = wavelet_transform_psd(&psd(p), 2).unwrap();
        let wq = wavelet_transform_psd(&psd(q), 2).unwrap();
        let wm = wavelet_transform_psd(&psd(mix), 2).unwrap();
        let scale = wm.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..128 {
            assert!((wm[i] - (a * wp[i] + b * wq[i])).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn single_scale_product_equals_transform() {
        let p = psd(step(128, 40));
        let cfg = WaveletConfig { n_scales: 1, ..Default::default() };
        assert_eq!(multiscale_product(&p, &cfg).unwrap(), wavelet_transform_psd(&p, 1).unwrap());
    }

    #[test]
    fn noiseless_step_gives_edge_at_step_and_wrap() {
        let (n, k) = (512, 200);
        let p = psd(step(n, k));
        let cfg = WaveletConfig::default();
        let edges = detect_edges(&multiscale_product(&p, &cfg).unwrap(), &p, &cfg).unwrap();
        // The circular axis closes the step with a falling edge at the wrap point.
        assert_eq!(edges.len(), 2, "{:?}", edges.bins());
        let near_k: Vec<_> = edges.bins().into_iter().filter(|b| b.abs_diff(k) <= 2).collect();
        assert_eq!(near_k.len(), 1);
        assert!(edges.bins().iter().any(|&b| circular_distance(b, 0, n) <= 2));
    }

    #[test]
    fn flat_psd_has_no_edges() {
        let p = psd(vec![2.0; 256]);
        let cfg = WaveletConfig::default();
        let prod = multiscale_product(&p, &cfg).unwrap();
        assert!(detect_edges(&prod, &p, &cfg).unwrap().is_empty());
        assert!(detect_edges(&vec![0.0; 256], &p, &cfg).unwrap().is_empty());
    }

    #[test]
    fn close_maxima_are_merged() {
        let mut prod = vec![0.0; 128];
        prod[50] = 1.0;
        prod[55] = 0.8;
        prod[90] = -0.9;
        let p = psd(vec![1.0; 128]);
        let e = detect_edges(&prod, &p, &WaveletConfig::default()).unwrap();
        assert_eq!(e.bins(), vec![50, 90]);
        assert_eq!(e.edges[1].magnitude, -0.9);
    }

    #[test]
    fn classify_without_edges() {
        let p = psd(vec![1.0; 64]);
        let map = classify_subbands(&EdgeList::default(), &p, 1.0, 2.0).unwrap();
        assert_eq!(map.statuses(), vec![Occupancy::Vacant]);
        assert_eq!(map.subbands[0].start_hz, 0.0);
        assert_eq!(map.subbands[0].stop_hz, 1.0);
        let hot = psd(vec![10.0; 64]);
        let map = classify_subbands(&EdgeList::default(), &hot, 1.0, 2.0).unwrap();
        assert_eq!(map.statuses(), vec![Occupancy::Occupied]);
    }

    #[test]
    fn classify_hole_band_hole() {
        let v: Vec<f64> = (0..256).map(|i| if (80..160).contains(&i) { 10.0 } else { 1.0 }).collect();
        let p = psd(v);
        let (edges, map) = detect_occupancy(&p, &WaveletConfig::default(), 1.0).unwrap();
        assert_eq!(edges.len(), 2);
        assert_eq!(map.statuses(), vec![Occupancy::Vacant, Occupancy::Occupied, Occupancy::Vacant]);
        let b = map.boundaries_hz();
        assert!((b[0] * 256.0 - 80.0).abs() <= 2.0);
        assert!((b[1] * 256.0 - 160.0).abs() <= 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(WaveletConfig { n_scales: 0, ..Default::default() }.validate().is_err());
        assert!(WaveletConfig { n_scales: 9, ..Default::default() }.validate().is_err());
        assert!(WaveletConfig { edge_threshold_fraction: 1.0, ..Default::default() }.validate().is_err());
    }
}
