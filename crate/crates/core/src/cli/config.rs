//! Run configuration: TOML file, `--set` overrides, validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::energy::DetectorConfig;
use crate::error::Error;
use crate::harness::{default_fading_taps, MultiscaleSettings};
use crate::integrate::RouterConfig;
use crate::signals::{ChannelSpec, Fading, Subband, SubbandPlan, Tap};
use crate::wavelet::WaveletConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config key `{key}`: {message}")]
    Key { key: String, message: String },
}

fn key_error(section: &str, err: Error) -> ConfigError {
    match err {
        Error::InvalidArgument { name, reason } => ConfigError::Key {
            key: format!("{section}.{name}"),
            message: reason,
        },
        other => ConfigError::Key {
            key: section.to_string(),
            message: other.to_string(),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub taps: Vec<Tap>,
    pub fading: Fading,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            taps: vec![Tap {
                delay_samples: 0,
                mean_power: 1.0,
            }],
            fading: Fading::None,
        }
    }
}

impl ChannelSection {
    pub fn spec(&self, snr_db: Option<f64>, noise_variance: f64) -> ChannelSpec {
        ChannelSpec {
            snr_db,
            noise_variance,
            taps: self.taps.clone(),
            fading: self.fading,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessSection {
    pub trials: usize,
    pub snr_grid_db: Vec<f64>,
    pub roc_snr_db: f64,
    pub pfa_grid: Vec<f64>,
    pub fading_snr_grid_db: Vec<f64>,
    pub fading_taps: Vec<Tap>,
    pub calibration_n_grid: Vec<usize>,
    pub calibration_pfa_grid: Vec<f64>,
    pub calibration_trials: usize,
    pub multiscale_noiseless: bool,
}

impl Default for HarnessSection {
    fn default() -> Self {
        Self {
            trials: 10_000,
            snr_grid_db: (0..=10).map(|i| -20.0 + 2.0 * i as f64).collect(),
            roc_snr_db: -5.0,
            pfa_grid: vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9],
            fading_snr_grid_db: (0..=5).map(|i| -10.0 + 2.0 * i as f64).collect(),
            fading_taps: default_fading_taps(),
            calibration_n_grid: vec![1, 16, 256, 1024],
            calibration_pfa_grid: vec![0.01, 0.1, 0.5],
            calibration_trials: 100_000,
            multiscale_noiseless: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Tone,
    Wideband,
    Noise,
}

/// Scene synthesized by `synth` and analysed by `edges`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSection {
    pub kind: SceneKind,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    /// Tone frequency, inside `(-fs/2, fs/2)`.
    pub tone_freq_hz: f64,
    /// Full-band SNR for tone scenes.
    pub snr_db: f64,
    /// Wideband occupants; levels are absolute PSD levels.
    pub bands: Vec<Subband>,
}

impl Default for SceneSection {
    fn default() -> Self {
        let fs = 1.0e6;
        Self {
            kind: SceneKind::Wideband,
            n_samples: 65536,
            sample_rate_hz: fs,
            tone_freq_hz: 0.15 * fs,
            snr_db: 10.0,
            bands: vec![
                Subband {
                    start_hz: 0.0,
                    stop_hz: 0.3 * fs,
                    level: 10.0,
                },
                Subband {
                    start_hz: 0.3 * fs,
                    stop_hz: 0.55 * fs,
                    level: 0.0,
                },
                Subband {
                    start_hz: 0.55 * fs,
                    stop_hz: fs,
                    level: 10.0,
                },
            ],
        }
    }
}

impl SceneSection {
    pub fn plan(&self) -> crate::Result<SubbandPlan> {
        SubbandPlan::new(self.bands.clone(), self.sample_rate_hz)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let err = |k: &str, m: &str| ConfigError::Key {
            key: format!("scene.{k}"),
            message: m.to_string(),
        };
        if self.n_samples == 0 {
            return Err(err("n_samples", "must be at least 1"));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(err("sample_rate_hz", "must be positive"));
        }
        match self.kind {
            SceneKind::Tone => {
                if !(self.tone_freq_hz.abs() < self.sample_rate_hz / 2.0) {
                    return Err(err("tone_freq_hz", "must lie inside (-fs/2, fs/2)"));
                }
                if !self.snr_db.is_finite() {
                    return Err(err("snr_db", "must be finite"));
                }
            }
            SceneKind::Wideband => {
                if self.n_samples < 64 {
                    return Err(err("n_samples", "wideband scenes need at least 64 samples"));
                }
                self.plan().map_err(|e| key_error("scene", e))?;
            }
            SceneKind::Noise => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Set from the subcommand; recorded in the sidecar.
    pub experiment: Option<String>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub detector: DetectorConfig,
    pub channel: ChannelSection,
    pub wavelet: WaveletConfig,
    pub router: RouterConfig,
    pub harness: HarnessSection,
    pub scene: SceneSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            master_seed: 1,
            output_dir: PathBuf::from("out"),
            detector: DetectorConfig::default(),
            channel: ChannelSection::default(),
            wavelet: WaveletConfig::default(),
            router: RouterConfig::default(),
            harness: HarnessSection::default(),
            scene: SceneSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.detector.validate().map_err(|e| key_error("detector", e))?;
        self.channel
            .spec(None, self.detector.noise_variance)
            .validate()
            .map_err(|e| key_error("channel", e))?;
        self.wavelet.validate().map_err(|e| key_error("wavelet", e))?;
        self.router.validate().map_err(|e| key_error("router", e))?;
        self.scene.validate()?;
        let h = &self.harness;
        let key = |k: &str, m: &str| ConfigError::Key {
            key: format!("harness.{k}"),
            message: m.to_string(),
        };
        if h.trials < 100 {
            return Err(key("trials", "must be at least 100"));
        }
        if h.snr_grid_db.is_empty() || h.snr_grid_db.iter().any(|s| s.is_nan() || *s == f64::INFINITY) {
            return Err(key("snr_grid_db", "must be a nonempty list of finite or -inf values"));
        }
        if h.fading_snr_grid_db.is_empty() || h.fading_snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(key("fading_snr_grid_db", "must be a nonempty list of finite values"));
        }
        if h.pfa_grid.is_empty()
            || h.pfa_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0))
            || h.pfa_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(key("pfa_grid", "must be strictly increasing inside (0, 1)"));
        }
        if h.roc_snr_db.is_nan() || h.roc_snr_db == f64::INFINITY {
            return Err(key("roc_snr_db", "must be finite or -inf"));
        }
        ChannelSpec {
            snr_db: None,
            noise_variance: 1.0,
            taps: h.fading_taps.clone(),
            fading: Fading::RayleighBlock,
        }
        .validate()
        .map_err(|e| key_error("harness.fading_taps", e))?;
        if h.calibration_n_grid.is_empty() || h.calibration_n_grid.contains(&0) {
            return Err(key("calibration_n_grid", "must be a nonempty list of positive counts"));
        }
        if h.calibration_pfa_grid.is_empty() || h.calibration_pfa_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(key("calibration_pfa_grid", "values must lie in (0, 1)"));
        }
        if h.calibration_trials < 10_000 {
            return Err(key("calibration_trials", "must be at least 10000"));
        }
        Ok(())
    }

    pub fn multiscale_settings(&self) -> MultiscaleSettings {
        MultiscaleSettings {
            n_samples: self.scene.n_samples,
            noise_variance: self.detector.noise_variance,
            welch: self.router.welch,
            wavelet: self.wavelet,
            noiseless: self.harness.multiscale_noiseless,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Apply one `dotted.key=value` override. Values parse as TOML, falling back
/// to a bare string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| ConfigError::Parse(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Parse(format!("override key `{key}` is malformed")));
    }
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry.as_table_mut().ok_or_else(|| ConfigError::Key {
            key: key.to_string(),
            message: format!("`{part}` is not a section"),
        })?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
