//! The `specsense` command line.
//!
//! ```text
//! specsense <subcommand> --config <path> [--seed U64] [--out DIR] [--set key=value ...]
//! ```
//!
//! Subcommands: `snr-sweep`, `roc`, `fading`, `edges`, `calibrate`, `synth`
//! and `sense` (the last two also take `--iq <path>`). Exit codes: 0 success,
//! 1 invalid configuration or input, 2 I/O failure, 3 calibration rows outside
//! their interval.

pub mod config;
pub mod iq;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{ConfigError, RunConfig, SceneKind};
pub use iq::{IqError, IqRecording};
pub use output::Table;

use crate::energy::Hypothesis;
use crate::harness::{self, PdEstimate};
use crate::integrate::{integrated_sense, PathOutcome, SensingPath, SensingReport};
use crate::signals::{apply_channel, gen_narrowband, gen_wideband, SampleBuffer, SimRng};
use crate::spectral::PsdEstimate;
use crate::wavelet::Occupancy;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("I/O failure: {0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub const EXIT_CALIBRATION_FAILURE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "specsense", version, about = "Spectrum sensing experiments and IQ analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed, overrides `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `dotted.key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct IqArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// IQ recording to read (`sense`) or write (`synth`).
    #[arg(long)]
    pub iq: PathBuf,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Detection probability against SNR.
    SnrSweep(CommonArgs),
    /// Detection probability against false-alarm target.
    Roc(CommonArgs),
    /// Pd against SNR through AWGN and block Rayleigh channels.
    Fading(CommonArgs),
    /// Multiscale wavelet curves and edges for the configured scene.
    Edges(CommonArgs),
    /// CFAR false-alarm calibration sweep.
    Calibrate(CommonArgs),
    /// Synthesize the configured scene into an IQ recording.
    Synth(IqArgs),
    /// Run the integrated sensing pipeline on an IQ recording.
    Sense(IqArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SnrSweep(_) => "snr_sweep",
            Command::Roc(_) => "roc",
            Command::Fading(_) => "fading",
            Command::Edges(_) => "edges",
            Command::Calibrate(_) => "calibrate",
            Command::Synth(_) => "synth",
            Command::Sense(_) => "sense",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::SnrSweep(c) | Command::Roc(c) | Command::Fading(c) | Command::Edges(c) | Command::Calibrate(c) => c,
            Command::Synth(a) | Command::Sense(a) => &a.common,
        }
    }
}

/// Files a command produced, plus its exit status once written.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub exit_code: i32,
    pub summary: String,
}

/// Load the config named by the command and apply flag overrides.
pub fn resolve_config(command: &Command) -> Result<RunConfig, CliError> {
    let args = command.common();
    let mut config = RunConfig::load(&args.config, &args.set)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    config.experiment = Some(command.name().to_string());
    Ok(config)
}

/// Entry point used by the binary. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            if let Err(e) = output::write_all_or_nothing(&out.files) {
                eprintln!("error: I/O failure: {e}");
                return CliError::Io(e.to_string()).exit_code();
            }
            println!("{}", out.summary);
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a command and return its outputs without touching the filesystem
/// (except reading the config and, for `sense`, the recording).
pub fn execute(command: &Command) -> Result<CommandOutput, CliError> {
    let config = resolve_config(command)?;
    let out_dir = config.output_dir.clone();
    let rng = SimRng::new(config.master_seed);
    let name = command.name();
    let mut out = match command {
        Command::SnrSweep(_) => cmd_snr_sweep(&config, &rng, &out_dir)?,
        Command::Roc(_) => cmd_roc(&config, &rng, &out_dir)?,
        Command::Fading(_) => cmd_fading(&config, &rng, &out_dir)?,
        Command::Edges(_) => cmd_edges(&config, &rng, &out_dir)?,
        Command::Calibrate(_) => cmd_calibrate(&config, &rng, &out_dir)?,
        Command::Synth(a) => cmd_synth(&config, &a.iq)?,
        Command::Sense(a) => cmd_sense(&config, &a.iq, &out_dir)?,
    };
    let meta_path = match command {
        Command::Synth(a) => sidecar_path(&a.iq, "meta.toml"),
        _ => out_dir.join(format!("{name}.meta.toml")),
    };
    out.files.push((meta_path, config.to_toml().into_bytes()));
    Ok(out)
}

fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn pd_table(estimates: &[PdEstimate]) -> Table {
    let mut t = Table::new(["snr_db", "pd_hat", "ci", "trials"]);
    for e in estimates {
        t.push([e.snr_db.to_string(), e.pd_hat.to_string(), e.ci_halfwidth.to_string(), e.trials.to_string()]);
    }
    t
}

fn channel(config: &RunConfig) -> crate::signals::ChannelSpec {
    config.channel.spec(None, config.detector.noise_variance)
}

pub fn cmd_snr_sweep(config: &RunConfig, rng: &SimRng, out_dir: &Path) -> Result<CommandOutput, CliError> {
    let h = &config.harness;
    let pd = harness::run_pd_vs_snr(&h.snr_grid_db, &config.detector, &channel(config), h.trials, rng)?;
    Ok(CommandOutput {
        files: vec![(out_dir.join("pd_vs_snr.csv"), pd_table(&pd).to_csv())],
        exit_code: 0,
        summary: format!("pd_vs_snr: {} points, {} trials each", pd.len(), h.trials),
    })
}

pub fn cmd_roc(config: &RunConfig, rng: &SimRng, out_dir: &Path) -> Result<CommandOutput, CliError> {
    let h = &config.harness;
    let roc = harness::run_roc(&h.pfa_grid, h.roc_snr_db, &config.detector, &channel(config), h.trials, rng)?;
    let mut t = Table::new(["pfa_target", "pfa_empirical", "pfa_ci", "pd_hat", "pd_ci", "trials"]);
    for p in &roc.points {
        t.push([
            p.pfa_target.to_string(),
            p.pfa_empirical.to_string(),
            p.pfa_ci.to_string(),
            p.pd_hat.to_string(),
            p.pd_ci.to_string(),
            p.trials.to_string(),
        ]);
    }
    Ok(CommandOutput {
        files: vec![(out_dir.join("roc.csv"), t.to_csv())],
        exit_code: 0,
        summary: format!("roc: {} points at {} dB", roc.points.len(), roc.snr_db),
    })
}

pub fn cmd_fading(config: &RunConfig, rng: &SimRng, out_dir: &Path) -> Result<CommandOutput, CliError> {
    let h = &config.harness;
    let cmp = harness::run_fading_comparison(&config.detector, &h.fading_snr_grid_db, &h.fading_taps, h.trials, rng)?;
    Ok(CommandOutput {
        files: vec![
            (out_dir.join("pd_awgn.csv"), pd_table(&cmp.awgn).to_csv()),
            (out_dir.join("pd_rayleigh.csv"), pd_table(&cmp.rayleigh).to_csv()),
        ],
        exit_code: 0,
        summary: format!("fading: {} SNR points", cmp.awgn.len()),
    })
}

pub fn cmd_edges(config: &RunConfig, rng: &SimRng, out_dir: &Path) -> Result<CommandOutput, CliError> {
    let plan = config.scene.plan()?;
    let demo = harness::run_multiscale_demo(&plan, &config.multiscale_settings(), rng)?;
    let mut header = vec!["bin".to_string(), "freq_hz".into(), "psd".into()];
    header.extend((1..=demo.transforms.len()).map(|j| format!("w{j}")));
    header.push("product".into());
    let mut curves = Table::new(header);
    for k in 0..demo.psd.bins() {
        let mut row = vec![
            k.to_string(),
            demo.psd.bin_frequency_hz(k).to_string(),
            demo.psd.values()[k].to_string(),
        ];
        row.extend(demo.transforms.iter().map(|w| w[k].to_string()));
        row.push(demo.product[k].to_string());
        curves.push(row);
    }
    let mut edges = Table::new(["bin", "freq_hz", "magnitude"]);
    for e in &demo.edges.edges {
        edges.push([e.bin.to_string(), e.freq_hz.to_string(), e.magnitude.to_string()]);
    }
    Ok(CommandOutput {
        files: vec![
            (out_dir.join("multiscale.csv"), curves.to_csv()),
            (out_dir.join("edges.csv"), edges.to_csv()),
        ],
        exit_code: 0,
        summary: format!("edges: {} detected", demo.edges.len()),
    })
}

pub fn cmd_calibrate(config: &RunConfig, rng: &SimRng, out_dir: &Path) -> Result<CommandOutput, CliError> {
    let h = &config.harness;
    let rows = harness::run_cfar_calibration(
        &h.calibration_n_grid,
        &h.calibration_pfa_grid,
        config.detector.noise_variance,
        h.calibration_trials,
        rng,
    )?;
    let mut t = Table::new(["n_samples", "pfa_target", "pfa_empirical", "ci", "trials", "within_ci"]);
    for r in &rows {
        t.push([
            r.n_samples.to_string(),
            r.pfa_target.to_string(),
            r.pfa_empirical.to_string(),
            r.ci_halfwidth.to_string(),
            r.trials.to_string(),
            r.within_ci.to_string(),
        ]);
    }
    let failures = rows.iter().filter(|r| !r.within_ci).count();
    Ok(CommandOutput {
        files: vec![(out_dir.join("calibration.csv"), t.to_csv())],
        exit_code: if failures > 0 { EXIT_CALIBRATION_FAILURE } else { 0 },
        summary: format!("calibration: {} rows, {failures} outside CI", rows.len()),
    })
}

/// Planted truth written next to a synthesized recording.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct GroundTruth {
    pub kind: SceneKind,
    pub seed: u64,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub noise_variance: f64,
    pub snr_db: Option<f64>,
    pub tone_freq_hz: Option<f64>,
    pub expected_path: SensingPath,
    pub expected_hypothesis: Option<Hypothesis>,
    pub occupancy: Vec<TruthBand>,
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct TruthBand {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub status: Occupancy,
}

/// Synthesize the configured scene through the configured channel.
pub fn synthesize(config: &RunConfig) -> Result<(SampleBuffer, GroundTruth), CliError> {
    let scene = &config.scene;
    let sigma2 = config.detector.noise_variance;
    let mut rng = SimRng::new(config.master_seed).substream("synth", 0);
    let fs = scene.sample_rate_hz;
    let (buffer, truth) = match scene.kind {
        SceneKind::Tone => {
            let s = gen_narrowband(scene.tone_freq_hz, scene.n_samples, 1.0, fs, &mut rng)?;
            let ch = config.channel.spec(Some(scene.snr_db), sigma2);
            let x = apply_channel(&s, &ch, &mut rng)?;
            let truth = GroundTruth {
                snr_db: Some(scene.snr_db),
                tone_freq_hz: Some(scene.tone_freq_hz),
                expected_path: SensingPath::EnergyPath,
                expected_hypothesis: Some(Hypothesis::H1),
                occupancy: Vec::new(),
                ..base_truth(config)
            };
            (x, truth)
        }
        SceneKind::Wideband => {
            let plan = scene.plan()?;
            let s = gen_wideband(&plan, scene.n_samples, &mut rng)?;
            let ch = config.channel.spec(None, sigma2);
            let x = apply_channel(&s, &ch, &mut rng)?;
            let mut occupancy: Vec<TruthBand> = Vec::new();
            for b in &plan.bands {
                let status = if b.level > sigma2 * config.wavelet.occupancy_factor - sigma2 {
                    Occupancy::Occupied
                } else {
                    Occupancy::Vacant
                };
                match occupancy.last_mut() {
                    Some(last) if last.status == status => last.stop_hz = b.stop_hz,
                    _ => occupancy.push(TruthBand {
                        start_hz: b.start_hz,
                        stop_hz: b.stop_hz,
                        status,
                    }),
                }
            }
            let truth = GroundTruth {
                expected_path: SensingPath::WaveletPath,
                occupancy,
                ..base_truth(config)
            };
            (x, truth)
        }
        SceneKind::Noise => {
            let s = SampleBuffer::zeros(scene.n_samples, fs)?;
            let x = apply_channel(&s, &config.channel.spec(None, sigma2), &mut rng)?;
            let truth = GroundTruth {
                occupancy: vec![TruthBand {
                    start_hz: 0.0,
                    stop_hz: fs,
                    status: Occupancy::Vacant,
                }],
                ..base_truth(config)
            };
            (x, truth)
        }
    };
    Ok((buffer, truth))
}

fn base_truth(config: &RunConfig) -> GroundTruth {
    GroundTruth {
        kind: config.scene.kind,
        seed: config.master_seed,
        n_samples: config.scene.n_samples,
        sample_rate_hz: config.scene.sample_rate_hz,
        noise_variance: config.detector.noise_variance,
        snr_db: None,
        tone_freq_hz: None,
        expected_path: SensingPath::WaveletPath,
        expected_hypothesis: None,
        occupancy: Vec::new(),
    }
}

pub fn cmd_synth(config: &RunConfig, iq_path: &Path) -> Result<CommandOutput, CliError> {
    let (buffer, truth) = synthesize(config)?;
    let recording = IqRecording::from_buffer(&buffer);
    let truth_text = toml::to_string(&truth).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(CommandOutput {
        files: vec![
            (iq_path.to_path_buf(), recording.to_bytes()),
            (sidecar_path(iq_path, "truth.toml"), truth_text.into_bytes()),
        ],
        exit_code: 0,
        summary: format!("synth: {} samples written to {}", buffer.len(), iq_path.display()),
    })
}

pub fn read_recording(path: &Path) -> Result<SampleBuffer, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rec = IqRecording::from_bytes(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    rec.to_buffer().map_err(|e| CliError::Input(e.to_string()))
}

/// Structured-text rendering of a [`SensingReport`].
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ReportFile {
    pub path: SensingPath,
    pub class: crate::integrate::BandClass,
    pub occupied_bandwidth_hz: f64,
    pub occupied_fraction: f64,
    pub welch_segments: usize,
    pub decision: Option<DecisionFile>,
    pub edges_hz: Vec<f64>,
    pub subbands: Vec<crate::wavelet::OccupancySubband>,
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct DecisionFile {
    pub hypothesis: Hypothesis,
    pub statistic: f64,
    pub threshold: f64,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub band_bins: usize,
}

impl ReportFile {
    pub fn from_report(report: &SensingReport) -> Self {
        let (decision, edges_hz, subbands) = match &report.outcome {
            PathOutcome::Energy { band, bins, decision } => (
                Some(DecisionFile {
                    hypothesis: decision.hypothesis,
                    statistic: decision.statistic,
                    threshold: decision.threshold,
                    band_lo_hz: band.lo_hz,
                    band_hi_hz: band.hi_hz,
                    band_bins: *bins,
                }),
                Vec::new(),
                Vec::new(),
            ),
            PathOutcome::Wavelet { edges, occupancy } => (None, edges.frequencies_hz(), occupancy.subbands.clone()),
        };
        Self {
            path: report.path(),
            class: report.class.class,
            occupied_bandwidth_hz: report.class.occupied_bandwidth_hz,
            occupied_fraction: report.class.occupied_fraction,
            welch_segments: report.psd.n_segments_averaged(),
            decision,
            edges_hz,
            subbands,
        }
    }
}

pub fn psd_table(psd: &PsdEstimate) -> Table {
    let mut t = Table::new(["bin", "freq_hz", "psd"]);
    for (k, v) in psd.values().iter().enumerate() {
        t.push([k.to_string(), psd.bin_frequency_hz(k).to_string(), v.to_string()]);
    }
    t
}

pub fn cmd_sense(config: &RunConfig, iq_path: &Path, out_dir: &Path) -> Result<CommandOutput, CliError> {
    let buffer = read_recording(iq_path)?;
    let report = integrated_sense(&buffer, &config.detector, &config.wavelet, &config.router)?;
    let file = ReportFile::from_report(&report);
    let text = toml::to_string(&file).map_err(|e| CliError::Input(e.to_string()))?;
    let verdict = match (&file.decision, file.subbands.len()) {
        (Some(d), _) => format!("{:?}", d.hypothesis),
        (None, n) => format!("{n} sub-bands"),
    };
    Ok(CommandOutput {
        files: vec![
            (out_dir.join("sense_report.toml"), text.into_bytes()),
            (out_dir.join("sense_psd.csv"), psd_table(&report.psd).to_csv()),
        ],
        exit_code: 0,
        summary: format!("sense: {:?}, {verdict}", file.path),
    })
}
