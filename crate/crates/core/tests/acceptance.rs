//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! ```text
//! cargo test -p specsense --test acceptance
//! ```

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use specsense::cli::{self, Command, CommonArgs, GroundTruth, IqArgs};
use specsense::energy::{DetectorConfig, Hypothesis};
use specsense::harness::*;
use specsense::integrate::{integrated_sense, RouterConfig, SensingPath, SensingReport};
use specsense::signals::*;
use specsense::spectral::*;
use specsense::wavelet::WaveletConfig;
use specsense::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("CFAR calibration", Some(120), cfar_calibration),
        ("Pd vs SNR", Some(120), pd_vs_snr),
        ("ROC", Some(120), roc),
        ("fading degradation", Some(180), fading),
        ("multiscale edges", Some(60), multiscale),
        ("spectral identities", None, spectral_identities),
        ("router end-to-end", None, router),
        ("reproducibility", None, reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let Some(limit) = budget {
            if elapsed > Duration::from_secs(*limit) {
                result.pass = false;
                result.detail.push_str(&format!("; over the {limit} s budget"));
            }
        }
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<22} {}  ({:.1} s) {}",
            i + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}

fn cfar_calibration() -> Outcome {
    let rows = run_cfar_calibration(&[1, 16, 256, 1024], &[0.01, 0.1, 0.5], 1.0, 100_000, &SimRng::new(1001)).unwrap();
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.within_ci)
        .map(|r| format!("N={} pfa={} got {}", r.n_samples, r.pfa_target, r.pfa_empirical))
        .collect();
    let worst = rows
        .iter()
        .map(|r| (r.pfa_empirical - r.pfa_target).abs() / r.ci_halfwidth)
        .fold(0.0, f64::max);
    outcome(
        rows.len() == 12 && bad.is_empty(),
        format!("12 cells, worst deviation {worst:.2} of the 3σ band{}", bad.iter().map(|b| format!("; {b}")).collect::<String>()),
    )
}

// Pd at Pfa 0.1, N = 1024, Gaussian signal: the H1 statistic is Gamma(N, 1 + SNR).
const PD_ORACLE: [(f64, f64); 5] = [
    (-20.0, 0.16866419929966633),
    (-15.0, 0.39076318442387153),
    (-10.0, 0.9608106474202458),
    (-5.0, 0.9999999999997675),
    (0.0, 1.0),
];

fn pd_vs_snr() -> Outcome {
    let grid: Vec<f64> = (-20..=0).map(f64::from).collect();
    let trials = 10_000;
    let pd = run_pd_vs_snr(&grid, &DetectorConfig::default(), &ChannelSpec::awgn(None, 1.0), trials, &SimRng::new(1002)).unwrap();
    let at = |snr: f64| pd.iter().find(|p| p.snr_db == snr).unwrap().pd_hat;
    let monotone = pd.windows(2).all(|w| w[0].pd_hat <= w[1].pd_hat);
    let oracle_ok = PD_ORACLE
        .iter()
        .all(|&(snr, p)| (at(snr) - p).abs() <= binomial_ci(p, trials) + 1.0 / trials as f64);
    outcome(
        at(-5.0) >= 0.99 && monotone && oracle_ok,
        format!(
            "pd(-5 dB) = {}, nondecreasing {monotone}, matches Gamma oracle {oracle_ok} (pd(-20 dB) = {})",
            at(-5.0),
            at(-20.0)
        ),
    )
}

fn roc() -> Outcome {
    let grid = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    let det = DetectorConfig::default();
    let awgn = ChannelSpec::awgn(None, 1.0);
    let rng = SimRng::new(1003);
    let curve = run_roc(&grid, -5.0, &det, &awgn, 10_000, &rng).unwrap();
    let monotone = curve.points.windows(2).all(|w| w[0].pd_hat <= w[1].pd_hat);
    let above = curve.points.iter().all(|p| p.pd_hat >= p.pfa_target);
    let control = run_roc(&grid, f64::NEG_INFINITY, &det, &awgn, 10_000, &rng).unwrap();
    let diagonal = control.points.iter().all(|p| (p.pd_hat - p.pfa_target).abs() <= p.pfa_ci);
    outcome(
        monotone && above && diagonal,
        format!("nondecreasing {monotone}, pd >= pfa {above}, amplitude-0 control on diagonal {diagonal}"),
    )
}

fn fading() -> Outcome {
    let grid: Vec<f64> = (-10..=0).map(f64::from).collect();
    let trials = 10_000;
    let cmp = run_fading_comparison(&DetectorConfig::default(), &grid, &default_fading_taps(), trials, &SimRng::new(1004)).unwrap();
    let slack = |a: &PdEstimate, r: &PdEstimate| a.ci_halfwidth + r.ci_halfwidth + 1.0 / trials as f64;
    let ok = cmp.awgn.iter().zip(&cmp.rayleigh).all(|(a, r)| r.pd_hat <= a.pd_hat + slack(a, r));
    let gap = cmp
        .awgn
        .iter()
        .zip(&cmp.rayleigh)
        .map(|(a, r)| a.pd_hat - r.pd_hat)
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(ok, format!("Rayleigh <= AWGN + CI at all {} points, largest loss {gap:.3}", grid.len()))
}

// 64 Hann segments of 1024 at half overlap.
const N64: usize = 512 * 63 + 1024;

fn multiscale() -> Outcome {
    let plan = SubbandPlan::from_fractions(&[0.0, 0.3, 0.55, 1.0], &[10.0, 0.0, 10.0], 1e6).unwrap();
    let settings = MultiscaleSettings {
        n_samples: N64,
        ..MultiscaleSettings::default()
    };
    let df = plan.total_bandwidth_hz / settings.welch.segment_len as f64;
    let truth: Vec<usize> = plan.level_changes_hz().iter().map(|f| (f / df).round() as usize).collect();
    let fraction = settings.wavelet.edge_threshold_fraction;
    let (mut located, mut fewer) = (0, 0);
    for seed in 0..100 {
        let demo = run_multiscale_demo(&plan, &settings, &SimRng::new(5000 + seed)).unwrap();
        let found = demo.edges.bins();
        if truth.iter().all(|t| found.iter().any(|e| e.abs_diff(*t) <= 3)) {
            located += 1;
        }
        let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
        let spurious_j1 = count_spurious_extrema(&abs(&demo.transforms[0]), &truth, fraction, 3);
        let spurious_prod = count_spurious_extrema(&abs(&demo.product), &truth, fraction, 3);
        if spurious_prod < spurious_j1 {
            fewer += 1;
        }
    }
    outcome(
        located == 100 && fewer >= 90 && truth.len() == 2,
        format!("edges at bins {truth:?} located in {located}/100, product has fewer spurious extrema in {fewer}/100"),
    )
}

fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| v * Complex64::from_polar(1.0, -std::f64::consts::TAU * ((k * t) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

fn spectral_identities() -> Outcome {
    let mut rng = SimRng::new(1006);
    let mut worst_parseval: f64 = 0.0;
    for i in 0..1000u32 {
        let n = 1usize << (i % 13);
        let x = gen_awgn(n, 1.0 + f64::from(i), 1.0, &mut rng).unwrap();
        let time = x.energy();
        let freq = fft(x.samples()).unwrap().iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        worst_parseval = worst_parseval.max((time - freq).abs() / time);
    }
    let x = gen_awgn(4096, 2.0, 1.0, &mut rng).unwrap();
    let degenerate = welch(&x, WindowSpec::new(WindowKind::Rectangular, 4096).unwrap(), 0.0, 1).unwrap();
    let identical = degenerate.values() == periodogram(&x).unwrap().values();
    let mut worst_dft: f64 = 0.0;
    for p in 0..=6 {
        let x = gen_awgn(1 << p, 1.0, 1.0, &mut rng).unwrap();
        for (a, b) in fft(x.samples()).unwrap().iter().zip(dft(x.samples())) {
            worst_dft = worst_dft.max((a - b).norm() / b.norm().max(1.0));
        }
    }
    outcome(
        worst_parseval <= 1e-9 && identical && worst_dft <= 1e-9,
        format!("Parseval {worst_parseval:.1e}, degenerate Welch bit-identical {identical}, FFT vs DFT {worst_dft:.1e}"),
    )
}

fn sense(x: &SampleBuffer, c: f64) -> SensingReport {
    let det = DetectorConfig {
        noise_variance: c * c,
        ..DetectorConfig::default()
    };
    integrated_sense(&x.scaled(c), &det, &WaveletConfig::default(), &RouterConfig::default()).unwrap()
}

fn same_verdict(a: &SensingReport, b: &SensingReport) -> bool {
    a.path() == b.path()
        && a.decision().map(|d| d.hypothesis) == b.decision().map(|d| d.hypothesis)
        && a.occupancy().map(|m| m.statuses()) == b.occupancy().map(|m| m.statuses())
}

fn recovers(report: &SensingReport, truth: &GroundTruth) -> bool {
    let Some(map) = report.occupancy() else {
        return false;
    };
    let tol = 3.0 * report.psd.bin_width_hz();
    map.subbands.len() == truth.occupancy.len()
        && map.subbands.iter().zip(&truth.occupancy).all(|(s, t)| {
            s.status == t.status && (s.start_hz - t.start_hz).abs() <= tol && (s.stop_hz - t.stop_hz).abs() <= tol
        })
}

fn router() -> Outcome {
    let mut tone_config = cli::config::RunConfig::default();
    tone_config.scene.kind = cli::SceneKind::Tone;
    tone_config.scene.snr_db = 10.0;
    let wide_config = cli::config::RunConfig::default();
    let (mut tone_hits, mut wide_hits, mut invariant) = (0, 0, true);
    for seed in 0..100 {
        for (config, hits) in [(&tone_config, &mut tone_hits), (&wide_config, &mut wide_hits)] {
            let config = cli::config::RunConfig {
                master_seed: 7000 + seed,
                ..config.clone()
            };
            let (x, truth) = cli::synthesize(&config).unwrap();
            let report = sense(&x, 1.0);
            let ok = match truth.expected_path {
                SensingPath::EnergyPath => {
                    report.path() == SensingPath::EnergyPath
                        && report.decision().map(|d| d.hypothesis) == Some(Hypothesis::H1)
                }
                SensingPath::WaveletPath => report.path() == SensingPath::WaveletPath && recovers(&report, &truth),
            };
            if ok {
                *hits += 1;
            }
            for c in [0.1, 10.0] {
                invariant &= same_verdict(&report, &sense(&x, c));
            }
        }
    }
    outcome(
        tone_hits >= 99 && wide_hits >= 90 && invariant,
        format!("tone EnergyPath+H1 {tone_hits}/100, planted occupancy {wide_hits}/100, scale invariance {invariant}"),
    )
}

fn common(config: &Path, out: &Path) -> CommonArgs {
    CommonArgs {
        config: config.to_path_buf(),
        seed: Some(2024),
        out: Some(out.to_path_buf()),
        set: vec!["harness.trials=2000".into(), "harness.calibration_trials=10000".into()],
    }
}

fn csv_outputs(threads: usize) -> Vec<(PathBuf, Vec<u8>)> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml");
    let out = Path::new("repro");
    let commands = [
        Command::SnrSweep(common(&config, out)),
        Command::Roc(common(&config, out)),
        Command::Fading(common(&config, out)),
        Command::Edges(common(&config, out)),
        Command::Calibrate(common(&config, out)),
        Command::Synth(IqArgs {
            common: common(&config, out),
            iq: out.join("scene.iq"),
        }),
    ];
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        commands
            .iter()
            .flat_map(|c| cli::execute(c).unwrap().files)
            .filter(|(p, _)| p.extension().is_some_and(|e| e == "csv" || e == "iq"))
            .collect()
    })
}

fn reproducibility() -> Outcome {
    let serial = csv_outputs(1);
    let parallel = csv_outputs(8);
    let again = csv_outputs(8);
    let identical = serial == parallel && parallel == again;
    outcome(
        identical && serial.len() == 8,
        format!("{} output files, byte-identical across 1 and 8 worker threads and reruns: {identical}", serial.len()),
    )
}
