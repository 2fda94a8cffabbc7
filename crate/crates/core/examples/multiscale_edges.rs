//! Wavelet transforms of a Welch PSD at three dyadic scales, their product,
//! and the detected band edges.
//!
//! Pass an output path to also write every curve as CSV.

use specsense::cli::Table;
use specsense::harness::{count_spurious_extrema, run_multiscale_demo, MultiscaleSettings};
use specsense::signals::{SimRng, SubbandPlan};
use specsense::wavelet::detect_occupancy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = SubbandPlan::from_fractions(&[0.0, 0.3, 0.55, 1.0], &[10.0, 0.0, 10.0], 1e6)?;
    let settings = MultiscaleSettings {
        n_samples: 512 * 63 + 1024,
        ..MultiscaleSettings::default()
    };
    let demo = run_multiscale_demo(&plan, &settings, &SimRng::new(5))?;

    println!("planted edges (Hz): {:?}", plan.level_changes_hz());
    println!("detected edges (Hz): {:?}", demo.edges.frequencies_hz());
    let df = demo.psd.bin_width_hz();
    let truth: Vec<usize> = plan.level_changes_hz().iter().map(|f| (f / df).round() as usize).collect();
    let frac = settings.wavelet.edge_threshold_fraction;
    for (j, w) in demo.transforms.iter().enumerate() {
        let abs: Vec<f64> = w.iter().map(|v| v.abs()).collect();
        println!("  spurious maxima, scale 2^{}: {}", j + 1, count_spurious_extrema(&abs, &truth, frac, 3));
    }
    let abs: Vec<f64> = demo.product.iter().map(|v| v.abs()).collect();
    println!("  spurious maxima, product:   {}", count_spurious_extrema(&abs, &truth, frac, 3));

    let (_, map) = detect_occupancy(&demo.psd, &settings.wavelet, settings.noise_variance)?;
    for s in &map.subbands {
        println!("  {:>9.0} .. {:>9.0} Hz  {:?}  mean {:.2}", s.start_hz, s.stop_hz, s.status, s.mean_psd_level);
    }

    if let Some(path) = std::env::args().nth(1) {
        let mut t = Table::new(["bin", "psd", "w1", "w2", "w3", "product"]);
        for k in 0..demo.psd.bins() {
            t.push([
                k as f64,
                demo.psd.values()[k],
                demo.transforms[0][k],
                demo.transforms[1][k],
                demo.transforms[2][k],
                demo.product[k],
            ]);
        }
        std::fs::write(&path, t.to_csv())?;
        println!("curves written to {path}");
    }
    Ok(())
}
