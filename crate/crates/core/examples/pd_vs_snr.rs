//! Detection probability against SNR for the energy detector in AWGN.

use specsense::energy::DetectorConfig;
use specsense::harness::run_pd_vs_snr;
use specsense::signals::{ChannelSpec, SimRng};

fn main() -> specsense::Result<()> {
    let detector = DetectorConfig {
        n_samples: 1024,
        target_pfa: 0.1,
        ..DetectorConfig::default()
    };
    let grid: Vec<f64> = (-20..=0).map(f64::from).collect();
    let curve = run_pd_vs_snr(&grid, &detector, &ChannelSpec::awgn(None, 1.0), 5000, &SimRng::new(7))?;
    for p in curve {
        let bar = "#".repeat((p.pd_hat * 50.0).round() as usize);
        println!("{:>6.1} dB  {:.4} ±{:.4}  {bar}", p.snr_db, p.pd_hat, p.ci_halfwidth);
    }
    Ok(())
}
