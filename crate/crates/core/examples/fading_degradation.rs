//! Pd in flat AWGN against a two-tap block Rayleigh channel.

use specsense::energy::DetectorConfig;
use specsense::harness::{default_fading_taps, run_fading_comparison};
use specsense::signals::SimRng;

fn main() -> specsense::Result<()> {
    let grid: Vec<f64> = (-10..=0).step_by(2).map(f64::from).collect();
    let cmp = run_fading_comparison(&DetectorConfig::default(), &grid, &default_fading_taps(), 10_000, &SimRng::new(11))?;
    println!("taps: {:?}", cmp.taps);
    println!("{:>7} {:>8} {:>9}", "SNR dB", "AWGN", "Rayleigh");
    for (a, r) in cmp.awgn.iter().zip(&cmp.rayleigh) {
        println!("{:>7} {:>8.4} {:>9.4}", a.snr_db, a.pd_hat, r.pd_hat);
    }
    Ok(())
}
