//! Pd against Pfa at a fixed SNR, with an amplitude-0 control that should
//! sit on the diagonal.

use specsense::energy::DetectorConfig;
use specsense::harness::run_roc;
use specsense::signals::{ChannelSpec, SimRng};

fn main() -> specsense::Result<()> {
    let grid = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    let detector = DetectorConfig::default();
    let channel = ChannelSpec::awgn(None, 1.0);
    let rng = SimRng::new(3);
    for snr in [-12.0, -5.0, f64::NEG_INFINITY] {
        let roc = run_roc(&grid, snr, &detector, &channel, 10_000, &rng)?;
        println!("SNR {snr} dB");
        for p in roc.points {
            println!("  pfa {:<5} (empirical {:.4})  pd {:.4}", p.pfa_target, p.pfa_empirical, p.pd_hat);
        }
    }
    Ok(())
}
