//! CFAR threshold check: empirical false-alarm rate over H0 trials for a
//! grid of window lengths and targets.

use specsense::energy::{cfar_threshold, DetectorConfig};
use specsense::harness::run_cfar_calibration;
use specsense::signals::SimRng;

fn main() -> specsense::Result<()> {
    let n_grid = [1, 16, 256, 1024];
    let pfa_grid = [0.01, 0.1, 0.5];

    println!("threshold / sigma^2:");
    for n in n_grid {
        let row: Vec<String> = pfa_grid
            .iter()
            .map(|&p| {
                let cfg = DetectorConfig {
                    n_samples: n,
                    target_pfa: p,
                    ..DetectorConfig::default()
                };
                format!("{:>10.3}", cfar_threshold(&cfg).unwrap())
            })
            .collect();
        println!("  N={n:<5}{}", row.join(""));
    }

    let rows = run_cfar_calibration(&n_grid, &pfa_grid, 1.0, 100_000, &SimRng::new(1))?;
    println!("\n{:>6} {:>8} {:>10} {:>9}  ok", "N", "target", "empirical", "3sigma");
    for r in rows {
        println!(
            "{:>6} {:>8} {:>10.5} {:>9.5}  {}",
            r.n_samples, r.pfa_target, r.pfa_empirical, r.ci_halfwidth, r.within_ci
        );
    }
    Ok(())
}
