//! The full pipeline on three scenes: a tone, a multi-band wideband signal
//! and plain noise.

use specsense::energy::DetectorConfig;
use specsense::integrate::{integrated_sense, PathOutcome, RouterConfig};
use specsense::signals::*;
use specsense::wavelet::WaveletConfig;

fn main() -> specsense::Result<()> {
    let fs = 1e6;
    let n = 65536;
    let mut rng = SimRng::new(2);
    let awgn = ChannelSpec::awgn(None, 1.0);

    let tone = gen_narrowband(0.15 * fs, n, 1.0, fs, &mut rng)?;
    let tone = apply_channel(&tone, &ChannelSpec::awgn(Some(10.0), 1.0), &mut rng)?;
    let plan = SubbandPlan::from_fractions(&[0.0, 0.1, 0.4, 0.6, 0.9, 1.0], &[0.0, 9.0, 0.0, 9.0, 0.0], fs)?;
    let wide = apply_channel(&gen_wideband(&plan, n, &mut rng)?, &awgn, &mut rng)?;
    let noise = gen_awgn(n, 1.0, fs, &mut rng)?;

    let detector = DetectorConfig::default();
    let wavelet = WaveletConfig::default();
    let router = RouterConfig::default();
    for (name, x) in [("tone", &tone), ("two bands", &wide), ("noise", &noise)] {
        let r = integrated_sense(x, &detector, &wavelet, &router)?;
        println!(
            "{name}: {:?}, occupied fraction {:.3}, {:?}",
            r.class.class,
            r.class.occupied_fraction,
            r.path()
        );
        match &r.outcome {
            PathOutcome::Energy { band, bins, decision } => println!(
                "  band {:.0}..{:.0} Hz ({bins} bins): T = {:.1}, lambda = {:.1} -> {:?}",
                band.lo_hz, band.hi_hz, decision.statistic, decision.threshold, decision.hypothesis
            ),
            PathOutcome::Wavelet { edges, occupancy } => {
                println!("  edges (Hz): {:?}", edges.frequencies_hz());
                for s in &occupancy.subbands {
                    println!("  {:>9.0} .. {:>9.0} Hz  {:?}", s.start_hz, s.stop_hz, s.status);
                }
            }
        }
    }
    Ok(())
}
