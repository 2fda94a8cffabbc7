use proptest::prelude::*;
use specsense::signals::{gen_awgn, SampleBuffer, SimRng};
use specsense::spectral::*;
use specsense::Complex64;

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

fn buffer() -> impl Strategy<Value = Vec<Complex64>> {
    (0u32..=10).prop_flat_map(|p| {
        prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3).prop_map(|(re, im)| Complex64::new(re, im)), 1usize << p)
    })
}

proptest! {
    #[test]
    fn parseval(x in buffer()) {
        let time: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let freq: f64 = fft(&x).unwrap().iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
        prop_assert!((time - freq).abs() <= 1e-9 * time.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn inverse_undoes_forward(x in buffer()) {
        let back = ifft(&fft(&x).unwrap()).unwrap();
        let scale = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn welch_ignores_phase_rotation(seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
        let x = gen_awgn(4096, 1.0, 1.0, &mut SimRng::new(seed)).unwrap();
        let rot = Complex64::from_polar(1.0, theta);
        let y = SampleBuffer::new(x.samples().iter().map(|v| v * rot).collect(), 1.0).unwrap();
        let cfg = WelchConfig::default();
        let (a, b) = (cfg.estimate(&x).unwrap(), cfg.estimate(&y).unwrap());
        for (u, v) in a.values().iter().zip(b.values()) {
            prop_assert!((u - v).abs() <= 1e-9 * u.max(1e-300));
        }
    }

    #[test]
    fn periodogram_mean_is_power(x in buffer()) {
        let b = SampleBuffer::new(x, 1.0).unwrap();
        let p = periodogram(&b).unwrap();
        prop_assert!((p.mean() - b.power()).abs() <= 1e-9 * b.power().max(1e-300));
    }
}

#[test]
fn fft_matches_direct_dft() {
    let mut rng = SimRng::new(3);
    for p in 0..=6 {
        let x = gen_awgn(1 << p, 1.0, 1.0, &mut rng).unwrap();
        let fast = fft(x.samples()).unwrap();
        let slow = dft(x.samples());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() <= 1e-9 * b.norm().max(1.0), "n={}", 1 << p);
        }
    }
}

#[test]
fn degenerate_welch_is_the_periodogram() {
    let x = gen_awgn(2048, 3.0, 5.0, &mut SimRng::new(8)).unwrap();
    let w = welch(&x, WindowSpec::new(WindowKind::Rectangular, 2048).unwrap(), 0.0, 1).unwrap();
    let p = periodogram(&x).unwrap();
    assert_eq!(w.values(), p.values());
    assert_eq!(w.n_segments_averaged(), 1);
}

fn bin_variance(n: usize) -> f64 {
    let cfg = WelchConfig::default();
    let runs: Vec<Vec<f64>> = (0..200)
        .map(|s| cfg.estimate(&gen_awgn(n, 1.0, 1.0, &mut SimRng::new(s)).unwrap()).unwrap().values().to_vec())
        .collect();
    let bins = runs[0].len();
    (0..bins)
        .map(|k| {
            let m = runs.iter().map(|r| r[k]).sum::<f64>() / 200.0;
            runs.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / 199.0
        })
        .sum::<f64>()
        / bins as f64
}

#[test]
fn averaging_reduces_variance() {
    let one = bin_variance(1024);
    let few = bin_variance(16384);
    let many = bin_variance(65536);
    assert!(many < few && few < one);
    assert!(many <= one / 50.0, "{many} vs {one}");
}
