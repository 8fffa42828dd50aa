mod common;

use common::{estimate_probe, observed_width, resonance_field, ESTIMATE_BIAS};
use scanscope_core::spectrum::SpectrumMeta;
use scanscope_core::{
    add_shot_noise, fit_lorentzian, sweep, NoiseSpec, Sample, Spectrum, SweepMode, SweepSpec, Vec3,
};

fn flat(mean: f64, n: usize, stream: u64) -> Spectrum {
    let meta = SpectrumMeta {
        mode: SweepMode::FrequencySweep,
        probe_id: "flat".into(),
        sample_hash: 0,
        seed: None,
        stream,
        dwell_time: 1.0,
    };
    Spectrum::new((0..n).map(|i| i as f64).collect(), vec![mean; n], meta).unwrap()
}

fn moments(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var)
}

#[test]
fn poisson_moments_across_means() {
    for (mean, seed) in [(3.0, 1), (50.0, 2), (1e4, 3)] {
        let noise = NoiseSpec {
            enabled: true,
            rng_seed: seed,
            photon_rate_scale: 1.0,
        };
        let draws = add_shot_noise(&flat(mean, 10_000, 5), &noise).unwrap();
        assert!(draws
            .intensity()
            .iter()
            .all(|&c| c >= 0.0 && c.fract() == 0.0));
        let (m, var) = moments(draws.intensity());
        // 4σ on the sample mean, 5% on the variance
        assert!(
            (m - mean).abs() <= 4.0 * (mean / 1e4).sqrt(),
            "mean {m} for {mean}"
        );
        assert!(
            (var - mean).abs() <= 0.05 * mean + 4.0 * mean * (2.0f64 / 1e4).sqrt(),
            "var {var}"
        );
    }
}

#[test]
fn detection_efficiency_scales_the_mean() {
    let noise = NoiseSpec {
        enabled: true,
        rng_seed: 4,
        photon_rate_scale: 0.25,
    };
    let draws = add_shot_noise(&flat(400.0, 10_000, 9), &noise).unwrap();
    let (m, var) = moments(draws.intensity());
    assert!((m - 100.0).abs() < 0.5, "mean {m}");
    assert!((var - 100.0).abs() < 6.0, "variance {var}");
}

#[test]
fn streams_and_seeds_are_independent() {
    let noise = |seed| NoiseSpec {
        enabled: true,
        rng_seed: seed,
        photon_rate_scale: 1.0,
    };
    let a = add_shot_noise(&flat(100.0, 64, 1), &noise(1)).unwrap();
    let b = add_shot_noise(&flat(100.0, 64, 1), &noise(1)).unwrap();
    let c = add_shot_noise(&flat(100.0, 64, 2), &noise(1)).unwrap();
    let d = add_shot_noise(&flat(100.0, 64, 1), &noise(2)).unwrap();
    assert_eq!(a.intensity(), b.intensity());
    assert_ne!(a.intensity(), c.intensity());
    assert_ne!(a.intensity(), d.intensity());
}

#[test]
fn center_error_shrinks_as_inverse_root_dwell() {
    let probe = estimate_probe();
    let sample = Sample::empty(Vec3::Z * ESTIMATE_BIAS);
    let width = observed_width(&probe);
    let rms = |dwell: f64| {
        let spec = SweepSpec::centered(
            SweepMode::FieldSweep,
            resonance_field(&probe),
            4.0 * width,
            81,
            dwell,
        );
        let clean = sweep(&sample, &probe, &spec, Vec3::ZERO).unwrap();
        let truth = fit_lorentzian(&clean, None).unwrap().center;
        let sq: f64 = (1000..1200)
            .map(|seed| {
                let noise = NoiseSpec {
                    enabled: true,
                    rng_seed: seed,
                    photon_rate_scale: 1.0,
                };
                let fit = fit_lorentzian(&add_shot_noise(&clean, &noise).unwrap(), None).unwrap();
                (fit.center - truth).powi(2)
            })
            .sum();
        (sq / 200.0).sqrt()
    };
    let ratio = rms(2e-3) / rms(8e-3);
    assert!((ratio - 2.0).abs() <= 0.3, "ratio {ratio}");
}
