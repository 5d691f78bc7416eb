use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use tsfct::signals::{
    decimate, forward_transform, inverse_transform, synth_paper_y, synth_signal, synth_spectrum, Amplitude,
    Benchmark, ModeSpec, Phase, SampledSignal, Spectrum,
};

#[test]
fn paper_x_crosses_at_the_stated_point() {
    let m = Benchmark::PaperX.modes();
    assert!((m[0].phase_d1(256.0) - 0.2536).abs() < 1e-12);
    assert!((m[1].phase_d1(256.0) - 0.2536).abs() < 1e-12);
    assert!((m[0].phase_d2(256.0) - 0.0006).abs() < 1e-15);
    assert!((m[1].phase_d2(256.0) + 0.0004).abs() < 1e-15);
}

#[test]
fn paper_y_derivatives_follow_the_stated_laws() {
    let m = Benchmark::PaperY.modes();
    for &eta in &[0.0, 64.0, 128.0, 200.0, 384.0] {
        let w = PI / 256.0;
        assert!((m[1].phase_d1(eta) - (0.2 * (w * eta).cos() + 0.25)).abs() < 1e-12);
        assert!((m[1].phase_d2(eta) + PI / 1280.0 * (w * eta).sin()).abs() < 1e-12);
        assert!((m[0].phase_d1(eta) - (-0.2 * (w * eta).cos() + 0.25)).abs() < 1e-12);
    }
    assert!((m[0].phase_d1(128.0) - 0.25).abs() < 1e-12);
    assert!((m[1].phase_d1(128.0) - 0.25).abs() < 1e-12);
}

#[test]
fn paper_y_spectrum_matches_its_modes() {
    let s = synth_paper_y(512, 2.0).unwrap();
    let m = Benchmark::PaperY.modes();
    for j in [0usize, 10, 128, 256] {
        let eta = 2.0 * j as f64;
        assert!((s.bins[j] - m[0].value(eta) - m[1].value(eta)).norm() < 1e-15);
    }
    assert!(s.bins[300].norm() == 0.0);
}

#[test]
fn benchmark_grid_is_512_samples_at_1024_hz() {
    for b in Benchmark::ALL {
        let s = b.signal();
        assert_eq!(s.len(), 512);
        assert_eq!(s.dt, 1.0 / 1024.0);
        assert_eq!(s.d_eta(), 2.0);
    }
}

#[test]
fn synthesized_samples_have_the_synthesized_dft() {
    let modes = Benchmark::PaperX.modes();
    let s = synth_signal(&modes, 512, 1.0 / 1024.0).unwrap();
    // direct DFT oracle
    for j in [3usize, 100, 128, 255] {
        let x: Complex64 = (0..512)
            .map(|k| s.samples[k] * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / 512.0))
            .sum();
        let eta = j as f64 * 2.0;
        let want = modes[0].value(eta) + modes[1].value(eta);
        assert!((x - want).norm() < 1e-12 * want.norm().max(1e-3), "bin {j}");
    }
}

#[test]
fn non_positive_amplitude_is_rejected() {
    let m = ModeSpec::new(Amplitude::Constant(0.0), Phase::Polynomial(vec![0.0]));
    assert!(synth_spectrum(&[m], 16, 1.0).is_err());
}

#[test]
fn decimation_passes_low_frequencies() {
    let dt = 1.0 / 8000.0;
    let v: Vec<f64> = (0..4000).map(|k| (2.0 * PI * 100.0 * k as f64 * dt).sin()).collect();
    let s = SampledSignal::from_real(&v, dt, 0.0).unwrap();
    let d = decimate(&s, 4).unwrap();
    for (i, z) in d.samples.iter().enumerate().skip(20).take(900) {
        let want = (2.0 * PI * 100.0 * d.time(i)).sin();
        assert!((z.re - want).abs() < 5e-3, "{i}: {} vs {want}", z.re);
    }
}

fn modes_strategy() -> impl Strategy<Value = Vec<ModeSpec>> {
    prop::collection::vec((1e-5f64..1e-4, 50.0f64..450.0, 0.0f64..0.5, -1e-3f64..1e-3), 1..4).prop_map(|v| {
        v.into_iter()
            .map(|(a, c, d, r)| {
                ModeSpec::new(Amplitude::GaussianBump { a, center: c }, Phase::Polynomial(vec![0.0, d, 0.5 * r]))
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesis_is_linear_in_the_mode_list(a in modes_strategy(), b in modes_strategy()) {
        let sa = synth_spectrum(&a, 256, 2.0).unwrap();
        let sb = synth_spectrum(&b, 256, 2.0).unwrap();
        let all: Vec<ModeSpec> = a.iter().chain(&b).cloned().collect();
        let s = synth_spectrum(&all, 256, 2.0).unwrap();
        for j in 0..256 {
            let sum = sa.bins[j] + sb.bins[j];
            prop_assert!((s.bins[j] - sum).norm() <= 4.0 * f64::EPSILON * (sa.bins[j].norm() + sb.bins[j].norm()));
        }
    }

    #[test]
    fn transform_round_trip(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..4096)) {
        let samples: Vec<Complex64> = v.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let spec = Spectrum { bins: samples.clone(), d_eta: 1.5 };
        let back = forward_transform(&inverse_transform(&spec, 0.0).unwrap());
        let scale = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (x, y) in back.bins.iter().zip(&samples) {
            prop_assert!((x - y).norm() <= 1e-12 * scale.max(1e-300) * (samples.len() as f64).log2().max(1.0));
        }
    }

    #[test]
    fn decimation_steps_compose(a in 1usize..5, b in 1usize..5, n in 64usize..400) {
        let s = SampledSignal::from_real(&vec![1.0; n], 1e-3, 0.0).unwrap();
        let two = decimate(&decimate(&s, a).unwrap(), b);
        let one = decimate(&s, a * b);
        if let (Ok(x), Ok(y)) = (two, one) {
            prop_assert!((x.dt - y.dt).abs() < 1e-18);
        }
    }
}
