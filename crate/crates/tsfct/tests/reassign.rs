use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsfct::reassign::{
    high_order_cell, high_order_reference, reference_cell, reference_cell_cramer, theorem1_residuals,
};
use tsfct::signals::{synth_signal, Amplitude, LinearFdChirp, ModeSpec, Phase};
use tsfct::{fct_grid, fct_point, reference_functions, FctOptions, GammaGrid, GaussianWindow, SampledSignal, TfgddGrid};

const DT: f64 = 1.0 / 512.0;

/// Linear chirp on 256 samples with a Gaussian envelope centred at 128 Hz.
fn chirp(c: f64, r: f64) -> Vec<ModeSpec> {
    vec![LinearFdChirp { p: -128.0 / 625.0, q: 1.0 / 625.0, c, r }.into()]
}

fn grids(s: &SampledSignal, w: &GaussianWindow, gg: &GammaGrid, count: u8) -> Vec<TfgddGrid> {
    (0..count).map(|m| fct_grid(s, w, gg, m, &FctOptions::default()).unwrap()).collect()
}

#[test]
fn linear_chirp_estimates_are_exact() {
    let (c, r) = (0.1, 0.0006);
    let s = synth_signal(&chirp(c, r), 256, DT).unwrap();
    let w = GaussianWindow::new(12.0).unwrap();
    let gg = GammaGrid::new(2e-3, 33).unwrap();
    let g = grids(&s, &w, &gg, 3);
    let f = reference_functions(&g[0], &g[1], &g[2], &w, 1e-3).unwrap();
    assert!(f.masked_count() > 1000);
    for j in 0..f.eta.len {
        let eta = f.eta.value(j);
        for l in 0..f.gamma.len {
            for n in 0..f.time.len {
                let i = f.index(n, j, l);
                if f.mask[i] {
                    assert!((f.t_hat[i] - (c + r * eta)).abs() < 1e-6, "{eta} {}", f.t_hat[i]);
                    assert!((f.r_hat[i] - r).abs() < 1e-6 * gg.d_gamma().max(1e-6));
                } else {
                    assert!(f.t_hat[i].is_nan());
                }
            }
        }
    }
    let res = theorem1_residuals(&f, &chirp(c, r), 0.05, 5e-4);
    for col in &res[0].columns {
        assert!(col.max_t_err < 1e-6 && col.max_r_err < 1e-9);
    }
}

#[test]
fn zero_phase_bump_has_zero_delay_and_rate() {
    let m = [ModeSpec::new(Amplitude::GaussianBump { a: 1e-3, center: 128.0 }, Phase::Polynomial(vec![0.0]))];
    let spec = tsfct::signals::synth_spectrum(&m, 256, 2.0).unwrap();
    // centre the record on t = 0 so the zero delay is inside it
    let s = tsfct::signals::inverse_transform(&spec, -0.25).unwrap();
    let s = SampledSignal::new(
        (0..256).map(|k| s.samples[(k + 128) % 256]).collect(),
        s.dt,
        -0.25,
    )
    .unwrap();
    let w = GaussianWindow::new(12.0).unwrap();
    let c = w.derivative_reduction();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let peak = fct_point(&s, 0.0, 128.0, 0.0, &w, 0).norm();
    let mut tested = 0;
    for _ in 0..200 {
        let (t, eta, g) = (rng.random_range(-0.05..0.05), rng.random_range(90.0..170.0), rng.random_range(-1e-3..1e-3));
        let d: Vec<Complex64> = (0..3).map(|m| fct_point(&s, t, eta, g, &w, m)).collect();
        if d[0].norm() < 0.1 * peak {
            continue;
        }
        tested += 1;
        let e = reference_cell(t, g, d[0], d[1], d[2], c);
        assert!(e.t_hat.abs() < 1e-8 && e.r_hat.abs() < 1e-8, "{e:?}");
    }
    assert!(tested > 20);
}

#[test]
fn order_two_field_equals_reference_field() {
    let s = synth_signal(&chirp(0.12, 0.0003), 128, 1.0 / 256.0).unwrap();
    let w = GaussianWindow::new(8.0).unwrap();
    let gg = GammaGrid::new(3e-3, 9).unwrap();
    let g = grids(&s, &w, &gg, 3);
    let a = reference_functions(&g[0], &g[1], &g[2], &w, 1e-3).unwrap();
    let b = high_order_reference(&g, &w, 2, 1e-3).unwrap();
    assert_eq!(a.mask, b.mask);
    for i in 0..a.mask.len() {
        if a.mask[i] {
            assert!((a.t_hat[i] - b.t_hat[i]).abs() < 1e-10 && (a.r_hat[i] - b.r_hat[i]).abs() < 1e-10);
        }
    }
    assert!(high_order_reference(&g, &w, 3, 1e-3).is_err());
    assert!(high_order_reference(&g, &w, 1, 1e-3).is_err());
}

#[test]
fn third_order_tracks_a_cubic_phase() {
    // θ(η) = 1e−7η³ + 0.2η, under a Gaussian envelope
    let m = vec![ModeSpec::new(
        Amplitude::GaussianBump { a: 1e-4, center: 128.0 },
        Phase::Polynomial(vec![0.0, 0.2, 0.0, 1e-7]),
    )];
    let s = synth_signal(&m, 256, DT).unwrap();
    let w = GaussianWindow::new(10.0).unwrap();
    let gg = GammaGrid::new(1e-3, 17).unwrap();
    let g = grids(&s, &w, &gg, 5);
    let f2 = high_order_reference(&g[..3], &w, 2, 1e-3).unwrap();
    let f3 = high_order_reference(&g, &w, 3, 1e-3).unwrap();
    let (mut e2, mut e3, mut n) = (0.0, 0.0, 0);
    let mut worst3: f64 = 0.0;
    for j in 0..f2.eta.len {
        let eta = f2.eta.value(j);
        if !(64.0..=192.0).contains(&eta) {
            continue;
        }
        for i in (0..f2.gamma.len * f2.time.len).map(|k| j * f2.gamma.len * f2.time.len + k) {
            if f2.mask[i] && f3.mask[i] {
                let gd = m[0].phase_d1(eta);
                e2 += (f2.t_hat[i] - gd).abs();
                e3 += (f3.t_hat[i] - gd).abs();
                worst3 = worst3.max((f3.t_hat[i] - gd).abs());
                n += 1;
            }
        }
    }
    assert!(n > 100);
    assert!(e3 < e2, "order 3 {e3} vs order 2 {e2}");
    assert!(worst3 < DT / 10.0, "{worst3}");
}

#[test]
fn delay_shifts_group_delay_and_keeps_rate() {
    let base = chirp(0.1, 0.0004);
    let t0 = 0.0375;
    let shifted: Vec<ModeSpec> = vec![LinearFdChirp { p: -128.0 / 625.0, q: 1.0 / 625.0, c: 0.1 + t0, r: 0.0004 }.into()];
    let a = synth_signal(&base, 256, DT).unwrap();
    let b = synth_signal(&shifted, 256, DT).unwrap();
    let w = GaussianWindow::new(12.0).unwrap();
    let c = w.derivative_reduction();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let eta = rng.random_range(100.0..156.0);
        let g = rng.random_range(-5e-4..1e-3);
        let t = 0.1 + 0.0004 * eta + rng.random_range(-0.01..0.01);
        let d = |s: &SampledSignal, t: f64| -> Vec<Complex64> { (0..3).map(|m| fct_point(s, t, eta, g, &w, m)).collect() };
        let (da, db) = (d(&a, t), d(&b, t + t0));
        let ea = reference_cell(t, g, da[0], da[1], da[2], c);
        let eb = reference_cell(t + t0, g, db[0], db[1], db[2], c);
        assert!((eb.t_hat - ea.t_hat - t0).abs() < DT / 20.0);
        assert!((eb.r_hat - ea.r_hat).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cramer_form_agrees(
        t in 0.0f64..0.5, g in -2e-3f64..2e-3, sigma in 3.0f64..30.0,
        z in prop::array::uniform6(-1.0f64..1.0),
    ) {
        let s2 = sigma * sigma;
        let d0 = Complex64::new(z[0], z[1]);
        let d1 = Complex64::new(z[2], z[3]) * sigma;
        let d2 = Complex64::new(z[4], z[5]) * s2;
        let det = (d0 * d2 - d1 * d1).norm();
        prop_assume!(det > 1e-3 * s2);
        let c = -1.0 / s2;
        let a = reference_cell(t, g, d0, d1, d2, c);
        let b = reference_cell_cramer(t, g, d0, d1, d2, c);
        let h = high_order_cell(t, g, &[d0, d1, d2], 2, c);
        let tol = 1e-10 * (1.0 + s2 * s2 / det);
        prop_assert!((a.t_hat - b.t_hat).abs() < tol);
        prop_assert!((a.r_hat - b.r_hat).abs() < tol / s2.max(1.0) + 1e-12);
        prop_assert!((a.t_hat - h.t_hat).abs() < tol);
        prop_assert!((a.r_hat - h.r_hat).abs() < tol);
    }

    #[test]
    fn unit_modulus_factor_keeps_the_determinant(phase in 0.0f64..(2.0 * PI)) {
        let s = synth_signal(&chirp(0.1, 0.0006), 128, 1.0 / 256.0).unwrap();
        let u = Complex64::from_polar(1.0, phase);
        let su = SampledSignal::new(s.samples.iter().map(|z| z * u).collect(), s.dt, s.t0).unwrap();
        let w = GaussianWindow::new(8.0).unwrap();
        let c = w.derivative_reduction();
        for &(t, eta, g) in &[(0.15, 60.0, 2e-4), (0.2, 90.0, -3e-4)] {
            let d: Vec<Complex64> = (0..3).map(|m| fct_point(&s, t, eta, g, &w, m)).collect();
            let du: Vec<Complex64> = (0..3).map(|m| fct_point(&su, t, eta, g, &w, m)).collect();
            let a = reference_cell(t, g, d[0], d[1], d[2], c);
            let b = reference_cell(t, g, du[0], du[1], du[2], c);
            prop_assert!((a.det.norm() - b.det.norm()).abs() <= 1e-12 * a.det.norm());
        }
    }
}

#[test]
fn bad_threshold_is_rejected() {
    let s = synth_signal(&chirp(0.1, 0.0), 64, 1.0 / 128.0).unwrap();
    let w = GaussianWindow::new(4.0).unwrap();
    let gg = GammaGrid::new(1e-3, 3).unwrap();
    let g = grids(&s, &w, &gg, 3);
    assert!(reference_functions(&g[0], &g[1], &g[2], &w, 0.0).is_err());
    assert!(reference_functions(&g[0], &g[1], &g[2], &w, 1.0).is_err());
    assert!(reference_functions(&g[1], &g[0], &g[2], &w, 1e-3).is_err());
}
