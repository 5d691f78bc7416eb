use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use tsfct::fgsso::{assemble_a, diagnostics_profile, recover_modes};
use tsfct::signals::{synth_signal, Amplitude, Benchmark, LinearFdChirp, ModeSpec, Phase};
use tsfct::{
    extract_ridges, fct_point, tsfct, BoundaryBand, GammaGrid, GaussianWindow, Ridge, RidgeOptions, RidgeSet,
    SampledSignal, TfgddGrid, TsfctOptions,
};

fn chirp_modes() -> Vec<ModeSpec> {
    vec![LinearFdChirp { p: -128.0 / 625.0, q: 1.0 / 625.0, c: 0.1, r: 0.0006 }.into()]
}

fn chirp_squeezed() -> &'static (SampledSignal, TfgddGrid) {
    static CELL: OnceLock<(SampledSignal, TfgddGrid)> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = synth_signal(&chirp_modes(), 256, 1.0 / 512.0).unwrap();
        let w = GaussianWindow::new(12.0).unwrap();
        let gg = GammaGrid::new(2e-3, 65).unwrap();
        let (sq, _) = tsfct(&s, &w, &gg, &TsfctOptions::default()).unwrap();
        (s, sq)
    })
}

fn paper_x_squeezed() -> &'static TfgddGrid {
    static CELL: OnceLock<TfgddGrid> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = Benchmark::PaperX.signal();
        let w = GaussianWindow::new(25.0).unwrap();
        let gg = GammaGrid::for_modes(&Benchmark::PaperX.modes(), &s).unwrap();
        let gg = GammaGrid::new(gg.r0, 129).unwrap();
        tsfct(&s, &w, &gg, &TsfctOptions::default()).unwrap().0
    })
}

#[test]
fn zero_ridges_is_an_error() {
    let (_, sq) = chirp_squeezed();
    assert!(extract_ridges(sq, &RidgeOptions { k_modes: 0, ..Default::default() }).is_err());
}

#[test]
fn single_chirp_ridge_is_within_one_cell() {
    let (_, sq) = chirp_squeezed();
    let set = extract_ridges(sq, &RidgeOptions { k_modes: 1, ..Default::default() }).unwrap();
    let r = &set.ridges[0];
    for i in 0..r.len() {
        if !(80.0..=176.0).contains(&r.eta[i]) {
            continue;
        }
        assert!((r.tau[i] - (0.1 + 0.0006 * r.eta[i])).abs() <= sq.time.step, "{} {}", r.eta[i], r.tau[i]);
        assert!((r.gamma[i] - 0.0006).abs() <= sq.gamma.step);
    }
}

#[test]
fn dp_agrees_with_column_argmax_on_one_mode() {
    let (_, sq) = chirp_squeezed();
    let set = extract_ridges(sq, &RidgeOptions { k_modes: 1, jump_t: 7, jump_g: 7, ..Default::default() }).unwrap();
    let r = &set.ridges[0];
    let (nt, _, _) = sq.dims();
    for i in 0..r.len() {
        let j = r.j_start + i;
        if !(80.0..=176.0).contains(&r.eta[i]) {
            continue;
        }
        let col = sq.column(j);
        let best = (0..col.len()).max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm())).unwrap();
        let (p, q) = (best % nt, best / nt);
        assert!((r.tau[i] - sq.time.value(p)).abs() <= 0.5 * sq.time.step + 1e-12);
        assert!((r.gamma[i] - sq.gamma.value(q)).abs() <= 0.5 * sq.gamma.step + 1e-15);
    }
}

#[test]
fn a_second_ridge_on_one_mode_is_flagged() {
    let (_, sq) = chirp_squeezed();
    let set = extract_ridges(sq, &RidgeOptions { k_modes: 2, ..Default::default() }).unwrap();
    assert!(!set.ridges[0].low_confidence);
    assert!(set.ridges[1].low_confidence);
}

#[test]
fn paper_x_ridges_separate_at_the_crossing() {
    let sq = paper_x_squeezed();
    let set = extract_ridges(sq, &RidgeOptions { boundary_hz: 50.0, ..Default::default() }).unwrap();
    let j = sq.eta.bin(256.0).unwrap();
    let pts: Vec<(f64, f64)> = set.ridges.iter().map(|r| r.at(j).unwrap()).collect();
    for p in &pts {
        assert!((p.0 - 0.2536).abs() <= sq.time.step);
    }
    assert!((pts[0].1 - pts[1].1).abs() >= 4.0 * sq.gamma.step);
    // peeling takes the strongest ridge first
    let (a, b) = (&set.ridges[0], &set.ridges[1]);
    assert!(a.total_amplitude() >= b.total_amplitude());
}

fn ridge(eta: &[f64], tau: impl Fn(f64) -> f64, gamma: impl Fn(f64) -> f64) -> Ridge {
    Ridge {
        j_start: 0,
        eta: eta.to_vec(),
        tau: eta.iter().map(|&e| tau(e)).collect(),
        gamma: eta.iter().map(|&e| gamma(e)).collect(),
        amplitude: vec![1.0; eta.len()],
        low_confidence: false,
    }
}

/// Ridges that sit exactly on the modes' group delay and GDD curves.
fn exact_ridges(modes: &[ModeSpec], s: &SampledSignal) -> RidgeSet {
    let n = s.len() / 2 + 1;
    let eta: Vec<f64> = (0..n).map(|j| j as f64 * s.d_eta()).collect();
    RidgeSet {
        ridges: modes.iter().map(|m| ridge(&eta, |e| m.phase_d1(e), |e| m.phase_d2(e))).collect(),
        eta: tsfct::Axis::new(0.0, s.d_eta(), n),
    }
}

fn interior_error(modes: &[ModeSpec], spectra: &[tsfct::Spectrum], lo: f64, hi: f64) -> Vec<f64> {
    modes
        .iter()
        .zip(spectra)
        .map(|(m, sp)| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..=sp.len() / 2 {
                let eta = sp.eta(j);
                if (lo..=hi).contains(&eta) {
                    num += (sp.bins[j] - m.value(eta)).norm_sqr();
                    den += m.value(eta).norm_sqr();
                }
            }
            (num / den).sqrt()
        })
        .collect()
}

#[test]
fn mixing_matrix_special_cases() {
    let w = GaussianWindow::new(17.1).unwrap();
    let one = assemble_a(&[(0.2, 1e-4)], 100.0, &w);
    assert_eq!(one.a[(0, 0)], Complex64::new(1.0, 0.0));
    assert_eq!(one.inf_norm_inv, 1.0);
    assert!((one.cond2 - 1.0).abs() < 1e-15);

    let dt = 0.013;
    let same_gdd = assemble_a(&[(0.2, 3e-4), (0.2 + dt, 3e-4)], 100.0, &w);
    let want = (-2.0 * PI * PI * 17.1f64.powi(2) * dt * dt).exp();
    assert!((same_gdd.a[(0, 1)] - want).norm() < 1e-14);

    let generic = assemble_a(&[(0.2, 0.0), (0.21, 5e-4)], 100.0, &w);
    let q = w.kernel_quadrature(0, 0.01, 5e-4, 1e-13);
    assert!((generic.a[(0, 1)] - q).norm() < 1e-8);
    assert!((generic.a[(1, 0)] - q.conj()).norm() < 1e-8);

    let dup = assemble_a(&[(0.2, 1e-4), (0.2, 1e-4)], 100.0, &w);
    assert!(dup.pseudo);

    let far = assemble_a(&[(0.1, 0.0), (0.3, 0.0)], 100.0, &w);
    assert!(far.a[(0, 1)].norm() < 1e-6 && far.cond2 < 1.0 + 1e-5);
    let d = diagnostics_profile(&[one, far]);
    assert_eq!(d.eta.len(), 2);
}

#[test]
fn single_mode_recovery_is_the_transform_at_the_ridge() {
    let modes = vec![ModeSpec::new(
        Amplitude::GaussianBump { a: 2e-5, center: 256.0 },
        Phase::Polynomial(vec![0.0, 0.1, 0.0003]),
    )];
    let s = synth_signal(&modes, 512, 1.0 / 1024.0).unwrap();
    let w = GaussianWindow::new(25.0).unwrap();
    let gg = GammaGrid::for_modes(&modes, &s).unwrap();
    let (sq, _) = tsfct(&s, &w, &gg, &TsfctOptions::default()).unwrap();
    let set = extract_ridges(&sq, &RidgeOptions { k_modes: 1, boundary_hz: 50.0, ..Default::default() }).unwrap();
    let band = BoundaryBand::for_window(&w);
    let rec = recover_modes(&s, &set, &w, &band).unwrap();
    let j = set.eta.bin(300.0).unwrap();
    let (t, g) = set.ridges[0].at(j).unwrap();
    assert!((rec.spectra[0].bins[150] - fct_point(&s, t, 300.0, g, &w, 0)).norm() < 1e-14);
    let e = interior_error(&modes, &rec.spectra, 51.2, 460.8);
    assert!(e[0] < 0.02, "{e:?}");
}

#[test]
fn permuting_ridges_permutes_spectra() {
    let modes = Benchmark::PaperX.modes();
    let s = Benchmark::PaperX.signal();
    let set = exact_ridges(&modes, &s);
    let mut rev = set.clone();
    rev.ridges.reverse();
    let w = GaussianWindow::new(25.0).unwrap();
    let band = BoundaryBand::for_window(&w);
    let a = recover_modes(&s, &set, &w, &band).unwrap();
    let b = recover_modes(&s, &rev, &w, &band).unwrap();
    for j in 0..s.len() {
        assert!((a.spectra[0].bins[j] - b.spectra[1].bins[j]).norm() < 1e-12);
        assert!((a.spectra[1].bins[j] - b.spectra[0].bins[j]).norm() < 1e-12);
    }
}

#[test]
fn interference_falls_as_the_delay_gap_grows() {
    let s_of = |gap: f64| {
        let modes: Vec<ModeSpec> = [0.15, 0.15 + gap]
            .iter()
            .map(|&c| {
                // envelope small at the band edges, so neither mode rings across the record
                ModeSpec::new(Amplitude::GaussianBump { a: 3e-4, center: 256.0 }, Phase::Polynomial(vec![0.0, c, 1e-4]))
            })
            .collect();
        (synth_signal(&modes, 512, 1.0 / 1024.0).unwrap(), modes)
    };
    let w = GaussianWindow::new(25.0).unwrap();
    let band = BoundaryBand::for_window(&w);
    let mut last = f64::INFINITY;
    for gap in [0.01, 0.02, 0.05, 0.1] {
        let (s, modes) = s_of(gap);
        let rec = recover_modes(&s, &exact_ridges(&modes, &s), &w, &band).unwrap();
        // the first mode stays put; only its interference changes
        let e = interior_error(&modes, &rec.spectra, 51.2, 460.8)[0];
        // once the overlap vanishes the error is flat up to rounding
        assert!(e <= last * (1.0 + 1e-12), "gap {gap}: {e} after {last}");
        last = e;
    }
}

#[test]
fn empty_band_is_an_error() {
    let s = Benchmark::PaperX.signal();
    let set = exact_ridges(&Benchmark::PaperX.modes(), &s);
    let w = GaussianWindow::new(25.0).unwrap();
    assert!(recover_modes(&s, &set, &w, &BoundaryBand::for_window(&w).with_freq(300.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solving_a_synthesized_system_returns_the_input(
        pts in prop::collection::vec((0.0f64..0.5, -2e-3f64..2e-3), 1..5),
        v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        sigma in 5.0f64..30.0,
    ) {
        let w = GaussianWindow::new(sigma).unwrap();
        let mm = assemble_a(&pts, 100.0, &w);
        prop_assume!(!mm.pseudo && mm.cond2 < 1e4);
        let k = pts.len();
        let x = DMatrix::from_iterator(k, 1, v.iter().take(k).map(|&(a, b)| Complex64::new(a, b)));
        let back = &mm.inv * (&mm.a * &x);
        for i in 0..k {
            prop_assert!((back[i] - x[i]).norm() < 1e-10 * mm.cond2.max(1.0));
        }
        // Hermitian with unit diagonal
        for r in 0..k {
            prop_assert_eq!(mm.a[(r, r)], Complex64::new(1.0, 0.0));
            for c in 0..k {
                prop_assert!((mm.a[(r, c)] - mm.a[(c, r)].conj()).norm() < 1e-15);
            }
        }
        let id = &mm.a * &mm.inv;
        for r in 0..k {
            let row: f64 = (0..k).map(|c| (id[(r, c)] - if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).norm()).sum();
            prop_assert!(row < 1e-10 * mm.cond2.max(1.0));
        }
    }
}
