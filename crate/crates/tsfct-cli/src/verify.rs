//! Oracle comparisons run by `tsfct verify`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use tsfct::fct::duality_check;
use tsfct::signals::{synth_signal, Amplitude, Phase};
use tsfct::{fct_grid, fct_point, Benchmark, FctOptions, GammaGrid, GaussianWindow, ModeSpec, Result};

pub const SUITES: [&str; 3] = ["kernels", "fft", "duality"];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn run(suite: &str) -> Result<SuiteResult> {
    let (suite, cases, max_error, threshold) = match suite {
        "kernels" => ("kernels", 300, kernels(300), 1e-8),
        "fft" => ("fft", 150, fft(50)?, 1e-10),
        "duality" => ("duality", 20, duality()?, 1e-6),
        other => unreachable!("suite {other} is validated by the caller"),
    };
    Ok(SuiteResult { suite, cases, max_error, threshold, pass: max_error < threshold })
}

/// Closed-form kernels of `g`, `ξg`, `ξ²g` against adaptive quadrature.
fn kernels(cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let m: u8 = rng.random_range(0..=2);
        let sigma: f64 = rng.random_range(0.5..40.0);
        let ts = 1.0 / (2.0 * PI * sigma);
        let t = rng.random_range(-4.0 * ts..4.0 * ts);
        let g = rng.random_range(-4.0..4.0) / (2.0 * PI * sigma * sigma);
        let w = GaussianWindow::new(sigma).expect("positive width");
        worst = worst.max((w.kernel(m, t, g) - w.kernel_quadrature(m as u32, t, g, 1e-13)).norm());
    }
    worst
}

/// FFT grid against direct summation at random cells, relative to the peak.
fn fft(per_power: usize) -> Result<f64> {
    let s = synth_signal(&Benchmark::PaperX.modes(), 128, 1.0 / 256.0)?;
    let w = GaussianWindow::new(10.0)?;
    let gg = GammaGrid::new(2e-3, 17)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for m in 0..=2u8 {
        let g = fct_grid(&s, &w, &gg, m, &FctOptions::default())?;
        let (nt, ne, nl) = g.dims();
        let peak = g.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for _ in 0..per_power {
            let (n, j, l) = (rng.random_range(0..nt), rng.random_range(0..ne), rng.random_range(0..nl));
            let p = fct_point(&s, g.time.value(n), g.eta.value(j), g.gamma.value(l), &w, m as u32);
            worst = worst.max((g.get(n, j, l) - p).norm() / peak);
        }
    }
    Ok(worst)
}

/// Frequency-domain transform against the time-domain chirplet transform.
fn duality() -> Result<f64> {
    let pulse = [ModeSpec::new(Amplitude::GaussianBump { a: 4e-4, center: 40.0 }, Phase::Polynomial(vec![0.0, 0.25]))];
    let s = synth_signal(&pulse, 64, 1.0 / 128.0)?;
    let w = GaussianWindow::new(8.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<(f64, f64, f64)> =
        (0..20).map(|_| (rng.random_range(0.0..0.5), rng.random_range(5.0..60.0), rng.random_range(-2e-3..2e-3))).collect();
    Ok(duality_check(&s, &w, &pts))
}
