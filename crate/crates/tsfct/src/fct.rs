//! The frequency-domain chirplet transform (FCT).
//!
//! ```text
//! D^{ξ^m g}(t, η, γ) = ∫ x̂(η + ξ)·ξ^m g(ξ)·e^{i2πξt}·e^{iπγξ²} dξ
//! ```
//!
//! On a sampled signal this is the windowed sum
//! `Σ_k x(τ_k)·conj(C(ξ^m g)(t − τ_k, γ))·e^{−i2πητ_k}`. The window depends
//! only on the lag `t_n − τ_k`, so for each GDD value one table of `2N − 1`
//! kernel values serves every time row, and each row is one length-`N` FFT.
//! [`fct_point`] evaluates the same sum directly at arbitrary coordinates.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Axis, FrequencyBins, GammaGrid, GridKind, TfgddGrid};
use crate::quadrature;
use crate::signals::SampledSignal;
use crate::windows::GaussianWindow;

/// Default cap on the number of cells of a fully materialized grid
/// (≈ 2.4 GB of complex doubles).
pub const DEFAULT_MAX_CELLS: usize = 150_000_000;

/// Precomputed FFT and axes for transforming one signal.
///
/// A slice is the `N_t × N_η` plane at one `(m, γ)`, stored time-major:
/// `slice[n·N_η + j]`.
pub struct FctPlan {
    samples: Vec<Complex64>,
    dt: f64,
    t0: f64,
    fft: Arc<dyn Fft<f64>>,
    eta: Axis,
    // FFT output bin feeding each stored frequency column
    bin_of: Vec<usize>,
    // e^{−i2πη_j t0}, absent when t0 = 0
    phase: Option<Vec<Complex64>>,
}

impl FctPlan {
    pub fn new(signal: &SampledSignal, bins: FrequencyBins) -> FctPlan {
        let n = signal.len();
        let d_eta = signal.d_eta();
        let (eta, bin_of) = match bins {
            FrequencyBins::NonNegative => (Axis::new(0.0, d_eta, n / 2 + 1), (0..=n / 2).collect::<Vec<_>>()),
            FrequencyBins::Full => {
                let neg = n - n / 2 - 1;
                let order = (0..n).map(|i| (i + n - neg) % n).collect();
                (Axis::new(-(neg as f64) * d_eta, d_eta, n), order)
            }
        };
        let phase = (signal.t0 != 0.0).then(|| {
            (0..eta.len).map(|j| Complex64::from_polar(1.0, -2.0 * PI * eta.value(j) * signal.t0)).collect()
        });
        FctPlan {
            samples: signal.samples.clone(),
            dt: signal.dt,
            t0: signal.t0,
            fft: FftPlanner::new().plan_fft_forward(n),
            eta,
            bin_of,
            phase,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_axis(&self) -> Axis {
        Axis::new(self.t0, self.dt, self.samples.len())
    }

    pub fn eta_axis(&self) -> Axis {
        self.eta
    }

    pub fn slice_len(&self) -> usize {
        self.samples.len() * self.eta.len
    }

    /// `conj(C(ξ^m g)(d·Δt, γ))` for lags `d ∈ [−(N−1), N−1]`, index `d + N − 1`.
    pub fn lag_kernel(&self, window: &GaussianWindow, m: u32, gamma: f64) -> Vec<Complex64> {
        let n = self.samples.len() as isize;
        (-(n - 1)..n).map(|d| window.kernel_general(m, d as f64 * self.dt, gamma).conj()).collect()
    }

    /// Computes one `(m, γ)` slice into `out` (length [`FctPlan::slice_len`]).
    pub fn slice_into(&self, window: &GaussianWindow, m: u32, gamma: f64, out: &mut [Complex64]) {
        let kernel = self.lag_kernel(window, m, gamma);
        self.slice_with_kernel(&kernel, out);
    }

    pub fn slice(&self, window: &GaussianWindow, m: u32, gamma: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.slice_len()];
        self.slice_into(window, m, gamma, &mut out);
        out
    }

    fn slice_with_kernel(&self, kernel: &[Complex64], out: &mut [Complex64]) {
        let n = self.samples.len();
        let ne = self.eta.len;
        assert_eq!(out.len(), n * ne);
        let scratch_len = self.fft.get_inplace_scratch_len();
        out.par_chunks_mut(ne).enumerate().for_each_init(
            || (vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); scratch_len]),
            |(buf, scratch), (row, dst)| {
                // lag row − k  ↦  kernel index row − k + n − 1
                let base = row + n - 1;
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = self.samples[k] * kernel[base - k];
                }
                self.fft.process_with_scratch(buf, scratch);
                for (j, d) in dst.iter_mut().enumerate() {
                    *d = buf[self.bin_of[j]];
                }
                if let Some(ph) = &self.phase {
                    dst.iter_mut().zip(ph).for_each(|(d, p)| *d *= p);
                }
            },
        );
    }
}

/// Options for materializing full grids.
#[derive(Clone, Copy, Debug)]
pub struct FctOptions {
    pub bins: FrequencyBins,
    pub max_cells: usize,
}

impl Default for FctOptions {
    fn default() -> FctOptions {
        FctOptions { bins: FrequencyBins::NonNegative, max_cells: DEFAULT_MAX_CELLS }
    }
}

/// FCT with window `ξ^m g_σ` on every (time sample, frequency bin, GDD bin).
pub fn fct_grid(
    signal: &SampledSignal,
    window: &GaussianWindow,
    ggrid: &GammaGrid,
    m: u8,
    opts: &FctOptions,
) -> Result<TfgddGrid> {
    if signal.len() < 4 {
        return Err(Error::config("the transform needs at least four samples"));
    }
    let plan = FctPlan::new(signal, opts.bins);
    let cells = plan.slice_len().checked_mul(ggrid.l_bins).unwrap_or(usize::MAX);
    if cells > opts.max_cells {
        return Err(Error::config(format!(
            "grid of {cells} cells exceeds the limit of {}; use the streaming pipeline or a smaller grid",
            opts.max_cells
        )));
    }
    let mut grid = TfgddGrid::zeros(plan.time_axis(), plan.eta_axis(), ggrid.axis(), m, window.sigma, GridKind::Raw);
    let (nt, ne, nl) = grid.dims();
    let mut slice = vec![Complex64::new(0.0, 0.0); plan.slice_len()];
    for l in 0..nl {
        plan.slice_into(window, m as u32, ggrid.gamma(l), &mut slice);
        grid.values.par_chunks_mut(nl * nt).enumerate().for_each(|(j, col)| {
            let dst = &mut col[l * nt..(l + 1) * nt];
            for (n, d) in dst.iter_mut().enumerate() {
                *d = slice[n * ne + j];
            }
        });
    }
    Ok(grid)
}

/// Direct `O(N)` evaluation at arbitrary `(t, η, γ)`.
pub fn fct_point(signal: &SampledSignal, t: f64, eta: f64, gamma: f64, window: &GaussianWindow, m: u32) -> Complex64 {
    signal
        .samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let tau = signal.time(k);
            x * window.kernel_general(m, t - tau, gamma).conj() * Complex64::from_polar(1.0, -2.0 * PI * eta * tau)
        })
        .sum()
}

/// Largest `|D_x^g(t, η, γ) − Q_{x̂}^g(η, −t, −γ)|` over the points.
///
/// `Q` is the time-domain chirplet transform of the signal's spectrum
/// (`x̂(ξ) = Σ_k x(τ_k)e^{−i2πξτ_k}`), computed by adaptive quadrature; the
/// two transforms agree identically, so the result measures numerical error.
pub fn duality_check(signal: &SampledSignal, window: &GaussianWindow, points: &[(f64, f64, f64)]) -> f64 {
    points
        .iter()
        .map(|&(t, eta, gamma)| {
            let d = fct_point(signal, t, eta, gamma, window, 0);
            let q = chirplet_of_spectrum(signal, window, eta, -t, -gamma);
            (d - q).norm()
        })
        .fold(0.0, f64::max)
}

/// Chirplet transform `Q_f^g(a, b, c) = ∫ f(a + τ) g(τ) e^{−i2πbτ} e^{−iπcτ²} dτ`
/// of `f = x̂`.
fn chirplet_of_spectrum(signal: &SampledSignal, window: &GaussianWindow, at: f64, freq: f64, rate: f64) -> Complex64 {
    let s = window.sigma;
    let spectrum = |xi: f64| -> Complex64 {
        signal
            .samples
            .iter()
            .enumerate()
            .map(|(k, &x)| x * Complex64::from_polar(1.0, -2.0 * PI * xi * signal.time(k)))
            .sum()
    };
    let scale = signal.samples.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    quadrature::integrate(
        |tau| spectrum(at + tau) * window.eval(tau) * Complex64::from_polar(1.0, -2.0 * PI * freq * tau - PI * rate * tau * tau),
        -8.0 * s,
        8.0 * s,
        1e-12 * scale,
    )
}

/// Width of the region near the record ends (seconds) and the band edges
/// (Hz) where the finite record distorts the transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryBand {
    /// `3/(2πσ)`: three time-domain window scales.
    pub time_s: f64,
    /// Frequency margin excluded from recovery and metrics.
    pub freq_hz: f64,
}

impl BoundaryBand {
    /// Time band `3/(2πσ)`, frequency band `2σ`.
    pub fn for_window(window: &GaussianWindow) -> BoundaryBand {
        BoundaryBand { time_s: 3.0 * window.time_scale(), freq_hz: 2.0 * window.sigma }
    }

    pub fn with_freq(self, freq_hz: f64) -> BoundaryBand {
        BoundaryBand { freq_hz, ..self }
    }
}
