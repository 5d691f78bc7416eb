//! Axes and the 3D time × frequency × GDD container.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signals::{ModeSpec, SampledSignal};

/// Uniform axis `start + i·step`, `i ∈ [0, len)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Axis {
        Axis { start, step, len }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }

    /// Fractional index of `x` on this axis.
    pub fn position(&self, x: f64) -> f64 {
        (x - self.start) / self.step
    }

    /// Index of the cell containing `x` (half-widths `step/2`, ties to even),
    /// or `None` when `x` is outside the axis.
    pub fn bin(&self, x: f64) -> Option<usize> {
        let k = self.position(x).round_ties_even();
        if k >= 0.0 && k < self.len as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn last(&self) -> f64 {
        self.value(self.len.saturating_sub(1))
    }
}

/// Symmetric GDD sampling `γ_l = (l − (L−1)/2)·Δγ`, `Δγ = 2R₀/(L−1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaGrid {
    pub r0: f64,
    pub l_bins: usize,
}

impl GammaGrid {
    pub fn new(r0: f64, l_bins: usize) -> Result<GammaGrid> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::config(format!("GDD half-range must be positive, got {r0}")));
        }
        if l_bins < 3 || l_bins % 2 == 0 {
            return Err(Error::config(format!("GDD bin count must be odd and at least 3, got {l_bins}")));
        }
        Ok(GammaGrid { r0, l_bins })
    }

    /// `L = 2⌊N/2⌋ + 1` bins for a record of `n` samples.
    pub fn default_bins(n: usize) -> usize {
        2 * (n / 2) + 1
    }

    /// Half-range three times the largest |θ″| of the modes on the signal's
    /// non-negative frequency bins.
    pub fn for_modes(modes: &[ModeSpec], signal: &SampledSignal) -> Result<GammaGrid> {
        let n = signal.len();
        let d_eta = signal.d_eta();
        let peak = (0..=n / 2)
            .flat_map(|j| modes.iter().map(move |m| m.phase_d2(j as f64 * d_eta).abs()))
            .fold(0.0, f64::max);
        if peak > 0.0 {
            GammaGrid::new(3.0 * peak, GammaGrid::default_bins(n))
        } else {
            GammaGrid::for_record(signal)
        }
    }

    /// Half-range `2·N·Δt²`: the GDD of a chirp sweeping the whole record
    /// duration across the whole non-negative band.
    pub fn for_record(signal: &SampledSignal) -> Result<GammaGrid> {
        let n = signal.len();
        GammaGrid::new(2.0 * n as f64 * signal.dt * signal.dt, GammaGrid::default_bins(n))
    }

    pub fn d_gamma(&self) -> f64 {
        2.0 * self.r0 / (self.l_bins - 1) as f64
    }

    pub fn center(&self) -> usize {
        (self.l_bins - 1) / 2
    }

    pub fn gamma(&self, l: usize) -> f64 {
        (l as f64 - self.center() as f64) * self.d_gamma()
    }

    pub fn axis(&self) -> Axis {
        Axis::new(self.gamma(0), self.d_gamma(), self.l_bins)
    }
}

/// Which frequency bins a transform keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FrequencyBins {
    /// `j ∈ [0, ⌊N/2⌋]`
    #[default]
    NonNegative,
    /// All `N` bins, relabelled to ascending frequency.
    Full,
}

/// Raw transform values or their synchrosqueezed counterpart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Raw,
    Squeezed,
}

/// Complex values on a (time, frequency, GDD) grid.
///
/// Storage is time-fastest: `values[((j·L) + l)·N_t + n]`, so one frequency
/// column is a contiguous `L·N_t` block.
#[derive(Clone, Debug, PartialEq)]
pub struct TfgddGrid {
    pub values: Vec<Complex64>,
    pub time: Axis,
    pub eta: Axis,
    pub gamma: Axis,
    /// Window power `m` of `ξ^m g`.
    pub m: u8,
    pub sigma: f64,
    pub kind: GridKind,
}

impl TfgddGrid {
    pub fn zeros(time: Axis, eta: Axis, gamma: Axis, m: u8, sigma: f64, kind: GridKind) -> TfgddGrid {
        TfgddGrid {
            values: vec![Complex64::new(0.0, 0.0); time.len * eta.len * gamma.len],
            time,
            eta,
            gamma,
            m,
            sigma,
            kind,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.time.len, self.eta.len, self.gamma.len)
    }

    #[inline]
    pub fn index(&self, n: usize, j: usize, l: usize) -> usize {
        (j * self.gamma.len + l) * self.time.len + n
    }

    #[inline]
    pub fn get(&self, n: usize, j: usize, l: usize) -> Complex64 {
        self.values[self.index(n, j, l)]
    }

    /// Contiguous block of frequency column `j`, indexed `l·N_t + n`.
    pub fn column(&self, j: usize) -> &[Complex64] {
        let w = self.time.len * self.gamma.len;
        &self.values[j * w..(j + 1) * w]
    }

    pub fn column_len(&self) -> usize {
        self.time.len * self.gamma.len
    }

    pub fn same_axes(&self, other: &TfgddGrid) -> bool {
        self.time == other.time && self.eta == other.eta && self.gamma == other.gamma
    }

    /// `Δt·Δη·Δγ`
    pub fn cell_volume(&self) -> f64 {
        self.time.step * self.eta.step * self.gamma.step
    }
}
