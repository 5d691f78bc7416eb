//! Slice-by-slice evaluation of the transforms and reference functions.
//!
//! A full `m = 0` grid for a 512-sample record with 513 GDD bins holds about
//! 67 million complex cells; three of them plus the estimates do not fit in a
//! few gigabytes. [`Analysis`] instead walks the GDD axis one slice at a
//! time, in order, computing `D^g, D^{ξg}, D^{ξ²g}` and the per-cell
//! estimates, and hands each slice to a consumer.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fct::FctPlan;
use crate::grid::{Axis, FrequencyBins, GammaGrid};
use crate::reassign::{check_epsilon, reference_cell, CellEstimate, ModeResiduals, ResidualAccumulator};
use crate::signals::{ModeSpec, SampledSignal};
use crate::windows::GaussianWindow;

/// One GDD slice: `d0[n·N_η + j]` and the matching estimates.
pub struct SliceView<'a> {
    pub l: usize,
    pub gamma: f64,
    pub d0: &'a [Complex64],
    pub est: &'a [CellEstimate],
    pub time: Axis,
    pub eta: Axis,
}

/// A signal prepared for streaming analysis with one window and GDD grid.
pub struct Analysis {
    plan: FctPlan,
    window: GaussianWindow,
    ggrid: GammaGrid,
}

impl Analysis {
    pub fn new(signal: &SampledSignal, window: GaussianWindow, ggrid: GammaGrid, bins: FrequencyBins) -> Result<Analysis> {
        if signal.len() < 4 {
            return Err(Error::config("the transform needs at least four samples"));
        }
        Ok(Analysis { plan: FctPlan::new(signal, bins), window, ggrid })
    }

    pub fn window(&self) -> &GaussianWindow {
        &self.window
    }

    pub fn ggrid(&self) -> &GammaGrid {
        &self.ggrid
    }

    pub fn time_axis(&self) -> Axis {
        self.plan.time_axis()
    }

    pub fn eta_axis(&self) -> Axis {
        self.plan.eta_axis()
    }

    pub fn gamma_axis(&self) -> Axis {
        self.ggrid.axis()
    }

    pub fn plan(&self) -> &FctPlan {
        &self.plan
    }

    fn transforms(&self, l: usize, d: &mut [Vec<Complex64>; 3]) {
        let gamma = self.ggrid.gamma(l);
        for (m, buf) in d.iter_mut().enumerate() {
            self.plan.slice_into(&self.window, m as u32, gamma, buf);
        }
    }

    fn buffers(&self) -> [Vec<Complex64>; 3] {
        let len = self.plan.slice_len();
        std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); len])
    }

    /// Largest `|det E₀|` over the whole grid.
    pub fn max_det(&self) -> f64 {
        let mut d = self.buffers();
        let mut max = 0.0f64;
        for l in 0..self.ggrid.l_bins {
            self.transforms(l, &mut d);
            let m = d[0]
                .par_iter()
                .zip(d[1].par_iter())
                .zip(d[2].par_iter())
                .map(|((&a, &b), &c)| (a * c - b * b).norm())
                .reduce(|| 0.0, f64::max);
            max = max.max(m);
        }
        max
    }

    /// Visits every GDD slice in increasing `l`.
    pub fn for_each_slice<F: FnMut(&SliceView<'_>)>(&self, mut f: F) {
        let mut d = self.buffers();
        let ne = self.plan.eta_axis().len;
        let time = self.time_axis();
        let eta = self.eta_axis();
        let c = self.window.derivative_reduction();
        let mut est = vec![CellEstimate { t_hat: 0.0, r_hat: 0.0, det: Complex64::new(0.0, 0.0) }; self.plan.slice_len()];
        for l in 0..self.ggrid.l_bins {
            let gamma = self.ggrid.gamma(l);
            self.transforms(l, &mut d);
            est.par_chunks_mut(ne).enumerate().for_each(|(n, row)| {
                let t = time.value(n);
                for (j, e) in row.iter_mut().enumerate() {
                    let i = n * ne + j;
                    *e = reference_cell(t, gamma, d[0][i], d[1][i], d[2][i], c);
                }
            });
            f(&SliceView { l, gamma, d0: &d[0], est: &est, time, eta });
        }
    }

    /// `Σ|D^g|^{2ℓ}` and `Σ|D^g|²` over the raw `m = 0` grid.
    pub fn power_sums(&self, order: f64) -> (f64, f64) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.plan.slice_len()];
        let (mut hi, mut lo) = (0.0, 0.0);
        for l in 0..self.ggrid.l_bins {
            self.plan.slice_into(&self.window, 0, self.ggrid.gamma(l), &mut buf);
            let (a, b) = power_sums_of(&buf, order);
            hi += a;
            lo += b;
        }
        (hi, lo)
    }

    /// Theorem-1 residuals of each mode over masked cells of its `Z_k` box.
    ///
    /// Returns the residuals and the absolute threshold used for the mask.
    pub fn theorem1_residuals(
        &self,
        modes: &[ModeSpec],
        delta1: f64,
        delta2: f64,
        epsilon_rel: f64,
    ) -> Result<(Vec<ModeResiduals>, f64)> {
        check_epsilon(epsilon_rel)?;
        let eps = epsilon_rel * self.max_det();
        let mut acc = ResidualAccumulator::new(modes, delta1, delta2, self.eta_axis());
        let ne = self.eta_axis().len;
        self.for_each_slice(|s| {
            for (i, e) in s.est.iter().enumerate() {
                if e.det.norm() > eps && e.t_hat.is_finite() && e.r_hat.is_finite() {
                    acc.add(i % ne, s.time.value(i / ne), s.gamma, e);
                }
            }
        });
        Ok((acc.finish(), eps))
    }
}

/// Sequential sums so the result does not depend on the thread count.
pub(crate) fn power_sums_of(values: &[Complex64], order: f64) -> (f64, f64) {
    let (mut hi, mut lo) = (0.0, 0.0);
    for z in values {
        let p2 = z.norm_sqr();
        hi += p2.powf(order);
        lo += p2;
    }
    (hi, lo)
}
