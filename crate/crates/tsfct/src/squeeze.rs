//! Time-reassigned synchrosqueezing.
//!
//! Each masked cell `(t_n, η_j, γ_l)` moves its complex value `D^g` to the
//! cell `(τ_p, η_j, u_q)` nearest to its estimates `(t̂, r̂)`. Mass never
//! leaves its frequency column, so per-column complex sums are conserved up
//! to the cells that land outside the axes (dropped and counted).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Axis, FrequencyBins, GammaGrid, GridKind, TfgddGrid};
use crate::pipeline::Analysis;
use crate::reassign::{check_epsilon, ReassignmentField};
use crate::signals::SampledSignal;
use crate::windows::GaussianWindow;

/// Counters reported alongside a squeezed grid.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SqueezeStats {
    /// Masked cells moved into the output.
    pub moved: u64,
    /// Masked cells whose estimates fell outside the output axes.
    pub dropped: u64,
    /// Absolute `|det E₀|` threshold.
    pub epsilon_used: f64,
    pub max_det: f64,
}

/// Squeezes a materialized `m = 0` grid with its reassignment field.
pub fn squeeze(d0: &TfgddGrid, field: &ReassignmentField) -> Result<(TfgddGrid, SqueezeStats)> {
    if d0.m != 0 {
        return Err(Error::config("squeezing needs the m = 0 transform"));
    }
    if d0.time != field.time || d0.eta != field.eta || d0.gamma != field.gamma {
        return Err(Error::config("transform and field have different axes"));
    }
    let mut out = TfgddGrid::zeros(d0.time, d0.eta, d0.gamma, 0, d0.sigma, GridKind::Squeezed);
    let (nt, _, nl) = d0.dims();
    let w = nt * nl;
    let counts: Vec<(u64, u64)> = out
        .values
        .par_chunks_mut(w)
        .enumerate()
        .map(|(j, col)| {
            let (mut moved, mut dropped) = (0, 0);
            for l in 0..nl {
                for n in 0..nt {
                    let i = field.index(n, j, l);
                    if !field.mask[i] {
                        continue;
                    }
                    match target(&d0.time, &d0.gamma, field.t_hat[i], field.r_hat[i]) {
                        Some((p, q)) => {
                            col[q * nt + p] += d0.values[i];
                            moved += 1;
                        }
                        None => dropped += 1,
                    }
                }
            }
            (moved, dropped)
        })
        .collect();
    let max_det = field.det_e0_mag.iter().copied().fold(0.0, f64::max);
    let stats = SqueezeStats {
        moved: counts.iter().map(|c| c.0).sum(),
        dropped: counts.iter().map(|c| c.1).sum(),
        epsilon_used: field.epsilon_used,
        max_det,
    };
    Ok((out, stats))
}

#[inline]
fn target(time: &Axis, gamma: &Axis, t_hat: f64, r_hat: f64) -> Option<(usize, usize)> {
    Some((time.bin(t_hat)?, gamma.bin(r_hat)?))
}

/// Options for [`tsfct`].
#[derive(Clone, Copy, Debug)]
pub struct TsfctOptions {
    pub epsilon_rel: f64,
    pub bins: FrequencyBins,
}

impl Default for TsfctOptions {
    fn default() -> TsfctOptions {
        TsfctOptions { epsilon_rel: 1e-3, bins: FrequencyBins::NonNegative }
    }
}

/// Transform, reassign, and squeeze a signal without materializing the raw
/// grids. Only the squeezed grid is stored.
///
/// Slices are processed in increasing GDD order and each column's cells in
/// increasing time order, so the output does not depend on the thread count.
pub fn tsfct(
    signal: &SampledSignal,
    window: &GaussianWindow,
    ggrid: &GammaGrid,
    opts: &TsfctOptions,
) -> Result<(TfgddGrid, SqueezeStats)> {
    check_epsilon(opts.epsilon_rel)?;
    let analysis = Analysis::new(signal, *window, *ggrid, opts.bins)?;
    squeeze_streaming(&analysis, opts.epsilon_rel)
}

/// Squeezes using a prepared [`Analysis`].
pub fn squeeze_streaming(analysis: &Analysis, epsilon_rel: f64) -> Result<(TfgddGrid, SqueezeStats)> {
    check_epsilon(epsilon_rel)?;
    let time = analysis.time_axis();
    let eta = analysis.eta_axis();
    let gamma = analysis.gamma_axis();
    let max_det = analysis.max_det();
    if !(max_det > 0.0) {
        return Err(Error::numerical("the signal has no energy on this grid"));
    }
    let eps = epsilon_rel * max_det;
    let mut out = TfgddGrid::zeros(time, eta, gamma, 0, analysis.window().sigma, GridKind::Squeezed);
    let (nt, ne, nl) = out.dims();
    let mut moved = vec![0u64; ne];
    let mut dropped = vec![0u64; ne];
    analysis.for_each_slice(|s| {
        out.values
            .par_chunks_mut(nt * nl)
            .zip(moved.par_iter_mut().zip(dropped.par_iter_mut()))
            .enumerate()
            .for_each(|(j, (col, (mv, dr)))| {
                for n in 0..nt {
                    let i = n * ne + j;
                    let e = &s.est[i];
                    if !(e.det.norm() > eps) || !e.t_hat.is_finite() || !e.r_hat.is_finite() {
                        continue;
                    }
                    match target(&time, &gamma, e.t_hat, e.r_hat) {
                        Some((p, q)) => {
                            col[q * nt + p] += s.d0[i];
                            *mv += 1;
                        }
                        None => *dr += 1,
                    }
                }
            });
    });
    let stats = SqueezeStats {
        moved: moved.iter().sum(),
        dropped: dropped.iter().sum(),
        epsilon_used: eps,
        max_det,
    };
    Ok((out, stats))
}

/// Time–frequency projection `T(τ_p, η_j) = Σ_q |𝔻(τ_p, η_j, u_q)|²·Δγ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TfrGrid {
    /// `values[j·N_t + p]`
    pub values: Vec<f64>,
    pub time: Axis,
    pub eta: Axis,
}

impl TfrGrid {
    pub fn get(&self, p: usize, j: usize) -> f64 {
        self.values[j * self.time.len + p]
    }
}

pub fn project_tfr(s: &TfgddGrid) -> TfrGrid {
    let (nt, ne, nl) = s.dims();
    let dg = s.gamma.step;
    let mut values = vec![0.0; nt * ne];
    values.par_chunks_mut(nt).enumerate().for_each(|(j, row)| {
        let col = s.column(j);
        for l in 0..nl {
            for (p, r) in row.iter_mut().enumerate() {
                *r += col[l * nt + p].norm_sqr() * dg;
            }
        }
    });
    TfrGrid { values, time: s.time, eta: s.eta }
}

/// Complex sum of each frequency column.
pub fn column_sums(g: &TfgddGrid) -> Vec<Complex64> {
    (0..g.eta.len).map(|j| g.column(j).iter().sum()).collect()
}
