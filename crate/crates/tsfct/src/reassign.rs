//! Group-delay and GDD reference functions.
//!
//! For a frequency-domain linear chirp, `∂_η D^g` and `∂_η D^{ξg}` are linear
//! combinations of `D^g, D^{ξg}, D^{ξ²g}` whose coefficients carry the GD and
//! GDD. Solving that 2×2 system per cell gives
//!
//! ```text
//! t̂ = t + (1/2π)·Im[(D^{ξ²g}D^{g′} − D^{ξg}D^{ξg′} − D^{ξg}D^g) / det E₀]
//! r̂ = γ + (1/2π)·Im[(D^g D^{ξg′} − D^{ξg}D^{g′} + (D^g)²) / det E₀]
//! det E₀ = D^g D^{ξ²g} − (D^{ξg})²
//! ```
//!
//! For the Gaussian window `D^{g′} = −D^{ξg}/σ²` and `D^{ξg′} = −D^{ξ²g}/σ²`,
//! so three transforms (`m = 0, 1, 2`) suffice. Cells with small `|det E₀|`
//! are unreliable and masked out.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, TfgddGrid};
use crate::signals::ModeSpec;
use crate::windows::GaussianWindow;

/// GD and GDD estimates of one cell with its `det E₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellEstimate {
    pub t_hat: f64,
    pub r_hat: f64,
    pub det: Complex64,
}

/// Reference functions at `(t, γ)` from `D^g, D^{ξg}, D^{ξ²g}`.
///
/// `reduction` is the Gaussian coefficient `−1/σ²` (see
/// [`GaussianWindow::derivative_reduction`]).
#[inline]
pub fn reference_cell(t: f64, gamma: f64, d0: Complex64, d1: Complex64, d2: Complex64, reduction: f64) -> CellEstimate {
    let dgp = d1 * reduction;
    let dxgp = d2 * reduction;
    let det = d2 * d0 - d1 * d1;
    let nt = d2 * dgp - d1 * dxgp - d1 * d0;
    let nr = d0 * dxgp - d1 * dgp + d0 * d0;
    CellEstimate { t_hat: t + (nt / det).im / (2.0 * PI), r_hat: gamma + (nr / det).im / (2.0 * PI), det }
}

/// The same estimates through Cramer's rule on `E₀·a = ∂_η[D^g, D^{ξg}]`.
pub fn reference_cell_cramer(
    t: f64,
    gamma: f64,
    d0: Complex64,
    d1: Complex64,
    d2: Complex64,
    reduction: f64,
) -> CellEstimate {
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    let de0 = -i2pi * t * d0 - i2pi * gamma * d1 - d1 * reduction;
    let de1 = -i2pi * t * d1 - i2pi * gamma * d2 - d2 * reduction - d0;
    let det0 = d0 * d2 - d1 * d1;
    let det1 = de0 * d2 - d1 * de1;
    let det2 = d0 * de1 - de0 * d1;
    CellEstimate { t_hat: -(det1 / det0).im / (2.0 * PI), r_hat: -(det2 / det0).im / (2.0 * PI), det: det0 }
}

/// Order-`N` reference functions from `d[m] = D^{ξ^m g}`, `m ∈ [0, 2N−2]`.
///
/// Exact for spectra `e^{−p(η)}e^{−i2πθ(η)}` with polynomial `p`, `θ` of
/// degree `N`. `N = 2` reproduces [`reference_cell`].
pub fn high_order_cell(t: f64, gamma: f64, d: &[Complex64], order: usize, reduction: f64) -> CellEstimate {
    let n = order;
    debug_assert!(d.len() > 2 * n - 2);
    let zero = Complex64::new(0.0, 0.0);
    let e0 = DMatrix::from_fn(n, n, |i, j| d[i + j]);
    // D^{ξ^i g′} = reduction·D^{ξ^{i+1} g}
    let deriv = |i: usize| d[i + 1] * reduction;
    let count = |i: usize| if i == 0 { zero } else { d[i - 1] * i as f64 };
    let with_col = |col: usize, f: &dyn Fn(usize) -> Complex64| {
        let mut m = e0.clone();
        for i in 0..n {
            m[(i, col)] = f(i);
        }
        m.determinant()
    };
    let det0 = e0.determinant();
    let t_num = with_col(0, &deriv) + with_col(0, &count);
    let r_num = with_col(1, &deriv) + with_col(1, &count);
    CellEstimate {
        t_hat: t + (t_num / det0).im / (2.0 * PI),
        r_hat: gamma + (r_num / det0).im / (2.0 * PI),
        det: det0,
    }
}

/// Per-cell GD/GDD estimates, `|det E₀|`, and the selection mask.
///
/// Layout matches [`TfgddGrid`]. Unmasked cells hold `NaN` estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct ReassignmentField {
    pub t_hat: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub det_e0_mag: Vec<f64>,
    pub mask: Vec<bool>,
    pub epsilon_used: f64,
    pub time: Axis,
    pub eta: Axis,
    pub gamma: Axis,
}

impl ReassignmentField {
    #[inline]
    pub fn index(&self, n: usize, j: usize, l: usize) -> usize {
        (j * self.gamma.len + l) * self.time.len + n
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    fn from_estimates(est: Vec<CellEstimate>, time: Axis, eta: Axis, gamma: Axis, epsilon_rel: f64) -> ReassignmentField {
        let det_e0_mag: Vec<f64> = est.iter().map(|e| e.det.norm()).collect();
        let max = det_e0_mag.iter().copied().fold(0.0, f64::max);
        let epsilon_used = epsilon_rel * max;
        let mut t_hat = Vec::with_capacity(est.len());
        let mut r_hat = Vec::with_capacity(est.len());
        let mut mask = Vec::with_capacity(est.len());
        for (e, &d) in est.iter().zip(&det_e0_mag) {
            let ok = d > epsilon_used && d > f64::MIN_POSITIVE && e.t_hat.is_finite() && e.r_hat.is_finite();
            mask.push(ok);
            t_hat.push(if ok { e.t_hat } else { f64::NAN });
            r_hat.push(if ok { e.r_hat } else { f64::NAN });
        }
        ReassignmentField { t_hat, r_hat, det_e0_mag, mask, epsilon_used, time, eta, gamma }
    }
}

pub(crate) fn check_epsilon(epsilon_rel: f64) -> Result<()> {
    if !(epsilon_rel > 0.0 && epsilon_rel < 1.0) {
        return Err(Error::config(format!("relative threshold must lie in (0, 1), got {epsilon_rel}")));
    }
    Ok(())
}

/// Reference functions over full `m = 0, 1, 2` grids.
pub fn reference_functions(
    d0: &TfgddGrid,
    d1: &TfgddGrid,
    d2: &TfgddGrid,
    window: &GaussianWindow,
    epsilon_rel: f64,
) -> Result<ReassignmentField> {
    check_epsilon(epsilon_rel)?;
    if !d0.same_axes(d1) || !d0.same_axes(d2) {
        return Err(Error::config("transform grids have different axes"));
    }
    if (d0.m, d1.m, d2.m) != (0, 1, 2) {
        return Err(Error::config("expected window powers 0, 1, 2"));
    }
    let c = window.derivative_reduction();
    let (nt, ne, nl) = d0.dims();
    let mut est = Vec::with_capacity(d0.values.len());
    for j in 0..ne {
        for l in 0..nl {
            for n in 0..nt {
                let i = d0.index(n, j, l);
                est.push(reference_cell(d0.time.value(n), d0.gamma.value(l), d0.values[i], d1.values[i], d2.values[i], c));
            }
        }
    }
    Ok(ReassignmentField::from_estimates(est, d0.time, d0.eta, d0.gamma, epsilon_rel))
}

/// Order-`N` reference functions from grids with window powers `0..=2N−2`.
pub fn high_order_reference(
    grids: &[TfgddGrid],
    window: &GaussianWindow,
    order: usize,
    epsilon_rel: f64,
) -> Result<ReassignmentField> {
    check_epsilon(epsilon_rel)?;
    if !(2..=4).contains(&order) {
        return Err(Error::config(format!("order must be 2, 3 or 4, got {order}")));
    }
    let need = 2 * order - 1;
    if grids.len() < need {
        return Err(Error::config(format!("order {order} needs window powers 0..={}", need - 1)));
    }
    for (m, g) in grids.iter().enumerate().take(need) {
        if g.m as usize != m || !g.same_axes(&grids[0]) {
            return Err(Error::config("grids must share axes and be ordered by window power"));
        }
    }
    let g0 = &grids[0];
    let c = window.derivative_reduction();
    let (nt, ne, nl) = g0.dims();
    let mut est = Vec::with_capacity(g0.values.len());
    let mut d = vec![Complex64::new(0.0, 0.0); need];
    for j in 0..ne {
        for l in 0..nl {
            for n in 0..nt {
                let i = g0.index(n, j, l);
                for (m, v) in d.iter_mut().enumerate() {
                    *v = grids[m].values[i];
                }
                est.push(high_order_cell(g0.time.value(n), g0.gamma.value(l), &d, order, c));
            }
        }
    }
    Ok(ReassignmentField::from_estimates(est, g0.time, g0.eta, g0.gamma, epsilon_rel))
}

/// Worst GD/GDD residuals of one mode in one frequency column, over the
/// masked cells of the box `Z_k = {|t − θ′_k| < Δ₁, |γ − θ″_k| < Δ₂}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnResidual {
    pub j: usize,
    pub eta: f64,
    pub cells: usize,
    pub max_t_err: f64,
    pub max_r_err: f64,
    /// Smallest `|det E₀|` among those cells.
    pub min_det: f64,
}

/// Residuals of each mode; `columns` is empty when `Z_k` meets no masked cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeResiduals {
    pub mode: usize,
    pub columns: Vec<ColumnResidual>,
}

impl ModeResiduals {
    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Accumulates residuals cell by cell; shared by the grid and streaming paths.
#[derive(Clone, Debug)]
pub struct ResidualAccumulator {
    modes: Vec<ModeSpec>,
    delta1: f64,
    delta2: f64,
    eta: Axis,
    cols: Vec<Vec<ColumnResidual>>,
}

impl ResidualAccumulator {
    pub fn new(modes: &[ModeSpec], delta1: f64, delta2: f64, eta: Axis) -> ResidualAccumulator {
        let cols = modes
            .iter()
            .map(|_| {
                (0..eta.len)
                    .map(|j| ColumnResidual {
                        j,
                        eta: eta.value(j),
                        cells: 0,
                        max_t_err: 0.0,
                        max_r_err: 0.0,
                        min_det: f64::INFINITY,
                    })
                    .collect()
            })
            .collect();
        ResidualAccumulator { modes: modes.to_vec(), delta1, delta2, eta, cols }
    }

    #[inline]
    pub fn add(&mut self, j: usize, t: f64, gamma: f64, est: &CellEstimate) {
        let eta = self.eta.value(j);
        for (k, m) in self.modes.iter().enumerate() {
            let gd = m.phase_d1(eta);
            let gdd = m.phase_d2(eta);
            if (t - gd).abs() < self.delta1 && (gamma - gdd).abs() < self.delta2 {
                let c = &mut self.cols[k][j];
                c.cells += 1;
                c.max_t_err = c.max_t_err.max((est.t_hat - gd).abs());
                c.max_r_err = c.max_r_err.max((est.r_hat - gdd).abs());
                c.min_det = c.min_det.min(est.det.norm());
            }
        }
    }

    pub fn finish(self) -> Vec<ModeResiduals> {
        self.cols
            .into_iter()
            .enumerate()
            .map(|(mode, cols)| ModeResiduals { mode, columns: cols.into_iter().filter(|c| c.cells > 0).collect() })
            .collect()
    }
}

/// `|t̂ − θ′_k|` and `|r̂ − θ″_k|` over masked cells inside each `Z_k`.
pub fn theorem1_residuals(field: &ReassignmentField, truth: &[ModeSpec], delta1: f64, delta2: f64) -> Vec<ModeResiduals> {
    let mut acc = ResidualAccumulator::new(truth, delta1, delta2, field.eta);
    for j in 0..field.eta.len {
        for l in 0..field.gamma.len {
            for n in 0..field.time.len {
                let i = field.index(n, j, l);
                if field.mask[i] {
                    let est = CellEstimate {
                        t_hat: field.t_hat[i],
                        r_hat: field.r_hat[i],
                        det: Complex64::new(field.det_e0_mag[i], 0.0),
                    };
                    acc.add(j, field.time.value(n), field.gamma.value(l), &est);
                }
            }
        }
    }
    acc.finish()
}
