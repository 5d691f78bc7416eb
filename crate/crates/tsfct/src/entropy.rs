//! Rényi entropy of a time–frequency–GDD distribution and window selection.
//!
//! ```text
//! E = 1/(1−ℓ) · log₂[ Σ|D|^{2ℓ}·V / (Σ|D|²·V)^ℓ ]
//! ```
//!
//! with `V = Δt·Δη·Δγ`. Lower entropy means a more concentrated
//! representation; the window width `σ` minimizing it is the default choice.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{FrequencyBins, GammaGrid, TfgddGrid};
use crate::pipeline::{power_sums_of, Analysis};
use crate::signals::SampledSignal;
use crate::windows::GaussianWindow;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyConfig {
    /// Rényi order `ℓ > 1`.
    pub order: f64,
}

impl Default for EntropyConfig {
    fn default() -> EntropyConfig {
        EntropyConfig { order: 2.5 }
    }
}

impl EntropyConfig {
    pub fn new(order: f64) -> Result<EntropyConfig> {
        if !(order > 1.0) || !order.is_finite() {
            return Err(Error::config(format!("Rényi order must exceed 1, got {order}")));
        }
        Ok(EntropyConfig { order })
    }
}

/// Entropy from `Σ|D|^{2ℓ}`, `Σ|D|²` and the cell volume.
pub fn entropy_from_sums(sum_hi: f64, sum_sq: f64, volume: f64, order: f64) -> Result<f64> {
    if !(sum_sq > 0.0) {
        return Err(Error::numerical("zero-energy distribution"));
    }
    let lv = volume.log2();
    Ok((sum_hi.log2() + lv - order * (sum_sq.log2() + lv)) / (1.0 - order))
}

pub fn renyi_entropy(grid: &TfgddGrid, cfg: &EntropyConfig) -> Result<f64> {
    let (hi, lo) = power_sums_of(&grid.values, cfg.order);
    entropy_from_sums(hi, lo, grid.cell_volume(), cfg.order)
}

/// Entropy of the raw `m = 0` transform, computed slice by slice.
pub fn signal_entropy(
    signal: &SampledSignal,
    window: &GaussianWindow,
    ggrid: &GammaGrid,
    cfg: &EntropyConfig,
    bins: FrequencyBins,
) -> Result<f64> {
    let a = Analysis::new(signal, *window, *ggrid, bins)?;
    let (hi, lo) = a.power_sums(cfg.order);
    let v = a.time_axis().step * a.eta_axis().step * a.gamma_axis().step;
    entropy_from_sums(hi, lo, v, cfg.order)
}

/// Result of [`optimize_sigma`]: the minimizer and every evaluated point,
/// sorted by `σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSearch {
    pub sigma_opt: f64,
    pub entropy_opt: f64,
    pub curve: Vec<(f64, f64)>,
}

/// Log-spaced scan of `n_coarse` widths, then golden-section refinement in
/// `log σ` between the neighbours of the best scan point.
///
/// The refinement assumes the curve is unimodal near its minimum; the whole
/// curve is returned so that assumption can be checked.
pub fn optimize_sigma(
    signal: &SampledSignal,
    ggrid: &GammaGrid,
    sigma_range: (f64, f64),
    cfg: &EntropyConfig,
    n_coarse: usize,
) -> Result<SigmaSearch> {
    let (lo, hi) = sigma_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::config(format!("invalid width range {lo}:{hi}")));
    }
    if n_coarse < 8 {
        return Err(Error::config("the coarse scan needs at least 8 points"));
    }
    let eval = |s: f64| -> Result<f64> {
        signal_entropy(signal, &GaussianWindow::new(s)?, ggrid, cfg, FrequencyBins::NonNegative)
    };
    let (llo, lhi) = (lo.ln(), hi.ln());
    let coarse: Vec<f64> = (0..n_coarse).map(|i| (llo + (lhi - llo) * i as f64 / (n_coarse - 1) as f64).exp()).collect();
    let values = coarse.par_iter().map(|&s| eval(s)).collect::<Result<Vec<f64>>>()?;
    let mut curve: Vec<(f64, f64)> = coarse.iter().copied().zip(values.iter().copied()).collect();

    let best = argmin(&values);
    let mut a = coarse[best.saturating_sub(1)].ln();
    let mut b = coarse[(best + 1).min(n_coarse - 1)].ln();
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c.exp())?;
    let mut fd = eval(d.exp())?;
    curve.push((c.exp(), fc));
    curve.push((d.exp(), fd));
    while (b - a) > 1e-3 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c.exp())?;
            curve.push((c.exp(), fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d.exp())?;
            curve.push((d.exp(), fd));
        }
    }
    curve.sort_by(|x, y| x.0.total_cmp(&y.0));
    curve.dedup_by(|x, y| x.0 == y.0);
    let i = argmin(&curve.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(SigmaSearch { sigma_opt: curve[i].0, entropy_opt: curve[i].1, curve })
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}
