//! Mode recovery by group signal separation.
//!
//! Near a ridge point `(τ̌_k, γ̌_k)` the transform is approximately a linear
//! combination of the mode spectra,
//!
//! ```text
//! D^g(τ̌_k, η, γ̌_k) ≈ Σ_l x̂_l(η)·a_{k,l},   a_{k,l} = C(g)(τ̌_l − τ̌_k, γ̌_l − γ̌_k),
//! ```
//!
//! so solving the `K×K` system at each frequency separates the modes, even
//! where their group delays coincide as long as the GDDs differ.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fct::{fct_point, BoundaryBand};
use crate::ridges::RidgeSet;
use crate::signals::{inverse_transform, SampledSignal, Spectrum};
use crate::windows::GaussianWindow;

/// Smallest-to-largest singular value ratio below which the pseudo-inverse
/// is used.
pub const PSEUDO_INVERSE_CUTOFF: f64 = 1e-10;

/// Mixing matrix at one frequency with its inverse and conditioning.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingMatrix {
    pub eta: f64,
    pub a: DMatrix<Complex64>,
    /// Inverse, or pseudo-inverse when `pseudo` is set.
    pub inv: DMatrix<Complex64>,
    pub inf_norm_inv: f64,
    pub cond2: f64,
    pub pseudo: bool,
}

/// `a_{k,l} = C(g)(τ̌_l − τ̌_k, γ̌_l − γ̌_k)` for ridge points `(τ̌_k, γ̌_k)`.
pub fn assemble_a(points: &[(f64, f64)], eta: f64, window: &GaussianWindow) -> MixingMatrix {
    let k = points.len();
    let a = DMatrix::from_fn(k, k, |r, c| {
        if r == c {
            Complex64::new(1.0, 0.0)
        } else {
            window.kernel(0, points[c].0 - points[r].0, points[c].1 - points[r].1)
        }
    });
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond2 = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let pseudo = !(smin >= PSEUDO_INVERSE_CUTOFF * smax);
    let inv = if pseudo {
        svd.pseudo_inverse(PSEUDO_INVERSE_CUTOFF * smax).expect("SVD computed with both factors")
    } else {
        a.clone().try_inverse().expect("well-conditioned matrix is invertible")
    };
    let inf_norm_inv = (0..k).map(|r| (0..k).map(|c| inv[(r, c)].norm()).sum::<f64>()).fold(0.0, f64::max);
    MixingMatrix { eta, a, inv, inf_norm_inv, cond2, pseudo }
}

/// Mixing matrix of the ridge set at frequency column `j`.
pub fn assemble_a_at(ridges: &RidgeSet, j: usize, window: &GaussianWindow) -> Result<MixingMatrix> {
    let pts = ridge_points(ridges, j)?;
    Ok(assemble_a(&pts, ridges.eta.value(j), window))
}

fn ridge_points(ridges: &RidgeSet, j: usize) -> Result<Vec<(f64, f64)>> {
    ridges
        .ridges
        .iter()
        .enumerate()
        .map(|(k, r)| r.at(j).ok_or_else(|| Error::config(format!("ridge {k} undefined at column {j}"))))
        .collect()
}

#[derive(Clone, Debug)]
pub struct RecoveredModes {
    /// Per mode, all `N` DFT bins (zero outside the recovery band).
    pub spectra: Vec<Spectrum>,
    pub time_modes: Vec<SampledSignal>,
    /// One matrix per recovered frequency column.
    pub diagnostics: Vec<MixingMatrix>,
    /// Recovered frequency columns `[lo, hi)` of the ridge axis.
    pub band: (usize, usize),
}

/// Spectra of the modes in `ridges`, one linear solve per frequency.
///
/// `D^g` is evaluated at the exact ridge coordinates with the recovery
/// window; the matrix uses the same window. Columns within
/// `boundary.freq_hz` of the axis ends are left at zero.
pub fn recover_modes(
    signal: &SampledSignal,
    ridges: &RidgeSet,
    recovery_window: &GaussianWindow,
    boundary: &BoundaryBand,
) -> Result<RecoveredModes> {
    if ridges.ridges.is_empty() {
        return Err(Error::config("no ridges to recover"));
    }
    let (lo, hi) = ridges.common_support().ok_or_else(|| Error::config("ridges have no common support"))?;
    let eta_lo = ridges.eta.value(0) + boundary.freq_hz;
    let eta_hi = ridges.eta.last() - boundary.freq_hz;
    let cols: Vec<usize> = (lo..hi).filter(|&j| (eta_lo..=eta_hi).contains(&ridges.eta.value(j))).collect();
    if cols.is_empty() {
        return Err(Error::config("the recovery band is empty after removing the boundary band"));
    }
    let n = signal.len();
    let d_eta = signal.d_eta();
    let per_col: Vec<(usize, MixingMatrix, Vec<Complex64>)> = cols
        .par_iter()
        .map(|&j| {
            let eta = ridges.eta.value(j);
            let pts = ridge_points(ridges, j)?;
            let mm = assemble_a(&pts, eta, recovery_window);
            // back to the DFT convention of samples starting at t0
            let undo = Complex64::from_polar(1.0, 2.0 * PI * eta * signal.t0);
            let d = DMatrix::from_iterator(
                pts.len(),
                1,
                pts.iter().map(|&(t, g)| fct_point(signal, t, eta, g, recovery_window, 0) * undo),
            );
            let x = &mm.inv * d;
            let bin = ((eta / d_eta).round() as isize).rem_euclid(n as isize) as usize;
            Ok((bin, mm, x.iter().copied().collect()))
        })
        .collect::<Result<_>>()?;
    if per_col.iter().all(|c| c.1.pseudo) {
        return Err(Error::numerical("every mixing matrix in the band is singular"));
    }
    let k = ridges.ridges.len();
    let mut spectra: Vec<Spectrum> =
        (0..k).map(|_| Spectrum { bins: vec![Complex64::new(0.0, 0.0); n], d_eta }).collect();
    let mut diagnostics = Vec::with_capacity(per_col.len());
    for (bin, mm, x) in per_col {
        for (s, v) in spectra.iter_mut().zip(x) {
            s.bins[bin] = v;
        }
        diagnostics.push(mm);
    }
    let time_modes = spectra.iter().map(|s| inverse_transform(s, signal.t0)).collect::<Result<_>>()?;
    Ok(RecoveredModes { spectra, time_modes, diagnostics, band: (cols[0], cols[cols.len() - 1] + 1) })
}

/// Per-frequency `‖A⁻¹‖_∞`, `κ₂(A)` and pseudo-inverse flags.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsProfile {
    pub eta: Vec<f64>,
    pub inf_norm_inv: Vec<f64>,
    pub cond2: Vec<f64>,
    pub pseudo: Vec<bool>,
}

pub fn diagnostics_profile(per_eta: &[MixingMatrix]) -> DiagnosticsProfile {
    DiagnosticsProfile {
        eta: per_eta.iter().map(|m| m.eta).collect(),
        inf_norm_inv: per_eta.iter().map(|m| m.inf_norm_inv).collect(),
        cond2: per_eta.iter().map(|m| m.cond2).collect(),
        pseudo: per_eta.iter().map(|m| m.pseudo).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_is_identity() {
        let w = GaussianWindow::new(10.0).unwrap();
        let m = assemble_a(&[(0.2, 1e-3)], 100.0, &w);
        assert_eq!(m.a[(0, 0)], Complex64::new(1.0, 0.0));
        assert!((m.inf_norm_inv - 1.0).abs() < 1e-15);
        assert!((m.cond2 - 1.0).abs() < 1e-12);
        assert!(!m.pseudo);
    }

    #[test]
    fn duplicate_ridges_use_pseudo_inverse() {
        let w = GaussianWindow::new(10.0).unwrap();
        let m = assemble_a(&[(0.2, 1e-3), (0.2, 1e-3)], 100.0, &w);
        assert!(m.pseudo);
        assert!(m.cond2 > 1e10);
    }

    #[test]
    fn matrix_is_hermitian() {
        let w = GaussianWindow::new(17.1).unwrap();
        let m = assemble_a(&[(0.2, 1e-3), (0.21, 5e-4), (0.19, -2e-4)], 100.0, &w);
        for r in 0..3 {
            for c in 0..3 {
                assert!((m.a[(r, c)] - m.a[(c, r)].conj()).norm() < 1e-15);
            }
        }
    }
}
