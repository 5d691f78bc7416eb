//! Error-bound quantities for the reassignment and recovery estimates.
//!
//! Everything here needs the true mode parameters, so it only applies to
//! synthetic signals.

use std::f64::consts::PI;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fct::BoundaryBand;
use crate::fgsso::{MixingMatrix, RecoveredModes};
use crate::pipeline::Analysis;
use crate::ridges::{Ridge, RidgeSet};
use crate::signals::ModeSpec;
use crate::windows::GaussianWindow;

/// Number of dense samples used for suprema over a band.
pub const SUP_SAMPLES: usize = 2048;

/// Class parameters of a multicomponent signal.
///
/// `eps0` is the inverse determinant floor; [`measure_class_params`] leaves
/// it unset (infinite) and callers fill it from the actual grid with
/// [`ClassParams::with_eps0`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassParams {
    pub eps1: f64,
    pub eps2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub eps0: f64,
}

impl ClassParams {
    pub fn new(eps1: f64, eps2: f64, delta1: f64, delta2: f64) -> Result<ClassParams> {
        if !(eps1 >= 0.0 && eps2 >= 0.0) {
            return Err(Error::config("ε₁ and ε₂ must be non-negative"));
        }
        if !(delta1 > 0.0 && delta2 > 0.0) {
            return Err(Error::config("Δ₁ and Δ₂ must be positive"));
        }
        Ok(ClassParams { eps1, eps2, delta1, delta2, eps0: f64::INFINITY })
    }

    /// Sets `ε₀ = 1/min|det E₀|`.
    pub fn with_eps0(self, min_det: f64) -> Result<ClassParams> {
        if !(min_det > 0.0 && min_det.is_finite()) {
            return Err(Error::numerical(format!("determinant floor {min_det} is not positive")));
        }
        Ok(ClassParams { eps0: 1.0 / min_det, ..self })
    }
}

fn sup_abs(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let h = (hi - lo) / (SUP_SAMPLES - 1) as f64;
    let at = |i: usize| lo + i as f64 * h;
    let (mut best_i, mut best) = (0, f(lo).abs());
    for i in 1..SUP_SAMPLES {
        let v = f(at(i)).abs();
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // golden-section refinement between the neighbours of the sampled max
    let (mut a, mut b) = (at(best_i.saturating_sub(1)), at((best_i + 1).min(SUP_SAMPLES - 1)));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c).abs(), f(d).abs());
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c).abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d).abs();
        }
    }
    best.max(fc).max(fd)
}

/// `ε₁`, `ε₂` by dense sampling, and the separation constants `Δ₁`, `Δ₂`.
///
/// At every sampled frequency each pair of modes must be separated either
/// in group delay (`|Δθ′| > 2Δ₁`) or in GDD (`|Δθ″| > 2Δ₂`). Among the
/// admissible pairs, the one maximising `Δ₁Δ₂` relative to the largest
/// observed separations is returned. With one mode both are infinite.
pub fn measure_class_params(modes: &[ModeSpec], band: (f64, f64)) -> Result<ClassParams> {
    let (lo, hi) = band;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::config(format!("invalid band [{lo}, {hi}]")));
    }
    if modes.is_empty() {
        return Err(Error::config("no modes"));
    }
    let etas: Vec<f64> = (0..SUP_SAMPLES).map(|i| lo + (hi - lo) * i as f64 / (SUP_SAMPLES - 1) as f64).collect();
    for (k, m) in modes.iter().enumerate() {
        if let Some(&eta) = etas.iter().find(|&&e| !(m.amplitude(e) > 0.0)) {
            return Err(Error::config(format!("mode {k} amplitude is not positive at {eta} Hz")));
        }
    }
    let eps1 = modes.iter().map(|m| sup_abs(|e| m.amplitude_d1(e), lo, hi)).fold(0.0, f64::max);
    let eps2 = modes.iter().map(|m| sup_abs(|e| m.phase_d3(e), lo, hi)).fold(0.0, f64::max);

    if modes.len() == 1 {
        return Ok(ClassParams { eps1, eps2, delta1: f64::INFINITY, delta2: f64::INFINITY, eps0: f64::INFINITY });
    }
    // (|Δθ′|, |Δθ″|) for every pair and sample
    let mut seps = Vec::new();
    for a in 0..modes.len() {
        for b in a + 1..modes.len() {
            for &e in &etas {
                seps.push((
                    (modes[a].phase_d1(e) - modes[b].phase_d1(e)).abs(),
                    (modes[a].phase_d2(e) - modes[b].phase_d2(e)).abs(),
                ));
            }
        }
    }
    let s1 = seps.iter().map(|s| s.0).fold(0.0, f64::max) / 2.0;
    let s2 = seps.iter().map(|s| s.1).fold(0.0, f64::max) / 2.0;
    let shrink = 1.0 - 1e-9;
    let mut cand: Vec<f64> = seps.iter().map(|s| s.1 / 2.0 * shrink).filter(|&d| d > 0.0).collect();
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    let mut best: Option<(f64, f64, f64)> = None;
    for &d2 in &cand {
        let d1 = seps
            .iter()
            .filter(|s| s.1 <= 2.0 * d2)
            .map(|s| s.0 / 2.0 * shrink)
            .fold(s1, f64::min);
        if d1 <= 0.0 {
            continue;
        }
        let score = (d1 / s1) * (d2 / s2);
        if best.map_or(true, |b| score > b.0) {
            best = Some((score, d1, d2));
        }
    }
    // GD separation alone, with an arbitrarily small Δ₂
    let gd_only = seps.iter().map(|s| s.0 / 2.0 * shrink).fold(f64::INFINITY, f64::min);
    let (_, delta1, delta2) = match best {
        Some(b) => b,
        None if gd_only > 0.0 => (0.0, gd_only, s2.max(f64::MIN_POSITIVE) * 1e-6),
        None => return Err(Error::numerical("modes are not separated in GD or GDD")),
    };
    Ok(ClassParams { eps1, eps2, delta1, delta2, eps0: f64::INFINITY })
}

/// Per-mode bound quantities at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaQuantities {
    pub eta: f64,
    pub mode: usize,
    /// `Π_m`, `m ≤ 3`.
    pub pi: [f64; 4],
    /// `γ_m`, `m ≤ 2`.
    pub gamma: [f64; 3],
    /// `Λ_{m,k}`, `m ≤ 1`.
    pub lambda: [f64; 2],
    /// `M(η) = Σ_l B_l(η)`.
    pub m_eta: f64,
}

/// `Π_{m,l} = ε₁I_{m+1} + ε₂(π/3)B_l I_{m+3}`.
pub fn pi_ml(params: &ClassParams, window: &GaussianWindow, m: u32, b_l: f64) -> Result<f64> {
    Ok(params.eps1 * window.moment(m + 1)? + params.eps2 * PI / 3.0 * b_l * window.moment(m + 3)?)
}

/// `Π_m`, `γ_m` and `Λ_{m,k}` of mode `k` at `eta`.
pub fn lemma_quantities(
    params: &ClassParams,
    modes: &[ModeSpec],
    window: &GaussianWindow,
    k: usize,
    eta: f64,
) -> Result<LemmaQuantities> {
    if k >= modes.len() {
        return Err(Error::config(format!("mode {k} out of range")));
    }
    let kk = modes.len() as f64;
    let b: Vec<f64> = modes.iter().map(|m| m.amplitude(eta)).collect();
    let m_eta: f64 = b.iter().sum();
    let moment = |m: u32| window.moment(m);
    let ups = |m: u8| -> Result<f64> {
        if modes.len() == 1 {
            Ok(0.0)
        } else {
            window.upsilon(m, params.delta1, params.delta2)
        }
    };
    let (e1, e2) = (params.eps1, params.eps2);

    let mut pil = vec![[0.0; 4]; modes.len()];
    for (l, &bl) in b.iter().enumerate() {
        for m in 0..4 {
            pil[l][m] = pi_ml(params, window, m as u32, bl)?;
        }
    }
    let mut pi = [0.0; 4];
    for row in &pil {
        for m in 0..4 {
            pi[m] += row[m];
        }
    }
    let ups_m = [ups(0)?, ups(1)?, ups(2)?];
    let mut gamma = [0.0; 3];
    for m in 0..3 {
        let others: f64 = (0..modes.len()).filter(|&l| l != k).map(|l| b[l] * ups_m[m]).sum();
        gamma[m] = b[k] * moment(m as u32)? + others + pi[m];
    }
    let mut lambda = [0.0; 2];
    for m in 0..2 {
        let mu = m as u32;
        let mut v = e1 * kk * moment(mu)? + e1 * e2 * PI * kk * moment(mu + 3)? + e2 * PI * m_eta * moment(mu + 2)?;
        for l in (0..modes.len()).filter(|&l| l != k) {
            let dgd = (modes[k].phase_d1(eta) - modes[l].phase_d1(eta)).abs();
            let dgdd = (modes[k].phase_d2(eta) - modes[l].phase_d2(eta)).abs();
            v += 2.0 * PI * (dgd * (b[l] * ups_m[m] + pil[l][m]) + dgdd * (b[l] * ups_m[m + 1] + pil[l][m + 1]));
        }
        lambda[m] = v;
    }
    Ok(LemmaQuantities { eta, mode: k, pi, gamma, lambda, m_eta })
}

/// `(bound_t, bound_r) = ε₀/(2π)·(Λ₀γ₂ + Λ₁γ₁, Λ₀γ₁ + Λ₁γ₀)`.
pub fn theorem1_rhs(params: &ClassParams, q: &LemmaQuantities) -> Result<(f64, f64)> {
    if !params.eps0.is_finite() {
        return Err(Error::config("ε₀ has not been measured"));
    }
    let c = params.eps0 / (2.0 * PI);
    let (l, g) = (&q.lambda, &q.gamma);
    Ok((c * (l[0] * g[2] + l[1] * g[1]), c * (l[0] * g[1] + l[1] * g[0])))
}

/// Recovery budget at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryBudget {
    pub eta: f64,
    pub omega0: f64,
    /// `Ω₀·Σ_l|b_{l,k}|` per mode.
    pub recovery_bound: Vec<f64>,
}

/// `Ω₀(η)` from ridge points `(τ̌_l, γ̌_l)` and the recovery budget of each
/// mode given the inverse mixing matrix `B = A⁻¹`.
pub fn omega0(
    params: &ClassParams,
    modes: &[ModeSpec],
    ridge_points: &[(f64, f64)],
    window: &GaussianWindow,
    mixing: &MixingMatrix,
) -> Result<RecoveryBudget> {
    let k = modes.len();
    if ridge_points.len() != k || mixing.inv.nrows() != k {
        return Err(Error::config("ridge, mode and matrix counts differ"));
    }
    let eta = mixing.eta;
    let (i1, i2, i3) = (window.moment(1)?, window.moment(2)?, window.moment(3)?);
    let m_eta: f64 = modes.iter().map(|m| m.amplitude(eta)).sum();
    let mut om = params.eps1 * k as f64 * i1 + params.eps2 * PI / 3.0 * m_eta * i3;
    for (m, &(tau, gam)) in modes.iter().zip(ridge_points) {
        om += m.amplitude(eta)
            * (2.0 * PI * (tau - m.phase_d1(eta)).abs() * i1 + PI * (gam - m.phase_d2(eta)).abs() * i2);
    }
    let recovery_bound = (0..k).map(|c| om * (0..k).map(|r| mixing.inv[(r, c)].norm()).sum::<f64>()).collect();
    Ok(RecoveryBudget { eta, omega0: om, recovery_bound })
}

/// One row of the bound report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow {
    pub eta_hz: f64,
    pub mode: usize,
    pub bound_t: f64,
    pub bound_r: f64,
    pub omega0: f64,
    pub recovery_bound: f64,
    pub measured_t_err: f64,
    pub measured_r_err: f64,
    pub measured_recovery_err: f64,
}

impl BoundRow {
    /// Whether every measured error is within its bound. Missing
    /// measurements (NaN) count as satisfied.
    pub fn holds(&self) -> bool {
        let ok = |m: f64, b: f64| m.is_nan() || m <= b;
        ok(self.measured_t_err, self.bound_t)
            && ok(self.measured_r_err, self.bound_r)
            && ok(self.measured_recovery_err, self.recovery_bound)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn violations(&self) -> impl Iterator<Item = &BoundRow> {
        self.rows.iter().filter(|r| !r.holds())
    }
}

/// Reorders `set` so ridge `k` follows mode `k`, minimising the summed mean
/// group-delay distance over all assignments.
pub fn match_ridges_to_modes(mut set: RidgeSet, modes: &[ModeSpec]) -> Result<RidgeSet> {
    let k = modes.len();
    if set.ridges.len() != k {
        return Err(Error::config(format!("{} ridges for {k} modes", set.ridges.len())));
    }
    let cost: Vec<Vec<f64>> = set
        .ridges
        .iter()
        .map(|r| {
            modes
                .iter()
                .map(|m| (0..r.len()).map(|i| (r.tau[i] - m.phase_d1(r.eta[i])).abs()).sum::<f64>() / r.len().max(1) as f64)
                .collect()
        })
        .collect();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let c: f64 = p.iter().enumerate().map(|(mode, &ri)| cost[ri][mode]).sum();
        if c < best.0 {
            best = (c, p.to_vec());
        }
    });
    let mut slots: Vec<Option<Ridge>> = std::mem::take(&mut set.ridges).into_iter().map(Some).collect();
    set.ridges = best.1.iter().map(|&i| slots[i].take().expect("permutation")).collect();
    Ok(set)
}

fn permute(v: &mut [usize], i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}

/// Bound report of a synthetic signal over the recovery band.
///
/// `ridges` must already be ordered like `modes` (see
/// [`match_ridges_to_modes`]) and `recovered` must come from them. Class
/// parameters are measured between the boundary bands. Columns where a
/// mode's box `Z_k` meets no masked cell have NaN Theorem-1 entries.
pub fn bound_report(
    analysis: &Analysis,
    modes: &[ModeSpec],
    ridges: &RidgeSet,
    recovered: &RecoveredModes,
    recovery_window: &GaussianWindow,
    boundary: &BoundaryBand,
    epsilon_rel: f64,
) -> Result<BoundReport> {
    let eta = analysis.eta_axis();
    let band = (eta.value(0) + boundary.freq_hz, eta.last() - boundary.freq_hz);
    let params = measure_class_params(modes, band)?;
    let (res, _) = analysis.theorem1_residuals(modes, params.delta1, params.delta2, epsilon_rel)?;
    let window = analysis.window();
    let mut t1: BTreeMap<(usize, usize), (f64, f64, f64, f64)> = BTreeMap::new();
    for mr in &res {
        for c in &mr.columns {
            let p = params.with_eps0(c.min_det)?;
            let q = lemma_quantities(&p, modes, window, mr.mode, c.eta)?;
            let (bt, br) = theorem1_rhs(&p, &q)?;
            t1.insert((c.j, mr.mode), (bt, br, c.max_t_err, c.max_r_err));
        }
    }
    let d_eta = recovered.spectra.first().map(|s| s.d_eta).ok_or_else(|| Error::config("nothing recovered"))?;
    let n = recovered.spectra[0].len();
    let mut rows = Vec::new();
    for mm in &recovered.diagnostics {
        let j = eta.bin(mm.eta).ok_or_else(|| Error::config("recovery and analysis axes differ"))?;
        let pts: Vec<(f64, f64)> =
            ridges.ridges.iter().map(|r| r.at(j).ok_or_else(|| Error::config("ridge misses a recovered column"))).collect::<Result<_>>()?;
        let budget = omega0(&params, modes, &pts, recovery_window, mm)?;
        let bin = ((mm.eta / d_eta).round() as isize).rem_euclid(n as isize) as usize;
        for (k, m) in modes.iter().enumerate() {
            let (bt, br, mt, mr) = t1.get(&(j, k)).copied().unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
            rows.push(BoundRow {
                eta_hz: mm.eta,
                mode: k,
                bound_t: bt,
                bound_r: br,
                omega0: budget.omega0,
                recovery_bound: budget.recovery_bound[k],
                measured_t_err: mt,
                measured_r_err: mr,
                measured_recovery_err: (recovered.spectra[k].bins[bin] - m.value(mm.eta)).norm(),
            });
        }
    }
    Ok(BoundReport { rows })
}
