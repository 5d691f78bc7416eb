//! Ridge extraction from a squeezed grid.
//!
//! Ridges are found one at a time by dynamic programming over frequency
//! columns. The state is a `(τ, u)` cell; moving from column `j−1` to `j`, a
//! ridge at GDD `u` is expected to advance in time by `u·Δη`, and deviations
//! from that prediction (in time cells) and changes of `u` (in GDD cells) are
//! limited to `jump_t`/`jump_g` and penalized quadratically. After each pass
//! the neighbourhood of the found ridge is cleared.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Axis, TfgddGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgeOptions {
    pub k_modes: usize,
    /// Largest deviation from the predicted time cell per column.
    pub jump_t: usize,
    /// Largest GDD change per column, in cells.
    pub jump_g: usize,
    /// Half-width in time cells of the neighbourhood cleared around a found
    /// ridge.
    pub clear_radius: usize,
    /// Half-width in s/Hz of the cleared neighbourhood along the GDD axis
    /// (at least `clear_radius` cells). `None` uses `1/(2πσ²)`, the GDD
    /// scale of the window, so one mode's spread in GDD is removed whole.
    pub clear_gdd: Option<f64>,
    /// Penalty per squared cell, relative to the column's peak energy.
    pub penalty: f64,
    /// Columns within this many Hz of either end of the frequency axis are
    /// replaced by a linear extrapolation of the adjacent interior.
    pub boundary_hz: f64,
}

impl Default for RidgeOptions {
    fn default() -> RidgeOptions {
        RidgeOptions { k_modes: 2, jump_t: 2, jump_g: 3, clear_radius: 2, clear_gdd: None, penalty: 0.02, boundary_hz: 0.0 }
    }
}

/// One extracted ridge on columns `j_start..j_start + len`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ridge {
    pub j_start: usize,
    pub eta: Vec<f64>,
    /// Group delay `τ̌(η)` in seconds.
    pub tau: Vec<f64>,
    /// GDD `γ̌(η)` in s/Hz.
    pub gamma: Vec<f64>,
    /// `|𝔻|` at the selected cells.
    pub amplitude: Vec<f64>,
    /// Set when the ridge is much weaker than the strongest one and may be
    /// residue rather than a mode.
    pub low_confidence: bool,
}

impl Ridge {
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn j_end(&self) -> usize {
        self.j_start + self.len()
    }

    pub fn contains(&self, j: usize) -> bool {
        j >= self.j_start && j < self.j_end()
    }

    /// `(τ̌, γ̌)` at column `j`, if inside the support.
    pub fn at(&self, j: usize) -> Option<(f64, f64)> {
        self.contains(j).then(|| (self.tau[j - self.j_start], self.gamma[j - self.j_start]))
    }

    pub fn total_amplitude(&self) -> f64 {
        self.amplitude.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RidgeSet {
    pub ridges: Vec<Ridge>,
    pub eta: Axis,
}

impl RidgeSet {
    /// Columns where every ridge is defined.
    pub fn common_support(&self) -> Option<(usize, usize)> {
        let lo = self.ridges.iter().map(|r| r.j_start).max()?;
        let hi = self.ridges.iter().map(|r| r.j_end()).min()?;
        (hi > lo).then_some((lo, hi))
    }
}

pub fn extract_ridges(s: &TfgddGrid, opts: &RidgeOptions) -> Result<RidgeSet> {
    if opts.k_modes == 0 {
        return Err(Error::config("at least one ridge must be requested"));
    }
    if opts.jump_t > 7 || opts.jump_g > 7 {
        return Err(Error::config("jump limits above 7 cells are not supported"));
    }
    let (nt, ne, nl) = s.dims();
    let mut energy: Vec<f64> = s.values.par_iter().map(Complex64::norm_sqr).collect();
    let global = energy.iter().copied().fold(0.0, f64::max);
    if !(global > 0.0) {
        return Err(Error::numerical("the squeezed grid is empty"));
    }
    // columns carrying mass; the ridge support is their overall extent
    let floor = global * 1e-12;
    let active: Vec<usize> = (0..ne).filter(|&j| column(&energy, j, nt * nl).iter().any(|&e| e > floor)).collect();
    let (j_lo, j_hi) = (active[0], active[active.len() - 1] + 1);

    let clear_gdd = opts.clear_gdd.unwrap_or(1.0 / (2.0 * std::f64::consts::PI * s.sigma * s.sigma));
    if !(clear_gdd >= 0.0) {
        return Err(Error::config("the cleared GDD width must be non-negative"));
    }
    let rq = opts.clear_radius.max((clear_gdd / s.gamma.step.abs()).ceil() as usize);

    let mut ridges = Vec::with_capacity(opts.k_modes);
    for _ in 0..opts.k_modes {
        let path = dp_path(&energy, s, j_lo, j_hi, opts);
        let ridge = refine(&energy, s, j_lo, &path);
        for (i, &(q, p)) in path.iter().enumerate() {
            let col = column_mut(&mut energy, j_lo + i, nt * nl);
            let r = opts.clear_radius;
            for qq in q.saturating_sub(rq)..(q + rq + 1).min(nl) {
                for pp in p.saturating_sub(r)..(p + r + 1).min(nt) {
                    col[qq * nt + pp] = 0.0;
                }
            }
        }
        ridges.push(ridge);
    }
    ridges.sort_by(|a, b| b.total_amplitude().total_cmp(&a.total_amplitude()).then(a.j_start.cmp(&b.j_start)));
    let lead = mean(&ridges[0].amplitude);
    for r in &mut ridges {
        r.low_confidence = mean(&r.amplitude) < 1e-2 * lead;
        if opts.boundary_hz > 0.0 {
            extrapolate_edges(r, &s.eta, opts.boundary_hz);
        }
    }
    Ok(RidgeSet { ridges, eta: s.eta })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn column(e: &[f64], j: usize, w: usize) -> &[f64] {
    &e[j * w..(j + 1) * w]
}

fn column_mut(e: &mut [f64], j: usize, w: usize) -> &mut [f64] {
    &mut e[j * w..(j + 1) * w]
}

/// Best path as `(q, p)` per column in `j_lo..j_hi`.
fn dp_path(energy: &[f64], s: &TfgddGrid, j_lo: usize, j_hi: usize, opts: &RidgeOptions) -> Vec<(usize, usize)> {
    let (nt, _, nl) = s.dims();
    let w = nt * nl;
    let (jt, jg) = (opts.jump_t as isize, opts.jump_g as isize);
    let moves: Vec<(isize, isize)> = (-jg..=jg).flat_map(|dq| (-jt..=jt).map(move |dp| (dq, dp))).collect();
    // time cells advanced per column by a ridge at GDD bin q
    let shift: Vec<isize> =
        (0..nl).map(|q| (s.gamma.value(q) * s.eta.step / s.time.step).round() as isize).collect();

    let mut score: Vec<f64> = column(energy, j_lo, w).to_vec();
    let mut back: Vec<Vec<u8>> = Vec::with_capacity(j_hi - j_lo);
    back.push(Vec::new());
    for j in j_lo + 1..j_hi {
        let col = column(energy, j, w);
        let peak = col.iter().copied().fold(0.0, f64::max);
        let weight = opts.penalty * peak;
        let mut next = vec![0.0; w];
        let mut bp = vec![0u8; w];
        next.par_chunks_mut(nt).zip(bp.par_chunks_mut(nt)).enumerate().for_each(|(q, (row, brow))| {
            for p in 0..nt {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0u8;
                for (mi, &(dq, dp)) in moves.iter().enumerate() {
                    let qp = q as isize - dq;
                    if qp < 0 || qp >= nl as isize {
                        continue;
                    }
                    let pp = p as isize - dp - shift[qp as usize];
                    if pp < 0 || pp >= nt as isize {
                        continue;
                    }
                    let v = score[qp as usize * nt + pp as usize] - weight * (dq * dq + dp * dp) as f64;
                    if v > best {
                        best = v;
                        arg = mi as u8;
                    }
                }
                row[p] = col[q * nt + p] + best;
                brow[p] = arg;
            }
        });
        score = next;
        back.push(bp);
    }
    let mut cell = 0;
    for (i, &v) in score.iter().enumerate() {
        if v > score[cell] {
            cell = i;
        }
    }
    let mut path = vec![(0, 0); j_hi - j_lo];
    let (mut q, mut p) = (cell / nt, cell % nt);
    for i in (0..j_hi - j_lo).rev() {
        path[i] = (q, p);
        if i > 0 {
            let (dq, dp) = moves[back[i][q * nt + p] as usize];
            let qp = (q as isize - dq) as usize;
            p = (p as isize - dp - shift[qp]) as usize;
            q = qp;
        }
    }
    path
}

fn refine(energy: &[f64], s: &TfgddGrid, j_lo: usize, path: &[(usize, usize)]) -> Ridge {
    let (nt, _, nl) = s.dims();
    let w = nt * nl;
    let mut r = Ridge {
        j_start: j_lo,
        eta: Vec::with_capacity(path.len()),
        tau: Vec::with_capacity(path.len()),
        gamma: Vec::with_capacity(path.len()),
        amplitude: Vec::with_capacity(path.len()),
        low_confidence: false,
    };
    for (i, &(q, p)) in path.iter().enumerate() {
        let j = j_lo + i;
        let col = column(energy, j, w);
        let a = |qq: usize, pp: usize| col[qq * nt + pp].sqrt();
        let dp = if p > 0 && p + 1 < nt { vertex(a(q, p - 1), a(q, p), a(q, p + 1)) } else { 0.0 };
        let dq = if q > 0 && q + 1 < nl { vertex(a(q - 1, p), a(q, p), a(q + 1, p)) } else { 0.0 };
        r.eta.push(s.eta.value(j));
        r.tau.push(s.time.value(p) + dp * s.time.step);
        r.gamma.push(s.gamma.value(q) + dq * s.gamma.step);
        r.amplitude.push(a(q, p));
    }
    r
}

/// Offset of the parabola vertex through three equally spaced samples,
/// clamped to half a cell.
fn vertex(l: f64, c: f64, r: f64) -> f64 {
    let den = l - 2.0 * c + r;
    if den < 0.0 {
        (0.5 * (l - r) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

fn extrapolate_edges(r: &mut Ridge, eta: &Axis, band: f64) {
    let lo = eta.value(0) + band;
    let hi = eta.last() - band;
    let inner: Vec<usize> = (0..r.len()).filter(|&i| r.eta[i] >= lo && r.eta[i] <= hi).collect();
    if inner.len() < 4 {
        return;
    }
    let fit_n = 8.min(inner.len());
    let first = &inner[..fit_n];
    let last = &inner[inner.len() - fit_n..];
    let (a0, b0) = line_fit(first.iter().map(|&i| (r.eta[i], r.tau[i])));
    let (a1, b1) = line_fit(first.iter().map(|&i| (r.eta[i], r.gamma[i])));
    let (c0, d0) = line_fit(last.iter().map(|&i| (r.eta[i], r.tau[i])));
    let (c1, d1) = line_fit(last.iter().map(|&i| (r.eta[i], r.gamma[i])));
    for i in 0..r.len() {
        let e = r.eta[i];
        if e < lo {
            r.tau[i] = a0 + b0 * e;
            r.gamma[i] = a1 + b1 * e;
        } else if e > hi {
            r.tau[i] = c0 + d0 * e;
            r.gamma[i] = c1 + d1 * e;
        }
    }
}

fn line_fit(pts: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = pts.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_of_symmetric_and_skewed_peaks() {
        assert_eq!(vertex(1.0, 2.0, 1.0), 0.0);
        assert!(vertex(1.5, 2.0, 1.0) < 0.0);
        assert_eq!(vertex(0.0, 2.0, 0.0), 0.0);
        assert_eq!(vertex(0.0, 0.0, 0.0), 0.0);
    }
}
