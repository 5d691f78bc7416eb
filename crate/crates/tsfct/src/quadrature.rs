//! Adaptive Gauss–Kronrod (7/15) integration of complex integrands.
//!
//! This is the reference integrator behind the kernel and duality checks. It
//! is slow and simple on purpose: every closed form in [`crate::windows`] is
//! compared against it.

use num_complex::Complex64;

// Kronrod nodes (positive half, descending) with Kronrod and embedded
// Gauss weights. Index 7 is the centre.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XK[1], XK[3], XK[5], XK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate, error estimate, and `∫|f|` over the piece.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.norm() * WK[7];
    for i in 0..7 {
        let dx = h * XK[i];
        let (lo, hi) = (f(c - dx), f(c + dx));
        let s = lo + hi;
        kron += s * WK[i];
        abs += (lo.norm() + hi.norm()) * WK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm(), abs * h.abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Intervals are bisected until the Kronrod/Gauss difference of every piece
/// falls below its share of `tol` or below the round-off level of the piece,
/// or the depth limit (40) is reached.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    // Seed with a uniform partition so oscillatory integrands are resolved
    // before the error estimate is trusted.
    let pieces = 64;
    let w = (b - a) / pieces as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..pieces {
        let lo = a + i as f64 * w;
        let hi = if i + 1 == pieces { b } else { lo + w };
        total += adapt(&f, lo, hi, tol / pieces as f64, 0);
    }
    total
}

fn adapt<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Complex64 {
    let (v, err, abs) = gk15(f, a, b);
    if err <= tol || err <= 50.0 * f64::EPSILON * abs || depth >= 40 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1)
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, tol).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate_real(|x| 3.0 * x * x - x + 1.0, -1.0, 2.0, 1e-14);
        assert!((v - (8.0 + 1.0 - 1.5 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass() {
        let s = 3.0;
        let g = |x: f64| (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let v = integrate_real(g, -8.0 * s, 8.0 * s, 1e-14);
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex() {
        // ∫_0^1 e^{i 2π 40 x} dx = 0
        let v = integrate(|x| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 40.0 * x), 0.0, 1.0, 1e-13);
        assert!(v.norm() < 1e-12);
    }
}
