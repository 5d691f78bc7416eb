//! Gaussian window `g_σ(ξ)` and its chirp-modulated kernels.
//!
//! The transform correlates the spectrum against `ξ^m·g_σ(ξ)` modulated by
//! `e^{i2πξt}e^{iπγξ²}`. For the Gaussian window the resulting kernel
//!
//! ```text
//! C(ξ^m g)(t, γ) = ∫ ξ^m g_σ(ξ) e^{−i2πξt} e^{−iπγξ²} dξ
//! ```
//!
//! has a closed form for every `m`. With `z = 1 + i2πσ²γ` and
//! `E = exp(−2π²σ²t²/z)`:
//!
//! ```text
//! C(g)    = z^{−1/2} E
//! C(ξg)   = −i2πσ²t z^{−3/2} E
//! C(ξ²g)  = σ² (z^{−3/2} − (2πσt)² z^{−5/2}) E
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature;

/// Frequency-domain Gaussian window with width `σ` in Hz and unit mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianWindow {
    pub sigma: f64,
}

impl GaussianWindow {
    pub fn new(sigma: f64) -> Result<GaussianWindow> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::config(format!("window width must be positive, got {sigma}")));
        }
        Ok(GaussianWindow { sigma })
    }

    /// `g_σ(ξ)`
    pub fn eval(&self, xi: f64) -> f64 {
        let s = self.sigma;
        (-xi * xi / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt())
    }

    /// `g′_σ(ξ)`
    pub fn eval_d1(&self, xi: f64) -> f64 {
        -xi / (self.sigma * self.sigma) * self.eval(xi)
    }

    /// Closed-form kernel, see the module docs. `m` must be 0, 1 or 2.
    pub fn kernel(&self, m: u8, t: f64, gamma: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let z = Complex64::new(1.0, 2.0 * PI * s2 * gamma);
        let rz = z.sqrt();
        let e = (Complex64::new(-2.0 * PI * PI * s2 * t * t, 0.0) / z).exp();
        match m {
            0 => e / rz,
            1 => Complex64::new(0.0, -2.0 * PI * s2 * t) * e / (z * rz),
            2 => {
                let a = 2.0 * PI * self.sigma * t;
                let z3 = z * rz;
                s2 * (1.0 / z3 - a * a / (z3 * z)) * e
            }
            _ => panic!("kernel order {m} not supported (0, 1 or 2)"),
        }
    }

    /// Kernel of `ξ^m g_σ` for any `m`.
    ///
    /// `g_σ(ξ)e^{−i2πξt}e^{−iπγξ²}` is a complex Gaussian in `ξ` with mean
    /// `μ = −i2πσ²t/z` and variance `v = σ²/z`, so the kernel is `C(g)` times
    /// the Gaussian moment `Σ_k binom(m,2k)·μ^{m−2k}·v^k·(2k−1)!!`.
    pub fn kernel_general(&self, m: u32, t: f64, gamma: f64) -> Complex64 {
        if m <= 2 {
            return self.kernel(m as u8, t, gamma);
        }
        let s2 = self.sigma * self.sigma;
        let z = Complex64::new(1.0, 2.0 * PI * s2 * gamma);
        let mu = Complex64::new(0.0, -2.0 * PI * s2 * t) / z;
        let v = Complex64::new(s2, 0.0) / z;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut binom = 1.0;
        let mut dfact = 1.0;
        let mut k = 0;
        while 2 * k <= m {
            sum += binom * dfact * mu.powu(m - 2 * k) * v.powu(k);
            // binom(m, 2k+2) from binom(m, 2k)
            let a = (m - 2 * k) as f64;
            binom *= a * (a - 1.0) / (((2 * k + 1) * (2 * k + 2)) as f64);
            dfact *= (2 * k + 1) as f64;
            k += 1;
        }
        self.kernel(0, t, gamma) * sum
    }

    /// Kernel of `ξ^m g_σ` by adaptive quadrature over `[−8σ, 8σ]`.
    ///
    /// Any `m` works here, which is what the higher-order operators rely on
    /// when they need powers beyond the closed forms.
    pub fn kernel_quadrature(&self, m: u32, t: f64, gamma: f64, tol: f64) -> Complex64 {
        let s = self.sigma;
        quadrature::integrate(
            |xi| {
                let ph = -2.0 * PI * xi * t - PI * gamma * xi * xi;
                Complex64::from_polar(xi.powi(m as i32) * self.eval(xi), ph)
            },
            -8.0 * s,
            8.0 * s,
            tol,
        )
    }

    /// Absolute moment `I_m = ∫|ξ^m g_σ(ξ)| dξ`.
    pub fn moment(&self, m: u32) -> Result<f64> {
        if m > 8 {
            return Err(Error::config(format!("moment order {m} above 8")));
        }
        let mf = m as f64;
        Ok(self.sigma.powi(m as i32) / (2.0 * PI).sqrt() * 2f64.powf((mf + 1.0) / 2.0) * libm::tgamma((mf + 1.0) / 2.0))
    }

    /// Coefficient `c` with `g′_σ(ξ) = c·ξ·g_σ(ξ)`, i.e. `−1/σ²`.
    ///
    /// It lets the derivative-window transforms be written as
    /// `D^{g′} = c·D^{ξg}` and `D^{ξg′} = c·D^{ξ²g}`.
    pub fn derivative_reduction(&self) -> f64 {
        -1.0 / (self.sigma * self.sigma)
    }

    /// Both branches of the control function `Υ_m(Δ₁, Δ₂)`.
    ///
    /// The first branch bounds `|C(ξ^m g)(t, γ)|` over `|t| ≥ Δ₁`, the second
    /// over `|γ| ≥ Δ₂`; their maximum bounds it outside the box
    /// `{|t| < Δ₁, |γ| < Δ₂}`.
    pub fn upsilon_branches(&self, m: u8, delta1: f64, delta2: f64) -> Result<(f64, f64)> {
        if !(delta1 > 0.0) {
            return Err(Error::config("Δ₁ must be positive"));
        }
        if !(delta2 >= 0.0) {
            return Err(Error::config("Δ₂ must be non-negative"));
        }
        let s = self.sigma;
        let u = 1.0 + 4.0 * PI * PI * s.powi(4) * delta2 * delta2;
        let q = u.powf(0.25);
        Ok(match m {
            0 => (1.0 / (2f64.powf(0.25) * (PI * s * delta1).sqrt()), 1.0 / q),
            1 => (2f64.powf(0.25) * s.sqrt() / (PI * delta1).sqrt(), 2f64.sqrt() * s / q),
            2 => {
                let s2 = s * s;
                (
                    s2 * (1.0 / (2f64.powf(0.75) * (PI * s * delta1).powf(1.5)) + 2.0 / q),
                    s2 * (1.0 / (q * q * q) + 2.0 / q),
                )
            }
            _ => return Err(Error::config(format!("control function order {m} not supported"))),
        })
    }

    /// `Υ_m(Δ₁, Δ₂)`, the larger branch.
    pub fn upsilon(&self, m: u8, delta1: f64, delta2: f64) -> Result<f64> {
        let (a, b) = self.upsilon_branches(m, delta1, delta2)?;
        Ok(a.max(b))
    }

    /// Time-domain scale `1/(2πσ)` of `C(g)(·, 0) = e^{−2π²σ²t²}`.
    pub fn time_scale(&self) -> f64 {
        1.0 / (2.0 * PI * self.sigma)
    }
}

/// `C(ξ^m g_σ)(t, γ)` for `m ∈ {0, 1, 2}`.
pub fn kernel_c(m: u8, t: f64, gamma: f64, window: &GaussianWindow) -> Complex64 {
    window.kernel(m, t, gamma)
}
