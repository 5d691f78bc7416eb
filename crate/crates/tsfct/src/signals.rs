//! Sampled signals, spectra, and parametric frequency-domain modes.
//!
//! A mode is described in the frequency domain as `B(η)·e^{−i2πθ(η)}`, where
//! `B` is a positive amplitude and `θ′`, `θ″` are the group delay (GD) and the
//! group-delay dispersion (GDD). [`synth_spectrum`] sums modes on the
//! non-negative DFT bins; [`inverse_transform`] turns that into samples.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Uniformly sampled complex time series.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    pub samples: Vec<Complex64>,
    /// Seconds per sample.
    pub dt: f64,
    /// Time of sample 0, in seconds.
    pub t0: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, dt: f64, t0: f64) -> Result<SampledSignal> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config(format!("sampling step must be positive, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::config("a signal needs at least two samples"));
        }
        if !t0.is_finite() {
            return Err(Error::config("start time must be finite"));
        }
        Ok(SampledSignal { samples, dt, t0 })
    }

    pub fn from_real(values: &[f64], dt: f64, t0: f64) -> Result<SampledSignal> {
        SampledSignal::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), dt, t0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    /// Frequency spacing of the DFT grid, `1/(N·dt)`.
    pub fn d_eta(&self) -> f64 {
        1.0 / (self.len() as f64 * self.dt)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// DFT bins in standard order (non-negative frequencies first).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    /// Hz per bin.
    pub d_eta: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Frequency of bin `j`, with bins above N/2 mapped to negative values.
    pub fn eta(&self, j: usize) -> f64 {
        let n = self.bins.len();
        if j <= n / 2 {
            j as f64 * self.d_eta
        } else {
            (j as f64 - n as f64) * self.d_eta
        }
    }
}

/// Amplitude law `B(η)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Amplitude {
    Constant(f64),
    /// `e^{−a(η−center)²}`
    GaussianBump { a: f64, center: f64 },
    /// `e^{−(pη + qη²/2)}`
    ExpQuadratic { p: f64, q: f64 },
}

impl Amplitude {
    pub fn eval(&self, eta: f64) -> f64 {
        match *self {
            Amplitude::Constant(c) => c,
            Amplitude::GaussianBump { a, center } => (-a * (eta - center).powi(2)).exp(),
            Amplitude::ExpQuadratic { p, q } => (-(p * eta + 0.5 * q * eta * eta)).exp(),
        }
    }

    pub fn d1(&self, eta: f64) -> f64 {
        match *self {
            Amplitude::Constant(_) => 0.0,
            Amplitude::GaussianBump { a, center } => -2.0 * a * (eta - center) * self.eval(eta),
            Amplitude::ExpQuadratic { p, q } => -(p + q * eta) * self.eval(eta),
        }
    }
}

/// Phase law `θ(η)`, in seconds·Hz (cycles).
#[derive(Clone, Debug, PartialEq)]
pub enum Phase {
    /// `Σ c_i η^i`
    Polynomial(Vec<f64>),
    /// `a·sin(wη) + lin·η`
    Sine { a: f64, w: f64, lin: f64 },
    /// `a·cos(wη) + lin·η`
    Cosine { a: f64, w: f64, lin: f64 },
}

impl Phase {
    /// Derivative of order `d` (0 = the phase itself).
    pub fn derivative(&self, d: u32, eta: f64) -> f64 {
        match self {
            Phase::Polynomial(c) => {
                let mut acc = 0.0;
                for (i, &ci) in c.iter().enumerate().rev() {
                    let i = i as u32;
                    if i < d {
                        break;
                    }
                    let falling: f64 = (0..d).map(|s| (i - s) as f64).product();
                    acc += ci * falling * eta.powi((i - d) as i32);
                }
                acc
            }
            &Phase::Sine { a, w, lin } => {
                let trig = match d % 4 {
                    0 => (w * eta).sin(),
                    1 => (w * eta).cos(),
                    2 => -(w * eta).sin(),
                    _ => -(w * eta).cos(),
                };
                a * w.powi(d as i32) * trig + linear_part(lin, d, eta)
            }
            &Phase::Cosine { a, w, lin } => {
                let trig = match d % 4 {
                    0 => (w * eta).cos(),
                    1 => -(w * eta).sin(),
                    2 => -(w * eta).cos(),
                    _ => (w * eta).sin(),
                };
                a * w.powi(d as i32) * trig + linear_part(lin, d, eta)
            }
        }
    }
}

fn linear_part(lin: f64, d: u32, eta: f64) -> f64 {
    match d {
        0 => lin * eta,
        1 => lin,
        _ => 0.0,
    }
}

/// One frequency-domain mode `B(η)·e^{−i2πθ(η)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpec {
    pub amplitude: Amplitude,
    pub phase: Phase,
}

impl ModeSpec {
    pub fn new(amplitude: Amplitude, phase: Phase) -> ModeSpec {
        ModeSpec { amplitude, phase }
    }

    pub fn amplitude(&self, eta: f64) -> f64 {
        self.amplitude.eval(eta)
    }

    pub fn amplitude_d1(&self, eta: f64) -> f64 {
        self.amplitude.d1(eta)
    }

    pub fn phase(&self, eta: f64) -> f64 {
        self.phase.derivative(0, eta)
    }

    /// Group delay `θ′(η)` in seconds.
    pub fn phase_d1(&self, eta: f64) -> f64 {
        self.phase.derivative(1, eta)
    }

    /// Group-delay dispersion `θ″(η)` in s/Hz.
    pub fn phase_d2(&self, eta: f64) -> f64 {
        self.phase.derivative(2, eta)
    }

    pub fn phase_d3(&self, eta: f64) -> f64 {
        self.phase.derivative(3, eta)
    }

    /// `B(η)·e^{−i2πθ(η)}`
    pub fn value(&self, eta: f64) -> Complex64 {
        Complex64::from_polar(self.amplitude(eta), -2.0 * PI * self.phase(eta))
    }
}

/// Frequency-domain linear chirp `e^{−(pη+qη²/2)}·e^{−i2π(cη+rη²/2)}`.
///
/// Its group delay is `c + rη` and its GDD is the constant `r`, which makes it
/// the exactness test case for the reassignment operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFdChirp {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub r: f64,
}

impl From<LinearFdChirp> for ModeSpec {
    fn from(s: LinearFdChirp) -> ModeSpec {
        ModeSpec::new(
            Amplitude::ExpQuadratic { p: s.p, q: s.q },
            Phase::Polynomial(vec![0.0, s.c, 0.5 * s.r]),
        )
    }
}

/// Built-in two-mode benchmark signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Benchmark {
    /// Two quadratic-phase chirps whose GD curves cross at (0.2536 s, 256 Hz).
    PaperX,
    /// Same as [`Benchmark::PaperX`] with the second chirp rate's sign flipped
    /// (`+0.0002η²`), so the curves do not cross inside the record.
    PaperXLiteral,
    /// Two sinusoidal-phase modes with crossing GD and crossing GDD curves.
    PaperY,
    /// [`Benchmark::PaperY`] with the second phase written as a cosine.
    PaperYLiteral,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] =
        [Benchmark::PaperX, Benchmark::PaperXLiteral, Benchmark::PaperY, Benchmark::PaperYLiteral];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::PaperX => "paper-x",
            Benchmark::PaperXLiteral => "paper-x-literal",
            Benchmark::PaperY => "paper-y",
            Benchmark::PaperYLiteral => "paper-y-literal",
        }
    }

    pub fn parse(s: &str) -> Option<Benchmark> {
        Benchmark::ALL.into_iter().find(|b| b.name() == s)
    }

    pub fn modes(self) -> Vec<ModeSpec> {
        match self {
            Benchmark::PaperX => paper_x_modes(false),
            Benchmark::PaperXLiteral => paper_x_modes(true),
            Benchmark::PaperY => paper_y_modes(false),
            Benchmark::PaperYLiteral => paper_y_modes(true),
        }
    }

    /// Samples on the default grid: 512 samples at 1/1024 s, i.e. 2 Hz bins
    /// covering [0, 512] Hz.
    pub fn signal(self) -> SampledSignal {
        synth_signal(&self.modes(), DEFAULT_N, DEFAULT_DT).expect("benchmark modes are valid")
    }
}

pub const DEFAULT_N: usize = 512;
pub const DEFAULT_DT: f64 = 1.0 / 1024.0;

fn paper_x_modes(literal: bool) -> Vec<ModeSpec> {
    let rate2 = if literal { 0.0002 } else { -0.0002 };
    vec![
        ModeSpec::new(
            Amplitude::GaussianBump { a: 0.00002, center: 256.0 },
            Phase::Polynomial(vec![0.0, 0.1, 0.0003]),
        ),
        ModeSpec::new(
            Amplitude::GaussianBump { a: 0.00003, center: 256.0 },
            Phase::Polynomial(vec![0.0, 0.356, rate2]),
        ),
    ]
}

fn paper_y_modes(literal: bool) -> Vec<ModeSpec> {
    let a = 51.2 / PI;
    let w = PI / 256.0;
    let second = if literal {
        Phase::Cosine { a, w, lin: 0.25 }
    } else {
        Phase::Sine { a, w, lin: 0.25 }
    };
    vec![
        ModeSpec::new(Amplitude::GaussianBump { a: 0.00032, center: 256.0 }, Phase::Sine { a: -a, w, lin: 0.25 }),
        ModeSpec::new(Amplitude::GaussianBump { a: 0.00025, center: 256.0 }, second),
    ]
}

/// The two-mode `x` benchmark (see [`Benchmark::PaperX`]).
pub fn paper_x() -> Vec<ModeSpec> {
    paper_x_modes(false)
}

/// The two-mode `y` benchmark (see [`Benchmark::PaperY`]).
pub fn paper_y() -> Vec<ModeSpec> {
    paper_y_modes(false)
}

/// Spectrum of the `y` benchmark on `n_bins` bins of `d_eta` Hz.
pub fn synth_paper_y(n_bins: usize, d_eta: f64) -> Result<Spectrum> {
    synth_spectrum(&paper_y(), n_bins, d_eta)
}

/// Sums the modes on bins `j ∈ [0, ⌊n/2⌋]`; negative-frequency bins stay zero.
pub fn synth_spectrum(modes: &[ModeSpec], n_bins: usize, d_eta: f64) -> Result<Spectrum> {
    if n_bins < 2 {
        return Err(Error::config("need at least two bins"));
    }
    if !(d_eta > 0.0) {
        return Err(Error::config("bin spacing must be positive"));
    }
    let mut bins = vec![Complex64::new(0.0, 0.0); n_bins];
    for (j, bin) in bins.iter_mut().enumerate().take(n_bins / 2 + 1) {
        let eta = j as f64 * d_eta;
        for (k, m) in modes.iter().enumerate() {
            let b = m.amplitude(eta);
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::config(format!("mode {k} has non-positive amplitude {b} at {eta} Hz")));
            }
            *bin += m.value(eta);
        }
    }
    Ok(Spectrum { bins, d_eta })
}

/// Samples whose DFT equals the synthesized spectrum, starting at t = 0.
pub fn synth_signal(modes: &[ModeSpec], n: usize, dt: f64) -> Result<SampledSignal> {
    if !(dt > 0.0) {
        return Err(Error::config("sampling step must be positive"));
    }
    let spec = synth_spectrum(modes, n, 1.0 / (n as f64 * dt))?;
    inverse_transform(&spec, 0.0)
}

/// Unnormalized forward DFT: `X[j] = Σ_k x[k]·e^{−i2πjk/N}`.
pub fn forward_transform(signal: &SampledSignal) -> Spectrum {
    let mut buf = signal.samples.clone();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    Spectrum { bins: buf, d_eta: signal.d_eta() }
}

/// Inverse DFT with the `1/N` factor, producing samples starting at `t0`.
pub fn inverse_transform(spectrum: &Spectrum, t0: f64) -> Result<SampledSignal> {
    let n = spectrum.len();
    if n < 2 {
        return Err(Error::config("spectrum needs at least two bins"));
    }
    if !(spectrum.d_eta > 0.0) {
        return Err(Error::config("bin spacing must be positive"));
    }
    let mut buf = spectrum.bins.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    SampledSignal::new(buf, 1.0 / (n as f64 * spectrum.d_eta), t0)
}

/// Reads one channel of a PCM16 or IEEE-float32 WAV file.
pub fn load_audio(path: impl AsRef<Path>, channel: usize) -> Result<SampledSignal> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channel >= channels {
        return Err(Error::config(format!("channel {channel} requested, file has {channels}")));
    }
    let values: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .skip(channel)
            .step_by(channels)
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .skip(channel)
            .step_by(channels)
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (fmt, bits) => {
            return Err(Error::format(path, format!("unsupported encoding {fmt:?} {bits}-bit")));
        }
    };
    SampledSignal::from_real(&values, 1.0 / spec.sample_rate as f64, 0.0)
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    }
}

/// Anti-aliased decimation by an integer factor.
///
/// A Hamming-windowed sinc low-pass with `8·factor + 1` taps and cutoff
/// `0.45/factor` cycles per input sample is applied without delay (the filter
/// is centred), then every `factor`-th sample is kept.
pub fn decimate(signal: &SampledSignal, factor: usize) -> Result<SampledSignal> {
    if factor == 0 {
        return Err(Error::config("decimation factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(signal.clone());
    }
    let taps = lowpass_taps(8 * factor, 0.45 / factor as f64);
    let half = (taps.len() / 2) as isize;
    let n = signal.len() as isize;
    let out: Vec<Complex64> = (0..n)
        .step_by(factor)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &h) in taps.iter().enumerate() {
                let k = i + half - t as isize;
                if (0..n).contains(&k) {
                    acc += signal.samples[k as usize] * h;
                }
            }
            acc
        })
        .collect();
    if out.len() < 2 {
        return Err(Error::config("decimated signal would have fewer than two samples"));
    }
    SampledSignal::new(out, signal.dt * factor as f64, signal.t0)
}

fn lowpass_taps(order: usize, cutoff: f64) -> Vec<f64> {
    let m = order as f64;
    let mut h: Vec<f64> = (0..=order)
        .map(|i| {
            let x = i as f64 - m / 2.0;
            let sinc = if x == 0.0 { 2.0 * cutoff } else { (2.0 * PI * cutoff * x).sin() / (PI * x) };
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / m).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Samples with times in `[t_start, t_end)`.
pub fn slice_time(signal: &SampledSignal, t_start: f64, t_end: f64) -> Result<SampledSignal> {
    if !(t_end > t_start) {
        return Err(Error::config("empty time slice"));
    }
    let idx = |t: f64| (((t - signal.t0) / signal.dt) - 1e-9).ceil().max(0.0) as usize;
    let lo = idx(t_start).min(signal.len());
    let hi = idx(t_end).min(signal.len());
    if t_start < signal.t0 - 1e-12 || t_end > signal.t0 + signal.duration() + 1e-12 {
        return Err(Error::config(format!(
            "slice [{t_start}, {t_end}) outside signal extent [{}, {})",
            signal.t0,
            signal.t0 + signal.duration()
        )));
    }
    if hi <= lo + 1 {
        return Err(Error::config("time slice holds fewer than two samples"));
    }
    SampledSignal::new(signal.samples[lo..hi].to_vec(), signal.dt, signal.time(lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_has_dc_bin_n() {
        let s = SampledSignal::from_real(&[1.0; 16], 0.1, 0.0).unwrap();
        let x = forward_transform(&s);
        assert!((x.bins[0] - Complex64::new(16.0, 0.0)).norm() < 1e-12);
        assert!(x.bins[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut v = vec![0.0; 32];
        v[0] = 1.0;
        let x = forward_transform(&SampledSignal::from_real(&v, 1.0, 0.0).unwrap());
        assert!(x.bins.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn unit_mode_gives_unit_bins() {
        let m = ModeSpec::new(Amplitude::Constant(1.0), Phase::Polynomial(vec![0.0]));
        let s = synth_spectrum(&[m], 8, 1.0).unwrap();
        assert!(s.bins[..5].iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn paper_x_crossing() {
        let x = paper_x();
        assert_eq!(x[0].amplitude(256.0), 1.0);
        assert!((x[0].phase_d1(256.0) - 0.2536).abs() < 1e-12);
        assert!((x[1].phase_d1(256.0) - 0.2536).abs() < 1e-12);
        let lit = Benchmark::PaperXLiteral.modes();
        assert!((lit[1].phase_d1(256.0) - 0.4584).abs() < 1e-12);
    }

    #[test]
    fn paper_y_derivatives() {
        let y = paper_y();
        assert!((y[0].phase_d1(128.0) - 0.25).abs() < 1e-12);
        assert!((y[1].phase_d1(128.0) - 0.25).abs() < 1e-12);
        assert!(y[0].phase_d2(256.0).abs() < 1e-15);
        assert!(y[1].phase_d2(256.0).abs() < 1e-15);
        assert!((y[0].phase_d2(128.0) - PI / 1280.0).abs() < 1e-15);
        assert!((y[0].phase_d3(0.0) - PI * PI / 327_680.0).abs() < 1e-18);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut modes = paper_x();
        modes.extend(paper_y());
        modes.extend(Benchmark::PaperYLiteral.modes());
        modes.push(LinearFdChirp { p: 0.001, q: 1e-5, c: 0.1, r: 0.0006 }.into());
        let h = 1e-3 * 2.0;
        for m in &modes {
            for &eta in &[37.0, 128.0, 301.5] {
                let fd1 = (m.phase(eta + h) - m.phase(eta - h)) / (2.0 * h);
                let fd2 = (m.phase_d1(eta + h) - m.phase_d1(eta - h)) / (2.0 * h);
                let fd3 = (m.phase_d2(eta + h) - m.phase_d2(eta - h)) / (2.0 * h);
                let fdb = (m.amplitude(eta + h) - m.amplitude(eta - h)) / (2.0 * h);
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
                assert!(rel(fd1, m.phase_d1(eta)) < 1e-4);
                assert!(rel(fd2, m.phase_d2(eta)) < 1e-4 || (fd2 - m.phase_d2(eta)).abs() < 1e-12);
                assert!(rel(fd3, m.phase_d3(eta)) < 1e-4 || (fd3 - m.phase_d3(eta)).abs() < 1e-12);
                assert!(rel(fdb, m.amplitude_d1(eta)) < 1e-4 || (fdb - m.amplitude_d1(eta)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decimation_and_slicing() {
        let s = SampledSignal::from_real(&vec![0.5; 96_000], 1.0 / 96_000.0, 0.0).unwrap();
        assert_eq!(decimate(&s, 1).unwrap(), s);
        let d = decimate(&s, 3).unwrap();
        assert!((d.dt - 1.0 / 32_000.0).abs() < 1e-18);
        assert_eq!(d.len(), 32_000);
        // DC passes with unit gain away from the edges
        assert!((d.samples[16_000].re - 0.5).abs() < 1e-12);
        assert!(decimate(&s, 0).is_err());

        let s32 = SampledSignal::from_real(&vec![0.0; 48_000], 1.0 / 32_000.0, 0.0).unwrap();
        let cut = slice_time(&s32, 0.6, 1.1).unwrap();
        assert_eq!(cut.len(), 16_000);
        assert!((cut.t0 - 0.6).abs() < 1e-12);
        assert!(slice_time(&s32, 0.5, 0.5).is_err());
    }

    #[test]
    fn rejects_bad_amplitude() {
        let m = ModeSpec::new(Amplitude::Constant(0.0), Phase::Polynomial(vec![]));
        assert!(synth_spectrum(&[m], 8, 1.0).is_err());
    }
}
