use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use tsfct::entropy::{optimize_sigma, EntropyConfig};
use tsfct::io::read_signal_csv;
use tsfct::signals::load_audio;
use tsfct::{Benchmark, BoundaryBand, Error, GammaGrid, GaussianWindow, ModeSpec, Result, SampledSignal};

/// Width search range written as `lo:hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaRange {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for SigmaRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<SigmaRange, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let lo: f64 = a.trim().parse().map_err(|_| format!("bad lower bound {a:?}"))?;
        let hi: f64 = b.trim().parse().map_err(|_| format!("bad upper bound {b:?}"))?;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(format!("need 0 < lo < hi, got {lo}:{hi}"));
        }
        Ok(SigmaRange { lo, hi })
    }
}

impl fmt::Display for SigmaRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Options shared by every command. Each command reads the ones it needs.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Built-in signal: paper-x, paper-x-literal, paper-y or paper-y-literal.
    #[arg(long)]
    pub signal: Option<String>,
    /// Signal file: WAV (PCM16 or float32) or CSV (`t,value` or `t,re,im`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// WAV channel to read.
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    /// Window width σ in Hz.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Pick σ by minimum Rényi entropy within `lo:hi`.
    #[arg(long, value_name = "LO:HI")]
    pub sigma_auto: Option<SigmaRange>,
    /// GDD half-range R₀ in s/Hz. Defaults to 3·max|θ″| for built-in
    /// signals and 2·N·Δt² for files.
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Number of GDD bins L (odd). Defaults to 2⌊N/2⌋ + 1.
    #[arg(long)]
    pub gamma_bins: Option<usize>,
    /// Determinant threshold relative to the largest |det E₀|.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon_rel: f64,
    /// Number of modes K. Defaults to the mode count of a built-in signal.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Order N of the reassignment operator (2 to 4).
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Recovery window width as a multiple of σ.
    #[arg(long, default_value_t = 1.0)]
    pub recover_sigma_scale: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Frequency margin in Hz excluded at both band edges. Defaults to 2σ.
    #[arg(long)]
    pub boundary_trim: Option<f64>,
    /// Window power m of the `fct` grid.
    #[arg(long, default_value_t = 0)]
    pub power: u8,
    /// Squeezed grid to extract ridges from instead of recomputing it.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Ridge CSV to recover from instead of extracting ridges.
    #[arg(long)]
    pub ridges: Option<PathBuf>,
    /// Rényi order ℓ.
    #[arg(long, default_value_t = 2.5)]
    pub entropy_order: f64,
    /// Coarse points of the σ search.
    #[arg(long, default_value_t = 12)]
    pub sigma_points: usize,
    /// Oracle suite for `verify`: kernels, fft, duality or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
}

pub fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// A loaded signal and, for built-in signals, its true modes.
pub struct Source {
    pub signal: SampledSignal,
    pub modes: Option<Vec<ModeSpec>>,
}

impl RunConfig {
    pub fn source(&self) -> Result<Source> {
        let src = match (&self.signal, &self.input) {
            (Some(_), Some(_)) => return Err(config_error("give either --signal or --input, not both")),
            (None, None) => return Err(config_error("this command needs --signal or --input")),
            (Some(name), None) => {
                let b = Benchmark::parse(name).ok_or_else(|| {
                    let names: Vec<&str> = Benchmark::ALL.iter().map(|b| b.name()).collect();
                    config_error(format!("unknown signal {name:?}; expected one of {}", names.join(", ")))
                })?;
                Source { signal: b.signal(), modes: Some(b.modes()) }
            }
            (None, Some(path)) => Source { signal: read_input(path, self.channel)?, modes: None },
        };
        if !(src.signal.energy() > 0.0) {
            return Err(Error::Numerical("the input has zero energy".into()));
        }
        Ok(src)
    }

    pub fn ggrid(&self, src: &Source) -> Result<GammaGrid> {
        let base = match (self.gamma_max, &src.modes) {
            (Some(r0), _) => GammaGrid::new(r0, GammaGrid::default_bins(src.signal.len()))?,
            (None, Some(m)) => GammaGrid::for_modes(m, &src.signal)?,
            (None, None) => GammaGrid::for_record(&src.signal)?,
        };
        match self.gamma_bins {
            Some(l) => GammaGrid::new(base.r0, l),
            None => Ok(base),
        }
    }

    /// The fixed width, or the entropy-optimal one with its search curve.
    pub fn window(&self, src: &Source, ggrid: &GammaGrid) -> Result<(GaussianWindow, Option<Vec<(f64, f64)>>)> {
        match (self.sigma, self.sigma_auto) {
            (Some(_), Some(_)) => Err(config_error("give either --sigma or --sigma-auto, not both")),
            (None, None) => Err(config_error("this command needs --sigma or --sigma-auto")),
            (Some(s), None) => Ok((GaussianWindow::new(s)?, None)),
            (None, Some(r)) => {
                let cfg = EntropyConfig::new(self.entropy_order)?;
                let res = optimize_sigma(&src.signal, ggrid, (r.lo, r.hi), &cfg, self.sigma_points)?;
                Ok((GaussianWindow::new(res.sigma_opt)?, Some(res.curve)))
            }
        }
    }

    pub fn band(&self, window: &GaussianWindow) -> Result<BoundaryBand> {
        let b = BoundaryBand::for_window(window);
        match self.boundary_trim {
            Some(hz) if !(hz >= 0.0 && hz.is_finite()) => Err(config_error(format!("boundary trim must be non-negative, got {hz}"))),
            Some(hz) => Ok(b.with_freq(hz)),
            None => Ok(b),
        }
    }

    pub fn mode_count(&self, src: &Source) -> Result<usize> {
        match (self.modes, &src.modes) {
            (Some(0), _) => Err(config_error("--modes must be at least 1")),
            (Some(k), _) => Ok(k),
            (None, Some(m)) => Ok(m.len()),
            (None, None) => Err(config_error("this command needs --modes for a file input")),
        }
    }
}

fn read_input(path: &Path, channel: usize) -> Result<SampledSignal> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("wav") => load_audio(path, channel),
        Some("csv") => read_signal_csv(path),
        _ => Err(config_error(format!("{}: expected a .wav or .csv file", path.display()))),
    }
}
