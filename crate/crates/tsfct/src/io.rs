//! File formats: the `TFGD` binary grid container, CSV tables and WAV output.
//!
//! # Grid container
//!
//! All integers and floats are little-endian.
//!
//! | field | type |
//! |-------|------|
//! | magic `TFGD` | 4 bytes |
//! | version = 1 | u16 |
//! | `N_t`, `N_eta`, `N_gamma` | u32 ×3 |
//! | dtype | u8 |
//! | window power `m` | u8 |
//! | `sigma`, `t_start`, `dt`, `eta_start`, `d_eta`, `gamma_start`, `d_gamma` | f64 ×7 |
//!
//! The payload follows with cell `(n, j, l)` at offset `((j·N_gamma) + l)·N_t + n`.
//!
//! The low nibble of dtype is the payload type: 0 complex64, 1 complex128,
//! 2 float64 followed by a mask plane of one byte per cell, 3 float64.
//! Bit `0x80` marks a squeezed grid, bit `0x40` a 2D time-frequency array
//! (`N_gamma = 1`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::fgsso::DiagnosticsProfile;
use crate::grid::{Axis, GridKind, TfgddGrid};
use crate::ridges::{Ridge, RidgeSet};
use crate::signals::{SampledSignal, Spectrum};
use crate::squeeze::TfrGrid;

pub const MAGIC: &[u8; 4] = b"TFGD";
pub const VERSION: u16 = 1;
const SQUEEZED: u8 = 0x80;
const TWO_D: u8 = 0x40;

/// Payload encoding of a grid file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    Complex64,
    Complex128,
    /// Real values with a byte mask plane.
    RealMasked,
    Real,
}

impl Dtype {
    fn code(self) -> u8 {
        match self {
            Dtype::Complex64 => 0,
            Dtype::Complex128 => 1,
            Dtype::RealMasked => 2,
            Dtype::Real => 3,
        }
    }

    fn from_code(c: u8) -> Option<Dtype> {
        Some(match c {
            0 => Dtype::Complex64,
            1 => Dtype::Complex128,
            2 => Dtype::RealMasked,
            3 => Dtype::Real,
            _ => return None,
        })
    }
}

/// Decoded grid header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridHeader {
    pub time: Axis,
    pub eta: Axis,
    pub gamma: Axis,
    pub dtype: Dtype,
    pub m: u8,
    pub sigma: f64,
    pub kind: GridKind,
    pub two_d: bool,
}

impl GridHeader {
    pub fn cells(&self) -> usize {
        self.time.len * self.eta.len * self.gamma.len
    }

    fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for len in [self.time.len, self.eta.len, self.gamma.len] {
            w.write_all(&(len as u32).to_le_bytes())?;
        }
        let mut code = self.dtype.code();
        if self.kind == GridKind::Squeezed {
            code |= SQUEEZED;
        }
        if self.two_d {
            code |= TWO_D;
        }
        w.write_all(&[code, self.m])?;
        for v in [
            self.sigma,
            self.time.start,
            self.time.step,
            self.eta.start,
            self.eta.step,
            self.gamma.start,
            self.gamma.step,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    fn read(r: &mut impl Read, path: &Path) -> Result<GridHeader> {
        let io = |e| Error::io(path, e);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::format(path, "bad magic"));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2).map_err(io)?;
        let version = u16::from_le_bytes(b2);
        if version != VERSION {
            return Err(Error::format(path, format!("unsupported version {version}")));
        }
        let mut lens = [0usize; 3];
        for len in &mut lens {
            let mut b4 = [0u8; 4];
            r.read_exact(&mut b4).map_err(io)?;
            *len = u32::from_le_bytes(b4) as usize;
        }
        let mut cm = [0u8; 2];
        r.read_exact(&mut cm).map_err(io)?;
        let dtype = Dtype::from_code(cm[0] & 0x0f).ok_or_else(|| Error::format(path, format!("unknown dtype {}", cm[0])))?;
        let mut f = [0f64; 7];
        for v in &mut f {
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8).map_err(io)?;
            *v = f64::from_le_bytes(b8);
        }
        Ok(GridHeader {
            time: Axis::new(f[1], f[2], lens[0]),
            eta: Axis::new(f[3], f[4], lens[1]),
            gamma: Axis::new(f[5], f[6], lens[2]),
            dtype,
            m: cm[1],
            sigma: f[0],
            kind: if cm[0] & SQUEEZED != 0 { GridKind::Squeezed } else { GridKind::Raw },
            two_d: cm[0] & TWO_D != 0,
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

/// Writes a complex grid as complex64 or complex128.
pub fn write_grid(path: impl AsRef<Path>, grid: &TfgddGrid, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    if !matches!(dtype, Dtype::Complex64 | Dtype::Complex128) {
        return Err(Error::config("complex grids need a complex dtype"));
    }
    let header = GridHeader {
        time: grid.time,
        eta: grid.eta,
        gamma: grid.gamma,
        dtype,
        m: grid.m,
        sigma: grid.sigma,
        kind: grid.kind,
        two_d: false,
    };
    let mut w = create(path)?;
    let res: std::io::Result<()> = (|| {
        header.write(&mut w)?;
        for z in &grid.values {
            match dtype {
                Dtype::Complex64 => {
                    w.write_all(&(z.re as f32).to_le_bytes())?;
                    w.write_all(&(z.im as f32).to_le_bytes())?;
                }
                _ => {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<TfgddGrid> {
    let path = path.as_ref();
    let mut r = open(path)?;
    let h = GridHeader::read(&mut r, path)?;
    let width = match h.dtype {
        Dtype::Complex64 => 4,
        Dtype::Complex128 => 8,
        _ => return Err(Error::format(path, "expected a complex payload")),
    };
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    if raw.len() != h.cells() * 2 * width {
        return Err(Error::format(path, format!("payload is {} bytes, expected {}", raw.len(), h.cells() * 2 * width)));
    }
    let values = raw
        .chunks_exact(2 * width)
        .map(|c| {
            if width == 4 {
                Complex64::new(
                    f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
                )
            } else {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            }
        })
        .collect();
    Ok(TfgddGrid { values, time: h.time, eta: h.eta, gamma: h.gamma, m: h.m, sigma: h.sigma, kind: h.kind })
}

/// Writes a real array with an optional mask plane. `header.dtype` is set
/// from whether a mask is given.
pub fn write_real_grid(path: impl AsRef<Path>, header: GridHeader, values: &[f64], mask: Option<&[bool]>) -> Result<()> {
    let path = path.as_ref();
    let header = GridHeader { dtype: if mask.is_some() { Dtype::RealMasked } else { Dtype::Real }, ..header };
    if values.len() != header.cells() || mask.is_some_and(|m| m.len() != values.len()) {
        return Err(Error::config("array length does not match the header"));
    }
    let mut w = create(path)?;
    let res: std::io::Result<()> = (|| {
        header.write(&mut w)?;
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
        if let Some(mask) = mask {
            let bytes: Vec<u8> = mask.iter().map(|&b| b as u8).collect();
            w.write_all(&bytes)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Real payload with its mask (all true when the file has none).
pub fn read_real_grid(path: impl AsRef<Path>) -> Result<(GridHeader, Vec<f64>, Vec<bool>)> {
    let path = path.as_ref();
    let mut r = open(path)?;
    let h = GridHeader::read(&mut r, path)?;
    let masked = match h.dtype {
        Dtype::RealMasked => true,
        Dtype::Real => false,
        _ => return Err(Error::format(path, "expected a real payload")),
    };
    let n = h.cells();
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    let want = n * 8 + if masked { n } else { 0 };
    if raw.len() != want {
        return Err(Error::format(path, format!("payload is {} bytes, expected {want}", raw.len())));
    }
    let values = raw[..n * 8].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mask = if masked { raw[n * 8..].iter().map(|&b| b != 0).collect() } else { vec![true; n] };
    Ok((h, values, mask))
}

/// TFR as a 2D container (`N_gamma = 1`), time-fastest like the grids.
pub fn write_tfr_binary(path: impl AsRef<Path>, tfr: &TfrGrid, sigma: f64) -> Result<()> {
    let header = GridHeader {
        time: tfr.time,
        eta: tfr.eta,
        gamma: Axis::new(0.0, 0.0, 1),
        dtype: Dtype::Real,
        m: 0,
        sigma,
        kind: GridKind::Squeezed,
        two_d: true,
    };
    write_real_grid(path, header, &tfr.values, None)
}

/// TFR as a CSV matrix: one row per time bin, one column per frequency,
/// with the axis values in the first row and column.
pub fn write_tfr_csv(path: impl AsRef<Path>, tfr: &TfrGrid) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let mut head = vec!["tau_s".to_string()];
    head.extend((0..tfr.eta.len).map(|j| fmt(tfr.eta.value(j))));
    w.write_record(&head).map_err(|e| csv_error(path, e))?;
    for p in 0..tfr.time.len {
        let mut row = vec![fmt(tfr.time.value(p))];
        row.extend((0..tfr.eta.len).map(|j| fmt(tfr.get(p, j))));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        }
    } else {
        Error::format(path, e.to_string())
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `t,value` for real signals, `t,re,im` otherwise.
pub fn write_signal_csv(path: impl AsRef<Path>, signal: &SampledSignal, real: bool) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let head: &[&str] = if real { &["t", "value"] } else { &["t", "re", "im"] };
    w.write_record(head).map_err(|e| csv_error(path, e))?;
    for (n, z) in signal.samples.iter().enumerate() {
        let t = fmt(signal.time(n));
        let rec = if real { vec![t, fmt(z.re)] } else { vec![t, fmt(z.re), fmt(z.im)] };
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `t,value` or `t,re,im`; the time column must be uniform.
pub fn read_signal_csv(path: impl AsRef<Path>) -> Result<SampledSignal> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let width = r.headers().map_err(|e| csv_error(path, e))?.len();
    if !(width == 2 || width == 3) {
        return Err(Error::format(path, "expected columns t,value or t,re,im"));
    }
    let mut t = Vec::new();
    let mut z = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = t.len() + 1;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::format(path, format!("bad number in row {row}")))
        };
        t.push(num(0)?);
        z.push(Complex64::new(num(1)?, if width == 3 { num(2)? } else { 0.0 }));
    }
    if t.len() < 2 {
        return Err(Error::format(path, "need at least two samples"));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs()) {
        return Err(Error::format(path, "time column is not uniformly spaced"));
    }
    SampledSignal::new(z, dt, t[0])
}

#[derive(Serialize)]
struct EntropyRow {
    sigma: f64,
    entropy: f64,
}

pub fn write_entropy_csv(path: impl AsRef<Path>, curve: &[(f64, f64)]) -> Result<()> {
    write_rows(path.as_ref(), curve.iter().map(|&(sigma, entropy)| EntropyRow { sigma, entropy }))
}

#[derive(Serialize, Deserialize)]
struct RidgeRow {
    ridge_id: usize,
    eta_hz: f64,
    tau_s: f64,
    gamma_s_per_hz: f64,
    amplitude: f64,
}

pub fn write_ridges_csv(path: impl AsRef<Path>, ridges: &RidgeSet) -> Result<()> {
    let rows = ridges.ridges.iter().enumerate().flat_map(|(id, r)| {
        (0..r.len()).map(move |i| RidgeRow {
            ridge_id: id,
            eta_hz: r.eta[i],
            tau_s: r.tau[i],
            gamma_s_per_hz: r.gamma[i],
            amplitude: r.amplitude[i],
        })
    });
    write_rows(path.as_ref(), rows)
}

/// Reads a ridge table onto the frequency axis `eta`. Each ridge must
/// occupy consecutive columns.
pub fn read_ridges_csv(path: impl AsRef<Path>, eta: Axis) -> Result<RidgeSet> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut ridges: Vec<Ridge> = Vec::new();
    for row in r.deserialize::<RidgeRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let j = eta
            .bin(row.eta_hz)
            .filter(|&j| (eta.value(j) - row.eta_hz).abs() < 1e-6 * eta.step.abs())
            .ok_or_else(|| Error::format(path, format!("{} Hz is not on the frequency axis", row.eta_hz)))?;
        if row.ridge_id > ridges.len() {
            return Err(Error::format(path, "ridge ids must start at 0 and be consecutive"));
        }
        if row.ridge_id == ridges.len() {
            ridges.push(Ridge {
                j_start: j,
                eta: Vec::new(),
                tau: Vec::new(),
                gamma: Vec::new(),
                amplitude: Vec::new(),
                low_confidence: false,
            });
        }
        let rd = &mut ridges[row.ridge_id];
        if j != rd.j_start + rd.len() {
            return Err(Error::format(path, format!("ridge {} skips columns", row.ridge_id)));
        }
        rd.eta.push(eta.value(j));
        rd.tau.push(row.tau_s);
        rd.gamma.push(row.gamma_s_per_hz);
        rd.amplitude.push(row.amplitude);
    }
    Ok(RidgeSet { ridges, eta })
}

#[derive(Serialize)]
struct SpectrumRow {
    mode_id: usize,
    eta_hz: f64,
    re: f64,
    im: f64,
}

/// All bins of each recovered spectrum, in ascending frequency.
pub fn write_spectra_csv(path: impl AsRef<Path>, spectra: &[Spectrum]) -> Result<()> {
    let rows = spectra.iter().enumerate().flat_map(|(id, s)| {
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s.eta(a).total_cmp(&s.eta(b)));
        order.into_iter().map(move |j| SpectrumRow { mode_id: id, eta_hz: s.eta(j), re: s.bins[j].re, im: s.bins[j].im })
    });
    write_rows(path.as_ref(), rows)
}

#[derive(Serialize)]
struct DiagnosticsRow {
    eta_hz: f64,
    inf_norm_inv: f64,
    cond2: f64,
    pseudo_flag: u8,
}

pub fn write_diagnostics_csv(path: impl AsRef<Path>, d: &DiagnosticsProfile) -> Result<()> {
    let rows = (0..d.eta.len()).map(|i| DiagnosticsRow {
        eta_hz: d.eta[i],
        inf_norm_inv: d.inf_norm_inv[i],
        cond2: d.cond2[i],
        pseudo_flag: d.pseudo[i] as u8,
    });
    write_rows(path.as_ref(), rows)
}

#[derive(Serialize)]
struct BoundCsvRow {
    eta_hz: f64,
    mode: usize,
    bound_t: f64,
    bound_r: f64,
    omega0: f64,
    recovery_bound: f64,
    measured_t_err: f64,
    measured_r_err: f64,
    measured_recovery_err: f64,
}

pub fn write_bounds_csv(path: impl AsRef<Path>, report: &BoundReport) -> Result<()> {
    let rows = report.rows.iter().map(|r| BoundCsvRow {
        eta_hz: r.eta_hz,
        mode: r.mode,
        bound_t: r.bound_t,
        bound_r: r.bound_r,
        omega0: r.omega0,
        recovery_bound: r.recovery_bound,
        measured_t_err: r.measured_t_err,
        measured_r_err: r.measured_r_err,
        measured_recovery_err: r.measured_recovery_err,
    });
    write_rows(path.as_ref(), rows)
}

/// Real part as mono float32 WAV, scaled to unit peak.
pub fn write_wav(path: impl AsRef<Path>, signal: &SampledSignal) -> Result<()> {
    let path = path.as_ref();
    let rate = (1.0 / signal.dt).round();
    if !(rate >= 1.0 && rate <= u32::MAX as f64) {
        return Err(Error::config(format!("sample rate {rate} Hz cannot be stored in a WAV file")));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let peak = signal.samples.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    let wav_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for z in &signal.samples {
        w.write_sample((z.re * scale) as f32).map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}
