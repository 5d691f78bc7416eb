use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};

use tsfct::bounds::{bound_report, match_ridges_to_modes};
use tsfct::entropy::{renyi_entropy, signal_entropy, EntropyConfig};
use tsfct::fgsso::{diagnostics_profile, recover_modes};
use tsfct::io::{
    read_grid, read_ridges_csv, write_bounds_csv, write_diagnostics_csv, write_entropy_csv, write_grid, write_ridges_csv,
    write_signal_csv, write_spectra_csv, write_tfr_binary, write_tfr_csv, write_wav, Dtype,
};
use tsfct::reassign::high_order_reference;
use tsfct::squeeze::{project_tfr, squeeze, SqueezeStats};
use tsfct::{
    extract_ridges, fct_grid, squeeze_streaming, Analysis, BoundaryBand, Error, FctOptions, FctPlan, FrequencyBins,
    GammaGrid, GaussianWindow, GridKind, Result, RidgeOptions, RidgeSet, TfgddGrid,
};

use crate::config::{config_error, RunConfig, Source};
use crate::verify;

/// What a command reports in its manifest besides the config.
#[derive(Default)]
pub struct Report {
    pub resolved: BTreeMap<String, Value>,
    pub stats: BTreeMap<String, Value>,
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl Report {
    fn resolve(&mut self, key: &str, v: impl Into<Value>) {
        self.resolved.insert(key.into(), v.into());
    }

    fn stat(&mut self, key: &str, v: impl Into<Value>) {
        self.stats.insert(key.into(), v.into());
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.timings.entry(stage.into()).or_default() += t.elapsed().as_secs_f64();
        out
    }

    fn signal(&mut self, src: &Source) {
        self.resolve("samples", src.signal.len());
        self.resolve("dt", src.signal.dt);
        self.resolve("t0", src.signal.t0);
    }

    fn grid(&mut self, gg: &GammaGrid) {
        self.resolve("gamma_max", gg.r0);
        self.resolve("gamma_bins", gg.l_bins);
    }

    fn window(&mut self, w: &GaussianWindow, band: &BoundaryBand) {
        self.resolve("sigma", w.sigma);
        self.resolve("boundary_time_s", band.time_s);
        self.resolve("boundary_freq_hz", band.freq_hz);
    }

    fn squeeze_stats(&mut self, s: &SqueezeStats) {
        self.stat("moved", s.moved);
        self.stat("dropped", s.dropped);
        self.stat("epsilon_used", s.epsilon_used);
        self.stat("max_det", s.max_det);
    }
}

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub report: Report,
}

impl Ctx<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.report.outputs.push(name.to_string());
        self.cfg.out.join(name)
    }

    /// Signal, GDD grid, window and boundary band, all recorded.
    fn setup(&mut self) -> Result<(Source, GammaGrid, GaussianWindow, BoundaryBand)> {
        let src = self.report.time("load", || self.cfg.source())?;
        self.report.signal(&src);
        let gg = self.cfg.ggrid(&src)?;
        self.report.grid(&gg);
        let cfg = self.cfg;
        let (w, curve) = self.report.time("window", || cfg.window(&src, &gg))?;
        if let Some(c) = curve {
            self.report.stat("sigma_search_points", c.len());
        }
        let band = self.cfg.band(&w)?;
        self.report.window(&w, &band);
        self.report.resolve("epsilon_rel", self.cfg.epsilon_rel);
        Ok((src, gg, w, band))
    }

    fn squeezed(&mut self, src: &Source, gg: &GammaGrid, w: &GaussianWindow) -> Result<TfgddGrid> {
        let (cfg, order) = (self.cfg, self.cfg.order);
        self.report.resolve("order", order);
        let (sq, stats) = self.report.time("squeeze", || -> Result<_> {
            if order == 2 {
                let a = Analysis::new(&src.signal, *w, *gg, FrequencyBins::NonNegative)?;
                squeeze_streaming(&a, cfg.epsilon_rel)
            } else if (3..=4).contains(&order) {
                let grids = (0..2 * order - 1)
                    .map(|m| fct_grid(&src.signal, w, gg, m as u8, &FctOptions::default()))
                    .collect::<Result<Vec<_>>>()?;
                let field = high_order_reference(&grids, w, order, cfg.epsilon_rel)?;
                squeeze(&grids[0], &field)
            } else {
                Err(config_error(format!("--order must be 2, 3 or 4, got {order}")))
            }
        })?;
        self.report.squeeze_stats(&stats);
        Ok(sq)
    }

    fn ridge_set(&mut self, sq: &TfgddGrid, k: usize, band: &BoundaryBand) -> Result<RidgeSet> {
        let opts = RidgeOptions { k_modes: k, boundary_hz: band.freq_hz, ..Default::default() };
        let set = self.report.time("ridges", || extract_ridges(sq, &opts))?;
        self.report.stat("ridge_lengths", set.ridges.iter().map(|r| r.len()).collect::<Vec<_>>());
        self.report.stat("low_confidence", set.ridges.iter().map(|r| r.low_confidence).collect::<Vec<_>>());
        Ok(set)
    }
}

pub fn synth(ctx: &mut Ctx<'_>) -> Result<()> {
    if ctx.cfg.signal.is_none() {
        return Err(config_error("synth needs --signal"));
    }
    let src = ctx.cfg.source()?;
    ctx.report.signal(&src);
    let p = ctx.path("signal.csv");
    write_signal_csv(p, &src.signal, false)?;
    let p = ctx.path("signal.wav");
    write_wav(p, &src.signal)
}

pub fn fct(ctx: &mut Ctx<'_>) -> Result<()> {
    let (src, gg, w, _) = ctx.setup()?;
    let m = ctx.cfg.power;
    ctx.report.resolve("power", m);
    let g = ctx.report.time("transform", || fct_grid(&src.signal, &w, &gg, m, &FctOptions::default()))?;
    let p = ctx.path("fct.tfgd");
    write_grid(p, &g, Dtype::Complex64)
}

pub fn squeeze_cmd(ctx: &mut Ctx<'_>) -> Result<()> {
    let (src, gg, w, _) = ctx.setup()?;
    let sq = ctx.squeezed(&src, &gg, &w)?;
    let tfr = project_tfr(&sq);
    let p = ctx.path("squeezed.tfgd");
    write_grid(p, &sq, Dtype::Complex64)?;
    let p = ctx.path("tfr.csv");
    write_tfr_csv(p, &tfr)?;
    let p = ctx.path("tfr.tfgd");
    write_tfr_binary(p, &tfr, w.sigma)
}

pub fn entropy(ctx: &mut Ctx<'_>) -> Result<()> {
    let src = ctx.cfg.source()?;
    ctx.report.signal(&src);
    let gg = ctx.cfg.ggrid(&src)?;
    ctx.report.grid(&gg);
    let ecfg = EntropyConfig::new(ctx.cfg.entropy_order)?;
    let cfg = ctx.cfg;
    let (w, curve) = ctx.report.time("search", || cfg.window(&src, &gg))?;
    let curve = match curve {
        Some(c) => c,
        None => vec![(w.sigma, signal_entropy(&src.signal, &w, &gg, &ecfg, FrequencyBins::NonNegative)?)],
    };
    ctx.report.resolve("sigma", w.sigma);
    ctx.report.stat("entropy_raw", curve.iter().find(|p| p.0 == w.sigma).map(|p| p.1));
    let a = Analysis::new(&src.signal, w, gg, FrequencyBins::NonNegative)?;
    let (sq, stats) = ctx.report.time("squeeze", || squeeze_streaming(&a, cfg.epsilon_rel))?;
    ctx.report.squeeze_stats(&stats);
    ctx.report.stat("entropy_squeezed", renyi_entropy(&sq, &ecfg)?);
    let p = ctx.path("entropy.csv");
    write_entropy_csv(p, &curve)
}

pub fn ridges(ctx: &mut Ctx<'_>) -> Result<()> {
    let (sq, k, band) = match ctx.cfg.grid.clone() {
        Some(path) => {
            let sq = ctx.report.time("load", || read_grid(&path))?;
            if sq.kind != GridKind::Squeezed {
                return Err(config_error(format!("{} is not a squeezed grid", path.display())));
            }
            let w = GaussianWindow::new(ctx.cfg.sigma.unwrap_or(sq.sigma))?;
            let band = ctx.cfg.band(&w)?;
            ctx.report.window(&w, &band);
            let k = ctx.cfg.modes.ok_or_else(|| config_error("ridges from a grid file need --modes"))?;
            (sq, k, band)
        }
        None => {
            let (src, gg, w, band) = ctx.setup()?;
            let k = ctx.cfg.mode_count(&src)?;
            (ctx.squeezed(&src, &gg, &w)?, k, band)
        }
    };
    let set = ctx.ridge_set(&sq, k, &band)?;
    let p = ctx.path("ridges.csv");
    write_ridges_csv(p, &set)
}

pub fn recover(ctx: &mut Ctx<'_>) -> Result<()> {
    let (src, gg, w, band) = ctx.setup()?;
    let set = match ctx.cfg.ridges.clone() {
        Some(path) => {
            let eta = FctPlan::new(&src.signal, FrequencyBins::NonNegative).eta_axis();
            ctx.report.time("load", || read_ridges_csv(&path, eta))?
        }
        None => {
            let k = ctx.cfg.mode_count(&src)?;
            let sq = ctx.squeezed(&src, &gg, &w)?;
            ctx.ridge_set(&sq, k, &band)?
        }
    };
    let scale = ctx.cfg.recover_sigma_scale;
    let rw = GaussianWindow::new(w.sigma * scale)
        .map_err(|_| config_error(format!("--recover-sigma-scale must be positive, got {scale}")))?;
    ctx.report.resolve("recovery_sigma", rw.sigma);
    let rec = ctx.report.time("recover", || recover_modes(&src.signal, &set, &rw, &band))?;
    let diag = diagnostics_profile(&rec.diagnostics);
    ctx.report.stat("recovery_band_hz", vec![set.eta.value(rec.band.0), set.eta.value(rec.band.1 - 1)]);
    ctx.report.stat("pseudo_inverse_columns", diag.pseudo.iter().filter(|&&p| p).count());
    ctx.report.stat("max_cond2", diag.cond2.iter().copied().fold(0.0, f64::max));
    let p = ctx.path("spectra.csv");
    write_spectra_csv(p, &rec.spectra)?;
    let p = ctx.path("diagnostics.csv");
    write_diagnostics_csv(p, &diag)?;
    for (k, m) in rec.time_modes.iter().enumerate() {
        let p = ctx.path(&format!("mode_{k}.csv"));
        write_signal_csv(p, m, false)?;
        let p = ctx.path(&format!("mode_{k}.wav"));
        write_wav(p, m)?;
    }
    Ok(())
}

pub fn bounds(ctx: &mut Ctx<'_>) -> Result<()> {
    if ctx.cfg.signal.is_none() {
        return Err(config_error("bounds need a built-in --signal; the true modes of a file are unknown"));
    }
    let (src, gg, w, band) = ctx.setup()?;
    let modes = src.modes.clone().expect("built-in signals carry their modes");
    if ctx.cfg.modes.is_some_and(|k| k != modes.len()) {
        return Err(config_error(format!("the signal has {} modes", modes.len())));
    }
    let a = Analysis::new(&src.signal, w, gg, FrequencyBins::NonNegative)?;
    let cfg = ctx.cfg;
    ctx.report.resolve("order", 2);
    let (sq, stats) = ctx.report.time("squeeze", || squeeze_streaming(&a, cfg.epsilon_rel))?;
    ctx.report.squeeze_stats(&stats);
    let set = ctx.ridge_set(&sq, modes.len(), &band)?;
    let set = match_ridges_to_modes(set, &modes)?;
    let rw = GaussianWindow::new(w.sigma * cfg.recover_sigma_scale)?;
    ctx.report.resolve("recovery_sigma", rw.sigma);
    let rec = ctx.report.time("recover", || recover_modes(&src.signal, &set, &rw, &band))?;
    let report = ctx.report.time("bounds", || bound_report(&a, &modes, &set, &rec, &rw, &band, cfg.epsilon_rel))?;
    ctx.report.stat("rows", report.rows.len());
    ctx.report.stat("violations", report.violations().count());
    let p = ctx.path("bounds.csv");
    write_bounds_csv(p, &report)
}

pub fn verify_cmd(ctx: &mut Ctx<'_>) -> Result<()> {
    let suites: Vec<&str> = match ctx.cfg.suite.as_str() {
        "all" => verify::SUITES.to_vec(),
        s if verify::SUITES.contains(&s) => vec![s],
        s => return Err(config_error(format!("unknown suite {s:?}; expected {} or all", verify::SUITES.join(", ")))),
    };
    let mut results = Vec::new();
    for s in suites {
        let r = ctx.report.time(s, || verify::run(s))?;
        results.push(r);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.suite).collect();
    ctx.report.stat("suites", serde_json::to_value(&results).expect("plain data"));
    let p = ctx.path("verify.json");
    let text = serde_json::to_string_pretty(&json!({ "results": results })).expect("plain data");
    std::fs::write(&p, text + "\n").map_err(|e| Error::Io { path: p, source: e })?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("oracle mismatch in {}", failed.join(", "))))
    }
}
