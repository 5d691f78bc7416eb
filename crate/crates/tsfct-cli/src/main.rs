//! `tsfct`: chirplet analysis, synchrosqueezing, ridge extraction and mode
//! recovery from the command line.
//!
//! Every command writes its data files into `--out` together with
//! `<command>.manifest.json`, which records the configuration, the resolved
//! defaults, counts and timings. `tsfct replay <manifest>` reruns it.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O or format error,
//! 4 numerical failure.

mod commands;
mod config;
mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use commands::{Ctx, Report};
use config::{config_error, RunConfig};
use tsfct::{Error, Result};

#[derive(Parser)]
#[command(name = "tsfct", version, about = "Chirplet analysis of signals with crossing group delays")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a built-in signal as CSV and WAV.
    Synth(RunConfig),
    /// Write one transform grid `D^{ξ^m g}` (see `--power`).
    Fct(RunConfig),
    /// Write the squeezed grid and its time-frequency projection.
    Squeeze(RunConfig),
    /// Write the Rényi entropy against σ.
    Entropy(RunConfig),
    /// Extract `--modes` ridges from the squeezed grid.
    Ridges(RunConfig),
    /// Recover mode spectra and waveforms along the ridges.
    Recover(RunConfig),
    /// Compare measured errors with their bounds (built-in signals only).
    Bounds(RunConfig),
    /// Run oracle comparisons (`--suite`).
    Verify(RunConfig),
    /// Rerun the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write into this directory instead of the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    grid_format_version: u16,
    command: String,
    config: RunConfig,
    resolved: BTreeMap<String, Value>,
    stats: BTreeMap<String, Value>,
    timings_s: BTreeMap<String, f64>,
    outputs: Vec<String>,
}

fn execute(command: &str, cfg: &RunConfig) -> Result<()> {
    if cfg.threads == Some(0) {
        return Err(config_error("--threads must be at least 1"));
    }
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::Io { path: cfg.out.clone(), source: e })?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| config_error(format!("cannot start worker threads: {e}")))?;
    let mut ctx = Ctx { cfg, report: Report::default() };
    let run = match command {
        "synth" => commands::synth,
        "fct" => commands::fct,
        "squeeze" => commands::squeeze_cmd,
        "entropy" => commands::entropy,
        "ridges" => commands::ridges,
        "recover" => commands::recover,
        "bounds" => commands::bounds,
        "verify" => commands::verify_cmd,
        other => return Err(config_error(format!("unknown command {other:?}"))),
    };
    let result = pool.install(|| run(&mut ctx));
    // the manifest is written for failed numerical checks too
    if result.is_ok() || matches!(result, Err(Error::Numerical(_))) {
        let m = Manifest {
            tool: "tsfct".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            grid_format_version: tsfct::io::VERSION,
            command: command.into(),
            config: cfg.clone(),
            resolved: ctx.report.resolved,
            stats: ctx.report.stats,
            timings_s: ctx.report.timings,
            outputs: ctx.report.outputs,
        };
        let path = cfg.out.join(format!("{command}.manifest.json"));
        let text = serde_json::to_string_pretty(&m).expect("plain data");
        std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?;
    }
    result
}

fn replay(path: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Format { path: path.into(), msg: e.to_string() })?;
    let mut cfg = m.config;
    if let Some(o) = out {
        cfg.out = o;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    execute(&m.command, &cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io { .. } | Error::Format { .. } => 3,
        Error::Numerical(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Synth(c) => execute("synth", &c),
        Cmd::Fct(c) => execute("fct", &c),
        Cmd::Squeeze(c) => execute("squeeze", &c),
        Cmd::Entropy(c) => execute("entropy", &c),
        Cmd::Ridges(c) => execute("ridges", &c),
        Cmd::Recover(c) => execute("recover", &c),
        Cmd::Bounds(c) => execute("bounds", &c),
        Cmd::Verify(c) => execute("verify", &c),
        Cmd::Replay { manifest, out, threads } => replay(&manifest, out, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tsfct: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
