//! Command-line front end: config parsing, dispatch, result files and
//! reproducibility manifests.
//!
//! Exit status is 0 on success, 1 on domain errors and failed checks, and 2
//! on configuration errors. Every error is also written to standard error as
//! one JSON object.

pub mod args;
pub mod config;
pub mod error;
pub mod exec;
pub mod manifest;
pub mod report;
pub mod resolve;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};
use crate::exec::{execute, Outcome};
use crate::manifest::{
    check_inputs, hash_file, manifest_path, read_manifest, write_atomic, FileHash, FileRole, RunManifest,
};
use crate::resolve::{check_format, resolve, Format, Params, RunConfig};

pub const TOOL: &str = "connective";
pub const REPORT_MANIFEST: &str = "report.manifest.json";

/// Where a run writes, once its outcome is known.
fn output_paths(cfg: &RunConfig) -> (Option<PathBuf>, Option<PathBuf>) {
    match &cfg.command {
        Params::Report { dir } => {
            let out = cfg.out.clone().unwrap_or_else(|| dir.clone());
            let m = out.join(REPORT_MANIFEST);
            (Some(out), Some(m))
        }
        _ => (cfg.out.clone(), cfg.out.as_deref().map(manifest_path)),
    }
}

fn input_hashes(cfg: &RunConfig, config_file: Option<&Path>) -> CliResult<Vec<FileHash>> {
    let mut out = Vec::new();
    if let Some(c) = config_file {
        out.push(hash_file(FileRole::Config, c)?);
    }
    if let Some(t) = cfg.potential.as_ref().and_then(|p| p.table()) {
        out.push(hash_file(FileRole::Table, t)?);
    }
    if let Params::DeltaBound { inputs, .. } = &cfg.command {
        for p in inputs {
            out.push(hash_file(FileRole::Input, p)?);
        }
    }
    Ok(out)
}

fn write_outputs(cfg: &RunConfig, outcome: &Outcome) -> CliResult<Vec<FileHash>> {
    let (Some(out), _) = output_paths(cfg) else {
        return Ok(Vec::new());
    };
    let mut written = Vec::new();
    if let Params::Report { .. } = cfg.command {
        for (name, body) in &outcome.files {
            let p = out.join(name);
            write_atomic(&p, body.as_bytes())?;
            written.push(hash_file(FileRole::Output, &p)?);
        }
        return Ok(written);
    }
    let body = match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&outcome.result).unwrap_or_default();
            s.push('\n');
            s
        }
        Format::Csv => outcome.csv.clone().unwrap_or_default(),
        Format::Jsonl => outcome.jsonl.clone().unwrap_or_default(),
    };
    write_atomic(&out, body.as_bytes())?;
    written.push(hash_file(FileRole::Output, &out)?);
    Ok(written)
}

/// Executes a resolved configuration, writes its files and prints the
/// human (or JSON) summary to `stdout`.
pub fn run_config(
    cfg: &RunConfig,
    config_file: Option<&Path>,
    json_stdout: bool,
    replayed_from: Option<&Path>,
    stdout: &mut dyn Write,
) -> CliResult<Outcome> {
    let inputs = input_hashes(cfg, config_file)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let start = Instant::now();
    let outcome = pool.install(|| execute(cfg))?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let outputs = write_outputs(cfg, &outcome)?;
    if let (_, Some(mpath)) = output_paths(cfg) {
        let manifest = RunManifest {
            tool: TOOL.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: cfg.command.name().into(),
            config: cfg.clone(),
            seed_source: cfg.seed_source,
            wall_seconds,
            timings: outcome.timings.clone(),
            inputs,
            outputs,
            replayed_from: replayed_from.map(Path::to_path_buf),
        };
        let mut body = serde_json::to_string_pretty(&manifest).unwrap_or_default();
        body.push('\n');
        write_atomic(&mpath, body.as_bytes())?;
    }

    let printed = if json_stdout {
        let mut s = serde_json::to_string_pretty(&outcome.result).unwrap_or_default();
        s.push('\n');
        s
    } else {
        outcome.text.clone()
    };
    let _ = stdout.write_all(printed.as_bytes());
    if let Some(msg) = &outcome.failure {
        return Err(CliError::VerificationFailed(msg.clone()));
    }
    Ok(outcome)
}

/// Re-runs the configuration stored in a manifest.
pub fn replay(manifest: &Path, out: Option<&Path>, json_stdout: bool, stdout: &mut dyn Write) -> CliResult<Outcome> {
    let m = read_manifest(manifest)?;
    check_inputs(&m)?;
    let mut cfg = m.config;
    if let Some(o) = out {
        let o = std::path::absolute(o).map_err(|e| CliError::io(o, e))?;
        cfg.format = match o.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("jsonl") => Format::Jsonl,
            _ => Format::Json,
        };
        cfg.out = Some(o);
    }
    check_format(&cfg.command, cfg.format)?;
    let config_file = m.inputs.iter().find(|h| h.role == FileRole::Config).map(|h| h.path.clone());
    let config_file = config_file.filter(|p| p.is_file());
    run_config(&cfg, config_file.as_deref(), json_stdout, Some(manifest), stdout)
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> CliResult<Outcome> {
    match command {
        Command::Replay { manifest, out, json } => replay(&manifest, out.as_deref(), json, stdout),
        other => {
            let r = resolve(other)?;
            run_config(&r.config, r.config_file.as_deref(), r.json, None, stdout)
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut stdout = std::io::stdout().lock();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match dispatch(cli.command, &mut stdout) {
        Ok(_) => 0,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
