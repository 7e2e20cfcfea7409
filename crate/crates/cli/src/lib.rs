//! Experiment registry and runner behind the `tiltpump` binary.

pub mod config;
mod experiments;
pub mod report;

use std::path::Path;
use std::time::Instant;

use serde_json::Value;
use tiltpump::ModelParams;

use config::ConfigFile;
use report::{Manifest, Run};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown experiment `{id}`{}", suggestion.as_ref().map(|s| format!("; did you mean `{s}`?")).unwrap_or_default())]
    Unknown { id: String, suggestion: Option<String> },

    #[error(transparent)]
    Numerics(#[from] tiltpump::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Unknown { .. } => 2,
            Self::Numerics(_) => 1,
        }
    }
}

pub type RunFn = fn(&ModelParams, &Value, &mut Run) -> Result<(), CliError>;

pub struct Experiment {
    pub id: &'static str,
    pub summary: &'static str,
    /// Rough single-core wall time with default controls.
    pub runtime: &'static str,
    /// What the regression checks assert.
    pub checks: &'static [&'static str],
    pub params: fn() -> ModelParams,
    pub controls: fn() -> Value,
    pub run: RunFn,
}

pub fn registry() -> &'static [Experiment] {
    experiments::REGISTRY
}

pub fn find(id: &str) -> Result<&'static Experiment, CliError> {
    registry().iter().find(|e| e.id == id).ok_or_else(|| {
        let suggestion = registry()
            .iter()
            .map(|e| (strsim::jaro_winkler(id, e.id), e.id))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .filter(|(s, _)| *s > 0.7)
            .map(|(_, id)| id.to_string());
        CliError::Unknown { id: id.to_string(), suggestion }
    })
}

/// Human-readable registry entry.
pub fn describe(e: &Experiment) -> String {
    let params = serde_json::to_string_pretty(&(e.params)()).unwrap_or_default();
    let controls = serde_json::to_string_pretty(&(e.controls)()).unwrap_or_default();
    let mut s = format!(
        "{}\n  {}\n  expected runtime: {}\n  default parameters:\n{}\n  default controls:\n{}\n  regression checks:\n",
        e.id,
        e.summary,
        e.runtime,
        indent(&params, 4),
        indent(&controls, 4)
    );
    for c in e.checks {
        s.push_str(&format!("    - {c}\n"));
    }
    s
}

fn indent(text: &str, n: usize) -> String {
    let pad = " ".repeat(n);
    text.lines().map(|l| format!("{pad}{l}")).collect::<Vec<_>>().join("\n")
}

pub struct Options<'a> {
    pub out: &'a Path,
    pub strict: bool,
    pub threads: usize,
}

/// Runs one experiment and writes `manifest.json` into the output directory.
///
/// Configuration problems are returned as errors before anything is written.
/// A numerical failure mid-run is recorded in the manifest as `fatal`.
pub fn execute(e: &Experiment, cfg: &ConfigFile, opts: &Options) -> Result<Manifest, CliError> {
    if let Some(id) = &cfg.experiment {
        if id != e.id {
            return Err(CliError::Config(format!("config is for `{id}`, not `{}`", e.id)));
        }
    }
    let params = cfg.params.apply(&(e.params)())?;
    let mut run = Run::new(opts.out, cfg.emit);
    let start = Instant::now();
    let fatal = match (e.run)(&params, &cfg.controls, &mut run) {
        Ok(()) => None,
        Err(err @ (CliError::Config(_) | CliError::Unknown { .. })) => return Err(err),
        Err(err) => Some(err.to_string()),
    };
    let passed = fatal.is_none() && run.all_passed() && !(opts.strict && !run.warnings.is_empty());
    let manifest = Manifest {
        tool: "tiltpump",
        version: env!("CARGO_PKG_VERSION"),
        experiment: e.id.to_string(),
        schema: config::SCHEMA,
        params,
        controls: run.controls.clone(),
        emit: cfg.emit,
        out: opts.out.to_path_buf(),
        threads: opts.threads,
        strict: opts.strict,
        wall_seconds: start.elapsed().as_secs_f64(),
        passed,
        checks: run.checks,
        warnings: run.warnings,
        errors: run.errors,
        fatal,
        files: run.files,
    };
    tiltpump::export::write_json(&opts.out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
