//! Per-run bookkeeping: regression checks, artifacts and the manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use tiltpump::export::{self, Heatmap, LinePlot, Table};
use tiltpump::ModelParams;

use crate::config::Emit;
use crate::CliError;

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// A number quoted in the published study.
    Published,
    /// Computed independently (oracle, symmetry, limit).
    Derived,
    /// Follows from a definition or a dimension count.
    Definition,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Expect {
    Near { value: f64, tol: f64 },
    Below { limit: f64 },
    Above { limit: f64 },
    Equal { value: f64 },
}

impl Expect {
    pub fn near(value: f64, tol: f64) -> Self {
        Self::Near { value, tol }
    }

    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Self::Near { value, tol } => (x - value).abs() <= tol,
            Self::Below { limit } => x < limit,
            Self::Above { limit } => x > limit,
            Self::Equal { value } => x == value,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expect: Expect,
    pub source: Source,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub schema: u32,
    pub params: ModelParams,
    pub controls: Value,
    pub emit: Emit,
    pub out: PathBuf,
    pub threads: usize,
    pub strict: bool,
    pub wall_seconds: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Per-point numerical failures that did not stop the run.
    pub errors: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fatal: Option<String>,
    pub files: Vec<FileRecord>,
}

/// Collects the outputs of one experiment.
#[derive(Debug)]
pub struct Run {
    pub out: PathBuf,
    pub emit: Emit,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
    pub files: Vec<FileRecord>,
    /// Resolved controls, echoed in the manifest.
    pub controls: Value,
}

impl Run {
    pub fn new(out: &Path, emit: Emit) -> Self {
        Self {
            out: out.to_path_buf(),
            emit,
            checks: Vec::new(),
            warnings: Vec::new(),
            errors: Vec::new(),
            files: Vec::new(),
            controls: Value::Null,
        }
    }

    /// Parses experiment controls and records the resolved values.
    pub fn controls<T>(&mut self, v: &Value) -> Result<T, CliError>
    where
        T: serde::de::DeserializeOwned + Serialize,
    {
        let c: T = crate::config::controls(v)?;
        self.controls = serde_json::to_value(&c).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn check(&mut self, name: impl Into<String>, measured: f64, expect: Expect, source: Source) -> bool {
        self.check_with(name, measured, expect, source, None)
    }

    pub fn check_with(
        &mut self,
        name: impl Into<String>,
        measured: f64,
        expect: Expect,
        source: Source,
        note: Option<String>,
    ) -> bool {
        let passed = expect.holds(measured);
        self.checks.push(Check { name: name.into(), measured, expect, source, passed, note });
        passed
    }

    /// A check that could not be evaluated because its computation failed.
    pub fn fail(&mut self, name: impl Into<String>, source: Source, error: String) {
        self.errors.push(error.clone());
        self.checks.push(Check {
            name: name.into(),
            measured: f64::NAN,
            expect: Expect::Equal { value: f64::NAN },
            source,
            passed: false,
            note: Some(error),
        });
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn warn_all(&mut self, context: &str, ws: &[String]) {
        for w in ws {
            self.warnings.push(format!("{context}: {w}"));
        }
    }

    fn record(&mut self, name: &str, sha256: String) {
        self.files.push(FileRecord { path: PathBuf::from(name), sha256 });
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        if self.emit.csv {
            let h = table.write(&self.out.join(name))?;
            self.record(name, h);
        }
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        if self.emit.json {
            let h = export::write_json(&self.out.join(name), value)?;
            self.record(name, h);
        }
        Ok(())
    }

    fn svg(&mut self, name: &str, doc: String) -> Result<(), CliError> {
        if self.emit.svg {
            let h = export::write_text(&self.out.join(name), &doc)?;
            self.record(name, h);
        }
        Ok(())
    }

    pub fn heatmap(&mut self, name: &str, map: &Heatmap) -> Result<(), CliError> {
        if self.emit.svg {
            self.svg(name, map.to_svg())?;
        }
        Ok(())
    }

    pub fn plot(&mut self, name: &str, plot: &LinePlot) -> Result<(), CliError> {
        if self.emit.svg {
            self.svg(name, plot.to_svg())?;
        }
        Ok(())
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
