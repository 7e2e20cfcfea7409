//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::{Boundary, ModelParams};

use crate::CliError;

/// Current config schema version.
pub const SCHEMA: u32 = 1;

fn schema() -> u32 {
    SCHEMA
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Emit {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self { csv: true, json: true, svg: true }
    }
}

/// Partial [`ModelParams`]; every present key replaces the experiment default.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub hopping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(rename = "Delta0", skip_serializing_if = "Option::is_none")]
    pub stagger: Option<f64>,
    #[serde(rename = "U", skip_serializing_if = "Option::is_none")]
    pub interaction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt_p: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt_q: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
}

impl ParamOverrides {
    pub fn apply(&self, base: &ModelParams) -> Result<ModelParams, CliError> {
        let p = ModelParams {
            hopping: self.hopping.unwrap_or(base.hopping),
            delta0: self.delta0.unwrap_or(base.delta0),
            stagger: self.stagger.unwrap_or(base.stagger),
            interaction: self.interaction.unwrap_or(base.interaction),
            omega: self.omega.unwrap_or(base.omega),
            tilt_p: self.tilt_p.unwrap_or(base.tilt_p),
            tilt_q: self.tilt_q.unwrap_or(base.tilt_q),
            phi0: self.phi0.unwrap_or(base.phi0),
            sites: self.sites.unwrap_or(base.sites),
            boundary: self.boundary.unwrap_or(base.boundary),
        };
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "schema")]
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default)]
    pub params: ParamOverrides,
    /// Experiment-specific numerical controls; validated by the experiment.
    #[serde(default)]
    pub controls: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub emit: Emit,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            experiment: None,
            params: ParamOverrides::default(),
            controls: Value::Null,
            out: None,
            emit: Emit::default(),
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if c.schema != SCHEMA {
            return Err(CliError::Config(format!("unsupported schema {} (expected {SCHEMA})", c.schema)));
        }
        if !(c.controls.is_null() || c.controls.is_object()) {
            return Err(CliError::Config("`controls` must be an object".into()));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Deserialises experiment controls, filling defaults and rejecting unknown keys.
pub fn controls<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, CliError> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("controls: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigFile::parse(r#"{"experment": "bands"}"#).is_err());
        assert!(ConfigFile::parse(r#"{"params": {"u": 10}}"#).is_err());
        assert!(ConfigFile::parse(r#"{"emit": {"png": true}}"#).is_err());
        assert!(ConfigFile::parse(r#"{"schema": 2}"#).is_err());
        assert!(ConfigFile::parse(r#"{"controls": 3}"#).is_err());
    }

    #[test]
    fn overrides_apply_and_validate() {
        let c = ConfigFile::parse(r#"{"params": {"U": 10, "sites": 10, "boundary": "open"}}"#).unwrap();
        let p = c.params.apply(&ModelParams::bound_pump()).unwrap();
        assert_eq!((p.interaction, p.sites, p.boundary), (10.0, 10, Boundary::Open));
        assert_eq!(p.stagger, 2.0);
        let bad = ConfigFile::parse(r#"{"params": {"sites": 7}}"#).unwrap();
        assert!(bad.params.apply(&ModelParams::bound_pump()).is_err());
    }

    #[test]
    fn empty_document_takes_defaults() {
        let c = ConfigFile::parse("{}").unwrap();
        assert_eq!(c, ConfigFile::default());
    }
}
