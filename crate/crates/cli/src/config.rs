//! Flat `key = value` config file. Every key mirrors a long flag with
//! dashes turned into underscores.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<OneOrMany<String>>,
    pub h: Option<OneOrMany<f64>>,
    pub method: Option<OneOrMany<String>>,
    pub rho: Option<f64>,
    pub r1: Option<f64>,
    pub domain: Option<String>,
    pub epsilon: Option<f64>,
    pub kappa: Option<f64>,
    pub drop_tol: Option<f64>,
    pub fp_scheme: Option<String>,
    pub horizon: Option<f64>,
    pub reps: Option<usize>,
    pub extended: Option<bool>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}
