//! Config-file values, merged under command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::{BootstrapArg, IntervalArg, ScaleArg};
use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn into_vec(self) -> Vec<String> {
        match self {
            OneOrMany::One(s) => vec![s],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Every flag, by its long name with underscores.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub scale: Option<Vec<ScaleArg>>,
    pub bootstrap: Option<BootstrapArg>,
    pub replicates: Option<usize>,
    pub quiet: Option<bool>,
    pub n_pre: Option<usize>,
    pub n_post: Option<usize>,
    pub threshold: Option<f64>,
    pub scenario: Option<OneOrMany>,
    pub pre: Option<PathBuf>,
    pub post: Option<PathBuf>,
    pub spec: Option<String>,
    pub model: Option<PathBuf>,
    pub interval: Option<IntervalArg>,
    pub variants: Option<Vec<String>>,
    pub bootstrap_replicates: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("invalid config {}: {e}", path.display())))
    }
}

/// `flag` if given, else the file value.
pub fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Non-empty flag list if given, else the file list.
pub fn pick_list<T>(flag: Vec<T>, file: Option<Vec<T>>) -> Vec<T> {
    if flag.is_empty() {
        file.unwrap_or_default()
    } else {
        flag
    }
}
