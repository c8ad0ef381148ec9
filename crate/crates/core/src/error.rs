use std::path::PathBuf;

use thiserror::Error;

/// Problems found while loading or validating a run configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {source}")]
    Missing {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown key: {message}")]
    UnknownKey { line: usize, message: String },
    #[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    OutOfRange {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

impl ConfigError {
    /// Stable short code for each failure class.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Missing { .. } => "E_CONFIG_MISSING",
            ConfigError::Syntax { .. } => "E_CONFIG_SYNTAX",
            ConfigError::UnknownKey { .. } => "E_CONFIG_UNKNOWN_KEY",
            ConfigError::OutOfRange { .. } => "E_CONFIG_RANGE",
        }
    }

    pub(crate) fn range(key: &str, message: impl Into<String>) -> Self {
        ConfigError::OutOfRange {
            key: key.to_string(),
            line: None,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("grid dimension `{0}` must be positive")]
    NonPositiveDimension(&'static str),
    #[error("slot ({row}, {col}) lies outside the {rows}x{cols} grid")]
    SlotOutOfGrid {
        row: u32,
        col: u32,
        rows: u32,
        cols: u32,
    },
    #[error("street region is empty but density {0} /km^2 was requested")]
    EmptyStreetRegion(f64),
    #[error("invalid drop parameter: {0}")]
    InvalidDrop(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("MCS table is empty")]
    EmptyTable,
    #[error("MCS efficiencies must be strictly increasing (index {0})")]
    NotIncreasing(u8),
    #[error("MCS {index}: {message}")]
    BadEntry { index: u8, message: String },
    #[error("no MCS with efficiency {0} in the table")]
    UnknownEfficiency(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum AccountingError {
    #[error("latency trace is missing {0}")]
    IncompleteTrace(&'static str),
    #[error("latency trace is inconsistent: {0}")]
    Inconsistent(&'static str),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}
