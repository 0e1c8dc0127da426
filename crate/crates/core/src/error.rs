use std::path::PathBuf;

use crate::netmodel::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{quantity} out of domain: {value}")]
    Domain { quantity: &'static str, value: f64 },

    #[error("{requested} Gbps exceeds capacity of {capacity} Gbps")]
    Capacity { requested: f64, capacity: f64 },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("topology is disconnected; unreachable nodes: {unreachable:?}")]
    Disconnected { unreachable: Vec<NodeId> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{file}: row {row}: {msg}")]
    TraceRow { file: String, row: usize, msg: String },

    #[error("{file}: {msg}")]
    Trace { file: String, msg: String },

    #[error("ESD step leaves [0, {e_max}] kWh: state of charge would be {soc}")]
    InfeasibleStep { soc: f64, e_max: f64 },

    #[error("model error: {0}")]
    Model(String),

    #[error("LP syntax error at line {line}: {msg}")]
    LpSyntax { line: usize, msg: String },

    #[error("unsupported LP feature at line {line}: {feature}")]
    LpUnsupported { line: usize, feature: String },

    #[error("enumeration oracle refused instance: {0}")]
    OracleRefused(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
