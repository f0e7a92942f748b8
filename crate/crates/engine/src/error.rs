use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::DescriptorKind;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no usable OFF models in {0}")]
    EmptyCorpus(PathBuf),
    #[error("cannot write {path}: {source}")]
    UnwritableOutput { path: PathBuf, source: io::Error },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed index: {0}")]
    Format(String),
    #[error("index holds no '{0}' descriptors")]
    KindMismatch(DescriptorKind),
    #[error("query pipeline config {query} does not match the index config {index}")]
    ConfigMismatch { index: String, query: String },
    #[error("model '{0}' is not in the index")]
    UnknownModel(String),
    #[error("no other model of class '{0}' to retrieve")]
    NoRelevantModels(String),
    #[error("labels file: {0}")]
    Labels(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{id}: {message}")]
    Model { id: String, message: String },
}

pub type Result<T> = std::result::Result<T, EngineError>;
