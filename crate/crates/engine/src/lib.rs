//! Retrieval engine: builds descriptor indexes from OFF model directories,
//! ranks models against a query and evaluates rankings with recall/precision.

pub mod build;
pub mod config;
pub mod error;
pub mod eval;
pub mod index;
pub mod query;

pub use build::{build_index, read_labels, BuildReport, Describer};
pub use config::{DescriptorKind, PipelineConfig};
pub use error::{EngineError, Result};
pub use eval::{evaluate_all, precision_recall, PrCurve};
pub use index::{Descriptor, Index, IndexEntry};
pub use query::{query_by_id, query_mesh, RankedResult};
