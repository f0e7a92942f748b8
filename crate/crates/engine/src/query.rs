//! Ranking index entries by descriptor distance.

use std::cmp::Ordering;

use cli3d_core::descriptor::similarity;
use cli3d_core::TriangleMesh;

use crate::build::Describer;
use crate::config::{DescriptorKind, PipelineConfig};
use crate::error::{EngineError, Result};
use crate::index::{Descriptor, Index};

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub model_id: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub query_id: String,
    pub kind: DescriptorKind,
    /// Ascending distance, ties by model id.
    pub hits: Vec<Hit>,
}

pub fn distance(a: &Descriptor, b: &Descriptor) -> Result<f64> {
    match (a, b) {
        (Descriptor::Cli(x), Descriptor::Cli(y)) => similarity(x, y).map_err(|e| EngineError::Format(e.to_string())),
        (Descriptor::Vector(x), Descriptor::Vector(y)) if x.len() == y.len() => {
            Ok(x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
        }
        _ => Err(EngineError::Format("descriptors of different shapes".into())),
    }
}

/// Ranks every entry of `kind` against `query`; `top_k = None` keeps all.
pub fn rank(
    index: &Index,
    query_id: &str,
    query: &Descriptor,
    kind: DescriptorKind,
    top_k: Option<usize>,
) -> Result<RankedResult> {
    let mut hits = index
        .of_kind(kind)
        .map(|e| {
            Ok(Hit {
                model_id: e.model_id.clone(),
                distance: distance(query, &e.descriptor)?,
            })
        })
        .collect::<Result<Vec<Hit>>>()?;
    hits.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    if let Some(k) = top_k {
        hits.truncate(k);
    }
    Ok(RankedResult { query_id: query_id.to_string(), kind, hits })
}

fn check_kind(index: &Index, kind: DescriptorKind) -> Result<()> {
    if index.of_kind(kind).next().is_none() {
        return Err(EngineError::KindMismatch(kind));
    }
    Ok(())
}

pub fn query_by_id(index: &Index, id: &str, kind: DescriptorKind, top_k: Option<usize>) -> Result<RankedResult> {
    check_kind(index, kind)?;
    let entry = index.find(id, kind).ok_or_else(|| EngineError::UnknownModel(id.to_string()))?;
    rank(index, id, &entry.descriptor, kind, top_k)
}

/// Describes an external mesh and ranks the index against it. When `config`
/// is given it must hash to the index's config.
pub fn query_mesh(
    index: &Index,
    mesh: &TriangleMesh,
    kind: DescriptorKind,
    top_k: Option<usize>,
    config: Option<&PipelineConfig>,
) -> Result<RankedResult> {
    if let Some(cfg) = config {
        if cfg.hash() != index.config.hash() {
            return Err(EngineError::ConfigMismatch {
                index: index.config.hash_hex(),
                query: cfg.hash_hex(),
            });
        }
    }
    check_kind(index, kind)?;
    let mut cfg = index.config.clone();
    cfg.kinds = vec![kind];
    let (_, descriptor) = Describer::new(&cfg)?.describe(mesh)?.remove(0);
    rank(index, mesh.source_id(), &descriptor, kind, top_k)
}
