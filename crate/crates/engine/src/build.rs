//! Turning a directory of OFF files into an index.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cli3d_core::baselines::zernike::zernike_descriptor_with;
use cli3d_core::baselines::{surface_descriptor, voxelize_solid, InvariantConfig, ZernikeBasis};
use cli3d_core::descriptor::describe_normalized;
use cli3d_core::{normalize_pose, parse_off, TriangleMesh};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{DescriptorKind, PipelineConfig};
use crate::error::{EngineError, Result};
use crate::index::{Descriptor, Index, IndexEntry};

/// Reusable per-config state (the Zernike basis is costly to build).
pub struct Describer {
    config: PipelineConfig,
    basis: Option<ZernikeBasis>,
    invariants: InvariantConfig,
}

impl Describer {
    pub fn new(config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let basis = if config.has(DescriptorKind::Zernike) {
            Some(ZernikeBasis::new(config.zernike_order).map_err(|e| EngineError::Config(e.to_string()))?)
        } else {
            None
        };
        let invariants =
            InvariantConfig::parse(&config.surface_invariants).map_err(|e| EngineError::Config(e.to_string()))?;
        Ok(Self { config: config.clone(), basis, invariants })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Every configured descriptor of one mesh, in kind order.
    pub fn describe(&self, mesh: &TriangleMesh) -> Result<Vec<(DescriptorKind, Descriptor)>> {
        let id = mesh.source_id().to_string();
        let fail = |e: &dyn std::fmt::Display| EngineError::Model { id: id.clone(), message: e.to_string() };
        let (normalized, transform) = normalize_pose(mesh).map_err(|e| fail(&e))?;
        if transform.flags.degenerate_spectrum {
            warn!("{id}: near-degenerate covariance spectrum; principal axes are not unique");
        }
        let mut out = Vec::new();
        for &kind in &self.config.kinds {
            let d = match kind {
                DescriptorKind::Cli => {
                    let d = describe_normalized(&normalized, &self.config.cli).map_err(|e| fail(&e))?;
                    Descriptor::Cli(d)
                }
                DescriptorKind::Zernike => {
                    let vox = voxelize_solid(&normalized, self.config.voxel_resolution);
                    if vox.watertight_fallback {
                        warn!("{id}: not watertight, Zernike input uses surface occupancy");
                    }
                    let basis = self.basis.as_ref().expect("basis built for zernike");
                    Descriptor::Vector(zernike_descriptor_with(&vox.grid, basis).values())
                }
                DescriptorKind::Surface => {
                    Descriptor::Vector(surface_descriptor(&normalized, &self.invariants).map_err(|e| fail(&e))?)
                }
            };
            out.push((kind, d));
        }
        Ok(out)
    }
}

/// Reads a `model_id,class_label` CSV; `#` starts a comment line. A header
/// row naming those two columns is skipped.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| EngineError::Labels(format!("{}: {e}", path.display())))?;
    let mut labels = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| EngineError::Labels(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(EngineError::Labels(format!("record {}: expected model_id,class_label", i + 1)));
        }
        if i == 0 && &record[0] == "model_id" && &record[1] == "class_label" {
            continue;
        }
        labels.insert(record[0].to_string(), record[1].to_string());
    }
    Ok(labels)
}

/// OFF files directly inside `dir`, sorted by path.
pub fn off_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let listing = fs::read_dir(dir).map_err(|source| EngineError::Io { path: dir.to_path_buf(), source })?;
    let mut files: Vec<PathBuf> = listing
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("off")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn model_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let id = model_id(path);
    let text = fs::read_to_string(path).map_err(|source| EngineError::Io { path: path.to_path_buf(), source })?;
    parse_off(&text, &id).map_err(|e| EngineError::Model { id, message: e.to_string() })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub indexed: Vec<String>,
    /// `(model_id, reason)` for every skipped model.
    pub skipped: Vec<(String, String)>,
    /// Label rows naming no indexed model.
    pub unused_labels: usize,
}

pub fn build_index(
    model_dir: &Path,
    labels: Option<&BTreeMap<String, String>>,
    config: &PipelineConfig,
) -> Result<(Index, BuildReport)> {
    let describer = Describer::new(config)?;
    let files = off_files(model_dir)?;
    let results: Vec<(String, Result<Vec<(DescriptorKind, Descriptor)>>)> = files
        .par_iter()
        .map(|path| (model_id(path), load_mesh(path).and_then(|m| describer.describe(&m))))
        .collect();

    let hash = config.hash();
    let mut entries = Vec::new();
    let mut report = BuildReport::default();
    for (id, result) in results {
        match result {
            Ok(descriptors) => {
                let label = labels.and_then(|l| l.get(&id)).cloned();
                for (kind, descriptor) in descriptors {
                    entries.push(IndexEntry {
                        model_id: id.clone(),
                        class_label: label.clone(),
                        kind,
                        descriptor,
                        config_hash: hash,
                    });
                }
                info!("indexed {id}");
                report.indexed.push(id);
            }
            Err(e) => {
                warn!("skipping {id}: {e}");
                report.skipped.push((id, e.to_string()));
            }
        }
    }
    if report.indexed.is_empty() {
        return Err(EngineError::EmptyCorpus(model_dir.to_path_buf()));
    }
    if let Some(labels) = labels {
        report.unused_labels = labels.keys().filter(|k| !report.indexed.contains(k)).count();
        if report.unused_labels > 0 {
            warn!("{} label rows name no indexed model", report.unused_labels);
        }
    }
    Ok((Index::new(config.clone(), entries), report))
}
