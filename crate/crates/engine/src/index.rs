//! Index file: a header with the pipeline config, then descriptor entries.
//!
//! Layout, all integers and reals little-endian:
//!
//! ```text
//! "CLI3DIDX" | version u32 | config length u32 | config text (UTF-8)
//! config hash [32] | content hash [32] | entry count u64 | entries
//! entry: length u64 | model_id | label flag u8 [+ label] | kind u8
//!        | config hash [32] | payload
//! string: length u32 | UTF-8 bytes
//! cli payload: scaling u8 | source images u64 | count u32 | count x 7 f64
//! vector payload: count u32 | count x f64
//! ```
//!
//! The content hash is the SHA-256 of the entry section.

use std::fs;
use std::path::Path;

use cli3d_core::descriptor::CliDescriptor;
use cli3d_core::hu::{HuVector, ScalingMode};
use sha2::{Digest, Sha256};

use crate::config::{DescriptorKind, PipelineConfig};
use crate::error::{EngineError, Result};

pub const MAGIC: &[u8; 8] = b"CLI3DIDX";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    Cli(CliDescriptor),
    /// Zernike norms or surface invariants.
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub model_id: String,
    pub class_label: Option<String>,
    pub kind: DescriptorKind,
    pub descriptor: Descriptor,
    pub config_hash: [u8; 32],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    pub config: PipelineConfig,
    /// Sorted by model id, then kind.
    pub entries: Vec<IndexEntry>,
}

impl Index {
    pub fn new(config: PipelineConfig, mut entries: Vec<IndexEntry>) -> Self {
        entries.sort_by(|a, b| a.model_id.cmp(&b.model_id).then(a.kind.cmp(&b.kind)));
        Self { config, entries }
    }

    pub fn of_kind(&self, kind: DescriptorKind) -> impl Iterator<Item = &IndexEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    pub fn find(&self, model_id: &str, kind: DescriptorKind) -> Option<&IndexEntry> {
        self.entries.iter().find(|e| e.model_id == model_id && e.kind == kind)
    }

    pub fn kinds(&self) -> Vec<DescriptorKind> {
        let mut kinds: Vec<DescriptorKind> = self.entries.iter().map(|e| e.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }

    /// Distinct model ids in index order.
    pub fn model_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.model_id.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let config_hash = self.config.hash();
        let mut body = Vec::new();
        for e in &self.entries {
            let mut rec = Vec::new();
            put_str(&mut rec, &e.model_id);
            match &e.class_label {
                Some(label) => {
                    rec.push(1);
                    put_str(&mut rec, label);
                }
                None => rec.push(0),
            }
            rec.push(e.kind.tag());
            rec.extend_from_slice(&e.config_hash);
            match &e.descriptor {
                Descriptor::Cli(d) => {
                    rec.push(match d.scaling {
                        ScalingMode::Raw => 0,
                        ScalingMode::SignedLog => 1,
                    });
                    rec.extend_from_slice(&(d.n_source_images as u64).to_le_bytes());
                    rec.extend_from_slice(&(d.vectors.len() as u32).to_le_bytes());
                    for v in &d.vectors {
                        for x in v.phi {
                            rec.extend_from_slice(&x.to_le_bytes());
                        }
                    }
                }
                Descriptor::Vector(v) => {
                    rec.extend_from_slice(&(v.len() as u32).to_le_bytes());
                    for x in v {
                        rec.extend_from_slice(&x.to_le_bytes());
                    }
                }
            }
            body.extend_from_slice(&(rec.len() as u64).to_le_bytes());
            body.extend_from_slice(&rec);
        }

        let mut out = Vec::with_capacity(body.len() + 256);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let config = self.config.canonical();
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(config.as_bytes());
        out.extend_from_slice(&config_hash);
        out.extend_from_slice(&Sha256::digest(&body));
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        out.extend_from_slice(&body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(EngineError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(EngineError::Format(format!("unsupported version {version}")));
        }
        let config_len = r.u32()? as usize;
        let text = std::str::from_utf8(r.take(config_len)?)
            .map_err(|_| EngineError::Format("config block is not UTF-8".into()))?;
        let config = PipelineConfig::from_canonical(text)?;
        let config_hash: [u8; 32] = r.take(32)?.try_into().unwrap();
        if config_hash != config.hash() {
            return Err(EngineError::Format("config hash does not match config block".into()));
        }
        let content_hash: [u8; 32] = r.take(32)?.try_into().unwrap();
        let count = r.u64()?;
        let body = &bytes[r.pos..];
        if <[u8; 32]>::from(Sha256::digest(body)) != content_hash {
            return Err(EngineError::Format("content hash mismatch".into()));
        }
        let mut entries = Vec::new();
        for _ in 0..count {
            let len = r.u64()? as usize;
            let mut e = Reader { bytes: r.take(len)?, pos: 0 };
            let model_id = e.string()?;
            let class_label = match e.u8()? {
                0 => None,
                1 => Some(e.string()?),
                f => return Err(EngineError::Format(format!("bad label flag {f}"))),
            };
            let kind = DescriptorKind::from_tag(e.u8()?)
                .ok_or_else(|| EngineError::Format("unknown descriptor kind".into()))?;
            let entry_hash: [u8; 32] = e.take(32)?.try_into().unwrap();
            if entry_hash != config_hash {
                return Err(EngineError::Format(format!("{model_id}: entry config hash differs from header")));
            }
            let descriptor = match kind {
                DescriptorKind::Cli => {
                    let scaling = match e.u8()? {
                        0 => ScalingMode::Raw,
                        1 => ScalingMode::SignedLog,
                        s => return Err(EngineError::Format(format!("bad scaling tag {s}"))),
                    };
                    let n_source_images = e.u64()? as usize;
                    let n = e.u32()? as usize;
                    let mut vectors = Vec::with_capacity(n);
                    for _ in 0..n {
                        let mut phi = [0.0; 7];
                        for x in &mut phi {
                            *x = e.f64()?;
                        }
                        vectors.push(HuVector::new(phi, scaling));
                    }
                    Descriptor::Cli(CliDescriptor { model_id: model_id.clone(), vectors, scaling, n_source_images })
                }
                _ => {
                    let n = e.u32()? as usize;
                    Descriptor::Vector((0..n).map(|_| e.f64()).collect::<Result<_>>()?)
                }
            };
            if e.pos != e.bytes.len() {
                return Err(EngineError::Format(format!("{model_id}: trailing entry bytes")));
            }
            entries.push(IndexEntry { model_id, class_label, kind, descriptor, config_hash: entry_hash });
        }
        if r.pos != bytes.len() {
            return Err(EngineError::Format("trailing bytes after entries".into()));
        }
        Ok(Self { config, entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())
            .map_err(|source| EngineError::UnwritableOutput { path: path.to_path_buf(), source })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| EngineError::Io { path: path.to_path_buf(), source })?;
        Self::from_bytes(&bytes)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| EngineError::Format("unexpected end of data".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| EngineError::Format("string is not UTF-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Index {
        let config = PipelineConfig::default();
        let hash = config.hash();
        let cli = CliDescriptor {
            model_id: "b".into(),
            vectors: vec![HuVector::new([0.1, -0.2, 0.3, 1e-300, f64::MIN_POSITIVE, 5.0, -7.0], ScalingMode::SignedLog)],
            scaling: ScalingMode::SignedLog,
            n_source_images: 280,
        };
        Index::new(
            config,
            vec![
                IndexEntry {
                    model_id: "b".into(),
                    class_label: None,
                    kind: DescriptorKind::Surface,
                    descriptor: Descriptor::Vector(vec![1.0, 2.5]),
                    config_hash: hash,
                },
                IndexEntry {
                    model_id: "b".into(),
                    class_label: None,
                    kind: DescriptorKind::Cli,
                    descriptor: Descriptor::Cli(cli),
                    config_hash: hash,
                },
                IndexEntry {
                    model_id: "a".into(),
                    class_label: Some("chairs".into()),
                    kind: DescriptorKind::Zernike,
                    descriptor: Descriptor::Vector(vec![0.5; 25]),
                    config_hash: hash,
                },
            ],
        )
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let idx = sample();
        assert_eq!(idx.entries[0].model_id, "a");
        assert_eq!(idx.entries[1].kind, DescriptorKind::Cli);
        let bytes = idx.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        let back = Index::from_bytes(&bytes).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().to_bytes();
        let mut flipped = bytes.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(Index::from_bytes(&flipped), Err(EngineError::Format(_))));
        assert!(Index::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(Index::from_bytes(&magic).is_err());
    }
}
