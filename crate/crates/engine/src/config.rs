//! Pipeline configuration and its canonical text form, whose SHA-256 ties an
//! index to the exact settings that produced it.

use std::fmt;
use std::str::FromStr;

use cli3d_core::baselines::surface::DEFAULT_INVARIANTS;
use cli3d_core::baselines::voxel::DEFAULT_VOXEL_RESOLUTION;
use cli3d_core::baselines::zernike::{DEFAULT_ZERNIKE_ORDER, MAX_ZERNIKE_ORDER};
use cli3d_core::baselines::InvariantConfig;
use cli3d_core::descriptor::CliParams;
use cli3d_core::hu::ScalingMode;
use cli3d_core::raster::MIN_RESOLUTION;
use sha2::{Digest, Sha256};

use crate::error::{EngineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DescriptorKind {
    Cli,
    Zernike,
    Surface,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 3] = [DescriptorKind::Cli, DescriptorKind::Zernike, DescriptorKind::Surface];

    pub fn as_str(&self) -> &'static str {
        match self {
            DescriptorKind::Cli => "cli",
            DescriptorKind::Zernike => "zernike",
            DescriptorKind::Surface => "surface",
        }
    }

    pub(crate) fn tag(&self) -> u8 {
        *self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| EngineError::Config(format!("unknown descriptor kind '{s}'")))
    }
}

/// Parses a comma-separated kind list, deduplicated and sorted.
pub fn parse_kinds(list: &str) -> Result<Vec<DescriptorKind>> {
    let mut kinds = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    kinds.sort();
    kinds.dedup();
    if kinds.is_empty() {
        return Err(EngineError::Config("empty descriptor kind list".into()));
    }
    Ok(kinds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub kinds: Vec<DescriptorKind>,
    pub cli: CliParams,
    pub voxel_resolution: usize,
    pub zernike_order: usize,
    /// Surface invariant expressions, one per line.
    pub surface_invariants: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kinds: DescriptorKind::ALL.to_vec(),
            cli: CliParams::default(),
            voxel_resolution: DEFAULT_VOXEL_RESOLUTION,
            zernike_order: DEFAULT_ZERNIKE_ORDER,
            surface_invariants: DEFAULT_INVARIANTS.to_string(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.kinds.is_empty() {
            return bad("no descriptor kinds".into());
        }
        if self.cli.n_planes < 1 {
            return bad("need at least one plane".into());
        }
        if self.cli.resolution < MIN_RESOLUTION {
            return bad(format!("resolution must be at least {MIN_RESOLUTION}"));
        }
        if self.cli.k_max < 1 {
            return bad("kmax must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.cli.min_area_fraction) {
            return bad("min area fraction must lie in [0, 1]".into());
        }
        if self.voxel_resolution < 4 {
            return bad("voxel resolution must be at least 4".into());
        }
        if self.zernike_order > MAX_ZERNIKE_ORDER {
            return bad(format!("Zernike order must not exceed {MAX_ZERNIKE_ORDER}"));
        }
        InvariantConfig::parse(&self.surface_invariants).map_err(|e| EngineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn has(&self, kind: DescriptorKind) -> bool {
        self.kinds.contains(&kind)
    }

    /// Canonical `key=value` lines; floats use Rust's shortest round-trip form.
    pub fn canonical(&self) -> String {
        let kinds: Vec<&str> = self.kinds.iter().map(|k| k.as_str()).collect();
        let mut out = String::new();
        out += &format!("kinds={}\n", kinds.join(","));
        out += &format!("n_planes={}\n", self.cli.n_planes);
        out += &format!("resolution={}\n", self.cli.resolution);
        out += &format!("k_max={}\n", self.cli.k_max);
        out += &format!("scaling_mode={}\n", self.cli.scaling);
        out += &format!("seed={}\n", self.cli.seed);
        out += &format!("min_area_fraction={:?}\n", self.cli.min_area_fraction);
        out += &format!("voxel_resolution={}\n", self.voxel_resolution);
        out += &format!("zernike_order={}\n", self.zernike_order);
        for line in self.surface_invariants.lines().map(str::trim).filter(|l| !l.is_empty()) {
            out += &format!("surface_invariant={line}\n");
        }
        out
    }

    pub fn from_canonical(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig { surface_invariants: String::new(), ..Default::default() };
        let bad = |m: String| EngineError::Format(format!("config block: {m}"));
        for line in text.lines() {
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("line '{line}'")))?;
            let num = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("{key}={v}")));
            match key {
                "kinds" => cfg.kinds = parse_kinds(value).map_err(|e| bad(e.to_string()))?,
                "n_planes" => cfg.cli.n_planes = num(value)?,
                "resolution" => cfg.cli.resolution = num(value)?,
                "k_max" => cfg.cli.k_max = num(value)?,
                "scaling_mode" => cfg.cli.scaling = value.parse().map_err(|_| bad(format!("scaling {value}")))?,
                "seed" => cfg.cli.seed = value.parse().map_err(|_| bad(format!("seed {value}")))?,
                "min_area_fraction" => {
                    cfg.cli.min_area_fraction = value.parse().map_err(|_| bad(format!("{key}={value}")))?
                }
                "voxel_resolution" => cfg.voxel_resolution = num(value)?,
                "zernike_order" => cfg.zernike_order = num(value)?,
                "surface_invariant" => {
                    cfg.surface_invariants += value;
                    cfg.surface_invariants += "\n";
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        Ok(cfg)
    }

    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.canonical().as_bytes()).into()
    }

    pub fn hash_hex(&self) -> String {
        hex(&self.hash())
    }

    pub fn with_scaling(mut self, scaling: ScalingMode) -> Self {
        self.cli.scaling = scaling;
        self
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.cli.seed = 99;
        cfg.cli.min_area_fraction = 0.25;
        cfg.kinds = vec![DescriptorKind::Cli, DescriptorKind::Surface];
        let back = PipelineConfig::from_canonical(&cfg.canonical()).unwrap();
        assert_eq!(back.canonical(), cfg.canonical());
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn hash_tracks_every_setting() {
        let base = PipelineConfig::default();
        let mut other = base.clone();
        other.voxel_resolution = 32;
        assert_ne!(base.hash(), other.hash());
        assert_ne!(base.hash(), base.clone().with_scaling(ScalingMode::Raw).hash());
        assert_eq!(base.hash_hex().len(), 64);
    }

    #[test]
    fn kinds_parse() {
        assert_eq!(parse_kinds("surface,cli,cli").unwrap(), vec![DescriptorKind::Cli, DescriptorKind::Surface]);
        assert!(parse_kinds("cli,bogus").is_err());
        assert!(parse_kinds("").is_err());
    }

    #[test]
    fn validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let mut cfg = PipelineConfig::default();
        cfg.zernike_order = 21;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.surface_invariants = "m500".into();
        assert!(cfg.validate().is_err());
    }
}
