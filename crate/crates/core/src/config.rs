//! The pipeline configuration document.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::MetricsConfig;
use crate::scene::{MaterialProcedure, SceneConfig};
use crate::sim::{DeformConfig, SimParams};
use crate::templates::ParamRanges;
use crate::ClothCategory;

pub const SCHEMA_VERSION: u32 = 1;
/// Overrides `master_seed` when set. Decimal or `0x` hexadecimal.
pub const SEED_ENV: &str = "CLOTHFORGE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCounts {
    pub towel: u64,
    pub tshirt: u64,
    pub shorts: u64,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            towel: 10,
            tshirt: 10,
            shorts: 10,
        }
    }
}

impl SampleCounts {
    pub fn get(&self, c: ClothCategory) -> u64 {
        match c {
            ClothCategory::Towel => self.towel,
            ClothCategory::Tshirt => self.tshirt,
            ClothCategory::Shorts => self.shorts,
        }
    }

    pub fn set(&mut self, c: ClothCategory, n: u64) {
        match c {
            ClothCategory::Towel => self.towel = n,
            ClothCategory::Tshirt => self.tshirt = n,
            ClothCategory::Shorts => self.shorts = n,
        }
    }
}

/// Selection probabilities of the cloth material procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialWeights {
    pub uniform_color: f64,
    pub tailored: f64,
    pub random_texture: f64,
}

impl Default for MaterialWeights {
    fn default() -> Self {
        MaterialWeights {
            uniform_color: 1.0 / 3.0,
            tailored: 1.0 / 3.0,
            random_texture: 1.0 / 3.0,
        }
    }
}

impl MaterialWeights {
    fn weights(&self) -> [(MaterialProcedure, f64, &'static str); 3] {
        [
            (MaterialProcedure::UniformColor, self.uniform_color, "uniform_color"),
            (MaterialProcedure::Tailored, self.tailored, "tailored"),
            (MaterialProcedure::RandomTexture, self.random_texture, "random_texture"),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for (_, w, name) in self.weights() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::config(format!("/{name}"), "weight must be >= 0"));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("", format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// One uniform draw mapped through the cumulative weights.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MaterialProcedure {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = MaterialProcedure::UniformColor;
        for (p, w, _) in self.weights() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = p;
            if u < acc {
                return p;
            }
        }
        last
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    pub counts: SampleCounts,
    pub templates: ParamRanges,
    /// Upper bound on mesh edge length, m.
    pub max_edge: f64,
    pub deform: DeformConfig,
    pub sim: SimParams,
    pub materials: MaterialWeights,
    pub scene: SceneConfig,
    pub metrics: MetricsConfig,
    /// Relative paths resolve against the config file's directory.
    pub output_dir: PathBuf,
    /// 0 uses every core, 1 runs sequentially.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            master_seed: 0,
            counts: SampleCounts::default(),
            templates: ParamRanges::default(),
            max_edge: 0.01,
            deform: DeformConfig::default(),
            sim: SimParams::default(),
            materials: MaterialWeights::default(),
            scene: SceneConfig::default(),
            metrics: MetricsConfig::default(),
            output_dir: PathBuf::from("out"),
            workers: 0,
        }
    }
}

fn nest(prefix: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Config { pointer, message } => Error::config(format!("{prefix}{pointer}"), message),
        e => e,
    })
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "/schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if !(self.max_edge > 0.0 && self.max_edge.is_finite()) {
            return Err(Error::config("/max_edge", "must be > 0"));
        }
        nest("/templates", self.templates.validate())?;
        nest("/deform", self.deform.validate())?;
        nest("/sim", self.sim.validate())?;
        nest("/materials", self.materials.validate())?;
        nest("/scene", self.scene.validate())?;
        nest("/metrics", self.metrics.validate())?;
        if self.scene.plane_height != self.sim.plane_height {
            return Err(Error::config("/scene/plane_height", "must equal /sim/plane_height"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::config("/output_dir", "must not be empty"));
        }
        Ok(())
    }

    /// Parses and validates a config document. Missing keys take defaults.
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            let inner = e.into_inner();
            Error::config(pointer, format!("{inner}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path`, applies the seed override and resolves `output_dir`.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::from_json(&text)?;
        if let Ok(v) = std::env::var(SEED_ENV) {
            cfg.master_seed = parse_seed(&v)?;
        }
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Canonical JSON of the effective settings, excluding `output_dir` and
    /// `workers`, which do not affect any output.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("output_dir");
            m.remove("workers");
        }
        serde_json::to_string(&v).expect("value serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

pub fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim();
    let r = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => t.parse(),
    };
    r.map_err(|_| Error::config("/master_seed", format!("{SEED_ENV}=`{s}` is not a 64-bit integer")))
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        let part = match seg {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.replace('~', "~0").replace('/', "~1"),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => continue,
        };
        out.push('/');
        out.push_str(&part);
    }
    out
}
