//! Staged dataset generation and benchmarking.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! staging/meshes/{category}/{id:06}.obj
//! staging/deformed/{category}/{id:06}.obj
//! {category}/images/{id:06}.png
//! {category}/annotations.json
//! manifest.json
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::{annotate, export_coco, AnnotationRecord, Annotator};
use crate::config::{PipelineConfig, SampleCounts};
use crate::error::{Error, Result};
use crate::geometry::obj::{parse_obj, read_obj, to_obj_string};
use crate::geometry::ClothMesh;
use crate::io::write_atomic;
use crate::par::Exec;
use crate::render::{Image, Renderer};
use crate::scene::{compose_scene, MaterialProcedure};
use crate::seed::{sample_seed, stream_rng, Stream};
use crate::sim::deform_procedure;
use crate::templates::{sample_template, template_to_mesh};
use crate::ClothCategory;

#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum Stage {
    Meshes,
    Deform,
    Render,
    All,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Meshes, Stage::Deform, Stage::Render, Stage::All];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Meshes => "meshes",
            Stage::Deform => "deform",
            Stage::Render => "render",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Stage> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown stage `{s}`")))
    }
}

/// One sample of the dataset.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sample {
    pub category: ClothCategory,
    pub id: u64,
}

impl Sample {
    pub fn seed(&self, master: u64) -> u64 {
        sample_seed(master, self.category, self.id)
    }
}

/// Every sample of `counts`, by category then id.
pub fn samples(counts: &SampleCounts) -> Vec<Sample> {
    ClothCategory::ALL
        .iter()
        .flat_map(|&category| (0..counts.get(category)).map(move |id| Sample { category, id }))
        .collect()
}

/// File locations below an output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Layout {
        Layout { root: root.into() }
    }

    pub fn mesh(&self, s: Sample) -> PathBuf {
        self.root
            .join("staging/meshes")
            .join(s.category.name())
            .join(format!("{:06}.obj", s.id))
    }

    pub fn deformed(&self, s: Sample) -> PathBuf {
        self.root
            .join("staging/deformed")
            .join(s.category.name())
            .join(format!("{:06}.obj", s.id))
    }

    /// Image path relative to the category directory.
    pub fn image_name(s: Sample) -> String {
        format!("images/{:06}.png", s.id)
    }

    pub fn image(&self, s: Sample) -> PathBuf {
        self.root.join(s.category.name()).join(Layout::image_name(s))
    }

    pub fn annotations(&self, c: ClothCategory) -> PathBuf {
        self.root.join(c.name()).join("annotations.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

/// Flat template mesh of `s`.
pub fn make_mesh(cfg: &PipelineConfig, s: Sample) -> Result<ClothMesh> {
    let mut rng = stream_rng(s.seed(cfg.master_seed), Stream::Template);
    let t = sample_template(s.category, &cfg.templates, &mut rng)?;
    template_to_mesh(&t, cfg.max_edge)
}

/// Deformed cloth of `s`.
pub fn deform_mesh(cfg: &PipelineConfig, s: Sample, mesh: &ClothMesh) -> Result<ClothMesh> {
    let mut rng = stream_rng(s.seed(cfg.master_seed), Stream::Deform);
    Ok(deform_procedure(mesh, &cfg.deform, &cfg.sim, &mut rng)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub image: Image,
    pub record: AnnotationRecord,
    pub material: MaterialProcedure,
}

/// Scene, image and annotation of `s` from its deformed cloth.
pub fn render_sample(cfg: &PipelineConfig, s: Sample, cloth: &ClothMesh, exec: &Exec) -> Result<Rendered> {
    let mut rng = stream_rng(s.seed(cfg.master_seed), Stream::Scene);
    let material = cfg.materials.sample(&mut rng);
    let scene = compose_scene(cloth, material, &cfg.scene, &mut rng)?;
    let renderer = Renderer::new(&scene)?;
    let image = renderer.render(exec);
    let mask = renderer.visible_mask(exec);
    let keypoints = Annotator::new(&renderer).keypoints()?;
    let record = annotate(s.category, &mask, &keypoints, s.id, &Layout::image_name(s))?;
    Ok(Rendered { image, record, material })
}

/// The mesh as it reads back from its staged OBJ text.
fn staged(mesh: &ClothMesh) -> Result<(String, ClothMesh)> {
    let text = to_obj_string(mesh);
    let back = parse_obj(&text)?;
    Ok((text, back))
}

fn require(path: &Path, stage: Stage) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::StageOrder(format!(
            "{} is missing; run the `{stage}` stage first",
            path.display()
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCategory {
    pub name: String,
    pub count: u64,
    pub annotations: String,
    pub annotations_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub category: String,
    pub id: u64,
    /// Hexadecimal.
    pub seed: String,
    pub material: MaterialProcedure,
    pub image: String,
    pub image_sha256: String,
    pub num_keypoints: u32,
}

/// Index of one generated dataset. Contains no timestamps or absolute
/// paths so that equal configs give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub master_seed: u64,
    pub categories: Vec<ManifestCategory>,
    pub samples: Vec<ManifestSample>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub stage: Stage,
    pub samples: usize,
    /// Written by the render and all stages.
    pub manifest: Option<Manifest>,
}

/// Runs `stage` over every sample of `cfg`, one task per sample.
pub fn generate(cfg: &PipelineConfig, stage: Stage, exec: &Exec) -> Result<Summary> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let list = samples(&cfg.counts);
    let inner = Exec::Sequential;
    match stage {
        Stage::Meshes => {
            exec.try_map(list.len(), |k| {
                let s = list[k];
                write_atomic(&layout.mesh(s), to_obj_string(&make_mesh(cfg, s)?).as_bytes())
            })?;
        }
        Stage::Deform => {
            for &s in &list {
                require(&layout.mesh(s), Stage::Meshes)?;
            }
            exec.try_map(list.len(), |k| {
                let s = list[k];
                let mesh = read_obj(&layout.mesh(s))?;
                write_atomic(&layout.deformed(s), to_obj_string(&deform_mesh(cfg, s, &mesh)?).as_bytes())
            })?;
        }
        Stage::Render => {
            for &s in &list {
                require(&layout.deformed(s), Stage::Deform)?;
            }
        }
        Stage::All => {}
    }
    if matches!(stage, Stage::Meshes | Stage::Deform) {
        return Ok(Summary {
            stage,
            samples: list.len(),
            manifest: None,
        });
    }
    let rendered = exec.try_map(list.len(), |k| {
        let s = list[k];
        let cloth = if stage == Stage::All {
            let (text, flat) = staged(&make_mesh(cfg, s)?)?;
            write_atomic(&layout.mesh(s), text.as_bytes())?;
            let (text, cloth) = staged(&deform_mesh(cfg, s, &flat)?)?;
            write_atomic(&layout.deformed(s), text.as_bytes())?;
            cloth
        } else {
            read_obj(&layout.deformed(s))?
        };
        let r = render_sample(cfg, s, &cloth, &inner)?;
        let png = r.image.to_png()?;
        write_atomic(&layout.image(s), &png)?;
        Ok::<_, Error>((r.record, r.material, sha256_hex(&png)))
    })?;
    let manifest = write_outputs(cfg, &layout, &list, rendered)?;
    Ok(Summary {
        stage,
        samples: list.len(),
        manifest: Some(manifest),
    })
}

fn write_outputs(
    cfg: &PipelineConfig,
    layout: &Layout,
    list: &[Sample],
    rendered: Vec<(AnnotationRecord, MaterialProcedure, String)>,
) -> Result<Manifest> {
    let mut categories = Vec::new();
    for c in ClothCategory::ALL {
        let count = cfg.counts.get(c);
        if count == 0 {
            continue;
        }
        let records: Vec<AnnotationRecord> = list
            .iter()
            .zip(&rendered)
            .filter(|(s, _)| s.category == c)
            .map(|(_, r)| r.0.clone())
            .collect();
        let json = export_coco(&records, &[c]).to_json();
        write_atomic(&layout.annotations(c), json.as_bytes())?;
        categories.push(ManifestCategory {
            name: c.name().to_string(),
            count,
            annotations: format!("{}/annotations.json", c.name()),
            annotations_sha256: sha256_hex(json.as_bytes()),
        });
    }
    let samples = list
        .iter()
        .zip(rendered)
        .map(|(s, (record, material, image_sha256))| ManifestSample {
            category: s.category.name().to_string(),
            id: s.id,
            seed: format!("{:#018x}", s.seed(cfg.master_seed)),
            material,
            image: format!("{}/{}", s.category.name(), Layout::image_name(*s)),
            image_sha256,
            num_keypoints: record.num_keypoints(),
        })
        .collect();
    let manifest = Manifest {
        schema_version: cfg.schema_version,
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        categories,
        samples,
    };
    write_atomic(&layout.manifest(), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub cpu_model: Option<String>,
    pub parallel_feature: bool,
}

impl MachineInfo {
    pub fn detect() -> MachineInfo {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        });
        MachineInfo {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cpu_model,
            parallel_feature: cfg!(feature = "parallel"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    /// Seconds per sample.
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl StageTiming {
    pub fn from_samples(mut t: Vec<f64>) -> StageTiming {
        t.sort_by(f64::total_cmp);
        let n = t.len();
        let median = match n {
            0 => f64::NAN,
            _ if n % 2 == 1 => t[n / 2],
            _ => 0.5 * (t[n / 2 - 1] + t[n / 2]),
        };
        StageTiming {
            median,
            min: t.first().copied().unwrap_or(f64::NAN),
            max: t.last().copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub machine: MachineInfo,
    pub samples: usize,
    /// `[width, height]`
    pub resolution: [u32; 2],
    /// Single-threaded, per sample.
    pub meshes: StageTiming,
    pub deform: StageTiming,
    pub render: StageTiming,
    /// Wall time of all samples end to end, one after another.
    pub sequential_seconds: f64,
    pub workers: usize,
    /// Wall time of the same samples spread over `workers` threads.
    pub parallel_seconds: f64,
    pub speedup: f64,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `n` samples taken round-robin over the categories with a nonzero count
/// (all categories if every count is zero).
pub fn bench_samples(counts: &SampleCounts, n: usize) -> Vec<Sample> {
    let mut cats: Vec<ClothCategory> = ClothCategory::ALL.into_iter().filter(|&c| counts.get(c) > 0).collect();
    if cats.is_empty() {
        cats = ClothCategory::ALL.to_vec();
    }
    (0..n)
        .map(|k| Sample {
            category: cats[k % cats.len()],
            id: (k / cats.len()) as u64,
        })
        .collect()
}

fn run_sample(cfg: &PipelineConfig, s: Sample) -> Result<[f64; 3]> {
    let t0 = Instant::now();
    let mesh = make_mesh(cfg, s)?;
    let t1 = Instant::now();
    let cloth = deform_mesh(cfg, s, &mesh)?;
    let t2 = Instant::now();
    render_sample(cfg, s, &cloth, &Exec::Sequential)?;
    let t3 = Instant::now();
    Ok([t1 - t0, t2 - t1, t3 - t2].map(|d| d.as_secs_f64()))
}

/// Times each stage single-threaded over `n` samples, then the same batch
/// on `workers` threads. Nothing is written.
pub fn bench(cfg: &PipelineConfig, n: usize, workers: usize) -> Result<BenchReport> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::invalid("bench needs at least one sample"));
    }
    let list = bench_samples(&cfg.counts, n);
    let start = Instant::now();
    let mut times = Vec::with_capacity(n);
    for &s in &list {
        times.push(run_sample(cfg, s)?);
    }
    let sequential_seconds = start.elapsed().as_secs_f64();
    let exec = Exec::Parallel { workers };
    let start = Instant::now();
    exec.try_map(list.len(), |k| run_sample(cfg, list[k]))?;
    let parallel_seconds = start.elapsed().as_secs_f64();
    let col = |i: usize| StageTiming::from_samples(times.iter().map(|t| t[i]).collect());
    let k = cfg.scene.camera.intrinsics();
    Ok(BenchReport {
        machine: MachineInfo::detect(),
        samples: n,
        resolution: [k.width, k.height],
        meshes: col(0),
        deform: col(1),
        render: col(2),
        sequential_seconds,
        workers,
        parallel_seconds,
        speedup: sequential_seconds / parallel_seconds,
    })
}
