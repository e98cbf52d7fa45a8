//! Randomized scene composition around one deformed cloth.

pub mod camera;
pub mod material;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use camera::{sample_camera, Camera, CameraConfig, Intrinsics, Projection};
pub use material::{random_color, sample_material, Material, MaterialProcedure, Noise, Rgb};

use crate::error::{Error, Result};
use crate::geometry::{solidify, ClothMesh, Mat3, Vec2, Vec3};
use crate::range::{CountRange, Range};

/// Object id of the cloth in scene ray queries.
pub const CLOTH_OBJECT: u32 = 0;
/// Object id of the support surface.
pub const SURFACE_OBJECT: u32 = 1;
/// Object id of the first distractor; the others follow consecutively.
pub const FIRST_DISTRACTOR: u32 = 2;

const SPHERE_STACKS: usize = 10;
const ROUND_SLICES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Full extents along the local axes, m.
    Box { size: Vec3 },
    Sphere { radius: f64 },
    /// Upright.
    Cylinder { radius: f64, height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distractor {
    pub shape: Shape,
    /// Centre of the footprint, on the plane.
    pub position: Vec3,
    /// Rotation about the vertical, rad.
    pub yaw: f64,
    pub color: Rgb,
}

impl Distractor {
    /// Lowest point of the exact shape.
    pub fn lowest_point(&self) -> f64 {
        self.position.z
    }

    /// Tessellated surface; the lowest vertices lie exactly on the footprint.
    pub fn triangles(&self) -> Vec<[Vec3; 3]> {
        let local = match self.shape {
            Shape::Box { size } => box_triangles(size),
            Shape::Sphere { radius } => sphere_triangles(radius),
            Shape::Cylinder { radius, height } => cylinder_triangles(radius, height),
        };
        let rot = Mat3::rotation_z(self.yaw);
        local
            .into_iter()
            .map(|t| t.map(|p| rot.mul_vec(p) + self.position))
            .collect()
    }
}

fn box_triangles(size: Vec3) -> Vec<[Vec3; 3]> {
    let (hx, hy, h) = (size.x / 2.0, size.y / 2.0, size.z);
    let c = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { -hx } else { hx },
            if i & 2 == 0 { -hy } else { hy },
            if i & 4 == 0 { 0.0 } else { h },
        )
    };
    // Outward-facing quads as corner-index loops.
    const FACES: [[usize; 4]; 6] = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    FACES
        .iter()
        .flat_map(|f| [[c(f[0]), c(f[1]), c(f[2])], [c(f[0]), c(f[2]), c(f[3])]])
        .collect()
}

fn ring(radius: f64, z: f64, k: usize) -> Vec3 {
    let a = TAU * k as f64 / ROUND_SLICES as f64;
    Vec3::new(radius * a.cos(), radius * a.sin(), z)
}

fn sphere_triangles(radius: f64) -> Vec<[Vec3; 3]> {
    let point = |stack: usize, k: usize| {
        let theta = PI * stack as f64 / SPHERE_STACKS as f64;
        ring(radius * theta.sin(), radius * (1.0 - theta.cos()), k)
    };
    let mut out = Vec::new();
    for s in 0..SPHERE_STACKS {
        for k in 0..ROUND_SLICES {
            let (a, b) = (point(s, k), point(s, k + 1));
            let (c, d) = (point(s + 1, k), point(s + 1, k + 1));
            if s > 0 {
                out.push([a, b, d]);
            }
            if s + 1 < SPHERE_STACKS {
                out.push([a, d, c]);
            }
        }
    }
    out
}

fn cylinder_triangles(radius: f64, height: f64) -> Vec<[Vec3; 3]> {
    let bottom = Vec3::ZERO;
    let top = Vec3::new(0.0, 0.0, height);
    let mut out = Vec::new();
    for k in 0..ROUND_SLICES {
        let (a, b) = (ring(radius, 0.0, k), ring(radius, 0.0, k + 1));
        let (c, d) = (ring(radius, height, k), ring(radius, height, k + 1));
        out.push([bottom, b, a]);
        out.push([top, c, d]);
        out.push([a, b, d]);
        out.push([a, d, c]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalLight {
    /// Unit vector pointing towards the light.
    pub direction: Vec3,
    pub intensity: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lighting {
    pub ambient: f64,
    pub lights: Vec<DirectionalLight>,
}

/// Horizontal rectangle the cloth lies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub center: Vec3,
    /// m
    pub size: Vec2,
    pub material: Material,
}

impl Surface {
    pub fn corners(&self) -> [Vec3; 4] {
        let (hx, hy) = (self.size.x / 2.0, self.size.y / 2.0);
        [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)].map(|(x, y)| self.center + Vec3::new(x, y, 0.0))
    }

    pub fn triangles(&self) -> Vec<[Vec3; 3]> {
        let c = self.corners();
        vec![[c[0], c[1], c[2]], [c[0], c[2], c[3]]]
    }

    pub fn uv(&self, p: Vec3) -> Vec2 {
        Vec2::new(
            (p.x - self.center.x) / self.size.x + 0.5,
            (p.y - self.center.y) / self.size.y + 0.5,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Solidified cloth thickness, m.
    pub thickness: f64,
    pub plane_height: f64,
    /// Edge lengths of the support rectangle, m.
    pub surface_size: Range,
    pub camera: CameraConfig,
    pub distractor_count: CountRange,
    /// Characteristic distractor size, m.
    pub distractor_size: Range,
    /// Margin around the cloth footprint where distractors may land, m.
    pub distractor_spread: f64,
    pub ambient: Range,
    pub light_count: CountRange,
    pub light_intensity: Range,
    /// rad above the horizontal
    pub light_elevation: Range,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            thickness: 0.002,
            plane_height: 0.0,
            surface_size: Range::new(1.5, 3.0),
            camera: CameraConfig::default(),
            distractor_count: CountRange::new(0, 5),
            distractor_size: Range::new(0.03, 0.2),
            distractor_spread: 0.25,
            ambient: Range::new(0.2, 0.6),
            light_count: CountRange::new(1, 3),
            light_intensity: Range::new(0.2, 0.7),
            light_elevation: Range::new(0.4, 1.5),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |p: &str, m: &str| Err(Error::config(p, m));
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return bad("/thickness", "must be > 0");
        }
        if !self.plane_height.is_finite() {
            return bad("/plane_height", "must be finite");
        }
        for (p, r) in [
            ("/surface_size", &self.surface_size),
            ("/distractor_size", &self.distractor_size),
            ("/ambient", &self.ambient),
            ("/light_intensity", &self.light_intensity),
        ] {
            if !r.is_valid() || r.min < 0.0 {
                return bad(p, "range must be valid and >= 0");
            }
        }
        if self.surface_size.min <= 0.0 || self.distractor_size.min <= 0.0 {
            let p = if self.surface_size.min <= 0.0 { "/surface_size" } else { "/distractor_size" };
            return bad(p, "sizes must be > 0");
        }
        if !self.light_elevation.is_valid() || self.light_elevation.min <= 0.0 || self.light_elevation.max > PI / 2.0 {
            return bad("/light_elevation", "range must lie in (0, pi/2]");
        }
        if !(self.distractor_spread >= 0.0 && self.distractor_spread.is_finite()) {
            return bad("/distractor_spread", "must be >= 0");
        }
        for (p, r) in [("/distractor_count", &self.distractor_count), ("/light_count", &self.light_count)] {
            if !r.is_valid() {
                return bad(p, "range must be valid");
            }
        }
        self.camera.validate().map_err(|e| match e {
            Error::Config { pointer, message } => Error::config(format!("/camera{pointer}"), message),
            e => e,
        })
    }
}

/// Everything needed to render and annotate one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Solidified cloth: vertices `0..layer_vertices` are the top copy,
    /// `layer_vertices..` the bottom copy of the same vertices.
    pub cloth: ClothMesh,
    pub layer_vertices: usize,
    /// Triangles of the top copy; also the single-layer topology.
    pub layer_triangles: usize,
    pub cloth_material: Material,
    pub surface: Surface,
    pub distractors: Vec<Distractor>,
    pub lighting: Lighting,
    pub camera: Camera,
    pub background: Rgb,
}

impl Scene {
    /// Triangles grouped by object id, for ray queries.
    pub fn objects(&self) -> Vec<(u32, Vec<[Vec3; 3]>)> {
        let mut out = Vec::with_capacity(2 + self.distractors.len());
        out.push((
            CLOTH_OBJECT,
            (0..self.cloth.triangles.len())
                .map(|t| self.cloth.triangle_positions(t))
                .collect(),
        ));
        out.push((SURFACE_OBJECT, self.surface.triangles()));
        for (k, d) in self.distractors.iter().enumerate() {
            out.push((FIRST_DISTRACTOR + k as u32, d.triangles()));
        }
        out
    }

    /// Mid-surface position of single-layer vertex `v`.
    pub fn layer_position(&self, v: usize) -> Vec3 {
        (self.cloth.vertices[v] + self.cloth.vertices[v + self.layer_vertices]) / 2.0
    }

    /// Single-layer mesh at mid-surface positions.
    pub fn layer_mesh(&self) -> ClothMesh {
        ClothMesh {
            vertices: (0..self.layer_vertices).map(|v| self.layer_position(v)).collect(),
            triangles: self.cloth.triangles[..self.layer_triangles].to_vec(),
            uvs: self.cloth.uvs[..self.layer_vertices].to_vec(),
            keypoints: self.cloth.keypoints.clone(),
            category: self.cloth.category,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cloth.validate()?;
        self.camera.validate()?;
        if self.cloth.vertex_count() != 2 * self.layer_vertices {
            return Err(Error::invalid("cloth is not a solidified single layer"));
        }
        let tris = self.distractors.iter().flat_map(|d| d.triangles());
        if !tris.flatten().all(|p| p.is_finite()) {
            return Err(Error::invalid("distractor geometry is not finite"));
        }
        if self.camera.look_at.distance(self.cloth.centroid()) > 1e-9 {
            return Err(Error::invalid("camera does not look at the cloth centroid"));
        }
        Ok(())
    }
}

fn sample_distractor<R: Rng + ?Sized>(cfg: &SceneConfig, lo: Vec3, hi: Vec3, rng: &mut R) -> Distractor {
    let s = cfg.distractor_size.sample(rng);
    let shape = match rng.random_range(0..3) {
        0 => Shape::Box {
            size: Vec3::new(s, s * rng.random_range(0.5..=1.0), s * rng.random_range(0.3..=1.0)),
        },
        1 => Shape::Sphere { radius: s / 2.0 },
        _ => Shape::Cylinder {
            radius: s / 2.0 * rng.random_range(0.5..=1.0),
            height: s * rng.random_range(0.5..=1.5),
        },
    };
    let m = cfg.distractor_spread;
    let x = rng.random_range(lo.x - m..=hi.x + m);
    let y = rng.random_range(lo.y - m..=hi.y + m);
    Distractor {
        shape,
        position: Vec3::new(x, y, cfg.plane_height),
        yaw: rng.random_range(0.0..TAU),
        color: random_color(rng),
    }
}

fn sample_lighting<R: Rng + ?Sized>(cfg: &SceneConfig, rng: &mut R) -> Lighting {
    let ambient = cfg.ambient.sample(rng);
    let count = cfg.light_count.sample(rng);
    let lights = (0..count)
        .map(|_| {
            let el = cfg.light_elevation.sample(rng);
            let az = rng.random_range(0.0..TAU);
            let s = cfg.light_intensity.sample(rng);
            let tint = Vec3::new(1.0, 1.0, 1.0).lerp(random_color(rng), 0.2);
            DirectionalLight {
                direction: Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()),
                intensity: tint * s,
            }
        })
        .collect();
    Lighting { ambient, lights }
}

/// Solidifies `cloth`, rests it on the plane and surrounds it with a random
/// surface, distractors, lights, background and camera.
pub fn compose_scene<R: Rng + ?Sized>(
    cloth: &ClothMesh,
    procedure: MaterialProcedure,
    cfg: &SceneConfig,
    rng: &mut R,
) -> Result<Scene> {
    cfg.validate()?;
    cloth.validate()?;
    let mut solid = solidify(cloth, cfg.thickness)?;
    let (lo, hi) = solid.bounds();
    solid.translate(Vec3::new(0.0, 0.0, cfg.plane_height - lo.z));
    let center = solid.centroid();

    let cloth_material = sample_material(procedure, rng);
    let surface_material = sample_material(MaterialProcedure::RandomTexture, rng);
    let size = Vec2::new(cfg.surface_size.sample(rng), cfg.surface_size.sample(rng));
    let surface = Surface {
        center: Vec3::new(center.x, center.y, cfg.plane_height),
        size,
        material: surface_material,
    };
    let count = cfg.distractor_count.sample(rng);
    let distractors = (0..count).map(|_| sample_distractor(cfg, lo, hi, rng)).collect();
    let lighting = sample_lighting(cfg, rng);
    let background = random_color(rng);
    let c = &cfg.camera;
    let camera = sample_camera(center, &c.distance, &c.elevation, &c.azimuth, c.intrinsics(), rng)?;
    Ok(Scene {
        layer_vertices: cloth.vertex_count(),
        layer_triangles: cloth.triangles.len(),
        cloth: solid,
        cloth_material,
        surface,
        distractors,
        lighting,
        camera,
        background,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::triangulate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn square_cloth(size: f64, edge: f64) -> ClothMesh {
        let b = [Vec2::new(0.0, 0.0), Vec2::new(size, 0.0), Vec2::new(size, size), Vec2::new(0.0, size)];
        triangulate(&b, edge).unwrap()
    }

    #[test]
    fn no_distractors_when_range_is_zero() {
        let cfg = SceneConfig {
            distractor_count: CountRange::new(0, 0),
            ..SceneConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = compose_scene(&square_cloth(0.3, 0.05), MaterialProcedure::Tailored, &cfg, &mut rng).unwrap();
        assert!(s.distractors.is_empty());
        s.validate().unwrap();
    }

    #[test]
    fn distractors_rest_on_plane() {
        let cfg = SceneConfig {
            plane_height: 0.1,
            ..SceneConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cloth = square_cloth(0.3, 0.05);
        for _ in 0..100 {
            let s = compose_scene(&cloth, MaterialProcedure::UniformColor, &cfg, &mut rng).unwrap();
            for d in &s.distractors {
                assert!((d.lowest_point() - 0.1).abs() <= 1e-6);
                let low = d.triangles().iter().flatten().map(|p| p.z).fold(f64::MAX, f64::min);
                assert!((low - 0.1).abs() <= 1e-6);
            }
            let low = s.cloth.bounds().0.z;
            assert!((low - 0.1).abs() < 1e-12);
            s.validate().unwrap();
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let cloth = square_cloth(0.3, 0.05);
        let cfg = SceneConfig::default();
        let a = compose_scene(&cloth, MaterialProcedure::RandomTexture, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = compose_scene(&cloth, MaterialProcedure::RandomTexture, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn closed_distractor_shapes() {
        for shape in [
            Shape::Box {
                size: Vec3::new(0.1, 0.2, 0.3),
            },
            Shape::Sphere { radius: 0.1 },
            Shape::Cylinder { radius: 0.05, height: 0.1 },
        ] {
            let d = Distractor {
                shape,
                position: Vec3::new(1.0, 2.0, 0.0),
                yaw: 0.3,
                color: Vec3::ZERO,
            };
            // Divergence theorem: outward-oriented closed surfaces have positive volume.
            let vol: f64 = d.triangles().iter().map(|[a, b, c]| a.dot(b.cross(*c)) / 6.0).sum();
            assert!(vol > 0.0, "{shape:?}");
        }
    }

    #[test]
    fn layer_mesh_recovers_input() {
        let cloth = square_cloth(0.3, 0.05);
        let cfg = SceneConfig::default();
        let s = compose_scene(&cloth, MaterialProcedure::UniformColor, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let layer = s.layer_mesh();
        assert_eq!(layer.triangles, cloth.triangles);
        for (a, b) in layer.vertices.iter().zip(&cloth.vertices) {
            assert!((a.xy() - b.xy()).length() < 1e-12);
        }
    }

    #[test]
    fn bad_config_pointer() {
        let mut cfg = SceneConfig::default();
        cfg.camera.elevation = Range::new(0.0, 1.0);
        assert!(matches!(cfg.validate(), Err(Error::Config { pointer, .. }) if pointer == "/camera/elevation"));
    }
}
