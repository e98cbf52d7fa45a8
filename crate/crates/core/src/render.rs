//! Single-bounce raytracer and visible-cloth masks.

use std::io::Cursor;
use std::path::Path;

use image::{ImageBuffer, ImageFormat, Rgb as Px};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::vertex_normals;
use crate::geometry::{build_bvh, Bvh, Hit, Ray, Vec3};
use crate::par::Exec;
use crate::scene::{Rgb, Scene, CLOTH_OBJECT, FIRST_DISTRACTOR, SURFACE_OBJECT};

/// Rows per parallel work item.
const BAND_ROWS: u32 = 8;
/// Shadow-ray origin offset along the surface normal, m.
const SHADOW_OFFSET: f64 = 1e-6;

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let buf: ImageBuffer<Px<u8>, &[u8]> = ImageBuffer::from_raw(self.width, self.height, &self.data[..])
            .ok_or_else(|| Error::invalid("image buffer size mismatch"))?;
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::invalid(format!("png encoding failed: {e}")))?;
        Ok(out.into_inner())
    }

    pub fn read_png(path: &Path) -> Result<Image> {
        let img = image::open(path)
            .map_err(|e| Error::Parse {
                location: path.display().to_string(),
                message: e.to_string(),
            })?
            .to_rgb8();
        Ok(Image {
            width: img.width(),
            height: img.height(),
            data: img.into_raw(),
        })
    }
}

/// Tight pixel box `[x, x + w) x [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    /// Whether the continuous point lies in the box grown by `margin` px.
    pub fn contains_dilated(&self, px: f64, py: f64, margin: f64) -> bool {
        px >= self.x as f64 - margin
            && py >= self.y as f64 - margin
            && px <= (self.x + self.w) as f64 + margin
            && py <= (self.y + self.h) as f64 + margin
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x as f64, self.y as f64, self.w as f64, self.h as f64]
    }
}

/// Binary mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Mask {
        Mask {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Tight box around the set pixels; `None` for an empty mask.
    pub fn bbox(&self) -> Option<BBox> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != u32::MAX).then(|| BBox {
            x: x0,
            y: y0,
            w: x1 - x0 + 1,
            h: y1 - y0 + 1,
        })
    }
}

/// Scene with its acceleration structure, ready for ray queries.
pub struct Renderer<'a> {
    pub scene: &'a Scene,
    pub bvh: Bvh,
    objects: Vec<Vec<[Vec3; 3]>>,
    cloth_normals: Vec<Vec3>,
}

impl<'a> Renderer<'a> {
    pub fn new(scene: &'a Scene) -> Result<Renderer<'a>> {
        let objects = scene.objects();
        let bvh = build_bvh(&objects)?;
        Ok(Renderer {
            scene,
            bvh,
            objects: objects.into_iter().map(|(_, t)| t).collect(),
            cloth_normals: vertex_normals(&scene.cloth.vertices, &scene.cloth.triangles),
        })
    }

    pub fn primary_ray(&self, x: u32, y: u32) -> Ray {
        self.scene.camera.pixel_ray(x, y)
    }

    pub fn primary_hit(&self, x: u32, y: u32) -> Option<Hit> {
        self.bvh.raycast(&self.primary_ray(x, y), f64::INFINITY)
    }

    fn bands<T: Send>(&self, exec: &Exec, per_pixel: impl Fn(u32, u32) -> T + Sync + Send) -> Vec<T> {
        let k = &self.scene.camera.intrinsics;
        let (w, h) = (k.width, k.height);
        let n = h.div_ceil(BAND_ROWS) as usize;
        exec.map(n, |b| {
            let y0 = b as u32 * BAND_ROWS;
            let y1 = (y0 + BAND_ROWS).min(h);
            let mut out = Vec::with_capacity(((y1 - y0) * w) as usize);
            for y in y0..y1 {
                for x in 0..w {
                    out.push(per_pixel(x, y));
                }
            }
            out
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// Nearest primary hit of every pixel, row-major.
    pub fn primary_hits(&self, exec: &Exec) -> Vec<Option<Hit>> {
        self.bands(exec, |x, y| self.primary_hit(x, y))
    }

    fn normal_and_albedo(&self, ray: &Ray, hit: &Hit) -> (Vec3, Vec3, Rgb) {
        let tri = self.objects[hit.object as usize][hit.triangle];
        let mut geo = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
        if geo.dot(ray.direction) > 0.0 {
            geo = -geo;
        }
        let p = ray.at(hit.t);
        match hit.object {
            CLOTH_OBJECT => {
                let cloth = &self.scene.cloth;
                let idx = cloth.triangles[hit.triangle];
                let w = hit.barycentric();
                let mut n = Vec3::ZERO;
                let mut uv = crate::geometry::Vec2::ZERO;
                for k in 0..3 {
                    n += self.cloth_normals[idx[k]] * w[k];
                    uv = uv + cloth.uvs[idx[k]] * w[k];
                }
                let mut n = n.try_normalized().unwrap_or(geo);
                if n.dot(geo) < 0.0 {
                    n = -n;
                }
                (geo, n, self.scene.cloth_material.albedo(uv))
            }
            SURFACE_OBJECT => (geo, geo, self.scene.surface.material.albedo(self.scene.surface.uv(p))),
            id => (geo, geo, self.scene.distractors[(id - FIRST_DISTRACTOR) as usize].color),
        }
    }

    /// Radiance of one primary ray, before quantization.
    pub fn shade(&self, ray: &Ray) -> Rgb {
        let Some(hit) = self.bvh.raycast(ray, f64::INFINITY) else {
            return self.scene.background;
        };
        let (geo, n, albedo) = self.normal_and_albedo(ray, &hit);
        let lighting = &self.scene.lighting;
        let p = ray.at(hit.t) + geo * SHADOW_OFFSET;
        let mut light = Vec3::new(lighting.ambient, lighting.ambient, lighting.ambient);
        for l in &lighting.lights {
            let cos = n.dot(l.direction);
            if cos <= 0.0 {
                continue;
            }
            let shadow = Ray {
                origin: p,
                direction: l.direction,
            };
            if !self.bvh.occluded(&shadow, 0.0, f64::INFINITY) {
                light += l.intensity * cos;
            }
        }
        Vec3::new(albedo.x * light.x, albedo.y * light.y, albedo.z * light.z)
    }

    pub fn render(&self, exec: &Exec) -> Image {
        let k = &self.scene.camera.intrinsics;
        let px = self.bands(exec, |x, y| quantize(self.shade(&self.primary_ray(x, y))));
        Image {
            width: k.width,
            height: k.height,
            data: px.into_iter().flatten().collect(),
        }
    }

    /// Pixels whose nearest primary hit is the cloth.
    pub fn visible_mask(&self, exec: &Exec) -> Mask {
        let k = &self.scene.camera.intrinsics;
        Mask {
            width: k.width,
            height: k.height,
            data: self
                .primary_hits(exec)
                .into_iter()
                .map(|h| h.is_some_and(|h| h.object == CLOTH_OBJECT))
                .collect(),
        }
    }
}

/// `round(255 * clamp(c, 0, 1))` per channel.
pub fn quantize(c: Rgb) -> [u8; 3] {
    [c.x, c.y, c.z].map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}

pub fn render(scene: &Scene) -> Result<Image> {
    Ok(Renderer::new(scene)?.render(&Exec::default()))
}

/// Visible-cloth mask with its tight box (`None` when the cloth is hidden).
pub fn visible_mask(scene: &Scene) -> Result<(Mask, Option<BBox>)> {
    let mask = Renderer::new(scene)?.visible_mask(&Exec::default());
    let bbox = mask.bbox();
    Ok((mask, bbox))
}
