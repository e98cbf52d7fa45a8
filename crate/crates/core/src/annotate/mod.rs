//! Keypoint projection, 2-ring visibility and annotation records.

pub mod coco;
pub mod order;
pub mod rle;

use serde::{Deserialize, Serialize};

pub use coco::{export_coco, parse_coco, read_coco, records_from_coco, CocoAnnotation, CocoCategory, CocoDataset, CocoImage};
pub use order::order_keypoints;
pub use rle::{rle_decode, rle_encode, Rle};

use crate::error::{Error, Result};
use crate::geometry::{Adjacency, Bvh, Ray, Vec3};
use crate::render::{BBox, Mask, Renderer};
use crate::scene::{Camera, Projection, Scene};
use crate::ClothCategory;

/// Hits closer than this to the target point do not occlude it, m.
pub const VISIBILITY_EPSILON: f64 = 1e-5;
/// Visible keypoints must fall inside the mask box grown by this, px.
pub const BBOX_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoint2D {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub visible: bool,
}

pub fn project(camera: &Camera, p: Vec3) -> Projection {
    camera.project(p)
}

/// Whether `p` is in front of the camera, projects inside the image and
/// nothing lies on the sight line closer than `VISIBILITY_EPSILON` to it.
pub fn point_visible(bvh: &Bvh, camera: &Camera, p: Vec3) -> bool {
    let q = camera.project(p);
    if !(q.depth > 0.0) || !camera.intrinsics.contains(q.x, q.y) {
        return false;
    }
    let d = p - camera.position;
    let dist = d.length();
    let ray = Ray {
        origin: camera.position,
        direction: d / dist,
    };
    !bvh.occluded(&ray, 0.0, dist - VISIBILITY_EPSILON)
}

/// Visibility queries against one scene.
pub struct Annotator<'a> {
    pub renderer: &'a Renderer<'a>,
    adjacency: Adjacency,
}

impl<'a> Annotator<'a> {
    pub fn new(renderer: &'a Renderer<'a>) -> Annotator<'a> {
        let s = renderer.scene;
        Annotator {
            renderer,
            adjacency: Adjacency::new(s.layer_vertices, &s.cloth.triangles[..s.layer_triangles]),
        }
    }

    fn scene(&self) -> &Scene {
        self.renderer.scene
    }

    /// Either face of single-layer vertex `v` is visible.
    pub fn vertex_visible(&self, v: usize) -> bool {
        let s = self.scene();
        [v, v + s.layer_vertices]
            .iter()
            .any(|&i| point_visible(&self.renderer.bvh, &s.camera, s.cloth.vertices[i]))
    }

    /// 2-ring rule: the keypoint vertex or any vertex within two edges of it
    /// is visible.
    pub fn keypoint_visibility(&self, name: &str) -> Result<bool> {
        let v = self.scene().cloth.keypoint_vertex(name)?;
        if self.vertex_visible(v) {
            return Ok(true);
        }
        Ok(self.adjacency.ring(v, 2)?.into_iter().any(|u| self.vertex_visible(u)))
    }

    /// Projected mid-surface keypoints in canonical name order, with 2-ring
    /// visibility.
    pub fn keypoints(&self) -> Result<Vec<Keypoint2D>> {
        let s = self.scene();
        let category = s
            .cloth
            .category
            .ok_or_else(|| Error::invalid("cloth mesh has no category"))?;
        category
            .keypoint_names()
            .iter()
            .map(|&name| {
                let v = s.cloth.keypoint_vertex(name)?;
                let q = s.camera.project(s.layer_position(v));
                Ok(Keypoint2D {
                    name: name.to_string(),
                    x: q.x,
                    y: q.y,
                    visible: self.keypoint_visibility(name)?,
                })
            })
            .collect()
    }
}

/// Convenience form of [`Annotator::keypoint_visibility`].
pub fn keypoint_visibility(renderer: &Renderer, name: &str) -> Result<bool> {
    Annotator::new(renderer).keypoint_visibility(name)
}

/// One annotated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub category: ClothCategory,
    /// `None` when no cloth pixel is visible.
    pub bbox: Option<BBox>,
    /// Visible cloth pixels.
    pub area: usize,
    pub segmentation: Rle,
    /// Canonically ordered; hidden keypoints carry `(0, 0)`.
    pub keypoints: Vec<Keypoint2D>,
}

impl AnnotationRecord {
    pub fn num_keypoints(&self) -> u32 {
        self.keypoints.iter().filter(|k| k.visible).count() as u32
    }
}

/// Orders `keypoints` (all positions known) against the mask box, keeps a
/// keypoint visible only if it also falls within the box grown by
/// [`BBOX_MARGIN`], and zeroes hidden coordinates.
pub fn annotate(
    category: ClothCategory,
    mask: &Mask,
    keypoints: &[Keypoint2D],
    image_id: u64,
    file_name: &str,
) -> Result<AnnotationRecord> {
    let bbox = mask.bbox();
    let frame = match bbox {
        Some(b) => b.to_xywh(),
        None => keypoint_box(keypoints),
    };
    let ordered = order_keypoints(category, keypoints, frame)?;
    let keypoints = ordered
        .into_iter()
        .map(|k| {
            let visible = k.visible && bbox.is_some_and(|b| b.contains_dilated(k.x, k.y, BBOX_MARGIN));
            if visible {
                k
            } else {
                Keypoint2D {
                    x: 0.0,
                    y: 0.0,
                    visible: false,
                    ..k
                }
            }
        })
        .collect();
    Ok(AnnotationRecord {
        image_id,
        file_name: file_name.to_string(),
        width: mask.width,
        height: mask.height,
        category,
        bbox,
        area: mask.count(),
        segmentation: rle_encode(mask),
        keypoints,
    })
}

fn keypoint_box(kps: &[Keypoint2D]) -> [f64; 4] {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in kps {
        x0 = x0.min(k.x);
        y0 = y0.min(k.y);
        x1 = x1.max(k.x);
        y1 = y1.max(k.y);
    }
    if x0 > x1 {
        return [0.0; 4];
    }
    [x0, y0, x1 - x0, y1 - y0]
}
