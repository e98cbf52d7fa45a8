//! COCO keypoint dataset documents.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::rle::Rle;
use super::{AnnotationRecord, Keypoint2D};
use crate::error::{Error, Result};
use crate::render::BBox;
use crate::ClothCategory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    /// `[x, y, w, h]`
    pub bbox: [f64; 4],
    pub area: f64,
    pub iscrowd: u8,
    pub segmentation: Rle,
    /// Flat `(x, y, v)` triplets.
    pub keypoints: Vec<f64>,
    pub num_keypoints: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
    pub supercategory: String,
    pub keypoints: Vec<String>,
    pub skeleton: Vec<[u32; 2]>,
}

impl CocoCategory {
    pub fn from_category(c: ClothCategory) -> CocoCategory {
        CocoCategory {
            id: c.id(),
            name: c.name().to_string(),
            supercategory: "cloth".to_string(),
            keypoints: c.keypoint_names().iter().map(|s| s.to_string()).collect(),
            skeleton: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocoDataset {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

impl CocoDataset {
    /// Compact JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("dataset serializes");
        s.push('\n');
        s
    }

    /// Writes via a temporary file and rename.
    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json().as_bytes())
    }
}

/// Visibility flag for a labeled, visible keypoint.
pub const VISIBLE: f64 = 2.0;

impl AnnotationRecord {
    pub fn coco_image(&self) -> CocoImage {
        CocoImage {
            id: self.image_id,
            file_name: self.file_name.clone(),
            width: self.width,
            height: self.height,
        }
    }

    pub fn coco_annotation(&self) -> CocoAnnotation {
        let keypoints = self
            .keypoints
            .iter()
            .flat_map(|k| {
                if k.visible {
                    [k.x, k.y, VISIBLE]
                } else {
                    [0.0, 0.0, 0.0]
                }
            })
            .collect();
        CocoAnnotation {
            id: self.image_id,
            image_id: self.image_id,
            category_id: self.category.id(),
            bbox: self.bbox.map_or([0.0; 4], |b| b.to_xywh()),
            area: self.area as f64,
            iscrowd: 0,
            segmentation: self.segmentation.clone(),
            keypoints,
            num_keypoints: self.num_keypoints(),
        }
    }
}

/// Dataset over `records`, sorted by image id.
pub fn export_coco(records: &[AnnotationRecord], categories: &[ClothCategory]) -> CocoDataset {
    let mut sorted: Vec<&AnnotationRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.image_id);
    CocoDataset {
        images: sorted.iter().map(|r| r.coco_image()).collect(),
        annotations: sorted.iter().map(|r| r.coco_annotation()).collect(),
        categories: categories.iter().map(|&c| CocoCategory::from_category(c)).collect(),
    }
}

/// Deserializes JSON, reporting failures with the document path, line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::Parse {
            location: format!("{source}:{}:{} at `{}`", inner.line(), inner.column(), e.path()),
            message: inner.to_string(),
        }
    })
}

pub fn parse_coco(text: &str, source: &str) -> Result<CocoDataset> {
    parse_json(text, source)
}

pub fn read_coco(path: &Path) -> Result<CocoDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_coco(&text, &path.display().to_string())
}

/// Inverse of [`export_coco`].
pub fn records_from_coco(data: &CocoDataset) -> Result<Vec<AnnotationRecord>> {
    let bad = |m: String| Error::Parse {
        location: "annotations".into(),
        message: m,
    };
    let mut out = Vec::with_capacity(data.annotations.len());
    for a in &data.annotations {
        let image = data
            .images
            .iter()
            .find(|i| i.id == a.image_id)
            .ok_or_else(|| bad(format!("annotation {} refers to unknown image {}", a.id, a.image_id)))?;
        let category = ClothCategory::from_id(a.category_id)
            .ok_or_else(|| bad(format!("unknown category id {}", a.category_id)))?;
        let names = category.keypoint_names();
        if a.keypoints.len() != 3 * names.len() {
            return Err(bad(format!("annotation {} has {} keypoint values", a.id, a.keypoints.len())));
        }
        let keypoints = names
            .iter()
            .zip(a.keypoints.chunks(3))
            .map(|(n, t)| Keypoint2D {
                name: n.to_string(),
                x: t[0],
                y: t[1],
                visible: t[2] == VISIBLE,
            })
            .collect();
        let [x, y, w, h] = a.bbox;
        let bbox = (w > 0.0 && h > 0.0).then_some(BBox {
            x: x as u32,
            y: y as u32,
            w: w as u32,
            h: h as u32,
        });
        out.push(AnnotationRecord {
            image_id: image.id,
            file_name: image.file_name.clone(),
            width: image.width,
            height: image.height,
            category,
            bbox,
            area: a.area as usize,
            segmentation: a.segmentation.clone(),
            keypoints,
        });
    }
    Ok(out)
}
