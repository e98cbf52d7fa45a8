//! Symmetry-canonical keypoint ordering.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::Keypoint2D;
use crate::category::mirror_name;
use crate::error::{Error, Result};
use crate::ClothCategory;

/// Box `[x, y, w, h]` in pixels.
pub type BoxXywh = [f64; 4];

/// Squared distance to `target`, then x, then y.
fn closeness(k: &Keypoint2D, target: (f64, f64)) -> (f64, f64, f64) {
    let (dx, dy) = (k.x - target.0, k.y - target.1);
    (dx * dx + dy * dy, k.x, k.y)
}

fn closer(a: &Keypoint2D, b: &Keypoint2D, target: (f64, f64)) -> Ordering {
    let (ka, kb) = (closeness(a, target), closeness(b, target));
    ka.0.total_cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
}

fn by_name<'a>(category: ClothCategory, keypoints: &'a [Keypoint2D]) -> Result<BTreeMap<&'a str, &'a Keypoint2D>> {
    let names = category.keypoint_names();
    let mut map = BTreeMap::new();
    for k in keypoints {
        if !names.contains(&k.name.as_str()) {
            return Err(Error::invalid(format!("`{}` is not a {category} keypoint", k.name)));
        }
        if map.insert(k.name.as_str(), k).is_some() {
            return Err(Error::invalid(format!("duplicate keypoint `{}`", k.name)));
        }
    }
    if map.len() != names.len() {
        return Err(Error::invalid(format!(
            "{category} needs {} keypoints, got {}",
            names.len(),
            map.len()
        )));
    }
    Ok(map)
}

/// Reassigns keypoint names so that the labeling no longer depends on
/// which physical side of the cloth is which. Output follows the
/// category's canonical name order.
pub fn order_keypoints(category: ClothCategory, keypoints: &[Keypoint2D], bbox: BoxXywh) -> Result<Vec<Keypoint2D>> {
    let map = by_name(category, keypoints)?;
    let [bx, by, bw, bh] = bbox;
    match category {
        ClothCategory::Towel => {
            let corners: Vec<&Keypoint2D> = (0..4).map(|k| map[format!("corner{k}").as_str()]).collect();
            let top_left = (bx, by);
            let top_right = (bx + bw, by);
            let first = (0..4)
                .min_by(|&a, &b| closer(corners[a], corners[b], top_left))
                .unwrap_or(0);
            let (next, prev) = ((first + 1) % 4, (first + 3) % 4);
            let step = match closer(corners[next], corners[prev], top_right) {
                Ordering::Greater => 3,
                _ => 1,
            };
            Ok((0..4)
                .map(|j| Keypoint2D {
                    name: format!("corner{j}"),
                    ..corners[(first + step * j) % 4].clone()
                })
                .collect())
        }
        ClothCategory::Tshirt | ClothCategory::Shorts => {
            let target = if category == ClothCategory::Tshirt {
                (bx, by + bh)
            } else {
                (bx, by)
            };
            let swap = closer(map["waist_right"], map["waist_left"], target) == Ordering::Less;
            Ok(category
                .keypoint_names()
                .iter()
                .map(|&name| {
                    let src = if swap { mirror_name(name) } else { name.to_string() };
                    Keypoint2D {
                        name: name.to_string(),
                        ..map[src.as_str()].clone()
                    }
                })
                .collect())
        }
    }
}
