//! Heatmap encoding/decoding and absolute-pixel keypoint metrics.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::coco::{parse_json, CocoDataset, VISIBLE};
use crate::error::{Error, Result};
use crate::ClothCategory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Gaussian standard deviation for heatmap encoding, px.
    pub sigma: f64,
    /// Match distances, px.
    pub thresholds: Vec<f64>,
    pub decode_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            sigma: 4.0,
            thresholds: vec![2.0, 4.0, 8.0],
            decode_threshold: 0.01,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("/sigma", "must be positive"));
        }
        if self.thresholds.is_empty() {
            return Err(Error::config("/thresholds", "must not be empty"));
        }
        for (i, t) in self.thresholds.iter().enumerate() {
            if !(*t > 0.0 && t.is_finite()) {
                return Err(Error::config(format!("/thresholds/{i}"), "must be positive"));
            }
        }
        if !(self.decode_threshold > 0.0 && self.decode_threshold <= 1.0) {
            return Err(Error::config("/decode_threshold", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// One keypoint channel. Pixel `(i, j)` sits at coordinate `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn zeros(width: u32, height: u32) -> Heatmap {
        Heatmap {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

pub fn encode_heatmap(keypoints: &[[f64; 2]], sigma: f64, width: u32, height: u32) -> Result<Heatmap> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let mut h = Heatmap::zeros(width, height);
    let s = 2.0 * sigma * sigma;
    for &[kx, ky] in keypoints {
        for y in 0..height {
            let dy = y as f64 - ky;
            let row = &mut h.values[y as usize * width as usize..][..width as usize];
            for (x, v) in row.iter_mut().enumerate() {
                let dx = x as f64 - kx;
                let g = (-(dx * dx + dy * dy) / s).exp();
                if g > *v {
                    *v = g;
                }
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

/// 3x3 local maxima at or above `threshold`, by descending score. A pixel
/// must beat earlier neighbours (row-major) strictly and later ones weakly.
pub fn decode_heatmap(h: &Heatmap, threshold: f64) -> Vec<Detection> {
    let (w, ht) = (h.width as i64, h.height as i64);
    let mut out = Vec::new();
    for y in 0..ht {
        for x in 0..w {
            let v = h.get(x as u32, y as u32);
            if !(v >= threshold) {
                continue;
            }
            let mut peak = true;
            'n: for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w || ny >= ht {
                        continue;
                    }
                    let n = h.get(nx as u32, ny as u32);
                    let earlier = (dy, dx) < (0, 0);
                    if n > v || (earlier && n == v) {
                        peak = false;
                        break 'n;
                    }
                }
            }
            if peak {
                out.push(Detection {
                    x: x as f64,
                    y: y as f64,
                    score: v,
                });
            }
        }
    }
    sort_by_score(&mut out);
    out
}

fn sort_by_score(d: &mut [Detection]) {
    d.sort_by(|a, b| b.score.total_cmp(&a.score));
}

fn dist(d: &Detection, g: [f64; 2]) -> f64 {
    (d.x - g[0]).hypot(d.y - g[1])
}

/// Greedy score-ordered matching of one image. Returns the true-positive
/// flag of each detection in descending score order.
pub fn match_image(detections: &[Detection], gt: &[[f64; 2]], threshold: f64) -> Vec<(f64, bool)> {
    let mut dets = detections.to_vec();
    sort_by_score(&mut dets);
    let mut taken = vec![false; gt.len()];
    dets.iter()
        .map(|d| {
            let mut best: Option<(f64, usize)> = None;
            for (j, &g) in gt.iter().enumerate() {
                let e = dist(d, g);
                if !taken[j] && e <= threshold && best.is_none_or(|(b, _)| e < b) {
                    best = Some((e, j));
                }
            }
            if let Some((_, j)) = best {
                taken[j] = true;
            }
            (d.score, best.is_some())
        })
        .collect()
}

/// 101-point interpolated precision over scored TP/FP flags.
pub fn ap_from_flags(mut flags: Vec<(f64, bool)>, gt_count: usize) -> f64 {
    if gt_count == 0 {
        return if flags.is_empty() { 1.0 } else { 0.0 };
    }
    flags.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut tp = 0usize;
    let mut recall = Vec::with_capacity(flags.len());
    let mut precision = Vec::with_capacity(flags.len());
    for (k, &(_, hit)) in flags.iter().enumerate() {
        tp += hit as usize;
        recall.push(tp as f64 / gt_count as f64);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut sum = 0.0;
    for t in 0..=100 {
        let r = t as f64 / 100.0;
        let i = recall.partition_point(|&x| x < r);
        if i < precision.len() {
            sum += precision[i];
        }
    }
    sum / 101.0
}

pub fn average_precision(detections: &[Detection], gt_visible: &[[f64; 2]], threshold: f64) -> f64 {
    ap_from_flags(match_image(detections, gt_visible, threshold), gt_visible.len())
}

/// Garment category and keypoint index.
pub type Channel = (ClothCategory, usize);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelData {
    pub gt: Vec<[f64; 2]>,
    pub detections: Vec<Detection>,
}

/// Ground truth and detections of one image, per channel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageEval {
    pub image_id: u64,
    pub channels: BTreeMap<Channel, ChannelData>,
}

/// AP per channel with visible ground truth, one value per threshold.
/// Detections are pooled across images and matched within their own image;
/// images without visible ground truth for a channel are left out.
pub fn channel_ap(images: &[ImageEval], thresholds: &[f64]) -> BTreeMap<Channel, Vec<f64>> {
    let mut pooled: BTreeMap<Channel, (usize, Vec<Vec<(f64, bool)>>)> = BTreeMap::new();
    for img in images {
        for (&c, data) in &img.channels {
            if data.gt.is_empty() {
                continue;
            }
            let e = pooled.entry(c).or_insert_with(|| (0, vec![vec![]; thresholds.len()]));
            e.0 += data.gt.len();
            for (k, &t) in thresholds.iter().enumerate() {
                e.1[k].extend(match_image(&data.detections, &data.gt, t));
            }
        }
    }
    pooled
        .into_iter()
        .map(|(c, (n, flags))| (c, flags.into_iter().map(|f| ap_from_flags(f, n)).collect()))
        .collect()
}

/// Mean of [`channel_ap`] over channels and thresholds; `None` without any
/// visible ground truth.
pub fn mean_ap(images: &[ImageEval], thresholds: &[f64]) -> Option<f64> {
    let per = channel_ap(images, thresholds);
    let all: Vec<f64> = per.values().flatten().copied().collect();
    (!all.is_empty()).then(|| all.iter().sum::<f64>() / all.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Akd {
    /// Mean distance, absent when no pair was formed.
    pub value: Option<f64>,
    pub pairs: usize,
    /// Visible ground truth without a detection of its channel.
    pub skipped: usize,
}

/// Distance from each visible ground-truth keypoint to the top-scoring
/// detection of its channel in the same image.
pub fn akd(images: &[ImageEval]) -> Akd {
    let (mut sum, mut pairs, mut skipped) = (0.0, 0usize, 0usize);
    for img in images {
        for data in img.channels.values() {
            let best = data
                .detections
                .iter()
                .fold(None::<&Detection>, |b, d| match b {
                    Some(b) if b.score >= d.score => Some(b),
                    _ => Some(d),
                });
            match best {
                Some(d) => {
                    for &g in &data.gt {
                        sum += dist(d, g);
                        pairs += 1;
                    }
                }
                None => skipped += data.gt.len(),
            }
        }
    }
    Akd {
        value: (pairs > 0).then(|| sum / pairs as f64),
        pairs,
        skipped,
    }
}

/// One entry of a COCO keypoint results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub image_id: u64,
    pub category_id: u64,
    /// Flat `(x, y, v)` triplets; `v = 0` entries are ignored.
    pub keypoints: Vec<f64>,
    pub score: f64,
    /// Per-keypoint scores replacing `score` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keypoint_scores: Option<Vec<f64>>,
}

pub fn parse_predictions(text: &str, source: &str) -> Result<Vec<Prediction>> {
    parse_json(text, source)
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text, &path.display().to_string())
}

/// Joins ground truth and predictions into per-image channel data, ordered
/// by image id.
pub fn collect(gt: &CocoDataset, predictions: &[Prediction], source: &str) -> Result<Vec<ImageEval>> {
    let mut images: BTreeMap<u64, ImageEval> = gt
        .images
        .iter()
        .map(|i| {
            (
                i.id,
                ImageEval {
                    image_id: i.id,
                    ..Default::default()
                },
            )
        })
        .collect();
    let category = |id: u64, loc: String| {
        ClothCategory::from_id(id).ok_or_else(|| Error::Parse {
            location: loc,
            message: format!("unknown category id {id}"),
        })
    };
    for (k, a) in gt.annotations.iter().enumerate() {
        let loc = format!("ground truth: /annotations/{k}");
        let c = category(a.category_id, loc.clone())?;
        let n = c.keypoint_names().len();
        if a.keypoints.len() != 3 * n {
            return Err(Error::Parse {
                location: loc,
                message: format!("expected {} keypoint values, got {}", 3 * n, a.keypoints.len()),
            });
        }
        let img = images.get_mut(&a.image_id).ok_or_else(|| Error::Parse {
            location: loc,
            message: format!("unknown image id {}", a.image_id),
        })?;
        for (j, t) in a.keypoints.chunks(3).enumerate() {
            let data = img.channels.entry((c, j)).or_default();
            if t[2] == VISIBLE {
                data.gt.push([t[0], t[1]]);
            }
        }
    }
    for (k, p) in predictions.iter().enumerate() {
        let loc = format!("{source}: /{k}");
        let c = category(p.category_id, loc.clone())?;
        let n = c.keypoint_names().len();
        if p.keypoints.len() != 3 * n {
            return Err(Error::Parse {
                location: loc,
                message: format!("expected {} keypoint values, got {}", 3 * n, p.keypoints.len()),
            });
        }
        if let Some(s) = &p.keypoint_scores {
            if s.len() != n {
                return Err(Error::Parse {
                    location: format!("{loc}/keypoint_scores"),
                    message: format!("expected {n} scores, got {}", s.len()),
                });
            }
        }
        let img = images.get_mut(&p.image_id).ok_or_else(|| Error::Parse {
            location: format!("{loc}/image_id"),
            message: format!("image {} is not in the ground truth", p.image_id),
        })?;
        for (j, t) in p.keypoints.chunks(3).enumerate() {
            if t[2] <= 0.0 {
                continue;
            }
            let score = p.keypoint_scores.as_ref().map_or(p.score, |s| s[j]);
            img.channels.entry((c, j)).or_default().detections.push(Detection {
                x: t[0],
                y: t[1],
                score,
            });
        }
    }
    Ok(images.into_values().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointReport {
    pub name: String,
    /// One value per threshold.
    pub ap: Vec<f64>,
    pub visible_gt: usize,
    pub detections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category_id: u64,
    pub name: String,
    /// Mean over keypoints with visible ground truth, per threshold; absent
    /// when there are none.
    pub ap: Option<Vec<f64>>,
    pub keypoints: Vec<KeypointReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub images: usize,
    pub gt_keypoints: usize,
    pub visible_gt: usize,
    pub detections: usize,
    /// True positives per threshold.
    pub matched: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub thresholds: Vec<f64>,
    pub map: Option<f64>,
    pub akd: Option<f64>,
    pub akd_defined: bool,
    pub akd_pairs: usize,
    pub akd_skipped: usize,
    pub counts: Counts,
    pub categories: Vec<CategoryReport>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn evaluate(gt: &CocoDataset, predictions: &[Prediction], thresholds: &[f64]) -> Result<EvalReport> {
    let images = collect(gt, predictions, "predictions")?;
    Ok(report(&images, gt, thresholds))
}

pub fn report(images: &[ImageEval], gt: &CocoDataset, thresholds: &[f64]) -> EvalReport {
    let per = channel_ap(images, thresholds);
    let a = akd(images);
    let mut matched = vec![0usize; thresholds.len()];
    let (mut visible_gt, mut detections) = (0, 0);
    for img in images {
        for d in img.channels.values() {
            visible_gt += d.gt.len();
            detections += d.detections.len();
            if d.gt.is_empty() {
                continue;
            }
            for (k, &t) in thresholds.iter().enumerate() {
                matched[k] += match_image(&d.detections, &d.gt, t).iter().filter(|f| f.1).count();
            }
        }
    }
    let gt_keypoints = gt
        .annotations
        .iter()
        .map(|a| a.keypoints.len() / 3)
        .sum();
    let mut cats: Vec<ClothCategory> = gt
        .categories
        .iter()
        .filter_map(|c| ClothCategory::from_id(c.id))
        .chain(images.iter().flat_map(|i| i.channels.keys().map(|c| c.0)))
        .collect();
    cats.sort_by_key(|c| c.id());
    cats.dedup();
    let categories = cats
        .into_iter()
        .map(|c| {
            let keypoints: Vec<KeypointReport> = c
                .keypoint_names()
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let (mut v, mut d) = (0, 0);
                    for img in images {
                        if let Some(x) = img.channels.get(&(c, j)) {
                            v += x.gt.len();
                            d += x.detections.len();
                        }
                    }
                    KeypointReport {
                        name: name.to_string(),
                        ap: per.get(&(c, j)).cloned().unwrap_or_default(),
                        visible_gt: v,
                        detections: d,
                    }
                })
                .collect();
            let with_gt: Vec<&Vec<f64>> = keypoints.iter().filter(|k| !k.ap.is_empty()).map(|k| &k.ap).collect();
            let ap = (!with_gt.is_empty()).then(|| {
                (0..thresholds.len())
                    .map(|t| with_gt.iter().map(|a| a[t]).sum::<f64>() / with_gt.len() as f64)
                    .collect()
            });
            CategoryReport {
                category_id: c.id(),
                name: c.name().to_string(),
                ap,
                keypoints,
            }
        })
        .collect();
    EvalReport {
        thresholds: thresholds.to_vec(),
        map: mean_ap(images, thresholds),
        akd: a.value,
        akd_defined: a.value.is_some(),
        akd_pairs: a.pairs,
        akd_skipped: a.skipped,
        counts: Counts {
            images: images.len(),
            gt_keypoints,
            visible_gt,
            detections,
            matched,
        },
        categories,
    }
}

/// Predictions obtained by encoding every visible ground-truth keypoint as a
/// heatmap and decoding it again.
pub fn heatmap_roundtrip(gt: &CocoDataset, cfg: &MetricsConfig) -> Result<Vec<Prediction>> {
    let sizes: BTreeMap<u64, (u32, u32)> = gt.images.iter().map(|i| (i.id, (i.width, i.height))).collect();
    let mut out = Vec::new();
    for a in &gt.annotations {
        let &(w, h) = sizes
            .get(&a.image_id)
            .ok_or_else(|| Error::invalid(format!("annotation {} has no image", a.id)))?;
        for (j, t) in a.keypoints.chunks(3).enumerate() {
            if t[2] != VISIBLE {
                continue;
            }
            let hm = encode_heatmap(&[[t[0], t[1]]], cfg.sigma, w, h)?;
            let n = a.keypoints.len() / 3;
            for d in decode_heatmap(&hm, cfg.decode_threshold) {
                let mut keypoints = vec![0.0; 3 * n];
                keypoints[3 * j..3 * j + 3].copy_from_slice(&[d.x, d.y, 1.0]);
                out.push(Prediction {
                    image_id: a.image_id,
                    category_id: a.category_id,
                    keypoints,
                    score: d.score,
                    keypoint_scores: None,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn det(x: f64, y: f64, score: f64) -> Detection {
        Detection { x, y, score }
    }

    #[test]
    fn gaussian_values() {
        let h = encode_heatmap(&[[10.0, 10.0]], 2.0, 20, 20).unwrap();
        assert_eq!(h.get(10, 10), 1.0);
        assert_abs_diff_eq!(h.get(10, 11), (-0.125f64).exp(), epsilon = 1e-15);
        assert!(encode_heatmap(&[], 2.0, 5, 5).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(encode_heatmap(&[], 0.0, 5, 5).is_err());
    }

    #[test]
    fn overlapping_blobs_are_pointwise_max() {
        let kps = [[4.3, 5.1], [6.0, 6.5]];
        let h = encode_heatmap(&kps, 1.5, 12, 10).unwrap();
        let a = encode_heatmap(&kps[..1], 1.5, 12, 10).unwrap();
        let b = encode_heatmap(&kps[1..], 1.5, 12, 10).unwrap();
        for i in 0..h.values.len() {
            assert_eq!(h.values[i], a.values[i].max(b.values[i]));
        }
    }

    #[test]
    fn decode_single_peak() {
        let h = encode_heatmap(&[[7.0, 3.0]], 4.0, 16, 8).unwrap();
        assert_eq!(decode_heatmap(&h, 0.01), vec![det(7.0, 3.0, 1.0)]);
        let flat = Heatmap {
            width: 4,
            height: 4,
            values: vec![0.005; 16],
        };
        assert!(decode_heatmap(&flat, 0.01).is_empty());
    }

    #[test]
    fn adjacent_peaks_suppressed() {
        let mut h = Heatmap::zeros(6, 5);
        h.values[2 * 6 + 2] = 0.9;
        h.values[2 * 6 + 3] = 0.8;
        assert_eq!(decode_heatmap(&h, 0.01), vec![det(2.0, 2.0, 0.9)]);
    }

    #[test]
    fn plateau_emits_first_pixel() {
        let mut h = Heatmap::zeros(5, 5);
        for i in [6, 7, 11, 12] {
            h.values[i] = 0.5;
        }
        assert_eq!(decode_heatmap(&h, 0.01), vec![det(1.0, 1.0, 0.5)]);
    }

    /// Exhaustive 3x3 scan with the row-major tie rule spelled out.
    fn decode_oracle(h: &Heatmap, thr: f64) -> Vec<(u32, u32)> {
        let mut out = vec![];
        for y in 0..h.height {
            for x in 0..h.width {
                let v = h.get(x, y);
                if v < thr {
                    continue;
                }
                let idx = y * h.width + x;
                let mut ok = true;
                for ny in y.saturating_sub(1)..(y + 2).min(h.height) {
                    for nx in x.saturating_sub(1)..(x + 2).min(h.width) {
                        let nidx = ny * h.width + nx;
                        if nidx == idx {
                            continue;
                        }
                        let n = h.get(nx, ny);
                        if n > v || (n == v && nidx < idx) {
                            ok = false;
                        }
                    }
                }
                if ok {
                    out.push((x, y));
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn decode_matches_scan(vals in proptest::collection::vec(0u8..6, 49)) {
            let h = Heatmap { width: 7, height: 7, values: vals.iter().map(|&v| v as f64 / 5.0).collect() };
            let mut got: Vec<(u32, u32)> = decode_heatmap(&h, 0.01).iter().map(|d| (d.x as u32, d.y as u32)).collect();
            got.sort_by_key(|&(x, y)| (y, x));
            prop_assert_eq!(got, decode_oracle(&h, 0.01));
        }

        #[test]
        fn ap_depends_on_rank_only(seed in 0u64..500, k in 0.01f64..100.0) {
            let (dets, gt) = instance(&mut ChaCha8Rng::seed_from_u64(seed));
            let scaled: Vec<Detection> = dets.iter().map(|d| det(d.x, d.y, d.score * k)).collect();
            for t in [2.0, 4.0, 8.0] {
                prop_assert_eq!(average_precision(&dets, &gt, t), average_precision(&scaled, &gt, t));
            }
        }

        #[test]
        fn akd_translation_invariant(seed in 0u64..500, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
            let (dets, gt) = instance(&mut ChaCha8Rng::seed_from_u64(seed));
            let img = |dets: Vec<Detection>, gt: Vec<[f64; 2]>| ImageEval {
                image_id: 0,
                channels: [((ClothCategory::Towel, 0), ChannelData { gt, detections: dets })].into(),
            };
            let a = akd(&[img(dets.clone(), gt.clone())]);
            let moved = akd(&[img(
                dets.iter().map(|d| det(d.x + dx, d.y + dy, d.score)).collect(),
                gt.iter().map(|g| [g[0] + dx, g[1] + dy]).collect(),
            )]);
            prop_assert_eq!(a.pairs, moved.pairs);
            if let (Some(x), Some(y)) = (a.value, moved.value) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn decode_recovers_separated_points(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma: f64 = 1.5;
            let mut pts: Vec<[f64; 2]> = vec![];
            while pts.len() < 4 {
                let p = [rng.random_range(0..40) as f64, rng.random_range(0..30) as f64];
                if pts.iter().all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) > (3.0 * sigma).max(2.0)) {
                    pts.push(p);
                }
            }
            let h = encode_heatmap(&pts, sigma, 40, 30).unwrap();
            let mut got: Vec<(u32, u32)> = decode_heatmap(&h, 0.01).iter().map(|d| (d.x as u32, d.y as u32)).collect();
            let mut want: Vec<(u32, u32)> = pts.iter().map(|p| (p[0] as u32, p[1] as u32)).collect();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }
    }

    pub(crate) fn instance(rng: &mut ChaCha8Rng) -> (Vec<Detection>, Vec<[f64; 2]>) {
        let ng = rng.random_range(0..=6);
        let nd = rng.random_range(0..=10);
        let gt = (0..ng).map(|_| [rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)]).collect();
        let dets = (0..nd)
            .map(|_| det(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0), rng.random_range(0.01..1.0)))
            .collect();
        (dets, gt)
    }

    #[test]
    fn ap_examples() {
        let g = [[10.0, 10.0]];
        for t in [2.0, 4.0, 8.0] {
            assert_eq!(average_precision(&[det(10.0, 10.0, 0.9)], &g, t), 1.0);
        }
        let off = [det(13.0, 14.0, 0.9)];
        let aps: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&t| average_precision(&off, &g, t)).collect();
        assert_eq!(aps, vec![0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(aps.iter().sum::<f64>() / 3.0, 1.0 / 3.0);
        assert_eq!(average_precision(&[], &[], 2.0), 1.0);
        assert_eq!(average_precision(&off, &[], 2.0), 0.0);
    }

    #[test]
    fn half_recall() {
        // TP then FP over two GT: precision 1 up to recall 0.5.
        let g = [[0.0, 0.0], [50.0, 50.0]];
        let d = [det(0.0, 0.0, 0.9), det(20.0, 20.0, 0.5)];
        assert_abs_diff_eq!(average_precision(&d, &g, 2.0), 51.0 / 101.0, epsilon = 1e-15);
    }

    fn channel(gt: Vec<[f64; 2]>, dets: Vec<Detection>) -> ChannelData {
        ChannelData { gt, detections: dets }
    }

    #[test]
    fn mean_ap_cases() {
        let c0 = (ClothCategory::Towel, 0);
        let c1 = (ClothCategory::Towel, 1);
        let imgs = vec![
            ImageEval {
                image_id: 0,
                channels: [
                    (c0, channel(vec![[1.0, 1.0]], vec![det(1.0, 1.0, 1.0)])),
                    (c1, channel(vec![[5.0, 5.0]], vec![det(5.0, 5.0, 1.0)])),
                ]
                .into(),
            },
            ImageEval {
                image_id: 1,
                channels: [(c0, channel(vec![[3.0, 3.0]], vec![det(3.0, 3.0, 0.4)]))].into(),
            },
        ];
        assert_eq!(mean_ap(&imgs, &[2.0, 4.0, 8.0]), Some(1.0));
        let none: Vec<ImageEval> = imgs
            .iter()
            .map(|i| ImageEval {
                image_id: i.image_id,
                channels: i.channels.iter().map(|(&c, d)| (c, channel(d.gt.clone(), vec![]))).collect(),
            })
            .collect();
        assert_eq!(mean_ap(&none, &[2.0, 4.0, 8.0]), Some(0.0));
        assert_eq!(mean_ap(&[], &[2.0]), None);
    }

    #[test]
    fn akd_examples() {
        let c = (ClothCategory::Towel, 0);
        let one = |d: Detection| ImageEval {
            image_id: 0,
            channels: [(c, channel(vec![[10.0, 10.0]], vec![d, det(0.0, 0.0, 0.1)]))].into(),
        };
        assert_eq!(akd(&[one(det(10.0, 10.0, 0.9))]).value, Some(0.0));
        assert_eq!(akd(&[one(det(13.0, 14.0, 0.9))]).value, Some(5.0));
        let empty = ImageEval {
            image_id: 1,
            channels: [(c, channel(vec![[1.0, 1.0]], vec![]))].into(),
        };
        let a = akd(&[empty.clone()]);
        assert_eq!((a.value, a.pairs, a.skipped), (None, 0, 1));
        let a = akd(&[one(det(13.0, 14.0, 0.9)), empty]);
        assert_eq!((a.value, a.pairs, a.skipped), (Some(5.0), 1, 1));
    }

    #[test]
    fn config_pointers() {
        let c = MetricsConfig {
            sigma: -1.0,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config { pointer, .. }) if pointer == "/sigma"));
        let c = MetricsConfig {
            thresholds: vec![2.0, 0.0],
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config { pointer, .. }) if pointer == "/thresholds/1"));
    }
}
