//! Parametric 2D cloth outlines and their conversion to flat meshes.
//!
//! A template is a skeleton polygon (one corner per named keypoint), one
//! quadratic control point per edge and one rounding radius per corner. The
//! dense outline is produced by [`ClothTemplate::outline`].

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::category::ClothCategory;
use crate::error::{Error, Result};
use crate::geometry::curves::{is_simple_polygon, sample_bezier, CornerArc};
use crate::geometry::vector::{polygon_signed_area, Vec2};
use crate::geometry::{triangulate, ClothMesh};
use crate::range::Range;

/// Consecutive invalid samples tolerated before giving up.
pub const MAX_ATTEMPTS: usize = 100;

/// Samples per edge curve, endpoints included.
const EDGE_SAMPLES: usize = 9;
const NECK_SAMPLES: usize = 15;
/// Samples per rounded corner; odd so the arc has a middle sample.
const ARC_SAMPLES: usize = 5;
/// Radii below this are treated as sharp corners.
const MIN_RADIUS: f64 = 1e-4;
/// Tangent points stay within this fraction of each control leg.
const MAX_SETBACK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowelRanges {
    pub width: Range,
    /// Height divided by width.
    pub aspect: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TshirtRanges {
    pub waist_width: Range,
    pub torso_height: Range,
    pub shoulder_width: Range,
    pub neck_width: Range,
    pub neck_depth: Range,
    pub sleeve_length: Range,
    pub sleeve_width: Range,
    /// Downward tilt of the sleeves from horizontal, radians.
    pub sleeve_angle: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortsRanges {
    pub waist_width: Range,
    pub leg_length: Range,
    pub leg_width: Range,
    pub crotch_depth: Range,
    /// Outward offset of each outer hem corner beyond the waist.
    pub hem_flare: Range,
}

/// Uniform sampling ranges for every template parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamRanges {
    pub towel: TowelRanges,
    pub tshirt: TshirtRanges,
    pub shorts: ShortsRanges,
    /// Outward offset of each edge's bezier control point from the chord midpoint.
    pub bulge: Range,
    pub corner_radius: Range,
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            towel: TowelRanges {
                width: Range::new(0.3, 0.9),
                aspect: Range::new(1.0, 2.0),
            },
            tshirt: TshirtRanges {
                waist_width: Range::new(0.4, 0.6),
                torso_height: Range::new(0.5, 0.8),
                shoulder_width: Range::new(0.35, 0.55),
                neck_width: Range::new(0.14, 0.22),
                neck_depth: Range::new(0.02, 0.08),
                sleeve_length: Range::new(0.12, 0.3),
                sleeve_width: Range::new(0.12, 0.2),
                sleeve_angle: Range::new(0.0, FRAC_PI_4),
            },
            shorts: ShortsRanges {
                waist_width: Range::new(0.3, 0.5),
                leg_length: Range::new(0.2, 0.45),
                leg_width: Range::new(0.12, 0.17),
                crotch_depth: Range::new(0.15, 0.3),
                hem_flare: Range::new(0.04, 0.1),
            },
            bulge: Range::new(0.0, 0.02),
            corner_radius: Range::new(0.0, 0.02),
        }
    }
}

fn check(pointer: &str, r: &Range, min_exclusive: Option<f64>, min_inclusive: Option<f64>) -> Result<()> {
    if !r.is_valid() {
        return Err(Error::config(pointer, format!("invalid range [{}, {}]", r.min, r.max)));
    }
    if let Some(lo) = min_exclusive {
        if r.min <= lo {
            return Err(Error::config(pointer, format!("lower bound must be > {lo}")));
        }
    }
    if let Some(lo) = min_inclusive {
        if r.min < lo {
            return Err(Error::config(pointer, format!("lower bound must be >= {lo}")));
        }
    }
    Ok(())
}

impl ParamRanges {
    /// Validates every range. Error pointers are relative to this object.
    pub fn validate(&self) -> Result<()> {
        for (name, r) in self.named_lengths() {
            check(&format!("/{name}"), r, Some(0.0), None)?;
        }
        check("/tshirt/sleeve_angle", &self.tshirt.sleeve_angle, None, Some(0.0))?;
        if self.tshirt.sleeve_angle.max >= FRAC_PI_2 {
            return Err(Error::config("/tshirt/sleeve_angle", "upper bound must be < pi/2"));
        }
        check("/bulge", &self.bulge, None, Some(0.0))?;
        check("/corner_radius", &self.corner_radius, None, Some(0.0))?;
        Ok(())
    }

    fn named_lengths(&self) -> Vec<(&'static str, &Range)> {
        let (t, s, h) = (&self.towel, &self.tshirt, &self.shorts);
        vec![
            ("towel/width", &t.width),
            ("towel/aspect", &t.aspect),
            ("tshirt/waist_width", &s.waist_width),
            ("tshirt/torso_height", &s.torso_height),
            ("tshirt/shoulder_width", &s.shoulder_width),
            ("tshirt/neck_width", &s.neck_width),
            ("tshirt/neck_depth", &s.neck_depth),
            ("tshirt/sleeve_length", &s.sleeve_length),
            ("tshirt/sleeve_width", &s.sleeve_width),
            ("shorts/waist_width", &h.waist_width),
            ("shorts/leg_length", &h.leg_length),
            ("shorts/leg_width", &h.leg_width),
            ("shorts/crotch_depth", &h.crotch_depth),
            ("shorts/hem_flare", &h.hem_flare),
        ]
    }

    /// `(name, range)` for each skeleton dimension of `category`, in the
    /// order of [`Dimensions::named`].
    pub fn dimension_ranges(&self, category: ClothCategory) -> Vec<(&'static str, Range)> {
        match category {
            ClothCategory::Towel => vec![("width", self.towel.width), ("aspect", self.towel.aspect)],
            ClothCategory::Tshirt => {
                let s = &self.tshirt;
                vec![
                    ("waist_width", s.waist_width),
                    ("torso_height", s.torso_height),
                    ("shoulder_width", s.shoulder_width),
                    ("neck_width", s.neck_width),
                    ("neck_depth", s.neck_depth),
                    ("sleeve_length", s.sleeve_length),
                    ("sleeve_width", s.sleeve_width),
                    ("sleeve_angle", s.sleeve_angle),
                ]
            }
            ClothCategory::Shorts => {
                let s = &self.shorts;
                vec![
                    ("waist_width", s.waist_width),
                    ("leg_length", s.leg_length),
                    ("leg_width", s.leg_width),
                    ("crotch_depth", s.crotch_depth),
                    ("hem_flare", s.hem_flare),
                ]
            }
        }
    }
}

/// Sampled skeleton dimensions (meters, radians for angles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "category", rename_all = "lowercase")]
pub enum Dimensions {
    Towel {
        width: f64,
        aspect: f64,
    },
    Tshirt {
        waist_width: f64,
        torso_height: f64,
        shoulder_width: f64,
        neck_width: f64,
        neck_depth: f64,
        sleeve_length: f64,
        sleeve_width: f64,
        sleeve_angle: f64,
    },
    Shorts {
        waist_width: f64,
        leg_length: f64,
        leg_width: f64,
        crotch_depth: f64,
        hem_flare: f64,
    },
}

impl Dimensions {
    pub fn category(&self) -> ClothCategory {
        match self {
            Dimensions::Towel { .. } => ClothCategory::Towel,
            Dimensions::Tshirt { .. } => ClothCategory::Tshirt,
            Dimensions::Shorts { .. } => ClothCategory::Shorts,
        }
    }

    pub fn named(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Dimensions::Towel { width, aspect } => vec![("width", width), ("aspect", aspect)],
            Dimensions::Tshirt {
                waist_width,
                torso_height,
                shoulder_width,
                neck_width,
                neck_depth,
                sleeve_length,
                sleeve_width,
                sleeve_angle,
            } => vec![
                ("waist_width", waist_width),
                ("torso_height", torso_height),
                ("shoulder_width", shoulder_width),
                ("neck_width", neck_width),
                ("neck_depth", neck_depth),
                ("sleeve_length", sleeve_length),
                ("sleeve_width", sleeve_width),
                ("sleeve_angle", sleeve_angle),
            ],
            Dimensions::Shorts {
                waist_width,
                leg_length,
                leg_width,
                crotch_depth,
                hem_flare,
            } => vec![
                ("waist_width", waist_width),
                ("leg_length", leg_length),
                ("leg_width", leg_width),
                ("crotch_depth", crotch_depth),
                ("hem_flare", hem_flare),
            ],
        }
    }

    fn sample<R: Rng + ?Sized>(category: ClothCategory, ranges: &ParamRanges, rng: &mut R) -> Dimensions {
        let v: Vec<f64> = ranges
            .dimension_ranges(category)
            .iter()
            .map(|(_, r)| r.sample(rng))
            .collect();
        match category {
            ClothCategory::Towel => Dimensions::Towel {
                width: v[0],
                aspect: v[1],
            },
            ClothCategory::Tshirt => Dimensions::Tshirt {
                waist_width: v[0],
                torso_height: v[1],
                shoulder_width: v[2],
                neck_width: v[3],
                neck_depth: v[4],
                sleeve_length: v[5],
                sleeve_width: v[6],
                sleeve_angle: v[7],
            },
            ClothCategory::Shorts => Dimensions::Shorts {
                waist_width: v[0],
                leg_length: v[1],
                leg_width: v[2],
                crotch_depth: v[3],
                hem_flare: v[4],
            },
        }
    }
}

/// All sampled parameters of one template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateParams {
    pub dimensions: Dimensions,
    /// Per-edge outward bezier offset; edge `i` joins corners `i` and `i + 1`.
    pub bulges: Vec<f64>,
    /// Per-corner rounding radius as sampled (before feasibility capping).
    pub radii: Vec<f64>,
}

impl TemplateParams {
    pub fn category(&self) -> ClothCategory {
        self.dimensions.category()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EdgeKind {
    Plain,
    /// Neck opening dipping by the given depth.
    Neck(f64),
}

struct Skeleton {
    corners: Vec<Vec2>,
    names: Vec<&'static str>,
    kinds: Vec<EdgeKind>,
}

fn skeleton(dims: &Dimensions) -> Skeleton {
    use EdgeKind::Plain;
    match *dims {
        Dimensions::Towel { width, aspect } => {
            let h = width * aspect;
            Skeleton {
                corners: vec![
                    Vec2::new(0.0, 0.0),
                    Vec2::new(width, 0.0),
                    Vec2::new(width, h),
                    Vec2::new(0.0, h),
                ],
                names: vec!["corner0", "corner1", "corner2", "corner3"],
                kinds: vec![Plain; 4],
            }
        }
        Dimensions::Tshirt {
            waist_width,
            torso_height,
            shoulder_width,
            neck_width,
            neck_depth,
            sleeve_length,
            sleeve_width,
            sleeve_angle,
        } => {
            let (sa, ca) = sleeve_angle.sin_cos();
            let along = Vec2::new(ca, -sa);
            let across = Vec2::new(-sa, -ca);
            let shoulder = Vec2::new(0.5 * shoulder_width, torso_height);
            let sleeve_top = shoulder + along * sleeve_length;
            let sleeve_bottom = sleeve_top + across * sleeve_width;
            let armpit = shoulder + across * sleeve_width;
            let m = |p: Vec2| Vec2::new(-p.x, p.y);
            let neck = Vec2::new(0.5 * neck_width, torso_height);
            let mut kinds = vec![Plain; 12];
            kinds[6] = EdgeKind::Neck(neck_depth);
            Skeleton {
                corners: vec![
                    Vec2::new(-0.5 * waist_width, 0.0),
                    Vec2::new(0.5 * waist_width, 0.0),
                    armpit,
                    sleeve_bottom,
                    sleeve_top,
                    shoulder,
                    neck,
                    m(neck),
                    m(shoulder),
                    m(sleeve_top),
                    m(sleeve_bottom),
                    m(armpit),
                ],
                names: vec![
                    "waist_left",
                    "waist_right",
                    "armpit_right",
                    "sleeve_right_bottom",
                    "sleeve_right_top",
                    "shoulder_right",
                    "neck_right",
                    "neck_left",
                    "shoulder_left",
                    "sleeve_left_top",
                    "sleeve_left_bottom",
                    "armpit_left",
                ],
                kinds,
            }
        }
        Dimensions::Shorts {
            waist_width,
            leg_length,
            leg_width,
            crotch_depth,
            hem_flare,
        } => {
            let x = 0.5 * waist_width + hem_flare;
            let top = crotch_depth + leg_length;
            Skeleton {
                corners: vec![
                    Vec2::new(-x, 0.0),
                    Vec2::new(-x + leg_width, 0.0),
                    Vec2::new(0.0, leg_length),
                    Vec2::new(x - leg_width, 0.0),
                    Vec2::new(x, 0.0),
                    Vec2::new(0.5 * waist_width, top),
                    Vec2::new(-0.5 * waist_width, top),
                ],
                names: vec![
                    "hem_left_outer",
                    "hem_left_inner",
                    "crotch",
                    "hem_right_inner",
                    "hem_right_outer",
                    "waist_right",
                    "waist_left",
                ],
                kinds: vec![Plain; 7],
            }
        }
    }
}

/// Parametric outline of one cloth item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClothTemplate {
    pub category: ClothCategory,
    pub params: TemplateParams,
    /// Skeleton corners, counter-clockwise.
    pub boundary: Vec<Vec2>,
    /// Bezier control point of the edge leaving each corner.
    pub controls: Vec<Vec2>,
    /// Rounding radius applied at each corner.
    pub radii: Vec<f64>,
    /// Keypoint name -> skeleton corner index.
    pub keypoint_anchors: BTreeMap<String, usize>,
}

/// Dense outline with keypoint anchors as point indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Outline {
    pub points: Vec<Vec2>,
    pub anchors: BTreeMap<String, usize>,
}

impl ClothTemplate {
    /// Builds and validates a template from explicit parameters.
    pub fn from_params(params: TemplateParams) -> Result<ClothTemplate> {
        let sk = skeleton(&params.dimensions);
        let n = sk.corners.len();
        if params.bulges.len() != n || params.radii.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} bulges and radii, got {} and {}",
                params.bulges.len(),
                params.radii.len()
            )));
        }
        if sk.corners.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("non-finite template dimensions"));
        }
        if !is_simple_polygon(&sk.corners) || polygon_signed_area(&sk.corners) <= 0.0 {
            return Err(Error::invalid("skeleton polygon is not simple"));
        }
        let controls: Vec<Vec2> = (0..n)
            .map(|i| {
                let (a, b) = (sk.corners[i], sk.corners[(i + 1) % n]);
                let dir = (b - a).normalized();
                let outward = Vec2::new(dir.y, -dir.x);
                let mid = a.lerp(b, 0.5) + outward * params.bulges[i];
                match sk.kinds[i] {
                    EdgeKind::Plain => mid,
                    EdgeKind::Neck(depth) => mid - Vec2::new(0.0, 2.0 * depth),
                }
            })
            .collect();
        let radii = (0..n)
            .map(|i| {
                let corner = sk.corners[i];
                let a = controls[(i + n - 1) % n] - corner;
                let b = controls[i] - corner;
                let leg = a.length().min(b.length());
                let theta = a.normalized().dot(b.normalized()).clamp(-1.0, 1.0).acos();
                let cap = MAX_SETBACK * leg * (0.5 * theta).tan();
                params.radii[i].min(cap)
            })
            .collect();
        let template = ClothTemplate {
            category: params.category(),
            keypoint_anchors: sk
                .names
                .iter()
                .enumerate()
                .map(|(i, name)| (name.to_string(), i))
                .collect(),
            boundary: sk.corners,
            controls,
            radii,
            params,
        };
        let outline = template.outline()?;
        if !is_simple_polygon(&outline.points) || polygon_signed_area(&outline.points) <= 0.0 {
            return Err(Error::invalid("template outline is not a simple counter-clockwise polygon"));
        }
        Ok(template)
    }

    /// Expands curves and rounded corners into a dense polygon. A rounded
    /// corner's keypoint sits on the middle sample of its arc.
    pub fn outline(&self) -> Result<Outline> {
        let n = self.boundary.len();
        let mut arcs: Vec<Vec<Vec2>> = Vec::with_capacity(n);
        for i in 0..n {
            let corner = self.boundary[i];
            let prev = self.controls[(i + n - 1) % n];
            let next = self.controls[i];
            let a = (prev - corner).normalized();
            let b = (next - corner).normalized();
            let straight = a.dot(b) <= -1.0 + 1e-9;
            if self.radii[i] < MIN_RADIUS || straight {
                arcs.push(vec![corner]);
            } else {
                arcs.push(CornerArc::new(prev, corner, next, self.radii[i])?.sample(ARC_SAMPLES));
            }
        }
        let mut points = Vec::new();
        let mut corner_index = Vec::with_capacity(n);
        for i in 0..n {
            let arc = &arcs[i];
            corner_index.push(points.len() + arc.len() / 2);
            points.extend_from_slice(arc);
            let start = *arc.last().expect("arc is non-empty");
            let end = arcs[(i + 1) % n][0];
            let samples = if self.is_neck_edge(i) { NECK_SAMPLES } else { EDGE_SAMPLES };
            let curve = sample_bezier(start, self.controls[i], end, samples)?;
            points.extend_from_slice(&curve[1..samples - 1]);
        }
        let anchors = self
            .keypoint_anchors
            .iter()
            .map(|(name, &c)| (name.clone(), corner_index[c]))
            .collect();
        Ok(Outline { points, anchors })
    }

    fn is_neck_edge(&self, i: usize) -> bool {
        self.category == ClothCategory::Tshirt && i == 6
    }

    /// Position of a keypoint on the dense outline.
    pub fn anchor_position(&self, name: &str) -> Result<Vec2> {
        let outline = self.outline()?;
        let idx = outline
            .anchors
            .get(name)
            .ok_or_else(|| Error::invalid(format!("template has no keypoint `{name}`")))?;
        Ok(outline.points[*idx])
    }
}

fn sample_params<R: Rng + ?Sized>(category: ClothCategory, ranges: &ParamRanges, rng: &mut R) -> TemplateParams {
    let dimensions = Dimensions::sample(category, ranges, rng);
    let n = category.keypoint_names().len();
    let bulges = (0..n).map(|_| ranges.bulge.sample(rng)).collect();
    let radii = (0..n).map(|_| ranges.corner_radius.sample(rng)).collect();
    TemplateParams {
        dimensions,
        bulges,
        radii,
    }
}

/// Samples a valid template, retrying up to [`MAX_ATTEMPTS`] times.
pub fn sample_template<R: Rng + ?Sized>(
    category: ClothCategory,
    ranges: &ParamRanges,
    rng: &mut R,
) -> Result<ClothTemplate> {
    ranges.validate()?;
    let mut last_err = None;
    for _ in 0..MAX_ATTEMPTS {
        match ClothTemplate::from_params(sample_params(category, ranges, rng)) {
            Ok(t) => return Ok(t),
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::GenerationFailure(format!(
        "{MAX_ATTEMPTS} consecutive {category} samples were invalid (last: {})",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Triangulates the template outline; keypoints map to the vertices placed
/// exactly at their anchors.
pub fn template_to_mesh(template: &ClothTemplate, max_edge: f64) -> Result<ClothMesh> {
    let outline = template.outline()?;
    let mut mesh = triangulate(&outline.points, max_edge)?;
    mesh.keypoints = outline.anchors;
    mesh.category = Some(template.category);
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::curves::segments_intersect;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn collapsed_towel() -> ParamRanges {
        let mut r = ParamRanges::default();
        r.towel.width = Range::fixed(0.5);
        r.towel.aspect = Range::fixed(2.0);
        r.bulge = Range::fixed(0.0);
        r.corner_radius = Range::fixed(0.0);
        r
    }

    /// O(n^2) oracle: no two non-adjacent edges intersect.
    fn brute_simple(poly: &[Vec2]) -> bool {
        let n = poly.len();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn collapsed_towel_is_the_rectangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_template(ClothCategory::Towel, &collapsed_towel(), &mut rng).unwrap();
        assert_eq!(
            t.boundary,
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(0.5, 0.0),
                Vec2::new(0.5, 1.0),
                Vec2::new(0.0, 1.0)
            ]
        );
        assert_eq!(t.keypoint_anchors.len(), 4);
    }

    #[test]
    fn collapsed_towel_mesh() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_template(ClothCategory::Towel, &collapsed_towel(), &mut rng).unwrap();
        let mesh = template_to_mesh(&t, 0.01).unwrap();
        assert!((mesh.area() - 0.5).abs() < 1e-6);
        assert!(mesh.max_edge_length() <= 0.01);
        let corners = [(0.0, 0.0), (0.5, 0.0), (0.5, 1.0), (0.0, 1.0)];
        let mut found: Vec<(f64, f64)> = mesh
            .keypoints
            .values()
            .map(|&v| (mesh.vertices[v].x, mesh.vertices[v].y))
            .collect();
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = corners.to_vec();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(found, want);
    }

    #[test]
    fn samples_are_simple_and_within_ranges() {
        let ranges = ParamRanges::default();
        for cat in ClothCategory::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(cat.id());
            for _ in 0..1000 {
                let t = sample_template(cat, &ranges, &mut rng).unwrap();
                let outline = t.outline().unwrap();
                assert!(brute_simple(&outline.points));
                for ((name, v), (rname, r)) in t.params.dimensions.named().iter().zip(ranges.dimension_ranges(cat)) {
                    assert_eq!(*name, rname);
                    assert!(r.contains(*v), "{cat} {name}={v}");
                }
                assert!(t.params.bulges.iter().all(|&b| ranges.bulge.contains(b)));
                assert!(t.params.radii.iter().all(|&r| ranges.corner_radius.contains(r)));
                let mut names: Vec<&str> = t.keypoint_anchors.keys().map(String::as_str).collect();
                let mut want = cat.keypoint_names().to_vec();
                names.sort();
                want.sort();
                assert_eq!(names, want);
            }
        }
    }

    #[test]
    fn same_seed_same_template() {
        for cat in ClothCategory::ALL {
            let a = sample_template(cat, &ParamRanges::default(), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            let b = sample_template(cat, &ParamRanges::default(), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn keypoints_coincide_with_anchors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for cat in ClothCategory::ALL {
            let t = sample_template(cat, &ParamRanges::default(), &mut rng).unwrap();
            let mesh = template_to_mesh(&t, 0.02).unwrap();
            assert_eq!(mesh.keypoints.len(), cat.keypoint_names().len());
            for name in cat.keypoint_names() {
                let p = t.anchor_position(name).unwrap();
                let v = mesh.vertices[mesh.keypoints[*name]];
                assert!(v.xy().distance(p) < 1e-9);
            }
        }
    }

    #[test]
    fn tshirt_is_mirror_symmetric_with_equal_sides() {
        let mut ranges = ParamRanges::default();
        ranges.bulge = Range::fixed(0.01);
        ranges.corner_radius = Range::fixed(0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let t = sample_template(ClothCategory::Tshirt, &ranges, &mut rng).unwrap();
            let pts = t.outline().unwrap().points;
            for p in &pts {
                let m = Vec2::new(-p.x, p.y);
                let d = pts.iter().map(|q| q.distance(m)).fold(f64::INFINITY, f64::min);
                assert!(d < 1e-9, "no mirror for {p:?}");
            }
        }
    }

    #[test]
    fn bad_ranges_fail_generation() {
        let mut ranges = ParamRanges::default();
        // Legs wider than half the hem: inner hems cross.
        ranges.shorts.leg_width = Range::fixed(0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_template(ClothCategory::Shorts, &ranges, &mut rng),
            Err(Error::GenerationFailure(_))
        ));
    }

    #[test]
    fn invalid_ranges_rejected() {
        let mut ranges = ParamRanges::default();
        ranges.towel.width = Range::new(0.5, 0.1);
        let err = ranges.validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref pointer, .. } if pointer == "/towel/width"));
    }
}
