//! Outline primitives: quadratic bezier sampling, corner rounding and
//! simple-polygon predicates.

use std::f64::consts::PI;

use super::vector::Vec2;
use crate::error::{Error, Result};

/// Samples `n` points of the quadratic bezier `(p0, p1, p2)` at uniformly
/// spaced parameters. The first and last samples are exactly `p0` and `p2`.
pub fn sample_bezier(p0: Vec2, p1: Vec2, p2: Vec2, n: usize) -> Result<Vec<Vec2>> {
    if n < 2 {
        return Err(Error::invalid(format!("bezier needs at least 2 samples, got {n}")));
    }
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                return p0;
            }
            if i == n - 1 {
                return p2;
            }
            let t = i as f64 / last;
            let s = 1.0 - t;
            p0 * (s * s) + p1 * (2.0 * s * t) + p2 * (t * t)
        })
        .collect())
}

/// Geometry of a rounded corner: tangent points, arc center and sweep.
#[derive(Debug, Clone, Copy)]
pub struct CornerArc {
    pub start: Vec2,
    pub end: Vec2,
    pub center: Vec2,
    pub radius: f64,
    start_angle: f64,
    sweep: f64,
}

impl CornerArc {
    /// Distance from the corner to each tangent point.
    pub fn setback(corner: Vec2, prev: Vec2, next: Vec2, radius: f64) -> f64 {
        let a = (prev - corner).normalized();
        let b = (next - corner).normalized();
        let half = 0.5 * a.dot(b).clamp(-1.0, 1.0).acos();
        radius / half.tan()
    }

    pub fn new(prev: Vec2, corner: Vec2, next: Vec2, radius: f64) -> Result<CornerArc> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("corner radius must be positive, got {radius}")));
        }
        let la = (prev - corner).length();
        let lb = (next - corner).length();
        if la == 0.0 || lb == 0.0 {
            return Err(Error::invalid("corner coincides with a neighbour"));
        }
        let a = (prev - corner) / la;
        let b = (next - corner) / lb;
        let angle = a.dot(b).clamp(-1.0, 1.0).acos();
        if angle < 1e-9 {
            return Err(Error::invalid("corner folds back onto itself"));
        }
        let half = 0.5 * angle;
        let setback = radius / half.tan();
        if !(setback < la && setback < lb) {
            return Err(Error::invalid(format!(
                "corner radius {radius} too large for segments of length {la} and {lb}"
            )));
        }
        let start = corner + a * setback;
        let end = corner + b * setback;
        let bisector = (a + b).try_normalize().unwrap_or_else(|| a.perp());
        let center = corner + bisector * (radius / half.sin());
        let a0 = (start - center).y.atan2((start - center).x);
        let a1 = (end - center).y.atan2((end - center).x);
        let mut sweep = a1 - a0;
        while sweep > PI {
            sweep -= 2.0 * PI;
        }
        while sweep <= -PI {
            sweep += 2.0 * PI;
        }
        Ok(CornerArc {
            start,
            end,
            center,
            radius,
            start_angle: a0,
            sweep,
        })
    }

    pub fn point(&self, s: f64) -> Vec2 {
        let ang = self.start_angle + self.sweep * s;
        self.center + Vec2::new(ang.cos(), ang.sin()) * self.radius
    }

    /// `n >= 2` samples from `start` to `end` (endpoints exact).
    pub fn sample(&self, n: usize) -> Vec<Vec2> {
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| match i {
                0 => self.start,
                i if i == n - 1 => self.end,
                i => self.point(i as f64 / last),
            })
            .collect()
    }
}

trait TryNormalize: Sized {
    fn try_normalize(self) -> Option<Self>;
}

impl TryNormalize for Vec2 {
    fn try_normalize(self) -> Option<Vec2> {
        let l = self.length();
        (l > 1e-12).then(|| self / l)
    }
}

/// Replaces `corner` by `n` samples of the circular arc of `radius` tangent
/// to both incident segments. `radius == 0` yields `[corner]`.
pub fn round_corner(prev: Vec2, corner: Vec2, next: Vec2, radius: f64, n: usize) -> Result<Vec<Vec2>> {
    if radius < 0.0 || !radius.is_finite() {
        return Err(Error::invalid(format!("corner radius must be >= 0, got {radius}")));
    }
    if radius == 0.0 {
        return Ok(vec![corner]);
    }
    if n < 2 {
        return Err(Error::invalid(format!("arc needs at least 2 samples, got {n}")));
    }
    Ok(CornerArc::new(prev, corner, next, radius)?.sample(n))
}

/// Closest distance from `p` to segment `ab`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.length_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True when the closed polygon has no repeated vertices and no two
/// non-adjacent edges touch. Adjacent edges may only share their endpoint.
pub fn is_simple_polygon(points: &[Vec2]) -> bool {
    let n = points.len();
    if n < 3 || points.iter().any(|p| !p.is_finite()) {
        return false;
    }
    let edges: Vec<(Vec2, Vec2, Vec2, Vec2)> = (0..n)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % n];
            let lo = Vec2::new(a.x.min(b.x), a.y.min(b.y));
            let hi = Vec2::new(a.x.max(b.x), a.y.max(b.y));
            (a, b, lo, hi)
        })
        .collect();
    for i in 0..n {
        let (a, b, lo_i, hi_i) = edges[i];
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            let (c, d, lo_j, hi_j) = edges[j];
            if lo_i.x > hi_j.x || lo_j.x > hi_i.x || lo_i.y > hi_j.y || lo_j.y > hi_i.y {
                continue;
            }
            let adjacent_next = j == i + 1;
            let adjacent_prev = i == 0 && j == n - 1;
            if adjacent_next {
                // Shares b == c; reject if the edges overlap beyond that point.
                if orient(a, b, d) == 0.0 && (d - b).dot(a - b) > 0.0 {
                    return false;
                }
                continue;
            }
            if adjacent_prev {
                // Shares a == d.
                if orient(c, d, b) == 0.0 && (b - a).dot(c - a) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
