//! Bounding volume hierarchy over a triangle soup tagged with object ids.

use super::vector::Vec3;
use crate::error::{Error, Result};

/// Triangles with this many or fewer references always become a leaf.
const LEAF_SIZE: usize = 4;
const BINS: usize = 12;

/// Half-line with a unit direction.
#[derive(Debug, Copy, Clone, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Ray> {
        let direction = direction
            .try_normalized()
            .ok_or_else(|| Error::invalid("ray direction must be non-zero"))?;
        if !origin.is_finite() {
            return Err(Error::invalid("ray origin must be finite"));
        }
        Ok(Ray { origin, direction })
    }

    /// Ray from `from` toward `to`, plus the distance between them.
    pub fn between(from: Vec3, to: Vec3) -> Result<(Ray, f64)> {
        let d = to - from;
        Ok((Ray::new(from, d)?, d.length()))
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Nearest intersection found by [`Bvh::raycast`].
#[derive(Debug, Copy, Clone, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub object: u32,
    /// Triangle index within its object.
    pub triangle: usize,
    /// Barycentric weights of the second and third triangle vertex.
    pub u: f64,
    pub v: f64,
}

impl Hit {
    fn key(&self) -> (u32, usize) {
        (self.object, self.triangle)
    }

    /// Barycentric weights `(w0, w1, w2)`.
    pub fn barycentric(&self) -> [f64; 3] {
        [1.0 - self.u - self.v, self.u, self.v]
    }
}

#[derive(Debug, Copy, Clone, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    fn grow(&mut self, p: Vec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    fn area(&self) -> f64 {
        let d = self.max - self.min;
        if d.x < 0.0 {
            return 0.0;
        }
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        self.min.x <= o.min.x
            && self.min.y <= o.min.y
            && self.min.z <= o.min.z
            && self.max.x >= o.max.x
            && self.max.y >= o.max.y
            && self.max.z >= o.max.z
    }

    /// Slab test; returns the entry distance if the box overlaps `[t_min, t_max]`.
    #[inline]
    fn hit(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        // Slab distances are rounded; widen the exit so a triangle lying in a
        // box face at exactly `t_max` is still tested.
        let slack = 1.0 + 2.0 * gamma(3);
        let mut lo = t_min;
        let mut hi = t_max * slack;
        for axis in 0..3 {
            let o = origin[axis];
            let inv = inv_dir[axis];
            let mut t0 = (self.min[axis] - o) * inv;
            let mut t1 = (self.max[axis] - o) * inv;
            if t0.is_nan() || t1.is_nan() {
                // Ray parallel to the slab and on its plane: 0 * inf.
                if o < self.min[axis] || o > self.max[axis] {
                    return None;
                }
                continue;
            }
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t1 += t1.abs() * (slack - 1.0);
            lo = lo.max(t0);
            hi = hi.min(t1);
            if lo > hi {
                return None;
            }
        }
        Some(lo)
    }
}

#[derive(Debug, Clone)]
struct Triangle {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
    object: u32,
    index: usize,
}

impl Triangle {
    fn bounds(&self) -> Aabb {
        let mut b = Aabb::EMPTY;
        b.grow(self.v0);
        b.grow(self.v0 + self.e1);
        b.grow(self.v0 + self.e2);
        b
    }

    fn centroid(&self) -> Vec3 {
        self.v0 + (self.e1 + self.e2) / 3.0
    }

    /// Möller–Trumbore with inclusive edges. Returns `(t, u, v)`.
    #[inline]
    fn intersect(&self, ray: &Ray) -> Option<(f64, f64, f64)> {
        let p = ray.direction.cross(self.e2);
        let det = self.e1.dot(p);
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = 1.0 / det;
        let s = ray.origin - self.v0;
        let u = s.dot(p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(self.e1);
        let v = ray.direction.dot(q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        Some((self.e2.dot(q) * inv, u, v))
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`. Interior: index of the left child
    /// (the right child follows it).
    first: usize,
    /// Number of triangles for a leaf, 0 for interior nodes.
    count: usize,
}

/// Binned-SAH bounding volume hierarchy. Immutable after construction and
/// safe to query from many threads.
#[derive(Debug, Clone)]
pub struct Bvh {
    triangles: Vec<Triangle>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Builds a hierarchy over the triangles of every `(object id, triangles)`
/// pair. Triangle indices in hits refer to positions in those lists.
pub fn build_bvh(objects: &[(u32, Vec<[Vec3; 3]>)]) -> Result<Bvh> {
    let triangles: Vec<Triangle> = objects
        .iter()
        .flat_map(|(id, tris)| {
            tris.iter().enumerate().map(move |(index, &[a, b, c])| Triangle {
                v0: a,
                e1: b - a,
                e2: c - a,
                object: *id,
                index,
            })
        })
        .collect();
    if triangles.is_empty() {
        return Err(Error::invalid("cannot build a BVH without triangles"));
    }
    if triangles.iter().any(|t| !(t.v0.is_finite() && t.e1.is_finite() && t.e2.is_finite())) {
        return Err(Error::invalid("BVH input contains non-finite vertices"));
    }
    let bounds: Vec<Aabb> = triangles.iter().map(Triangle::bounds).collect();
    let centroids: Vec<Vec3> = triangles.iter().map(Triangle::centroid).collect();
    let mut bvh = Bvh {
        order: (0..triangles.len()).collect(),
        nodes: Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1),
        triangles,
    };
    bvh.nodes.push(Node {
        bounds: Aabb::EMPTY,
        first: 0,
        count: bvh.triangles.len(),
    });
    bvh.subdivide(0, &bounds, &centroids);
    Ok(bvh)
}

impl Bvh {
    fn subdivide(&mut self, node: usize, bounds: &[Aabb], centroids: &[Vec3]) {
        let (first, count) = (self.nodes[node].first, self.nodes[node].count);
        let range = first..first + count;
        let mut bb = Aabb::EMPTY;
        let mut cb = Aabb::EMPTY;
        for &i in &self.order[range.clone()] {
            bb = bb.union(&bounds[i]);
            cb.grow(centroids[i]);
        }
        self.nodes[node].bounds = bb;
        if count <= LEAF_SIZE {
            return;
        }
        let Some((axis, split)) = best_split(&self.order[range.clone()], bounds, centroids, &cb)
        else {
            return;
        };
        let bin_of = |c: Vec3| bin_index(c[axis], cb.min[axis], cb.max[axis]);
        let slice = &mut self.order[range];
        let mut left = 0;
        for k in 0..slice.len() {
            if bin_of(centroids[slice[k]]) < split {
                slice.swap(k, left);
                left += 1;
            }
        }
        if left == 0 || left == count {
            return;
        }
        let l = self.nodes.len();
        self.nodes.push(Node {
            bounds: Aabb::EMPTY,
            first,
            count: left,
        });
        self.nodes.push(Node {
            bounds: Aabb::EMPTY,
            first: first + left,
            count: count - left,
        });
        self.nodes[node].first = l;
        self.nodes[node].count = 0;
        self.subdivide(l, bounds, centroids);
        self.subdivide(l + 1, bounds, centroids);
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root_is_leaf(&self) -> bool {
        self.nodes[0].count > 0
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// `(object, triangle)` references in leaf order.
    pub fn leaf_triangles(&self) -> Vec<(u32, usize)> {
        let mut out = Vec::with_capacity(self.triangles.len());
        for node in self.nodes.iter().filter(|n| n.count > 0) {
            for &i in &self.order[node.first..node.first + node.count] {
                out.push((self.triangles[i].object, self.triangles[i].index));
            }
        }
        out
    }

    /// Verifies structural invariants: every node box contains its children
    /// (or its triangles, for leaves) and every triangle sits in exactly one
    /// leaf.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = vec![0u32; self.triangles.len()];
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.count > 0 {
                for &i in &self.order[node.first..node.first + node.count] {
                    seen[i] += 1;
                    if !node.bounds.contains(&self.triangles[i].bounds()) {
                        return Err(Error::invalid(format!("leaf {n} does not contain triangle {i}")));
                    }
                }
            } else {
                for c in [node.first, node.first + 1] {
                    if !node.bounds.contains(&self.nodes[c].bounds) {
                        return Err(Error::invalid(format!("node {n} does not contain child {c}")));
                    }
                    stack.push(c);
                }
            }
        }
        if let Some(i) = seen.iter().position(|&s| s != 1) {
            return Err(Error::invalid(format!("triangle {i} appears in {} leaves", seen[i])));
        }
        Ok(())
    }

    /// Nearest hit with `0 < t <= t_max`.
    pub fn raycast(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        self.raycast_range(ray, 0.0, t_max)
    }

    /// Nearest hit with `t_min < t <= t_max`. Equal distances resolve to the
    /// smaller `(object, triangle)` pair.
    pub fn raycast_range(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<Hit> {
        let inv = Vec3::new(1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z);
        let mut best: Option<Hit> = None;
        let mut limit = t_max;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        if self.nodes[0].bounds.hit(ray.origin, inv, t_min, limit).is_some() {
            stack.push(0);
        }
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.count > 0 {
                for &i in &self.order[node.first..node.first + node.count] {
                    let tri = &self.triangles[i];
                    let Some((t, u, v)) = tri.intersect(ray) else {
                        continue;
                    };
                    if t <= t_min || t > limit {
                        continue;
                    }
                    let hit = Hit {
                        t,
                        object: tri.object,
                        triangle: tri.index,
                        u,
                        v,
                    };
                    let better = match &best {
                        None => true,
                        Some(b) => t < b.t || (t == b.t && hit.key() < b.key()),
                    };
                    if better {
                        limit = t;
                        best = Some(hit);
                    }
                }
                continue;
            }
            let (l, r) = (node.first, node.first + 1);
            let tl = self.nodes[l].bounds.hit(ray.origin, inv, t_min, limit);
            let tr = self.nodes[r].bounds.hit(ray.origin, inv, t_min, limit);
            match (tl, tr) {
                (Some(a), Some(b)) => {
                    // Visit the nearer child first.
                    if a <= b {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                (Some(_), None) => stack.push(l),
                (None, Some(_)) => stack.push(r),
                (None, None) => {}
            }
        }
        best
    }

    /// True if anything is hit with `t_min < t < t_max`.
    pub fn occluded(&self, ray: &Ray, t_min: f64, t_max: f64) -> bool {
        let inv = Vec3::new(1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.hit(ray.origin, inv, t_min, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.first..node.first + node.count] {
                    if let Some((t, _, _)) = self.triangles[i].intersect(ray) {
                        if t > t_min && t < t_max {
                            return true;
                        }
                    }
                }
            } else {
                stack.push(node.first);
                stack.push(node.first + 1);
            }
        }
        false
    }
}

/// Free-function form of [`Bvh::raycast`].
pub fn raycast(bvh: &Bvh, ray: &Ray, t_max: f64) -> Option<Hit> {
    bvh.raycast(ray, t_max)
}

/// Bound on the relative error of `n` chained floating-point operations.
fn gamma(n: u32) -> f64 {
    let e = f64::EPSILON * 0.5 * n as f64;
    e / (1.0 - e)
}

#[inline]
fn bin_index(c: f64, lo: f64, hi: f64) -> usize {
    let b = ((c - lo) / (hi - lo) * BINS as f64) as usize;
    b.min(BINS - 1)
}

/// Picks the axis and bin boundary with the lowest surface-area cost.
/// Returns `(axis, k)`: references in bins `< k` go left.
fn best_split(refs: &[usize], bounds: &[Aabb], centroids: &[Vec3], cb: &Aabb) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for axis in 0..3 {
        let (lo, hi) = (cb.min[axis], cb.max[axis]);
        if !(hi > lo) {
            continue;
        }
        let mut bin_bounds = [Aabb::EMPTY; BINS];
        let mut bin_counts = [0usize; BINS];
        for &i in refs {
            let b = bin_index(centroids[i][axis], lo, hi);
            bin_bounds[b] = bin_bounds[b].union(&bounds[i]);
            bin_counts[b] += 1;
        }
        let mut right_area = [0.0; BINS];
        let mut right_count = [0usize; BINS];
        let mut acc = Aabb::EMPTY;
        let mut cnt = 0;
        for k in (1..BINS).rev() {
            acc = acc.union(&bin_bounds[k]);
            cnt += bin_counts[k];
            right_area[k] = acc.area();
            right_count[k] = cnt;
        }
        let mut acc = Aabb::EMPTY;
        let mut cnt = 0;
        for k in 1..BINS {
            acc = acc.union(&bin_bounds[k - 1]);
            cnt += bin_counts[k - 1];
            if cnt == 0 || right_count[k] == 0 {
                continue;
            }
            let cost = acc.area() * cnt as f64 + right_area[k] * right_count[k] as f64;
            if best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, axis, k));
            }
        }
    }
    best.map(|(_, axis, k)| (axis, k))
}
