use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::vector::{triangle_area, Vec2, Vec3};
use crate::category::ClothCategory;
use crate::error::{Error, Result};

/// Triangulated cloth surface with UVs and tracked keypoint vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClothMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub uvs: Vec<Vec2>,
    /// Semantic keypoint name -> vertex index.
    pub keypoints: BTreeMap<String, usize>,
    pub category: Option<ClothCategory>,
}

impl ClothMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Checks the structural invariants: index ranges, finite coordinates,
    /// non-degenerate triangles, edge-manifoldness and keypoint validity.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.uvs.len() != n {
            return Err(Error::invalid(format!(
                "mesh has {} uvs for {} vertices",
                self.uvs.len(),
                n
            )));
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("vertex {i} is not finite")));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::invalid(format!("triangle {t} indexes past {n} vertices")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::invalid(format!("triangle {t} repeats a vertex")));
            }
        }
        if !self.is_edge_manifold() {
            return Err(Error::invalid("mesh has an edge shared by more than two triangles"));
        }
        for (name, &v) in &self.keypoints {
            if v >= n {
                return Err(Error::invalid(format!("keypoint `{name}` indexes past {n} vertices")));
            }
        }
        Ok(())
    }

    pub fn triangle_positions(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_positions(t);
        triangle_area(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn min_triangle_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Undirected edge -> number of incident triangles, keyed `(min, max)`.
    pub fn edge_triangle_counts(&self) -> HashMap<(usize, usize), u32> {
        let mut counts = HashMap::with_capacity(self.triangles.len() * 2);
        for tri in &self.triangles {
            for k in 0..3 {
                *counts.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Sorted list of unique undirected edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self.edge_triangle_counts().into_keys().collect();
        edges.sort_unstable();
        edges
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .into_iter()
            .map(|(a, b)| self.vertices[a].distance(self.vertices[b]))
            .fold(0.0, f64::max)
    }

    pub fn is_edge_manifold(&self) -> bool {
        self.edge_triangle_counts().values().all(|&c| c <= 2)
    }

    pub fn is_closed(&self) -> bool {
        self.edge_triangle_counts().values().all(|&c| c == 2)
    }

    /// Boundary edges oriented as they appear in their (single) triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let counts = self.edge_triangle_counts();
        let mut out = Vec::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if counts[&edge_key(a, b)] == 1 {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Area-weighted per-vertex normals (zero for isolated vertices).
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        vertex_normals(&self.vertices, &self.triangles)
    }

    /// Mean of the vertex positions.
    pub fn centroid(&self) -> Vec3 {
        centroid(&self.vertices)
    }

    /// Signed volume enclosed by a closed, outward-oriented mesh.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                self.vertices[a].dot(self.vertices[b].cross(self.vertices[c])) / 6.0
            })
            .sum()
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        bounds(&self.vertices)
    }

    pub fn translate(&mut self, offset: Vec3) {
        for v in &mut self.vertices {
            *v += offset;
        }
    }

    pub fn keypoint_vertex(&self, name: &str) -> Result<usize> {
        self.keypoints
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("mesh has no keypoint `{name}`")))
    }

    /// Copy of this mesh with replaced vertex positions (same topology).
    pub fn with_positions(&self, positions: Vec<Vec3>) -> ClothMesh {
        assert_eq!(positions.len(), self.vertices.len());
        ClothMesh {
            vertices: positions,
            ..self.clone()
        }
    }
}

#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn vertex_normals(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::ZERO; vertices.len()];
    for &[a, b, c] in triangles {
        // Unnormalized cross product is twice the area: area weighting for free.
        let n = (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]);
        acc[a] += n;
        acc[b] += n;
        acc[c] += n;
    }
    acc.into_iter()
        .map(|n| n.try_normalized().unwrap_or(Vec3::ZERO))
        .collect()
}

pub(crate) fn centroid(points: &[Vec3]) -> Vec3 {
    if points.is_empty() {
        return Vec3::ZERO;
    }
    let sum = points.iter().fold(Vec3::ZERO, |acc, &p| acc + p);
    sum / points.len() as f64
}

pub(crate) fn bounds(points: &[Vec3]) -> (Vec3, Vec3) {
    let inf = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    points
        .iter()
        .fold((inf, -inf), |(lo, hi), &p| (lo.min(p), hi.max(p)))
}

/// Compressed vertex adjacency (1-ring) of a triangle mesh.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Adjacency {
    pub fn new(vertex_count: usize, triangles: &[[usize; 3]]) -> Adjacency {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
        for tri in triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                lists[a].push(b);
                lists[b].push(a);
            }
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            neighbors.extend(l);
            offsets.push(neighbors.len());
        }
        Adjacency { offsets, neighbors }
    }

    pub fn from_mesh(mesh: &ClothMesh) -> Adjacency {
        Adjacency::new(mesh.vertices.len(), &mesh.triangles)
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Sorted 1-ring of `v`.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Sorted set of vertices at graph distance 1..=k from `v` (k in {1, 2}).
    pub fn ring(&self, v: usize, k: usize) -> Result<Vec<usize>> {
        if v >= self.vertex_count() {
            return Err(Error::invalid(format!(
                "vertex {v} out of range for {} vertices",
                self.vertex_count()
            )));
        }
        match k {
            1 => Ok(self.neighbors(v).to_vec()),
            2 => {
                let mut out: Vec<usize> = self.neighbors(v).to_vec();
                for &n in self.neighbors(v) {
                    out.extend(self.neighbors(n).iter().copied().filter(|&w| w != v));
                }
                out.sort_unstable();
                out.dedup();
                Ok(out)
            }
            _ => Err(Error::invalid(format!("ring order must be 1 or 2, got {k}"))),
        }
    }
}

/// Vertices within graph distance `k` (1 or 2) of `vertex`, excluding it.
pub fn ring_neighbors(mesh: &ClothMesh, vertex: usize, k: usize) -> Result<Vec<usize>> {
    Adjacency::from_mesh(mesh).ring(vertex, k)
}
