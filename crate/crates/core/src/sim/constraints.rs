use serde::{Deserialize, Serialize};

use crate::geometry::{Adjacency, ClothMesh};

#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Between 1-ring neighbours.
    Stretch,
    /// Between vertices at graph distance exactly two.
    Bend,
}

/// Distance constraint between two particles.
#[derive(Debug, Copy, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub i: usize,
    pub j: usize,
    pub rest_length: f64,
    pub stiffness: f64,
}

/// One stretch constraint per edge and one bend constraint per distance-2
/// pair, with rest lengths taken from the current positions and unit
/// stiffness. Stretch constraints come first; each group is ordered by
/// `(i, j)` with `i < j`.
pub fn build_constraints(mesh: &ClothMesh) -> Vec<Constraint> {
    let adj = Adjacency::from_mesh(mesh);
    let n = mesh.vertex_count();
    let mut stretch = Vec::new();
    let mut bend = Vec::new();
    let mut mark = vec![usize::MAX; n];
    for i in 0..n {
        for &j in adj.neighbors(i) {
            mark[j] = i;
        }
        mark[i] = i;
        let mut second: Vec<usize> = Vec::new();
        for &j in adj.neighbors(i) {
            if j > i {
                stretch.push(pair(mesh, ConstraintKind::Stretch, i, j));
            }
            for &k in adj.neighbors(j) {
                if k > i && mark[k] != i {
                    mark[k] = i;
                    second.push(k);
                }
            }
        }
        second.sort_unstable();
        bend.extend(second.into_iter().map(|k| pair(mesh, ConstraintKind::Bend, i, k)));
    }
    stretch.extend(bend);
    stretch
}

fn pair(mesh: &ClothMesh, kind: ConstraintKind, i: usize, j: usize) -> Constraint {
    Constraint {
        kind,
        i,
        j,
        rest_length: mesh.vertices[i].distance(mesh.vertices[j]),
        stiffness: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::tests::single_triangle;
    use crate::geometry::vector::{Vec2, Vec3};
    use std::collections::{BTreeMap, BTreeSet, VecDeque};

    /// 3x3 vertex grid, two triangles per quad, all diagonals (0,0)-(1,1).
    fn grid() -> ClothMesh {
        let mut vertices = Vec::new();
        let mut uvs = Vec::new();
        for y in 0..3 {
            for x in 0..3 {
                vertices.push(Vec3::new(x as f64, y as f64, 0.0));
                uvs.push(Vec2::new(x as f64 / 2.0, y as f64 / 2.0));
            }
        }
        let mut triangles = Vec::new();
        for y in 0..2 {
            for x in 0..2 {
                let a = y * 3 + x;
                triangles.push([a, a + 1, a + 4]);
                triangles.push([a, a + 4, a + 3]);
            }
        }
        ClothMesh {
            vertices,
            triangles,
            uvs,
            keypoints: BTreeMap::new(),
            category: None,
        }
    }

    fn bfs_pairs(mesh: &ClothMesh, dist: usize) -> BTreeSet<(usize, usize)> {
        let n = mesh.vertex_count();
        let mut edges = vec![BTreeSet::new(); n];
        for t in &mesh.triangles {
            for k in 0..3 {
                edges[t[k]].insert(t[(k + 1) % 3]);
                edges[t[(k + 1) % 3]].insert(t[k]);
            }
        }
        let mut out = BTreeSet::new();
        for s in 0..n {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &edges[u] {
                    if d[v] == usize::MAX {
                        d[v] = d[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            for t in s + 1..n {
                if d[t] == dist {
                    out.insert((s, t));
                }
            }
        }
        out
    }

    #[test]
    fn single_triangle_has_three_stretch() {
        let c = build_constraints(&single_triangle());
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|c| c.kind == ConstraintKind::Stretch));
    }

    #[test]
    fn grid_counts_match_bfs() {
        let mesh = grid();
        let c = build_constraints(&mesh);
        let stretch: BTreeSet<_> = c
            .iter()
            .filter(|c| c.kind == ConstraintKind::Stretch)
            .map(|c| (c.i, c.j))
            .collect();
        let bend: BTreeSet<_> = c
            .iter()
            .filter(|c| c.kind == ConstraintKind::Bend)
            .map(|c| (c.i, c.j))
            .collect();
        assert_eq!(stretch.len(), 16);
        assert_eq!(stretch, bfs_pairs(&mesh, 1));
        assert_eq!(bend, bfs_pairs(&mesh, 2));
        assert_eq!(stretch.len() + bend.len(), c.len());
    }

    #[test]
    fn rest_lengths_are_flat_distances() {
        let mesh = grid();
        for c in build_constraints(&mesh) {
            let d = mesh.vertices[c.i].distance(mesh.vertices[c.j]);
            assert!((c.rest_length - d).abs() <= 1e-12);
            assert!(c.i < c.j);
        }
    }
}
