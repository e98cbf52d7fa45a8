//! Planar triangulation of simple polygons with an edge-length bound.
//!
//! The boundary is resampled, seeded with a triangular lattice of interior
//! Steiner points and handed to a constrained Delaunay triangulation. Edges
//! still longer than the bound are then bisected longest-first.

use std::collections::{BinaryHeap, HashMap, VecDeque};

use spade::handles::FixedFaceHandle;
use spade::{ConstrainedDelaunayTriangulation, Point2 as SPoint, Triangulation};

use super::curves::{is_simple_polygon, point_segment_distance};
use super::mesh::{edge_key, ClothMesh};
use super::vector::{polygon_signed_area, Vec2, Vec3};
use crate::error::{Error, Result};

/// Fraction of `max_edge` used as target spacing for boundary and lattice.
const SPACING: f64 = 0.9;

/// Triangulates a simple counter-clockwise polygon into a planar mesh at
/// `z = 0` whose edges are all at most `max_edge` long.
///
/// The input boundary points become mesh vertices `0..boundary.len()` in
/// order, so indices into `boundary` remain valid vertex indices.
pub fn triangulate(boundary: &[Vec2], max_edge: f64) -> Result<ClothMesh> {
    if !(max_edge > 0.0 && max_edge.is_finite()) {
        return Err(Error::invalid(format!("max_edge must be positive, got {max_edge}")));
    }
    if boundary.len() < 3 {
        return Err(Error::invalid("polygon needs at least 3 vertices"));
    }
    if !is_simple_polygon(boundary) {
        return Err(Error::invalid("polygon is not simple"));
    }
    if polygon_signed_area(boundary) <= 0.0 {
        return Err(Error::invalid("polygon is not counter-clockwise"));
    }

    let h = SPACING * max_edge;
    let mut points: Vec<Vec2> = boundary.to_vec();
    let mut ring: Vec<usize> = Vec::new();
    let n = boundary.len();
    for i in 0..n {
        let (a, b) = (boundary[i], boundary[(i + 1) % n]);
        ring.push(i);
        let pieces = (a.distance(b) / h).ceil().max(1.0) as usize;
        for k in 1..pieces {
            ring.push(points.len());
            points.push(a.lerp(b, k as f64 / pieces as f64));
        }
    }
    let loop_pts: Vec<Vec2> = ring.iter().map(|&i| points[i]).collect();
    points.extend(lattice_points(&loop_pts, h));

    let mut triangles = constrained_delaunay(&points, &ring)?;
    let mut positions: Vec<Vec3> = points.iter().map(|p| p.extend(0.0)).collect();
    refine(&mut positions, &mut triangles, max_edge);

    let (lo, hi) = super::mesh::bounds(&positions);
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    let uvs = positions
        .iter()
        .map(|p| Vec2::new((p.x - lo.x) / extent, (p.y - lo.y) / extent))
        .collect();
    Ok(ClothMesh {
        vertices: positions,
        triangles,
        uvs,
        keypoints: Default::default(),
        category: None,
    })
}

/// Triangular lattice points strictly inside the polygon and at least `h/2`
/// away from its boundary.
fn lattice_points(poly: &[Vec2], h: f64) -> Vec<Vec2> {
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in poly {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let grid = SegmentGrid::new(poly, lo, hi, h);
    let row_h = h * 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    let mut crossings = Vec::new();
    let n = poly.len();
    let mut row = 0usize;
    loop {
        let y = lo.y + row as f64 * row_h;
        if y > hi.y {
            break;
        }
        crossings.clear();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.y > y) != (b.y > y) {
                crossings.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        crossings.sort_by(f64::total_cmp);
        let shift = if row % 2 == 1 { 0.5 * h } else { 0.0 };
        for span in crossings.chunks_exact(2) {
            let first = ((span[0] - lo.x - shift) / h).ceil().max(0.0) as usize;
            let mut k = first;
            loop {
                let x = lo.x + shift + k as f64 * h;
                if x >= span[1] {
                    break;
                }
                let p = Vec2::new(x, y);
                if x > span[0] && grid.min_distance(p) >= 0.5 * h {
                    out.push(p);
                }
                k += 1;
            }
        }
        row += 1;
    }
    out
}

/// Uniform bucket grid over boundary segments for distance queries within
/// one cell.
struct SegmentGrid<'a> {
    poly: &'a [Vec2],
    lo: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> SegmentGrid<'a> {
    fn new(poly: &'a [Vec2], lo: Vec2, hi: Vec2, cell: f64) -> Self {
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut grid = SegmentGrid {
            poly,
            lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (x0, y0) = grid.cell_of(Vec2::new(a.x.min(b.x), a.y.min(b.y)));
            let (x1, y1) = grid.cell_of(Vec2::new(a.x.max(b.x), a.y.max(b.y)));
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    grid.buckets[cy * nx + cx].push(i);
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let cx = (((p.x - self.lo.x) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let cy = (((p.y - self.lo.y) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        (cx, cy)
    }

    /// Exact distance to the boundary if it is below one cell size, otherwise
    /// some value of at least one cell size.
    fn min_distance(&self, p: Vec2) -> f64 {
        let (cx, cy) = self.cell_of(p);
        let n = self.poly.len();
        let mut best = f64::INFINITY;
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.ny - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.nx - 1) {
                for &i in &self.buckets[y * self.nx + x] {
                    let d = point_segment_distance(p, self.poly[i], self.poly[(i + 1) % n]);
                    best = best.min(d);
                }
            }
        }
        best
    }
}

/// Constrained Delaunay triangulation of `points` with the closed constraint
/// loop `ring`, returning only faces inside the loop (counter-clockwise).
fn constrained_delaunay(points: &[Vec2], ring: &[usize]) -> Result<Vec<[usize; 3]>> {
    let verts: Vec<SPoint<f64>> = points.iter().map(|p| SPoint::new(p.x, p.y)).collect();
    let edges: Vec<[usize; 2]> = (0..ring.len())
        .map(|i| [ring[i], ring[(i + 1) % ring.len()]])
        .collect();
    let cdt = ConstrainedDelaunayTriangulation::<SPoint<f64>>::bulk_load_cdt(verts, edges)
        .map_err(|e| Error::invalid(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != points.len() {
        return Err(Error::invalid("polygon has coincident vertices"));
    }

    // Spade keeps vertex order for unique inputs; map by position anyway so a
    // reordering can never silently scramble the mesh.
    let key = |x: f64, y: f64| (x.to_bits(), y.to_bits());
    let lookup: HashMap<(u64, u64), usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (key(p.x, p.y), i))
        .collect();
    let mut remap = vec![usize::MAX; cdt.num_vertices()];
    for v in cdt.vertices() {
        let p = v.position();
        remap[v.fix().index()] = *lookup
            .get(&key(p.x, p.y))
            .ok_or_else(|| Error::invalid("triangulation moved a vertex"))?;
    }

    // Flood fill from the hull: crossing a constraint edge toggles inside.
    let face_count = cdt.num_all_faces();
    let mut inside: Vec<Option<bool>> = vec![None; face_count];
    let mut queue = VecDeque::new();
    for face in cdt.inner_faces() {
        let touches_hull = face.adjacent_edges().iter().any(|e| e.rev().face().is_outer());
        if touches_hull {
            let crosses = face
                .adjacent_edges()
                .iter()
                .any(|e| e.rev().face().is_outer() && e.is_constraint_edge());
            let idx = face.fix().index();
            if inside[idx].is_none() {
                inside[idx] = Some(crosses);
                queue.push_back(face.fix());
            }
        }
    }
    while let Some(fixed) = queue.pop_front() {
        let face = cdt.face(fixed);
        let here = inside[fixed.index()].expect("queued faces are labelled");
        for e in face.adjacent_edges() {
            let Some(other) = e.rev().face().as_inner() else {
                continue;
            };
            let idx = other.fix().index();
            if inside[idx].is_none() {
                inside[idx] = Some(here ^ e.is_constraint_edge());
                let f: FixedFaceHandle<_> = other.fix();
                queue.push_back(f);
            }
        }
    }

    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if inside[face.fix().index()] == Some(true) {
            let [a, b, c] = face.vertices().map(|v| remap[v.fix().index()]);
            triangles.push([a, b, c]);
        }
    }
    if triangles.is_empty() {
        return Err(Error::invalid("triangulation produced no interior faces"));
    }
    Ok(triangles)
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct QueuedEdge {
    // Non-negative lengths order like their bit patterns.
    len_bits: u64,
    edge: (usize, usize),
}

/// Bisects the longest edge exceeding `max_edge` until none remain, splitting
/// both incident triangles at the midpoint.
fn refine(positions: &mut Vec<Vec3>, triangles: &mut Vec<[usize; 3]>, max_edge: f64) {
    let mut incident: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            incident.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
        }
    }
    let length = |p: &[Vec3], (a, b): (usize, usize)| p[a].distance(p[b]);
    // The full ordering (length, then edge) makes pops independent of the
    // map's iteration order.
    let mut heap: BinaryHeap<QueuedEdge> = incident
        .keys()
        .filter(|&&e| length(positions, e) > max_edge)
        .map(|&e| QueuedEdge {
            len_bits: length(positions, e).to_bits(),
            edge: e,
        })
        .collect();

    while let Some(QueuedEdge { edge, .. }) = heap.pop() {
        let Some(tris) = incident.remove(&edge) else {
            continue;
        };
        let (a, b) = edge;
        let m = positions.len();
        positions.push(positions[a].lerp(positions[b], 0.5));
        let mut new_edges = vec![edge_key(a, m), edge_key(m, b)];
        for t in tris {
            let tri = triangles[t];
            let k = (0..3)
                .find(|&k| edge_key(tri[k], tri[(k + 1) % 3]) == edge)
                .expect("incident triangle contains edge");
            let (p, q, r) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            // (p, q, r) becomes (p, m, r) in place and (m, q, r) appended.
            let t2 = triangles.len();
            triangles[t] = [p, m, r];
            triangles.push([m, q, r]);
            let qr = incident.get_mut(&edge_key(q, r)).expect("edge tracked");
            for s in qr.iter_mut() {
                if *s == t {
                    *s = t2;
                }
            }
            incident.entry(edge_key(p, m)).or_default().push(t);
            incident.entry(edge_key(m, q)).or_default().push(t2);
            incident.entry(edge_key(m, r)).or_default().extend([t, t2]);
            new_edges.push(edge_key(m, r));
        }
        for e in new_edges {
            let len = length(positions, e);
            if len > max_edge {
                heap.push(QueuedEdge {
                    len_bits: len.to_bits(),
                    edge: e,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn unit_square() -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    fn signed_area_sum(mesh: &ClothMesh) -> f64 {
        mesh.triangles
            .iter()
            .map(|&[a, b, c]| {
                let (p, q, r) = (mesh.vertices[a].xy(), mesh.vertices[b].xy(), mesh.vertices[c].xy());
                0.5 * (q - p).cross(r - p)
            })
            .sum()
    }

    #[test]
    fn unit_square_area_and_edges() {
        let mesh = triangulate(&unit_square(), 0.3).unwrap();
        assert!((signed_area_sum(&mesh) - 1.0).abs() < 1e-6);
        assert!(mesh.max_edge_length() <= 0.3);
        mesh.validate().unwrap();
    }

    #[test]
    fn unit_square_is_a_disk() {
        let mesh = triangulate(&unit_square(), 0.3).unwrap();
        let v = mesh.vertex_count() as i64;
        let e = mesh.edges().len() as i64;
        let f = mesh.triangles.len() as i64;
        assert_eq!(v - e + f, 1);
    }

    #[test]
    fn all_triangles_counter_clockwise() {
        let mesh = triangulate(&unit_square(), 0.07).unwrap();
        for &[a, b, c] in &mesh.triangles {
            let (p, q, r) = (mesh.vertices[a].xy(), mesh.vertices[b].xy(), mesh.vertices[c].xy());
            assert!((q - p).cross(r - p) > 0.0);
        }
    }

    #[test]
    fn input_vertices_survive_in_order() {
        let poly = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.4, 0.0),
            Vec2::new(0.4, 0.2),
            Vec2::new(0.2, 0.1),
            Vec2::new(0.0, 0.2),
        ];
        let mesh = triangulate(&poly, 0.05).unwrap();
        for (i, p) in poly.iter().enumerate() {
            assert_eq!(mesh.vertices[i], p.extend(0.0));
        }
        assert!((signed_area_sum(&mesh) - polygon_signed_area(&poly)).abs() < 1e-9);
    }

    #[test]
    fn concave_polygon_excludes_notch() {
        // U shape: the notch between the arms must stay empty.
        let poly = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.3, 0.0),
            Vec2::new(0.3, 0.3),
            Vec2::new(0.2, 0.3),
            Vec2::new(0.2, 0.1),
            Vec2::new(0.1, 0.1),
            Vec2::new(0.1, 0.3),
            Vec2::new(0.0, 0.3),
        ];
        let mesh = triangulate(&poly, 0.02).unwrap();
        for t in 0..mesh.triangles.len() {
            let [p, q, r] = mesh.triangle_positions(t);
            let c = (p + q + r) / 3.0;
            assert!(!(c.x > 0.1 && c.x < 0.2 && c.y > 0.1), "triangle in notch");
        }
        assert!((signed_area_sum(&mesh) - polygon_signed_area(&poly)).abs() < 1e-9);
    }

    #[test]
    fn uvs_in_unit_square() {
        let mesh = triangulate(&unit_square(), 0.1).unwrap();
        assert!(mesh
            .uvs
            .iter()
            .all(|uv| (0.0..=1.0).contains(&uv.x) && (0.0..=1.0).contains(&uv.y)));
        assert_eq!(mesh.uvs[2], Vec2::new(1.0, 1.0));
    }

    #[test]
    fn rejects_bad_polygons() {
        let mut cw = unit_square();
        cw.reverse();
        assert!(triangulate(&cw, 0.1).is_err());
        let bow = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(triangulate(&bow, 0.1).is_err());
        assert!(triangulate(&unit_square(), 0.0).is_err());
    }

    #[test]
    fn deterministic_output() {
        let a = triangulate(&unit_square(), 0.05).unwrap();
        let b = triangulate(&unit_square(), 0.05).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.triangles, b.triangles);
    }

    #[test]
    fn edge_manifold_with_single_boundary_loop() {
        let mesh = triangulate(&unit_square(), 0.05).unwrap();
        assert!(mesh.is_edge_manifold());
        let boundary = mesh.boundary_edges();
        let starts: HashSet<usize> = boundary.iter().map(|e| e.0).collect();
        assert_eq!(starts.len(), boundary.len());
    }
}
