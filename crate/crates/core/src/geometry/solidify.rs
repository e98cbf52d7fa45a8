use super::mesh::ClothMesh;
use crate::error::{Error, Result};

/// Thickens an open surface into a closed shell.
///
/// Vertex `i` of the input yields the top copy `i` (offset by `+thickness/2`
/// along its normal) and the bottom copy `i + n`. The bottom cap has reversed
/// winding and every boundary edge contributes two side-wall triangles, so
/// keypoint indices keep pointing at the top copy.
pub fn solidify(mesh: &ClothMesh, thickness: f64) -> Result<ClothMesh> {
    if !(thickness > 0.0 && thickness.is_finite()) {
        return Err(Error::invalid(format!("thickness must be positive, got {thickness}")));
    }
    if !mesh.is_edge_manifold() {
        return Err(Error::invalid("cannot solidify a non-manifold mesh"));
    }
    let n = mesh.vertex_count();
    let normals = mesh.vertex_normals();
    let half = 0.5 * thickness;

    let mut vertices = Vec::with_capacity(2 * n);
    vertices.extend(mesh.vertices.iter().zip(&normals).map(|(&p, &nrm)| p + nrm * half));
    vertices.extend(mesh.vertices.iter().zip(&normals).map(|(&p, &nrm)| p - nrm * half));

    let boundary = mesh.boundary_edges();
    let mut triangles = Vec::with_capacity(2 * mesh.triangles.len() + 2 * boundary.len());
    triangles.extend(mesh.triangles.iter().copied());
    triangles.extend(mesh.triangles.iter().map(|&[a, b, c]| [a + n, c + n, b + n]));
    for (a, b) in boundary {
        triangles.push([a, a + n, b]);
        triangles.push([b, a + n, b + n]);
    }

    let mut uvs = mesh.uvs.clone();
    uvs.extend_from_slice(&mesh.uvs);
    Ok(ClothMesh {
        vertices,
        triangles,
        uvs,
        keypoints: mesh.keypoints.clone(),
        category: mesh.category,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::tests::single_triangle;
    use crate::geometry::triangulate::triangulate;
    use crate::geometry::vector::Vec2;

    #[test]
    fn single_triangle_counts() {
        let solid = solidify(&single_triangle(), 0.002).unwrap();
        assert_eq!(solid.vertex_count(), 6);
        assert_eq!(solid.triangles.len(), 8);
        assert!(solid.is_closed());
    }

    #[test]
    fn square_volume_matches_area_times_thickness() {
        let sq = [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.3, 0.0),
            Vec2::new(0.3, 0.3),
            Vec2::new(0.0, 0.3),
        ];
        let flat = triangulate(&sq, 0.05).unwrap();
        let t = 0.002;
        let solid = solidify(&flat, t).unwrap();
        let expected = flat.area() * t;
        assert!((solid.signed_volume() - expected).abs() <= 0.05 * expected);
        assert!(solid.is_closed());
    }

    #[test]
    fn keypoints_stay_on_top_copy() {
        let mut m = single_triangle();
        m.keypoints.insert("corner0".into(), 1);
        let solid = solidify(&m, 0.01).unwrap();
        assert_eq!(solid.keypoints["corner0"], 1);
        assert!(solid.vertices[1].z > solid.vertices[4].z);
    }

    #[test]
    fn rejects_non_manifold_and_bad_thickness() {
        let mut m = single_triangle();
        assert!(solidify(&m, 0.0).is_err());
        m.vertices.push(crate::geometry::Vec3::new(0.0, 0.0, 1.0));
        m.vertices.push(crate::geometry::Vec3::new(0.0, 0.0, -1.0));
        m.uvs.extend([Vec2::ZERO, Vec2::ZERO]);
        m.triangles.push([0, 1, 3]);
        m.triangles.push([1, 0, 4]);
        assert!(solidify(&m, 0.002).is_err());
    }
}
