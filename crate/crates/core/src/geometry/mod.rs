pub mod bvh;
pub mod curves;
pub mod mesh;
pub mod obj;
pub mod solidify;
pub mod triangulate;
pub mod vector;

pub use bvh::{build_bvh, Bvh, Hit, Ray};
pub use curves::{round_corner, sample_bezier};
pub use mesh::{ring_neighbors, Adjacency, ClothMesh};
pub use solidify::solidify;
pub use triangulate::triangulate;
pub use vector::{Mat3, Point2, Point3, Vec2, Vec3};
