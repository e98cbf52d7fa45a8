//! Wavefront OBJ import/export.
//!
//! Keypoints and category travel as comment lines (`# kp <name> <index>`,
//! `# category <name>`) so that plain OBJ readers still load the geometry.
//! Reals are written with 9 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::mesh::ClothMesh;
use super::vector::{Vec2, Vec3};
use crate::error::{Error, Result};

pub fn to_obj_string(mesh: &ClothMesh) -> String {
    let mut s = String::with_capacity(64 * mesh.vertex_count() + 32 * mesh.triangles.len());
    if let Some(cat) = mesh.category {
        let _ = writeln!(s, "# category {cat}");
    }
    for (name, idx) in &mesh.keypoints {
        let _ = writeln!(s, "# kp {name} {idx}");
    }
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.8e} {:.8e} {:.8e}", v.x, v.y, v.z);
    }
    for uv in &mesh.uvs {
        let _ = writeln!(s, "vt {:.8e} {:.8e}", uv.x, uv.y);
    }
    for &[a, b, c] in &mesh.triangles {
        let _ = writeln!(s, "f {0}/{0} {1}/{1} {2}/{2}", a + 1, b + 1, c + 1);
    }
    s
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("line {line}"),
        message: message.into(),
    }
}

fn parse_reals<const N: usize>(line: usize, fields: &[&str]) -> Result<[f64; N]> {
    if fields.len() != N {
        return Err(parse_err(line, format!("expected {N} numbers, got {}", fields.len())));
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f
            .parse()
            .map_err(|_| parse_err(line, format!("invalid number `{f}`")))?;
    }
    Ok(out)
}

fn parse_face_index(line: usize, field: &str) -> Result<usize> {
    let head = field.split('/').next().unwrap_or_default();
    let idx: usize = head
        .parse()
        .map_err(|_| parse_err(line, format!("invalid face index `{field}`")))?;
    if idx == 0 {
        return Err(parse_err(line, "face indices are 1-based"));
    }
    Ok(idx - 1)
}

pub fn parse_obj(text: &str) -> Result<ClothMesh> {
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    let mut triangles = Vec::new();
    let mut keypoints = BTreeMap::new();
    let mut category = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["#", "category", name] => category = Some(name.parse().map_err(|e: Error| parse_err(line, e.to_string()))?),
            ["#", "kp", name, idx] => {
                let idx: usize = idx
                    .parse()
                    .map_err(|_| parse_err(line, format!("invalid keypoint index `{idx}`")))?;
                if keypoints.insert(name.to_string(), idx).is_some() {
                    return Err(parse_err(line, format!("duplicate keypoint `{name}`")));
                }
            }
            [c, ..] if c.starts_with('#') => {}
            ["v", rest @ ..] => vertices.push(Vec3::from(parse_reals::<3>(line, rest)?)),
            ["vt", rest @ ..] => uvs.push(Vec2::from(parse_reals::<2>(line, rest)?)),
            ["f", a, b, c] => triangles.push([
                parse_face_index(line, a)?,
                parse_face_index(line, b)?,
                parse_face_index(line, c)?,
            ]),
            ["f", ..] => return Err(parse_err(line, "only triangular faces are supported")),
            [other, ..] => return Err(parse_err(line, format!("unsupported statement `{other}`"))),
        }
    }
    if uvs.is_empty() {
        uvs = vec![Vec2::ZERO; vertices.len()];
    }
    let mesh = ClothMesh {
        vertices,
        triangles,
        uvs,
        keypoints,
        category,
    };
    mesh.validate()
        .map_err(|e| parse_err(0, e.to_string()))?;
    Ok(mesh)
}

pub fn read_obj(path: &Path) -> Result<ClothMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}:{location}", path.display()),
            message,
        },
        other => other,
    })
}
