//! Drop, fold and flip procedures built on the PBD solver.

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{PhysicsRanges, SimParams};
use super::solver::{settle, SimState, Settle};
use crate::error::{Error, Result};
use crate::geometry::mesh::{bounds, centroid, vertex_normals};
use crate::geometry::{ClothMesh, Mat3, Vec3};
use crate::range::Range;

/// Fraction of fold grasps taken from the boundary.
const BOUNDARY_GRASP_PROBABILITY: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformConfig {
    /// Return the flat mesh untouched.
    pub undeformed: bool,
    /// Height of the lowest vertex above the plane at release, m.
    pub drop_height: Range,
    /// Tilt of the initial orientation about a random horizontal axis, rad.
    /// Yaw is uniform.
    pub tilt: Range,
    pub fold_probability: f64,
    /// m
    pub fold_radius: Range,
    /// rad
    pub fold_angle: Range,
    /// Grasp speed along the fold arc, m/s.
    pub fold_speed: f64,
    pub flip_probability: f64,
    /// Clearance of the lowest vertex above the plane before a flip drop, m.
    pub flip_lift: f64,
    pub settle: Settle,
    pub physics: PhysicsRanges,
}

impl Default for DeformConfig {
    fn default() -> Self {
        DeformConfig {
            undeformed: false,
            drop_height: Range::new(0.02, 0.1),
            tilt: Range::new(0.0, 0.35),
            fold_probability: 0.5,
            fold_radius: Range::new(0.03, 0.12),
            fold_angle: Range::new(1.5, PI),
            fold_speed: 0.5,
            flip_probability: 0.3,
            flip_lift: 0.05,
            settle: Settle::default(),
            physics: PhysicsRanges::default(),
        }
    }
}

impl DeformConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("fold_probability", self.fold_probability),
            ("flip_probability", self.flip_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("/{name}"), "probability must be in [0, 1]"));
            }
        }
        for (name, r, lo) in [
            ("drop_height", &self.drop_height, 0.0),
            ("tilt", &self.tilt, 0.0),
            ("fold_radius", &self.fold_radius, 0.0),
            ("fold_angle", &self.fold_angle, 0.0),
        ] {
            if !r.is_valid() || r.min < lo {
                return Err(Error::config(format!("/{name}"), "range must be valid and >= 0"));
            }
        }
        if !(self.fold_speed > 0.0 && self.fold_speed.is_finite()) {
            return Err(Error::config("/fold_speed", "must be > 0"));
        }
        if !(self.flip_lift >= 0.0 && self.flip_lift.is_finite()) {
            return Err(Error::config("/flip_lift", "must be >= 0"));
        }
        if !(self.settle.max_kinetic_energy >= 0.0) {
            return Err(Error::config("/settle/max_kinetic_energy", "must be >= 0"));
        }
        self.physics.validate().map_err(|e| match e {
            Error::Config { pointer, message } => Error::config(format!("/physics{pointer}"), message),
            e => e,
        })
    }
}

/// Rotates `mesh` about its centroid and lifts it so that its lowest vertex
/// sits `drop_height` above the plane.
pub fn place_for_drop(mesh: &ClothMesh, orientation: &Mat3, drop_height: f64, params: &SimParams) -> Vec<Vec3> {
    let c = mesh.centroid();
    let mut out: Vec<Vec3> = mesh.vertices.iter().map(|&p| orientation.mul_vec(p - c)).collect();
    let lo = bounds(&out).0.z;
    let shift = Vec3::new(c.x, c.y, params.plane_height + drop_height - lo);
    for p in &mut out {
        *p += shift;
    }
    out
}

/// Drops `mesh` after rotating it by `orientation`, with a height drawn from
/// `cfg.drop_height`, and settles it on the plane.
pub fn drop<R: Rng + ?Sized>(
    mesh: &ClothMesh,
    orientation: &Mat3,
    cfg: &DeformConfig,
    params: &SimParams,
    rng: &mut R,
) -> Result<SimState> {
    let height = cfg.drop_height.sample(rng);
    drop_from(mesh, orientation, height, &cfg.settle, params)
}

/// [`drop`] with an explicit release height.
pub fn drop_from(
    mesh: &ClothMesh,
    orientation: &Mat3,
    drop_height: f64,
    settle_cfg: &Settle,
    params: &SimParams,
) -> Result<SimState> {
    params.validate()?;
    mesh.validate()?;
    // Simulate in a frame centred on the cloth so the result does not depend
    // on where the cloth sits in the plane.
    let c = mesh.centroid();
    let offset = Vec3::new(c.x, c.y, 0.0);
    let mut state = SimState::new(mesh, params);
    state.positions = place_for_drop(mesh, orientation, drop_height, params)
        .into_iter()
        .map(|p| p - offset)
        .collect();
    settle(&mut state, params, settle_cfg)?;
    for p in &mut state.positions {
        *p += offset;
    }
    Ok(state)
}

/// Circular grasp trajectory in the vertical plane through the grasp point
/// and the cloth centroid.
#[derive(Debug, Clone, Copy)]
pub struct FoldArc {
    pub start: Vec3,
    /// Horizontal unit vector from the grasp towards the centroid.
    pub direction: Vec3,
    pub radius: f64,
}

impl FoldArc {
    pub fn new(start: Vec3, towards: Vec3, radius: f64) -> FoldArc {
        let d = Vec3::new(towards.x - start.x, towards.y - start.y, 0.0);
        let direction = d.try_normalized().unwrap_or(Vec3::X);
        FoldArc {
            start,
            direction,
            radius,
        }
    }

    /// Position after sweeping `phi` radians.
    pub fn point(&self, phi: f64) -> Vec3 {
        let (s, c) = phi.sin_cos();
        self.start + self.direction * (self.radius * (1.0 - c)) + Vec3::Z * (self.radius * s)
    }

    /// Frames needed to sweep `angle` at `speed`.
    pub fn frames(&self, angle: f64, speed: f64, dt: f64) -> usize {
        (self.radius * angle / (speed * dt)).ceil() as usize
    }
}

/// Grasps `grasp_vertex`, carries it along a [`FoldArc`] of `arc_radius`
/// and `arc_angle`, releases it and settles.
pub fn fold(
    state: &SimState,
    grasp_vertex: usize,
    arc_radius: f64,
    arc_angle: f64,
    cfg: &DeformConfig,
    params: &SimParams,
) -> Result<SimState> {
    fold_traced(state, grasp_vertex, arc_radius, arc_angle, cfg, params, &mut |_, _| {})
}

/// [`fold`] reporting `(expected, actual)` grasp positions after every
/// trajectory frame.
pub fn fold_traced(
    state: &SimState,
    grasp_vertex: usize,
    arc_radius: f64,
    arc_angle: f64,
    cfg: &DeformConfig,
    params: &SimParams,
    trace: &mut dyn FnMut(Vec3, Vec3),
) -> Result<SimState> {
    if grasp_vertex >= state.particle_count() {
        return Err(Error::invalid(format!("grasp vertex {grasp_vertex} out of range")));
    }
    if !(arc_radius >= 0.0 && arc_angle >= 0.0 && arc_radius.is_finite() && arc_angle.is_finite()) {
        return Err(Error::invalid("fold radius and angle must be finite and >= 0"));
    }
    params.validate()?;
    let mut s = state.clone();
    let arc = FoldArc::new(s.positions[grasp_vertex], centroid(&s.positions), arc_radius);
    let frames = if arc_angle > 0.0 && arc_radius > 0.0 {
        arc.frames(arc_angle, cfg.fold_speed, params.dt)
    } else {
        0
    };
    let saved_w = s.inverse_masses[grasp_vertex];
    let before = vertex_normals(&s.positions, &s.mesh.triangles);
    let base_lift = s.lift.clone();
    s.inverse_masses[grasp_vertex] = 0.0;
    for k in 1..=frames {
        let target = arc.point(arc_angle * k as f64 / frames as f64);
        s.velocities[grasp_vertex] = (target - s.positions[grasp_vertex]) / params.dt;
        s.step(params)?;
        trace(target, s.positions[grasp_vertex]);
        let now = vertex_normals(&s.positions, &s.mesh.triangles);
        for i in 0..s.lift.len() {
            s.lift[i] = if before[i].z * now[i].z < 0.0 {
                params.layer_gap
            } else {
                base_lift[i]
            };
        }
    }
    s.inverse_masses[grasp_vertex] = saved_w;
    s.velocities[grasp_vertex] = Vec3::ZERO;
    settle(&mut s, params, &cfg.settle)?;
    Ok(s)
}

/// Rigid part of [`flip`]: rotates the cloth by π about the horizontal axis
/// at angle `axis_yaw` through its centroid and lifts it `clearance` above
/// the plane. Velocities are zeroed and layer lifts swapped.
pub fn flip_rigid(state: &SimState, axis_yaw: f64, clearance: f64, params: &SimParams) -> SimState {
    let mut s = state.clone();
    let c = centroid(&s.positions);
    let axis = Vec3::new(axis_yaw.cos(), axis_yaw.sin(), 0.0);
    let rot = Mat3::from_axis_angle(axis, PI);
    for p in &mut s.positions {
        *p = rot.mul_vec(*p - c);
    }
    let lo = bounds(&s.positions).0.z;
    let shift = Vec3::new(c.x, c.y, params.plane_height + clearance - lo);
    for p in &mut s.positions {
        *p += shift;
    }
    s.velocities.iter_mut().for_each(|v| *v = Vec3::ZERO);
    s.lift = swapped_layers(&s, params.layer_gap);
    s
}

/// After turning over, the former top layer is underneath: its particles
/// drop to the plane and whatever now lies above them gets the layer gap.
fn swapped_layers(s: &SimState, gap: f64) -> Vec<f64> {
    let cell = s.mesh.max_edge_length().max(1e-6);
    let key = |p: Vec3| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let covered: HashSet<(i64, i64)> = s
        .positions
        .iter()
        .zip(&s.lift)
        .filter(|(_, &l)| l > 0.0)
        .map(|(&p, _)| key(p))
        .collect();
    s.positions
        .iter()
        .zip(&s.lift)
        .map(|(&p, &l)| {
            if l > 0.0 || !covered.contains(&key(p)) {
                0.0
            } else {
                gap
            }
        })
        .collect()
}

/// Lifts the cloth, turns it over about a horizontal axis through its
/// centroid and drops it again.
pub fn flip(state: &SimState, axis_yaw: f64, cfg: &DeformConfig, params: &SimParams) -> Result<SimState> {
    params.validate()?;
    let mut s = flip_rigid(state, axis_yaw, cfg.flip_lift, params);
    settle(&mut s, params, &cfg.settle)?;
    Ok(s)
}

/// Random orientation: uniform yaw, then a tilt from `cfg.tilt` about a
/// uniformly chosen horizontal axis.
pub fn sample_orientation<R: Rng + ?Sized>(cfg: &DeformConfig, rng: &mut R) -> Mat3 {
    let yaw = rng.random_range(0.0..TAU);
    let axis_angle = rng.random_range(0.0..TAU);
    let tilt = cfg.tilt.sample(rng);
    let axis = Vec3::new(axis_angle.cos(), axis_angle.sin(), 0.0);
    Mat3::from_axis_angle(axis, tilt).mul_mat(&Mat3::rotation_z(yaw))
}

/// Full deformation: physics sampled from `cfg.physics` over `base`, a drop,
/// then a fold and a flip with their configured probabilities. Returns the
/// deformed mesh and the parameters used.
pub fn deform_procedure<R: Rng + ?Sized>(
    mesh: &ClothMesh,
    cfg: &DeformConfig,
    base: &SimParams,
    rng: &mut R,
) -> Result<(ClothMesh, SimParams)> {
    cfg.validate()?;
    base.validate()?;
    mesh.validate()?;
    if cfg.undeformed {
        return Ok((mesh.clone(), base.clone()));
    }
    // Every draw happens unconditionally so that toggling one stage does not
    // shift the random stream of the others.
    let params = cfg.physics.sample(base, rng);
    let orientation = sample_orientation(cfg, rng);
    let height = cfg.drop_height.sample(rng);
    let do_fold = rng.random_bool(cfg.fold_probability);
    let from_boundary = rng.random_bool(BOUNDARY_GRASP_PROBABILITY);
    let grasp_pick: f64 = rng.random();
    let radius = cfg.fold_radius.sample(rng);
    let angle = cfg.fold_angle.sample(rng);
    let do_flip = rng.random_bool(cfg.flip_probability);
    let flip_yaw = rng.random_range(0.0..TAU);

    let c = mesh.centroid();
    let offset = Vec3::new(c.x, c.y, 0.0);
    let mut local = mesh.clone();
    local.translate(-offset);
    let mut state = drop_from(&local, &orientation, height, &cfg.settle, &params)?;
    if do_fold {
        let candidates = if from_boundary {
            boundary_vertices(mesh)
        } else {
            (0..mesh.vertex_count()).collect()
        };
        let grasp = candidates[((grasp_pick * candidates.len() as f64) as usize).min(candidates.len() - 1)];
        state = fold(&state, grasp, radius, angle, cfg, &params)?;
    }
    if do_flip {
        state = flip(&state, flip_yaw, cfg, &params)?;
    }
    let positions = state.positions.iter().map(|&p| p + offset).collect();
    Ok((mesh.with_positions(positions), params))
}

fn boundary_vertices(mesh: &ClothMesh) -> Vec<usize> {
    let mut v: Vec<usize> = mesh.boundary_edges().into_iter().map(|(a, _)| a).collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::triangulate;
    use crate::geometry::vector::Vec2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn towel(w: f64, h: f64, edge: f64) -> ClothMesh {
        let b = [Vec2::new(0.0, 0.0), Vec2::new(w, 0.0), Vec2::new(w, h), Vec2::new(0.0, h)];
        triangulate(&b, edge).unwrap()
    }

    fn max_plane_dev(s: &SimState, params: &SimParams) -> f64 {
        s.positions
            .iter()
            .map(|p| (p.z - params.plane_height).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn flat_drop_lands_flat() {
        let mesh = towel(0.3, 0.2, 0.02);
        let params = SimParams::default();
        let s = drop_from(&mesh, &Mat3::IDENTITY, 0.05, &Settle::default(), &params).unwrap();
        assert!(s.settled);
        assert!(max_plane_dev(&s, &params) <= 0.01);
        assert!(s.positions.iter().all(|p| p.z >= params.plane_height - 1e-3));
        let (lo, hi) = bounds(&s.positions);
        assert!(((hi.x - lo.x) - 0.3).abs() <= 0.05 * 0.3);
        assert!(((hi.y - lo.y) - 0.2).abs() <= 0.05 * 0.2);
    }

    #[test]
    fn upside_down_drop_faces_down() {
        let mesh = towel(0.3, 0.2, 0.03);
        let params = SimParams::default();
        let rot = Mat3::from_axis_angle(Vec3::X, PI);
        let s = drop_from(&mesh, &rot, 0.05, &Settle::default(), &params).unwrap();
        let n = vertex_normals(&s.positions, &mesh.triangles);
        let mean = n.iter().map(|n| n.z).sum::<f64>() / n.len() as f64;
        assert!(mean < 0.0);
    }

    #[test]
    fn weightless_drop_is_equilibrium() {
        let mesh = towel(0.3, 0.2, 0.03);
        let params = SimParams {
            gravity: Vec3::ZERO,
            ..SimParams::default()
        };
        let rot = Mat3::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.3);
        let placed = place_for_drop(&mesh, &rot, 0.05, &params);
        let s = drop_from(&mesh, &rot, 0.05, &Settle::default(), &params).unwrap();
        assert_eq!(s.steps_taken, 1);
        for (a, b) in s.positions.iter().zip(&placed) {
            assert!(a.distance(*b) <= 1e-12);
        }
    }

    #[test]
    fn zero_angle_fold_keeps_state() {
        let mesh = towel(0.3, 0.2, 0.03);
        let params = SimParams::default();
        let cfg = DeformConfig::default();
        let s0 = drop_from(&mesh, &Mat3::IDENTITY, 0.02, &cfg.settle, &params).unwrap();
        let s1 = fold(&s0, 0, 0.05, 0.0, &cfg, &params).unwrap();
        for (a, b) in s1.positions.iter().zip(&s0.positions) {
            assert!(a.distance(*b) < 1e-4);
        }
    }

    #[test]
    fn corner_fold_makes_two_layers() {
        let (w, h) = (0.4, 0.3);
        let mesh = towel(w, h, 0.02);
        let params = SimParams::default();
        let cfg = DeformConfig::default();
        let s0 = SimState::new(&mesh, &params);
        let corner = 0;
        let start = s0.positions[corner];
        let centre = centroid(&s0.positions);
        let mut max_dev: f64 = 0.0;
        let s1 = fold_traced(&s0, corner, w / 4.0, PI, &cfg, &params, &mut |want, got| {
            max_dev = max_dev.max(want.distance(got));
        })
        .unwrap();
        assert!(max_dev < 1e-9);
        let end = s1.positions[corner];
        assert!(end.xy().distance(centre.xy()) < start.xy().distance(centre.xy()));
        let top = s1.positions.iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert!(top > 1.5 * params.contact_offset);
        assert!(s1.positions.iter().all(|p| p.z >= params.plane_height - 1e-3));
    }

    #[test]
    fn flip_rigid_phase() {
        let mesh = towel(0.3, 0.2, 0.03);
        let params = SimParams::default();
        let s0 = SimState::new(&mesh, &params);
        let s1 = flip_rigid(&s0, 0.7, 0.05, &params);
        for c in &s0.constraints {
            let d0 = s0.positions[c.i].distance(s0.positions[c.j]);
            let d1 = s1.positions[c.i].distance(s1.positions[c.j]);
            assert!((d0 - d1).abs() <= 1e-12);
        }
        let n = vertex_normals(&s1.positions, &mesh.triangles);
        assert!(n.iter().map(|n| n.z).sum::<f64>() < 0.0);
        let lo = bounds(&s1.positions).0.z;
        assert!((lo - 0.05).abs() < 1e-12);
    }

    #[test]
    fn flat_flip_settles_flat() {
        let mesh = towel(0.3, 0.2, 0.02);
        let params = SimParams::default();
        let s0 = SimState::new(&mesh, &params);
        let s1 = flip(&s0, 0.0, &DeformConfig::default(), &params).unwrap();
        assert!(max_plane_dev(&s1, &params) <= 0.01);
    }

    #[test]
    fn undeformed_returns_input() {
        let mesh = towel(0.3, 0.2, 0.03);
        let cfg = DeformConfig {
            undeformed: true,
            ..DeformConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (out, _) = deform_procedure(&mesh, &cfg, &SimParams::default(), &mut rng).unwrap();
        assert_eq!(out, mesh);
    }

    #[test]
    fn pure_drop_keeps_lengths() {
        let mesh = towel(0.35, 0.25, 0.02);
        let cfg = DeformConfig {
            fold_probability: 0.0,
            flip_probability: 0.0,
            ..DeformConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (out, params) = deform_procedure(&mesh, &cfg, &SimParams::default(), &mut rng).unwrap();
        let state = SimState {
            positions: out.vertices.clone(),
            ..SimState::new(&mesh, &params)
        };
        assert!(state.mean_stretch_residual() < 0.02);
    }

    #[test]
    fn same_seed_same_mesh() {
        let mesh = towel(0.3, 0.2, 0.03);
        let cfg = DeformConfig {
            fold_probability: 1.0,
            flip_probability: 1.0,
            ..DeformConfig::default()
        };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            deform_procedure(&mesh, &cfg, &SimParams::default(), &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn config_validation_points_at_field() {
        let cfg = DeformConfig {
            flip_probability: 1.5,
            ..DeformConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { pointer, .. }) if pointer == "/flip_probability"));
    }
}
