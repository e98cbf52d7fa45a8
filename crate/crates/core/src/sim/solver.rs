//! Position-based dynamics integrator.

use std::sync::Arc;

use super::constraints::{build_constraints, Constraint, ConstraintKind};
use super::params::SimParams;
use crate::error::{Error, Result};
use crate::geometry::{ClothMesh, Vec3};

/// Particle state of one cloth simulation.
#[derive(Debug, Clone)]
pub struct SimState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// 1/kg; zero marks a kinematic (pinned) particle.
    pub inverse_masses: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-particle floor elevation above the plane.
    pub lift: Vec<f64>,
    /// Source topology (triangles, UVs, keypoints).
    pub mesh: Arc<ClothMesh>,
    /// Frames advanced so far.
    pub steps_taken: usize,
    /// Whether the last settle loop reached the energy threshold.
    pub settled: bool,
}

impl SimState {
    /// Particles at the mesh vertices, at rest, with masses from
    /// `params.areal_density` and constraint stiffness from `params`.
    pub fn new(mesh: &ClothMesh, params: &SimParams) -> SimState {
        let n = mesh.vertex_count();
        let mut mass = vec![0.0; n];
        for t in 0..mesh.triangles.len() {
            let share = params.areal_density * mesh.triangle_area(t) / 3.0;
            for &v in &mesh.triangles[t] {
                mass[v] += share;
            }
        }
        let inverse_masses = mass.iter().map(|&m| if m > 0.0 { 1.0 / m } else { 0.0 }).collect();
        let mut constraints = build_constraints(mesh);
        for c in &mut constraints {
            c.stiffness = match c.kind {
                ConstraintKind::Stretch => params.stretch_stiffness,
                ConstraintKind::Bend => params.bend_stiffness,
            };
        }
        SimState {
            positions: mesh.vertices.clone(),
            velocities: vec![Vec3::ZERO; n],
            inverse_masses,
            constraints,
            lift: vec![0.0; n],
            mesh: Arc::new(mesh.clone()),
            steps_taken: 0,
            settled: false,
        }
    }

    pub fn particle_count(&self) -> usize {
        self.positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.velocities.len() != n || self.inverse_masses.len() != n || self.lift.len() != n {
            return Err(Error::invalid("state arrays differ in length"));
        }
        if self.positions.iter().chain(&self.velocities).any(|v| !v.is_finite()) {
            return Err(Error::invalid("state contains non-finite values"));
        }
        for c in &self.constraints {
            if c.i >= n || c.j >= n || c.i == c.j || !(c.rest_length > 0.0) {
                return Err(Error::invalid(format!("invalid constraint {c:?}")));
            }
        }
        Ok(())
    }

    /// Total kinetic energy of the free particles, J.
    pub fn kinetic_energy(&self) -> f64 {
        self.velocities
            .iter()
            .zip(&self.inverse_masses)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, &w)| 0.5 * v.length_squared() / w)
            .sum()
    }

    /// Copy of the source mesh with the current positions.
    pub fn to_mesh(&self) -> ClothMesh {
        self.mesh.with_positions(self.positions.clone())
    }

    /// Mean relative violation `|len - rest| / rest` over stretch constraints.
    pub fn mean_stretch_residual(&self) -> f64 {
        let (sum, count) = self
            .constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Stretch)
            .fold((0.0, 0usize), |(s, n), c| {
                let len = self.positions[c.i].distance(self.positions[c.j]);
                (s + (len - c.rest_length).abs() / c.rest_length, n + 1)
            });
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Advances one frame in place.
    pub fn step(&mut self, params: &SimParams) -> Result<()> {
        let iterations = params.solver_iterations.max(1);
        let dts = params.substep_dt();
        let packed = pack(&self.constraints, &self.inverse_masses, iterations);
        let n = self.positions.len();
        let mut pred = vec![Vec3::ZERO; n];
        let mut depth = vec![0.0; n];
        let damping = 1.0 - params.drag_coeff * dts;
        for _ in 0..params.substeps {
            for i in 0..n {
                let x = self.positions[i];
                if self.inverse_masses[i] > 0.0 {
                    self.velocities[i] = self.velocities[i] * damping + params.gravity * dts;
                }
                pred[i] = x + self.velocities[i] * dts;
                depth[i] = 0.0;
            }
            for _ in 0..iterations {
                project(&packed, &mut pred);
                for i in 0..n {
                    if self.inverse_masses[i] == 0.0 {
                        continue;
                    }
                    let floor = params.plane_height + self.lift[i];
                    if pred[i].z < floor {
                        depth[i] += floor - pred[i].z;
                        pred[i].z = floor;
                    }
                }
            }
            for i in 0..n {
                let x = self.positions[i];
                let mut p = pred[i];
                if self.inverse_masses[i] > 0.0 && depth[i] > 0.0 {
                    let dx = p.x - x.x;
                    let dy = p.y - x.y;
                    let slide = dx.hypot(dy);
                    let limit = params.friction_coeff * depth[i];
                    if slide <= limit {
                        p.x = x.x;
                        p.y = x.y;
                    } else {
                        let keep = 1.0 - limit / slide;
                        p.x = x.x + dx * keep;
                        p.y = x.y + dy * keep;
                    }
                }
                let mut v = (p - x) / dts;
                if depth[i] > 0.0 && v.z > 0.0 {
                    v.z = 0.0;
                }
                if !(p.is_finite() && v.is_finite()) {
                    return Err(Error::SimulationDiverged {
                        step: self.steps_taken,
                    });
                }
                self.positions[i] = p;
                self.velocities[i] = v;
            }
        }
        self.steps_taken += 1;
        Ok(())
    }
}

/// Packed constraint `(i, j, rest, step_i, step_j)`: the per-iteration
/// stiffness times each endpoint's share of the inverse mass.
type Packed = (u32, u32, f64, f64, f64);

/// Per-iteration stiffness `1 - (1 - k)^(1/iterations)`, so that the
/// compound effect of all iterations equals `k`.
pub fn iteration_stiffness(k: f64, iterations: u32) -> f64 {
    1.0 - (1.0 - k).powf(1.0 / iterations as f64)
}

fn pack(constraints: &[Constraint], w: &[f64], iterations: u32) -> Vec<Packed> {
    let mut memo = (f64::NAN, 0.0);
    constraints
        .iter()
        .filter(|c| w[c.i] + w[c.j] > 0.0)
        .map(|c| {
            if c.stiffness != memo.0 {
                memo = (c.stiffness, iteration_stiffness(c.stiffness, iterations));
            }
            let wsum = w[c.i] + w[c.j];
            (
                c.i as u32,
                c.j as u32,
                c.rest_length,
                memo.1 * w[c.i] / wsum,
                memo.1 * w[c.j] / wsum,
            )
        })
        .collect()
}

/// One Gauss–Seidel sweep over all constraints.
#[inline]
fn project(packed: &[Packed], p: &mut [Vec3]) {
    for &(i, j, rest, ki, kj) in packed {
        let (i, j) = (i as usize, j as usize);
        let d = p[i] - p[j];
        let len = d.length();
        if len == 0.0 {
            continue;
        }
        let c = (len - rest) / len;
        p[i] -= d * (ki * c);
        p[j] += d * (kj * c);
    }
}

/// Functional form of [`SimState::step`].
pub fn step(state: &SimState, params: &SimParams) -> Result<SimState> {
    let mut next = state.clone();
    next.step(params)?;
    Ok(next)
}

/// Energy threshold and step budget for settling.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settle {
    /// J
    pub max_kinetic_energy: f64,
    pub max_steps: usize,
}

impl Default for Settle {
    fn default() -> Self {
        Settle {
            max_kinetic_energy: 1e-5,
            max_steps: 600,
        }
    }
}

/// Steps until the kinetic energy falls below the threshold (checked after
/// every step, at least one step) or the budget runs out. Sets and returns
/// `state.settled`.
pub fn settle(state: &mut SimState, params: &SimParams, settle: &Settle) -> Result<bool> {
    state.settled = false;
    for _ in 0..settle.max_steps.max(1) {
        state.step(params)?;
        if state.kinetic_energy() < settle.max_kinetic_energy {
            state.settled = true;
            break;
        }
    }
    Ok(state.settled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::triangulate;
    use crate::geometry::vector::Vec2;
    use std::collections::BTreeMap;

    fn particles(positions: Vec<Vec3>, constraints: Vec<Constraint>) -> SimState {
        let n = positions.len();
        SimState {
            velocities: vec![Vec3::ZERO; n],
            inverse_masses: vec![1.0; n],
            lift: vec![0.0; n],
            mesh: Arc::new(ClothMesh {
                vertices: positions.clone(),
                triangles: vec![],
                uvs: vec![Vec2::ZERO; n],
                keypoints: BTreeMap::new(),
                category: None,
            }),
            positions,
            constraints,
            steps_taken: 0,
            settled: false,
        }
    }

    #[test]
    fn free_fall_closed_form() {
        let mut s = particles(vec![Vec3::ZERO], vec![]);
        let params = SimParams {
            dt: 0.1,
            substeps: 1,
            gravity: Vec3::new(0.0, 0.0, -9.8),
            drag_coeff: 0.0,
            plane_height: -100.0,
            ..SimParams::default()
        };
        s.step(&params).unwrap();
        assert!((s.velocities[0].z + 0.98).abs() < 1e-12);
        assert!((s.positions[0].z + 0.098).abs() < 1e-12);
    }

    #[test]
    fn two_particle_projection() {
        let c = Constraint {
            kind: ConstraintKind::Stretch,
            i: 0,
            j: 1,
            rest_length: 1.0,
            stiffness: 1.0,
        };
        let mut s = particles(vec![Vec3::new(-1.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0)], vec![c]);
        let params = SimParams {
            substeps: 1,
            solver_iterations: 1,
            gravity: Vec3::ZERO,
            drag_coeff: 0.0,
            ..SimParams::default()
        };
        s.step(&params).unwrap();
        assert!((s.positions[0].distance(s.positions[1]) - 1.0).abs() < 1e-12);
        let mid = (s.positions[0] + s.positions[1]) / 2.0;
        assert!(mid.distance(Vec3::new(0.0, 0.0, 1.0)) < 1e-12);
    }

    #[test]
    fn iteration_stiffness_compounds_to_k() {
        for &k in &[0.1, 0.5, 0.9, 1.0] {
            let kp = iteration_stiffness(k, 20);
            assert!(((1.0 - (1.0 - kp).powi(20)) - k).abs() < 1e-12);
        }
    }

    fn flat_square(size: f64, edge: f64) -> ClothMesh {
        let sq = [
            Vec2::new(0.0, 0.0),
            Vec2::new(size, 0.0),
            Vec2::new(size, size),
            Vec2::new(0.0, size),
        ];
        triangulate(&sq, edge).unwrap()
    }

    #[test]
    fn flat_cloth_at_rest_is_stationary() {
        let mesh = flat_square(0.2, 0.02);
        let params = SimParams::default();
        let mut s = SimState::new(&mesh, &params);
        let start = s.positions.clone();
        let mut prev = start.clone();
        for _ in 0..100 {
            s.step(&params).unwrap();
            let per_step = s.positions.iter().zip(&prev).map(|(a, b)| a.distance(*b)).fold(0.0, f64::max);
            assert!(per_step < 1e-6);
            prev = s.positions.clone();
        }
        let total = s.positions.iter().zip(&start).map(|(a, b)| a.distance(*b)).fold(0.0, f64::max);
        assert!(total < 1e-4);
    }

    #[test]
    fn masses_sum_to_density_times_area() {
        let mesh = flat_square(0.3, 0.05);
        let params = SimParams::default();
        let s = SimState::new(&mesh, &params);
        let total: f64 = s.inverse_masses.iter().map(|w| 1.0 / w).sum();
        assert!((total - params.areal_density * 0.09).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        let mut s = particles(vec![Vec3::ZERO], vec![]);
        s.velocities[0] = Vec3::new(f64::INFINITY, 0.0, 0.0);
        let params = SimParams {
            plane_height: -1.0,
            ..SimParams::default()
        };
        assert!(matches!(s.step(&params), Err(Error::SimulationDiverged { step: 0 })));
    }

    #[test]
    fn settle_stops_when_still() {
        let mesh = flat_square(0.2, 0.05);
        let params = SimParams::default();
        let mut s = SimState::new(&mesh, &params);
        assert!(settle(&mut s, &params, &Settle::default()).unwrap());
        assert_eq!(s.steps_taken, 1);
    }
}
