use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::range::Range;

/// Physical and numerical parameters of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// m/s^2
    pub gravity: Vec3,
    /// Frame duration in seconds.
    pub dt: f64,
    pub substeps: u32,
    pub solver_iterations: u32,
    pub stretch_stiffness: f64,
    pub bend_stiffness: f64,
    pub friction_coeff: f64,
    /// Linear velocity damping, 1/s.
    pub drag_coeff: f64,
    pub plane_height: f64,
    /// Band above the floor in which a particle counts as touching it.
    pub contact_offset: f64,
    /// Extra floor height for folded-over particles resting on another layer.
    pub layer_gap: f64,
    /// kg/m^2, distributed to vertices by incident triangle area.
    pub areal_density: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            gravity: Vec3::new(0.0, 0.0, -9.81),
            dt: 1.0 / 60.0,
            substeps: 4,
            solver_iterations: 20,
            stretch_stiffness: 1.0,
            bend_stiffness: 0.5,
            friction_coeff: 0.5,
            drag_coeff: 1.0,
            plane_height: 0.0,
            contact_offset: 0.001,
            layer_gap: 0.002,
            areal_density: 0.2,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(format!("/{field}"), msg));
        if !self.gravity.is_finite() {
            return bad("gravity", "must be finite");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be > 0");
        }
        if self.substeps < 1 {
            return bad("substeps", "must be >= 1");
        }
        if self.solver_iterations < 1 {
            return bad("solver_iterations", "must be >= 1");
        }
        for (name, k) in [
            ("stretch_stiffness", self.stretch_stiffness),
            ("bend_stiffness", self.bend_stiffness),
        ] {
            if !(k > 0.0 && k <= 1.0) {
                return bad(name, "must be in (0, 1]");
            }
        }
        for (name, v) in [
            ("friction_coeff", self.friction_coeff),
            ("drag_coeff", self.drag_coeff),
            ("contact_offset", self.contact_offset),
            ("layer_gap", self.layer_gap),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, "must be >= 0");
            }
        }
        if self.drag_coeff * self.dt / self.substeps as f64 >= 1.0 {
            return bad("drag_coeff", "drag * substep duration must be < 1");
        }
        if !self.plane_height.is_finite() {
            return bad("plane_height", "must be finite");
        }
        if !(self.areal_density > 0.0 && self.areal_density.is_finite()) {
            return bad("areal_density", "must be > 0");
        }
        Ok(())
    }

    pub fn substep_dt(&self) -> f64 {
        self.dt / self.substeps as f64
    }
}

/// Ranges for the randomized physics parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsRanges {
    pub stretch_stiffness: Range,
    pub bend_stiffness: Range,
    pub friction_coeff: Range,
    pub drag_coeff: Range,
}

impl Default for PhysicsRanges {
    fn default() -> Self {
        PhysicsRanges {
            stretch_stiffness: Range::new(0.8, 1.0),
            bend_stiffness: Range::new(0.05, 0.6),
            friction_coeff: Range::new(0.3, 0.8),
            drag_coeff: Range::new(0.5, 2.0),
        }
    }
}

impl PhysicsRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("stretch_stiffness", &self.stretch_stiffness),
            ("bend_stiffness", &self.bend_stiffness),
        ] {
            if !r.is_valid() || r.min <= 0.0 || r.max > 1.0 {
                return Err(Error::config(format!("/{name}"), "range must lie in (0, 1]"));
            }
        }
        for (name, r) in [("friction_coeff", &self.friction_coeff), ("drag_coeff", &self.drag_coeff)] {
            if !r.is_valid() || r.min < 0.0 {
                return Err(Error::config(format!("/{name}"), "range must be valid and >= 0"));
            }
        }
        Ok(())
    }

    /// Randomizes the physics fields of `base`, keeping everything else.
    pub fn sample<R: Rng + ?Sized>(&self, base: &SimParams, rng: &mut R) -> SimParams {
        SimParams {
            stretch_stiffness: self.stretch_stiffness.sample(rng),
            bend_stiffness: self.bend_stiffness.sample(rng),
            friction_coeff: self.friction_coeff.sample(rng),
            drag_coeff: self.drag_coeff.sample(rng),
            ..base.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn defaults_are_valid() {
        SimParams::default().validate().unwrap();
        PhysicsRanges::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_stiffness() {
        let p = SimParams {
            bend_stiffness: 0.0,
            ..SimParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::Config { pointer, .. }) if pointer == "/bend_stiffness"));
    }

    #[test]
    fn sampled_params_in_range() {
        let ranges = PhysicsRanges::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = ranges.sample(&SimParams::default(), &mut rng);
            assert!(ranges.stretch_stiffness.contains(p.stretch_stiffness));
            assert!(ranges.drag_coeff.contains(p.drag_coeff));
            p.validate().unwrap();
        }
    }
}
