use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Ray, Vec2, Vec3};
use crate::range::Range;
use std::f64::consts::FRAC_PI_2;

/// Pinhole intrinsics. Pixel `(i, j)` covers `[i, i + 1) x [j, j + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics {
    /// px
    pub focal_length: f64,
    /// px
    pub principal_point: Vec2,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    /// Principal point at the image centre.
    pub fn centered(focal_length: f64, width: u32, height: u32) -> Intrinsics {
        Intrinsics {
            focal_length,
            principal_point: Vec2::new(width as f64 / 2.0, height as f64 / 2.0),
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("resolution must be positive"));
        }
        if !(self.focal_length > 0.0 && self.focal_length.is_finite()) || !self.principal_point.is_finite() {
            return Err(Error::invalid("focal length must be positive and finite"));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    /// Approximate image-up direction; need not be orthogonal to the view.
    pub up: Vec3,
    pub intrinsics: Intrinsics,
}

/// Result of [`Camera::project`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub x: f64,
    pub y: f64,
    /// Distance along the optical axis; `<= 0` means behind the camera.
    pub depth: f64,
}

impl Camera {
    pub fn new(position: Vec3, look_at: Vec3, up: Vec3, intrinsics: Intrinsics) -> Result<Camera> {
        let cam = Camera {
            position,
            look_at,
            up,
            intrinsics,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        let fwd = self.look_at - self.position;
        if !(fwd.length() > 0.0) || !self.position.is_finite() || !self.look_at.is_finite() {
            return Err(Error::invalid("camera position must differ from look_at"));
        }
        if fwd.cross(self.up).try_normalized().is_none() {
            return Err(Error::invalid("up hint is parallel to the view direction"));
        }
        Ok(())
    }

    /// Orthonormal `(right, down, forward)` camera frame.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let forward = (self.look_at - self.position).normalized();
        let right = forward.cross(self.up).normalized();
        let down = forward.cross(right);
        (right, down, forward)
    }

    pub fn project(&self, p: Vec3) -> Projection {
        let (right, down, forward) = self.basis();
        let d = p - self.position;
        let depth = d.dot(forward);
        let k = &self.intrinsics;
        Projection {
            x: k.principal_point.x + k.focal_length * d.dot(right) / depth,
            y: k.principal_point.y + k.focal_length * d.dot(down) / depth,
            depth,
        }
    }

    /// Inverse of [`Camera::project`].
    pub fn unproject(&self, x: f64, y: f64, depth: f64) -> Vec3 {
        let (right, down, forward) = self.basis();
        let k = &self.intrinsics;
        let a = (x - k.principal_point.x) / k.focal_length;
        let b = (y - k.principal_point.y) / k.focal_length;
        self.position + (forward + right * a + down * b) * depth
    }

    /// Ray through the continuous image point `(x, y)`.
    pub fn ray(&self, x: f64, y: f64) -> Ray {
        Ray {
            origin: self.position,
            direction: (self.unproject(x, y, 1.0) - self.position).normalized(),
        }
    }

    /// Ray through the centre of pixel `(i, j)`.
    pub fn pixel_ray(&self, i: u32, j: u32) -> Ray {
        self.ray(i as f64 + 0.5, j as f64 + 0.5)
    }
}

/// Spherical-cap camera placement around a target point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// m
    pub distance: Range,
    /// Above the horizontal, rad.
    pub elevation: Range,
    /// rad
    pub azimuth: Range,
    /// px
    pub focal_length: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            distance: Range::new(0.5, 1.0),
            elevation: Range::new(std::f64::consts::FRAC_PI_6, FRAC_PI_2),
            azimuth: Range::new(0.0, std::f64::consts::TAU),
            focal_length: 300.0,
            width: 512,
            height: 256,
        }
    }
}

impl CameraConfig {
    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics::centered(self.focal_length, self.width, self.height)
    }

    pub fn validate(&self) -> Result<()> {
        let fixed = Range::fixed(1.0);
        let flat = Range::fixed(FRAC_PI_2);
        for (pointer, d, e, a) in [
            ("/distance", &self.distance, &flat, &fixed),
            ("/elevation", &fixed, &self.elevation, &fixed),
            ("/azimuth", &fixed, &flat, &self.azimuth),
        ] {
            check_cap(d, e, a).map_err(|e| Error::config(pointer, e.to_string()))?;
        }
        self.intrinsics()
            .validate()
            .map_err(|e| Error::config("/focal_length", e.to_string()))
    }
}

fn check_cap(distance: &Range, elevation: &Range, azimuth: &Range) -> Result<()> {
    if !distance.is_valid() || distance.min <= 0.0 {
        return Err(Error::invalid("distance range must be valid and positive"));
    }
    if !elevation.is_valid() || elevation.min <= 0.0 || elevation.max > FRAC_PI_2 {
        return Err(Error::invalid("elevation range must lie in (0, pi/2]"));
    }
    if !azimuth.is_valid() {
        return Err(Error::invalid("azimuth range must be valid"));
    }
    Ok(())
}

/// Camera on the spherical cap around `center`, looking at it.
pub fn sample_camera<R: Rng + ?Sized>(
    center: Vec3,
    distance: &Range,
    elevation: &Range,
    azimuth: &Range,
    intrinsics: Intrinsics,
    rng: &mut R,
) -> Result<Camera> {
    check_cap(distance, elevation, azimuth)?;
    let d = distance.sample(rng);
    let el = elevation.sample(rng);
    let az = azimuth.sample(rng);
    let (se, ce) = el.sin_cos();
    let (sa, ca) = az.sin_cos();
    let position = center + Vec3::new(ce * ca, ce * sa, se) * d;
    // Direction of increasing elevation: orthogonal to the view even when
    // looking straight down.
    let up = Vec3::new(-se * ca, -se * sa, ce);
    Camera::new(position, center, up, intrinsics)
}
