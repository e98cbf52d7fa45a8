use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Vec2, Vec3};
use crate::seed::splitmix64;

/// Linear RGB in `[0, 1]^3`.
pub type Rgb = Vec3;

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialProcedure {
    UniformColor,
    Tailored,
    RandomTexture,
}

impl MaterialProcedure {
    pub const ALL: [MaterialProcedure; 3] = [
        MaterialProcedure::UniformColor,
        MaterialProcedure::Tailored,
        MaterialProcedure::RandomTexture,
    ];
}

/// Fractal value noise on the UV square, in `[0, 1]`.
#[derive(Debug, Copy, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub octaves: u32,
    /// Lattice cells per UV unit at the first octave.
    pub scale: f64,
    pub seed: u64,
}

impl Noise {
    pub fn value(&self, uv: Vec2) -> f64 {
        let mut sum = 0.0;
        let mut norm = 0.0;
        let mut amp = 1.0;
        let mut freq = self.scale;
        for o in 0..self.octaves.max(1) {
            sum += amp * value_noise(self.seed.wrapping_add(o as u64), uv.x * freq, uv.y * freq);
            norm += amp;
            amp *= 0.5;
            freq *= 2.0;
        }
        sum / norm
    }
}

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix64(seed ^ splitmix64((ix as u64).wrapping_mul(0x9E37_79B9) ^ (iy as u64).rotate_left(32)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (ix, iy) = (fx as i64, fy as i64);
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let (tx, ty) = (smooth(x - fx), smooth(y - fy));
    let a = lattice(seed, ix, iy);
    let b = lattice(seed, ix + 1, iy);
    let c = lattice(seed, ix, iy + 1);
    let d = lattice(seed, ix + 1, iy + 1);
    let top = a + (b - a) * tx;
    let bottom = c + (d - c) * tx;
    top + (bottom - top) * ty
}

#[derive(Debug, Copy, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stripes {
    /// UV units.
    pub period: f64,
    /// Fraction of the period covered by the stripe.
    pub width: f64,
    /// Direction across the stripes, rad.
    pub angle: f64,
    pub color: Rgb,
}

impl Stripes {
    pub fn covers(&self, uv: Vec2) -> bool {
        let s = uv.x * self.angle.cos() + uv.y * self.angle.sin();
        (s / self.period).rem_euclid(1.0) < self.width
    }
}

/// Noise-filled UV rectangle.
#[derive(Debug, Copy, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Logo {
    pub min: Vec2,
    pub max: Vec2,
    pub color: Rgb,
    pub secondary: Rgb,
    pub noise: Noise,
}

impl Logo {
    pub fn contains(&self, uv: Vec2) -> bool {
        uv.x >= self.min.x && uv.x <= self.max.x && uv.y >= self.min.y && uv.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "procedure", rename_all = "snake_case", deny_unknown_fields)]
pub enum Material {
    UniformColor {
        color: Rgb,
    },
    Tailored {
        base: Rgb,
        stripes: Option<Stripes>,
        logos: Vec<Logo>,
    },
    RandomTexture {
        color_a: Rgb,
        color_b: Rgb,
        noise: Noise,
        mix_color: Rgb,
        mix_weight: f64,
    },
}

impl Material {
    pub fn procedure(&self) -> MaterialProcedure {
        match self {
            Material::UniformColor { .. } => MaterialProcedure::UniformColor,
            Material::Tailored { .. } => MaterialProcedure::Tailored,
            Material::RandomTexture { .. } => MaterialProcedure::RandomTexture,
        }
    }

    /// Surface color at `uv`. Later logos are drawn over earlier ones.
    pub fn albedo(&self, uv: Vec2) -> Rgb {
        match self {
            Material::UniformColor { color } => *color,
            Material::Tailored { base, stripes, logos } => {
                if let Some(logo) = logos.iter().rev().find(|l| l.contains(uv)) {
                    return logo.color.lerp(logo.secondary, logo.noise.value(uv));
                }
                match stripes {
                    Some(s) if s.covers(uv) => s.color,
                    _ => *base,
                }
            }
            Material::RandomTexture {
                color_a,
                color_b,
                noise,
                mix_color,
                mix_weight,
            } => color_a.lerp(*color_b, noise.value(uv)).lerp(*mix_color, *mix_weight),
        }
    }

    /// Primary color, used where a single representative color is needed.
    pub fn base_color(&self) -> Rgb {
        match self {
            Material::UniformColor { color } => *color,
            Material::Tailored { base, .. } => *base,
            Material::RandomTexture { color_a, .. } => *color_a,
        }
    }
}

pub fn random_color<R: Rng + ?Sized>(rng: &mut R) -> Rgb {
    Vec3::new(rng.random(), rng.random(), rng.random())
}

fn sample_noise<R: Rng + ?Sized>(rng: &mut R, octaves: (u32, u32), scale: (f64, f64)) -> Noise {
    Noise {
        octaves: rng.random_range(octaves.0..=octaves.1),
        scale: rng.random_range(scale.0..=scale.1),
        seed: rng.random(),
    }
}

pub fn sample_material<R: Rng + ?Sized>(procedure: MaterialProcedure, rng: &mut R) -> Material {
    match procedure {
        MaterialProcedure::UniformColor => Material::UniformColor {
            color: random_color(rng),
        },
        MaterialProcedure::Tailored => {
            let base = random_color(rng);
            let stripes = rng.random_bool(0.6).then(|| Stripes {
                period: rng.random_range(0.02..=0.2),
                width: rng.random_range(0.2..=0.8),
                angle: rng.random_range(0.0..std::f64::consts::PI),
                color: random_color(rng),
            });
            let count = rng.random_range(0..=3);
            let logos = (0..count)
                .map(|_| {
                    let size = Vec2::new(rng.random_range(0.05..=0.3), rng.random_range(0.05..=0.3));
                    let min = Vec2::new(rng.random_range(0.0..=1.0 - size.x), rng.random_range(0.0..=1.0 - size.y));
                    Logo {
                        min,
                        max: min + size,
                        color: random_color(rng),
                        secondary: random_color(rng),
                        noise: sample_noise(rng, (2, 4), (8.0, 32.0)),
                    }
                })
                .collect();
            Material::Tailored { base, stripes, logos }
        }
        MaterialProcedure::RandomTexture => {
            let color_a = random_color(rng);
            let color_b = loop {
                let c = random_color(rng);
                if c.distance(color_a) >= 0.5 {
                    break c;
                }
            };
            Material::RandomTexture {
                color_a,
                color_b,
                noise: sample_noise(rng, (2, 5), (2.0, 20.0)),
                mix_color: random_color(rng),
                mix_weight: rng.random_range(0.0..=0.3),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> impl Iterator<Item = Vec2> {
        (0..64).flat_map(|i| (0..64).map(move |j| Vec2::new(i as f64 / 63.0, j as f64 / 63.0)))
    }

    fn in_unit_cube(c: Rgb) -> bool {
        [c.x, c.y, c.z].iter().all(|v| (0.0..=1.0).contains(v))
    }

    #[test]
    fn uniform_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = sample_material(MaterialProcedure::UniformColor, &mut rng);
        let c = m.albedo(Vec2::ZERO);
        assert!(grid().all(|uv| m.albedo(uv) == c));
    }

    #[test]
    fn stripes_repeat_with_period() {
        let a = Vec3::new(0.9, 0.1, 0.1);
        let b = Vec3::new(0.1, 0.1, 0.9);
        let m = Material::Tailored {
            base: a,
            stripes: Some(Stripes {
                period: 0.1,
                width: 0.5,
                angle: 0.0,
                color: b,
            }),
            logos: vec![],
        };
        for k in 0..100 {
            let u = 0.013 + k as f64 * 0.0071;
            let uv = Vec2::new(u, 0.4);
            let shifted = Vec2::new(u + 0.1, 0.77);
            assert_eq!(m.albedo(uv), m.albedo(shifted));
        }
        assert_eq!(m.albedo(Vec2::new(0.02, 0.0)), b);
        assert_eq!(m.albedo(Vec2::new(0.07, 0.0)), a);
    }

    #[test]
    fn random_texture_varies() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = sample_material(MaterialProcedure::RandomTexture, &mut rng);
            let values: Vec<Rgb> = grid().map(|uv| m.albedo(uv)).collect();
            let n = values.len() as f64;
            let std = |f: fn(&Rgb) -> f64| {
                let mean = values.iter().map(f).sum::<f64>() / n;
                (values.iter().map(|v| (f(v) - mean).powi(2)).sum::<f64>() / n).sqrt()
            };
            let s = std(|c| c.x).max(std(|c| c.y)).max(std(|c| c.z));
            assert!(s > 0.01, "{s}");
        }
    }

    #[test]
    fn albedo_is_pure_and_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in MaterialProcedure::ALL.into_iter().cycle().take(30) {
            let m = sample_material(p, &mut rng);
            for uv in grid().step_by(37) {
                let c = m.albedo(uv);
                assert!(in_unit_cube(c));
                assert_eq!(c, m.albedo(uv));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_material(MaterialProcedure::Tailored, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_material(MaterialProcedure::Tailored, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn json_is_tagged() {
        let m = Material::UniformColor {
            color: Vec3::new(0.5, 0.25, 1.0),
        };
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"procedure":"uniform_color","color":[0.5,0.25,1.0]}"#);
        assert_eq!(serde_json::from_str::<Material>(&s).unwrap(), m);
    }
}
