//! Deterministic mesh generators.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Cells, GeometryError, Hypersurface, Vec3};

/// Fewest vertices accepted for a curve.
pub const MIN_CURVE_VERTICES: usize = 8;
/// Fewest vertices accepted for a surface.
pub const MIN_SURFACE_VERTICES: usize = 42;

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("resolution too low: {got} vertices, need at least {min}")]
    ResolutionTooLow { got: usize, min: usize },
    #[error("invalid shape parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Shape description as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec {
    Circle {
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Sphere {
        #[serde(default = "one")]
        radius: f64,
        subdivision: usize,
    },
    Torus {
        major: f64,
        minor: f64,
    },
    Dumbbell {
        neck: f64,
        handle: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ShapeSpec {
    /// Physical validity of the parameters.
    pub fn check(&self) -> Result<(), ShapeError> {
        let bad = |m: &str| Err(ShapeError::InvalidParameters(m.to_string()));
        match *self {
            ShapeSpec::Circle { radius } | ShapeSpec::Sphere { radius, .. } if !(radius > 0.0) => {
                bad("radius must be positive")
            }
            ShapeSpec::Ellipse { a, b } if !(b > 0.0 && b <= a) => bad("ellipse needs 0 < b <= a"),
            ShapeSpec::Torus { major, minor } if !(minor > 0.0 && minor < major) => {
                bad("torus needs 0 < minor < major")
            }
            ShapeSpec::Dumbbell { neck, handle } if !(neck > 0.0 && neck < handle) => {
                bad("dumbbell needs 0 < neck < handle")
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ShapeSpec::Circle { .. } | ShapeSpec::Ellipse { .. } => 1,
            _ => 2,
        }
    }

    /// Builds the mesh. `resolution` is the vertex count for curves and the
    /// number of segments around the long direction for tori and dumbbells;
    /// spheres use their subdivision level instead.
    pub fn generate(&self, resolution: usize) -> Result<Hypersurface, ShapeError> {
        self.check()?;
        let mesh = match *self {
            ShapeSpec::Circle { radius } => {
                min_count(resolution, MIN_CURVE_VERTICES)?;
                circle(resolution, radius)?
            }
            ShapeSpec::Ellipse { a, b } => {
                min_count(resolution, MIN_CURVE_VERTICES)?;
                ellipse(resolution, a, b)?
            }
            ShapeSpec::Sphere { radius, subdivision } => icosphere(subdivision, radius)?,
            ShapeSpec::Torus { major, minor } => {
                torus(major, minor, resolution, (resolution / 2).max(3))?
            }
            ShapeSpec::Dumbbell { neck, handle } => {
                dumbbell(neck, handle, resolution, (resolution / 2).max(3))?
            }
        };
        if mesh.dim() == 2 {
            min_count(mesh.len(), MIN_SURFACE_VERTICES)?;
        }
        Ok(mesh)
    }
}

fn min_count(got: usize, min: usize) -> Result<(), ShapeError> {
    if got < min {
        return Err(ShapeError::ResolutionTooLow { got, min });
    }
    Ok(())
}

/// Regular `n`-gon inscribed in the circle of radius `radius`.
pub fn circle(n: usize, radius: f64) -> Result<Hypersurface, GeometryError> {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / n as f64;
            [radius * th.cos(), radius * th.sin()]
        })
        .collect();
    Hypersurface::closed_curve(&pts)
}

/// Ellipse sampled uniformly in the angle parameter.
pub fn ellipse(n: usize, a: f64, b: f64) -> Result<Hypersurface, GeometryError> {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / n as f64;
            [a * th.cos(), b * th.sin()]
        })
        .collect();
    Hypersurface::closed_curve(&pts)
}

/// Raw icosphere data: unit-sphere vertices and outward-oriented triangles.
pub fn icosphere_data(level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut verts);
            let bc = midpoint(f[1], f[2], &mut verts);
            let ca = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Subdivided icosahedron projected onto the sphere of radius `radius`.
pub fn icosphere(level: usize, radius: f64) -> Result<Hypersurface, GeometryError> {
    let (verts, faces) = icosphere_data(level);
    Hypersurface::new(verts.into_iter().map(|v| v * radius).collect(), Cells::Triangles(faces))
}

/// Tensor-grid torus around the z axis with `nu` segments along the long
/// circle and `nv` around the tube.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> Result<Hypersurface, GeometryError> {
    let mut pos = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let rho = major + minor * v.cos();
            pos.push(Vec3::new(rho * u.cos(), rho * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut tris = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    Hypersurface::new(pos, Cells::Triangles(tris))
}

/// Geometry of the dumbbell profile used by [`dumbbell`].
#[derive(Debug, Clone, Copy)]
pub struct DumbbellProfile {
    pub neck: f64,
    pub handle: f64,
    /// Distance of the lobe centers from the neck plane.
    pub center: f64,
    /// Smoothing length of `|z|` at the neck.
    pub smoothing: f64,
}

impl DumbbellProfile {
    pub fn new(neck: f64, handle: f64) -> Self {
        let center = (handle * handle - neck * neck).sqrt();
        Self {
            neck,
            handle,
            center,
            smoothing: 2.0 * center,
        }
    }

    fn soft_abs(&self, z: f64) -> f64 {
        (z * z + self.smoothing * self.smoothing).sqrt() - self.smoothing
    }

    /// Half length of the body along the axis.
    pub fn half_length(&self) -> f64 {
        let g = self.center + self.handle;
        ((g + self.smoothing).powi(2) - self.smoothing * self.smoothing).sqrt()
    }

    /// Radius of the body at height `z`.
    pub fn radius(&self, z: f64) -> f64 {
        let d = self.soft_abs(z) - self.center;
        (self.handle * self.handle - d * d).max(0.0).sqrt()
    }

    /// Points with `|z|` below this value form the neck region.
    pub fn neck_half_width(&self) -> f64 {
        0.25 * self.half_length()
    }
}

/// Closed surface of revolution about the z axis with two lobes of radius
/// `handle` joined by a smooth neck of radius `neck`.
pub fn dumbbell(neck: f64, handle: f64, segments: usize, rings: usize) -> Result<Hypersurface, GeometryError> {
    let prof = DumbbellProfile::new(neck, handle);
    let zmax = prof.half_length();
    let rings = rings.max(3);
    let mut pos = vec![Vec3::new(0.0, 0.0, zmax)];
    for r in 1..rings {
        let z = zmax * (PI * r as f64 / rings as f64).cos();
        let rho = prof.radius(z);
        for s in 0..segments {
            let phi = 2.0 * PI * s as f64 / segments as f64;
            pos.push(Vec3::new(rho * phi.cos(), rho * phi.sin(), z));
        }
    }
    pos.push(Vec3::new(0.0, 0.0, -zmax));
    let south = pos.len() - 1;
    let id = |r: usize, s: usize| 1 + (r - 1) * segments + (s % segments);
    let mut tris = Vec::new();
    for s in 0..segments {
        tris.push([0, id(1, s), id(1, s + 1)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b, c, d) = (id(r, s), id(r + 1, s), id(r + 1, s + 1), id(r, s + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    for s in 0..segments {
        tris.push([south, id(rings - 1, s + 1), id(rings - 1, s)]);
    }
    Hypersurface::new(pos, Cells::Triangles(tris))
}

/// Random star-shaped perturbation of an icosphere: the radius along each
/// direction is one plus a sum of smooth bumps.
pub fn star_shaped(level: usize, seed: u64, amplitude: f64) -> Result<Hypersurface, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(Vec3, f64, f64)> = (0..4)
        .map(|_| {
            let d = random_unit(&mut rng);
            let a = amplitude * rng.gen_range(-0.6..1.0);
            let w = rng.gen_range(0.5..1.2);
            (d, a, w)
        })
        .collect();
    let (verts, faces) = icosphere_data(level);
    let pos = verts
        .into_iter()
        .map(|u| {
            let r = 1.0
                + bumps
                    .iter()
                    .map(|(d, a, w)| a * (-(u - d).norm_squared() / (w * w)).exp())
                    .sum::<f64>();
            u * r
        })
        .collect();
    Hypersurface::new(pos, Cells::Triangles(faces))
}

pub(crate) fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}
