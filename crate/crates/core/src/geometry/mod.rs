//! Discrete closed hypersurfaces: closed polygons in the plane (n = 1) and
//! closed oriented triangle meshes in space (n = 2).
//!
//! A [`Hypersurface`] is immutable once built. Construction validates the
//! connectivity and populates every per-vertex quantity the rest of the crate
//! consumes: outward unit normal, mean curvature, principal curvatures and the
//! lumped area weight. The discrete Laplace–Beltrami operator is stored as
//! symmetric edge weights so that
//!
//! ```text
//! (Δf)_v = (1 / dμ_v) Σ_{e = (v, j)} w_e (f_j − f_v)
//! ```
//!
//! Sign convention: a round sphere (or circle) with outward normal has
//! `H = n / r > 0`, and the position Laplacian satisfies `Δx = −H ν`.

mod curvature;
pub mod io;
mod ops;
mod topology;
mod validate;

use std::sync::Arc;

use nalgebra::Vector3;
use thiserror::Error;

pub use ops::{laplace_beltrami, tangential_gradient, tangential_gradient_norm};
pub use topology::Topology;
pub use validate::{validate, ValidationReport, Violation};

pub type Vec3 = Vector3<f64>;

/// Triangles whose area falls below this fraction of the mean triangle area
/// are rejected.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-14;

/// Bound on `|H − Σ λ_i|` at every vertex.
///
/// Principal curvatures take their trace from the cotangent mean curvature
/// and only their anisotropic part from the quadric fit, so the sum matches
/// `H` up to rounding.
pub const PRINCIPAL_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-manifold connectivity at vertex {vertex}: {detail}")]
    NonManifold { vertex: usize, detail: String },
    #[error("open boundary: edge ({0}, {1}) has a single incident cell")]
    OpenBoundary(usize, usize),
    #[error("inconsistent orientation across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),
    #[error("degenerate element {element}: {detail}")]
    DegenerateElement { element: usize, detail: String },
    #[error("invalid mesh data: {0}")]
    InvalidData(String),
}

/// Cell list of a closed hypersurface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cells {
    /// Oriented edges `[from, to]` of one or more closed loops (n = 1).
    Edges(Vec<[usize; 2]>),
    /// Counter-clockwise (seen from outside) triangles (n = 2).
    Triangles(Vec<[usize; 3]>),
}

impl Cells {
    pub fn dim(&self) -> usize {
        match self {
            Cells::Edges(_) => 1,
            Cells::Triangles(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Cells::Edges(e) => e.len(),
            Cells::Triangles(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Edge loop `0 → 1 → … → n−1 → 0`.
    pub fn polygon(n: usize) -> Self {
        Cells::Edges((0..n).map(|i| [i, (i + 1) % n]).collect())
    }
}

/// One snapshot of a discrete closed hypersurface with its geometry.
#[derive(Debug, Clone)]
pub struct Hypersurface {
    positions: Vec<Vec3>,
    topology: Arc<Topology>,
    normals: Vec<Vec3>,
    mean_curvature: Vec<f64>,
    principal: Vec<f64>,
    area: Vec<f64>,
    edge_weights: Vec<f64>,
    fit_residual: Vec<f64>,
}

impl Hypersurface {
    /// Validates the connectivity and computes the geometry.
    pub fn new(positions: Vec<Vec3>, cells: Cells) -> Result<Self, GeometryError> {
        validate(&positions, &cells).into_result()?;
        let topology = Arc::new(Topology::build(cells, positions.len())?);
        Self::from_topology(positions, topology)
    }

    /// Convenience constructor for planar curves given as `(x, y)` pairs
    /// traversed counter-clockwise.
    pub fn closed_curve(points: &[[f64; 2]]) -> Result<Self, GeometryError> {
        let positions = points.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect();
        Self::new(positions, Cells::polygon(points.len()))
    }

    /// Rebuilds geometry for new vertex positions on the same connectivity.
    ///
    /// Only element degeneracy is re-checked; the topology is shared.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self, GeometryError> {
        if positions.len() != self.positions.len() {
            return Err(GeometryError::InvalidData(format!(
                "expected {} positions, got {}",
                self.positions.len(),
                positions.len()
            )));
        }
        Self::from_topology(positions, Arc::clone(&self.topology))
    }

    fn from_topology(positions: Vec<Vec3>, topology: Arc<Topology>) -> Result<Self, GeometryError> {
        if topology.dim() == 1 && positions.iter().any(|p| p.z != 0.0) {
            return Err(GeometryError::InvalidData(
                "curve vertices must lie in the plane z = 0".into(),
            ));
        }
        if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::InvalidData("non-finite vertex position".into()));
        }
        let g = curvature::compute(&positions, &topology)?;
        Ok(Self {
            positions,
            topology,
            normals: g.normals,
            mean_curvature: g.mean_curvature,
            principal: g.principal,
            area: g.area,
            edge_weights: g.edge_weights,
            fit_residual: g.fit_residual,
        })
    }

    /// Intrinsic dimension n (1 for curves, 2 for surfaces).
    pub fn dim(&self) -> usize {
        self.topology.dim()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn cells(&self) -> &Cells {
        self.topology.cells()
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    /// True when both snapshots share the same connectivity arrays.
    pub fn same_connectivity(&self, other: &Hypersurface) -> bool {
        Arc::ptr_eq(&self.topology, &other.topology) || self.cells() == other.cells()
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn normal(&self, v: usize) -> Vec3 {
        self.normals[v]
    }

    pub fn mean_curvature(&self) -> &[f64] {
        &self.mean_curvature
    }

    /// Principal curvatures at `v`, ascending.
    pub fn principal(&self, v: usize) -> &[f64] {
        let n = self.dim();
        &self.principal[v * n..(v + 1) * n]
    }

    pub fn min_principal(&self, v: usize) -> f64 {
        self.principal(v)[0]
    }

    /// `|A|² = Σ λ_i²` per vertex.
    pub fn second_fundamental_form_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|v| self.principal(v).iter().map(|l| l * l).sum())
            .collect()
    }

    /// Lumped area weight of every vertex: mixed Voronoi cells for surfaces,
    /// half the adjacent edge lengths for curves.
    pub fn area_weights(&self) -> &[f64] {
        &self.area
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }

    /// Residual `|tr(S_fit) − H|` of the per-vertex shape-operator fit
    /// (identically zero for curves).
    pub fn shape_fit_residual(&self) -> &[f64] {
        &self.fit_residual
    }

    pub(crate) fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    /// Exact length (n = 1) or area (n = 2) of the polygonal hypersurface,
    /// summed element by element.
    pub fn polyhedral_measure(&self) -> f64 {
        match self.cells() {
            Cells::Edges(edges) => edges
                .iter()
                .map(|e| (self.positions[e[1]] - self.positions[e[0]]).norm())
                .sum(),
            Cells::Triangles(tris) => tris
                .iter()
                .map(|t| triangle_area(&self.positions[t[0]], &self.positions[t[1]], &self.positions[t[2]]))
                .sum(),
        }
    }

    /// Shortest edge length.
    pub fn min_edge_length(&self) -> f64 {
        self.topology
            .edges()
            .iter()
            .map(|e| (self.positions[e[1]] - self.positions[e[0]]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_mean_curvature(&self) -> f64 {
        self.mean_curvature.iter().fold(0.0, |m, h| m.max(h.abs()))
    }

    /// Vertex centroid.
    pub fn centroid(&self) -> Vec3 {
        let sum = self.positions.iter().fold(Vec3::zeros(), |acc, p| acc + p);
        sum / self.len() as f64
    }

    /// Mean and coefficient of variation of vertex distances to the centroid.
    pub fn radius_stats(&self) -> (f64, f64) {
        let c = self.centroid();
        let radii: Vec<f64> = self.positions.iter().map(|p| (p - c).norm()).collect();
        let n = radii.len() as f64;
        let mean = radii.iter().sum::<f64>() / n;
        let var = radii.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        (mean, var.sqrt() / mean)
    }

    /// Scales every length by `factor` and recomputes the geometry.
    pub fn scaled(&self, factor: f64) -> Result<Self, GeometryError> {
        self.with_positions(self.positions.iter().map(|p| p * factor).collect())
    }

    /// Dilation `x ↦ q x` applied to the stored samples without re-estimation:
    /// curvatures divide by `q`, area weights multiply by `qⁿ`, and the
    /// Laplacian picks up `q⁻²`.
    pub fn dilated(&self, q: f64) -> Self {
        let n = self.dim() as i32;
        let qn = q.powi(n);
        let wq = q.powi(n - 2);
        Self {
            positions: self.positions.iter().map(|p| p * q).collect(),
            topology: Arc::clone(&self.topology),
            normals: self.normals.clone(),
            mean_curvature: self.mean_curvature.iter().map(|h| h / q).collect(),
            principal: self.principal.iter().map(|l| l / q).collect(),
            area: self.area.iter().map(|a| a * qn).collect(),
            edge_weights: self.edge_weights.iter().map(|w| w * wq).collect(),
            fit_residual: self.fit_residual.iter().map(|r| r / q).collect(),
        }
    }
}

pub(crate) fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}
