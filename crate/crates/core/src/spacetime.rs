//! The spacetime domain `S = M × [0, T)` of a discrete flow: trajectories,
//! parabolic cylinders `D_k`, cutoff functions `η_k`, and `Lᵖ` norms.
//!
//! Spacetime integrals use the left-endpoint rule
//!
//! ```text
//! ∫∫ |v|ᵖ dμ dt ≈ Σ_j Δt_j Σ_v |v_{v,j}|ᵖ dμ_{v,j}
//! ```
//!
//! so the last snapshot carries no weight. Cylinders are stated at unit
//! scale and assume a normalized trajectory whose time span covers `[0, 1]`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::flow::Termination;
use crate::geometry::io::{read_mesh, to_text, MeshIoError};
use crate::geometry::{laplace_beltrami, GeometryError, Hypersurface, Vec3};

/// Per-snapshot, per-vertex scalar field on a trajectory.
pub type SpacetimeField = Vec<Vec<f64>>;

/// Slope bound of the smoothstep profiles: `|φ′|, |ψ′| ≤ C_PROF / ρ_k²`.
pub const C_PROF: f64 = 6.0;

/// Quadrature rule identifier recorded in every [`NormReport`].
pub const QUADRATURE_RULE: &str = "left-endpoint-lumped";

const TIME_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpacetimeError {
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("exponent must be at least 1, got {0}")]
    InvalidExponent(f64),
    #[error("field shape mismatch: {0}")]
    FieldShape(String),
    #[error("snapshot {0} is the last one; no forward difference")]
    LastSnapshot(usize),
    #[error("cutoff level must be at least 1")]
    CutoffLevel,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    MeshIo(#[from] MeshIoError),
    #[error("trajectory index: {0}")]
    Index(String),
}

/// Vertex-corresponded sequence of snapshots with strictly increasing times.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    snapshots: Vec<Hypersurface>,
    times: Vec<f64>,
    termination: Termination,
}

impl FlowTrajectory {
    pub fn new(
        snapshots: Vec<Hypersurface>,
        times: Vec<f64>,
        termination: Termination,
    ) -> Result<Self, SpacetimeError> {
        if snapshots.is_empty() || snapshots.len() != times.len() {
            return Err(SpacetimeError::InvalidTrajectory(format!(
                "{} snapshots with {} times",
                snapshots.len(),
                times.len()
            )));
        }
        if let Some(w) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(SpacetimeError::InvalidTrajectory(format!(
                "times not strictly increasing at index {}",
                w + 1
            )));
        }
        if snapshots.iter().any(|s| !s.same_connectivity(&snapshots[0])) {
            return Err(SpacetimeError::InvalidTrajectory("connectivity changes between snapshots".into()));
        }
        Ok(Self::from_parts(snapshots, times, termination))
    }

    pub(crate) fn from_parts(snapshots: Vec<Hypersurface>, times: Vec<f64>, termination: Termination) -> Self {
        Self {
            snapshots,
            times,
            termination,
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.snapshots[0].dim()
    }

    pub fn num_vertices(&self) -> usize {
        self.snapshots[0].len()
    }

    pub fn snapshots(&self) -> &[Hypersurface] {
        &self.snapshots
    }

    pub fn snapshot(&self, j: usize) -> &Hypersurface {
        &self.snapshots[j]
    }

    pub fn last(&self) -> &Hypersurface {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, j: usize) -> f64 {
        self.times[j]
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// `Δt_j = t_{j+1} − t_j`, one per interval.
    pub fn interval_weights(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// Evaluates `f` on every snapshot.
    pub fn field<F>(&self, mut f: F) -> SpacetimeField
    where
        F: FnMut(usize, &Hypersurface) -> Vec<f64>,
    {
        self.snapshots.iter().enumerate().map(|(j, s)| f(j, s)).collect()
    }

    /// Mean curvature samples of every snapshot.
    pub fn mean_curvature_field(&self) -> SpacetimeField {
        self.field(|_, s| s.mean_curvature().to_vec())
    }

    /// Constant field.
    pub fn constant_field(&self, c: f64) -> SpacetimeField {
        self.field(|_, s| vec![c; s.len()])
    }

    /// Index of the snapshot whose time is closest to `t` (earlier on ties).
    pub fn nearest_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (j, &tj) in self.times.iter().enumerate() {
            if (tj - t).abs() < (self.times[best] - t).abs() {
                best = j;
            }
        }
        best
    }

    /// Contiguous sub-trajectory of snapshots `lo..=hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> FlowTrajectory {
        FlowTrajectory::from_parts(
            self.snapshots[lo..=hi].to_vec(),
            self.times[lo..=hi].to_vec(),
            self.termination,
        )
    }

    /// Applies `t ↦ a + b t` to the times and `x ↦ q x` to the snapshots,
    /// transforming the stored samples arithmetically.
    pub fn parabolic_transform(&self, q: f64, time_map: impl Fn(f64) -> f64) -> FlowTrajectory {
        FlowTrajectory::from_parts(
            self.snapshots.iter().map(|s| s.dilated(q)).collect(),
            self.times.iter().map(|&t| time_map(t)).collect(),
            self.termination,
        )
    }

    fn check_field(&self, field: &[Vec<f64>]) -> Result<(), SpacetimeError> {
        if field.len() != self.len() {
            return Err(SpacetimeError::FieldShape(format!(
                "{} slices for {} snapshots",
                field.len(),
                self.len()
            )));
        }
        if let Some(j) = field.iter().position(|f| f.len() != self.num_vertices()) {
            return Err(SpacetimeError::FieldShape(format!("slice {j} has {} values", field[j].len())));
        }
        Ok(())
    }
}

/// Which parabolic cylinder of §5 a region denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylinderLevel {
    /// `D_k`; `D_0` is `D`.
    Level(usize),
    /// `D′ = ∪_{1/12 ≤ t ≤ 1} B(x₀, 1/2) ∩ M_t`.
    Inner,
}

/// `D_k = ∪_{t_k ≤ t ≤ 1} (B(x₀, r_k) ∩ M_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicCylinder {
    pub center: Vec3,
    pub level: CylinderLevel,
}

/// `r_k = 1/2 + 2^{−(k+1)}`.
pub fn cylinder_radius(k: usize) -> f64 {
    0.5 + 0.5f64.powi(k as i32 + 1)
}

/// `t_k = (1 − 4^{−k}) / 12`.
pub fn cylinder_start(k: usize) -> f64 {
    (1.0 - 0.25f64.powi(k as i32)) / 12.0
}

/// `ρ_k = r_{k−1} − r_k = 2^{−(k+1)}`.
pub fn cylinder_gap(k: usize) -> f64 {
    0.5f64.powi(k as i32 + 1)
}

impl ParabolicCylinder {
    pub fn level(center: Vec3, k: usize) -> Self {
        Self {
            center,
            level: CylinderLevel::Level(k),
        }
    }

    pub fn inner(center: Vec3) -> Self {
        Self {
            center,
            level: CylinderLevel::Inner,
        }
    }

    pub fn radius(&self) -> f64 {
        match self.level {
            CylinderLevel::Level(k) => cylinder_radius(k),
            CylinderLevel::Inner => 0.5,
        }
    }

    pub fn start_time(&self) -> f64 {
        match self.level {
            CylinderLevel::Level(k) => cylinder_start(k),
            CylinderLevel::Inner => 1.0 / 12.0,
        }
    }

    pub fn end_time(&self) -> f64 {
        1.0
    }

    pub fn label(&self) -> String {
        match self.level {
            CylinderLevel::Level(0) => "D".into(),
            CylinderLevel::Level(k) => format!("D{k}"),
            CylinderLevel::Inner => "D'".into(),
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self.level {
            CylinderLevel::Level(k) => Some(k),
            CylinderLevel::Inner => None,
        }
    }

    fn time_in(&self, t: f64) -> bool {
        t >= self.start_time() && t <= self.end_time() + TIME_TOL
    }

    pub fn contains(&self, x: &Vec3, t: f64) -> bool {
        self.time_in(t) && (x - self.center).norm() <= self.radius()
    }
}

/// Per-vertex membership of a slice at time `t`.
pub fn cylinder_membership(cyl: &ParabolicCylinder, mesh: &Hypersurface, t: f64) -> Vec<bool> {
    if !cyl.time_in(t) {
        return vec![false; mesh.len()];
    }
    mesh.positions()
        .iter()
        .map(|x| (x - cyl.center).norm() <= cyl.radius())
        .collect()
}

/// `3u² − 2u³` clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// `η_k(t, x) = φ(t) ψ(|x − x₀|²)` with smoothstep transitions on
/// `[t_{k−1}, t_k]` and `[r_k², r_{k−1}²]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFunction {
    pub center: Vec3,
    pub k: usize,
}

impl CutoffFunction {
    pub fn new(center: Vec3, k: usize) -> Result<Self, SpacetimeError> {
        if k == 0 {
            return Err(SpacetimeError::CutoffLevel);
        }
        Ok(Self { center, k })
    }

    pub fn rho(&self) -> f64 {
        cylinder_gap(self.k)
    }

    pub fn temporal(&self, t: f64) -> f64 {
        let (a, b) = (cylinder_start(self.k - 1), cylinder_start(self.k));
        smoothstep((t - a) / (b - a))
    }

    pub fn spatial(&self, s: f64) -> f64 {
        let inner = cylinder_radius(self.k).powi(2);
        let outer = cylinder_radius(self.k - 1).powi(2);
        1.0 - smoothstep((s - inner) / (outer - inner))
    }

    /// Largest `|φ′|` of the temporal profile.
    pub fn temporal_slope(&self) -> f64 {
        1.5 / (cylinder_start(self.k) - cylinder_start(self.k - 1))
    }

    /// Largest `|ψ′|` of the spatial profile.
    pub fn spatial_slope(&self) -> f64 {
        1.5 / (cylinder_radius(self.k - 1).powi(2) - cylinder_radius(self.k).powi(2))
    }

    pub fn eval(&self, t: f64, x: &Vec3) -> f64 {
        if t > 1.0 + TIME_TOL {
            return 0.0;
        }
        self.temporal(t) * self.spatial((x - self.center).norm_squared())
    }

    /// `ψ′(s)`, zero outside the transition band.
    pub fn spatial_derivative(&self, s: f64) -> f64 {
        let inner = cylinder_radius(self.k).powi(2);
        let outer = cylinder_radius(self.k - 1).powi(2);
        let u = (s - inner) / (outer - inner);
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        -6.0 * u * (1.0 - u) / (outer - inner)
    }

    /// Tangential gradient `φ(t) ψ′(s) · 2 P(x − x₀)` where `P` removes the
    /// component along `normal`.
    pub fn tangential_gradient(&self, t: f64, x: &Vec3, normal: &Vec3) -> Vec3 {
        if t > 1.0 + TIME_TOL {
            return Vec3::zeros();
        }
        let d = x - self.center;
        let tangential = d - normal * normal.dot(&d);
        tangential * (2.0 * self.temporal(t) * self.spatial_derivative(d.norm_squared()))
    }

    /// `η_k` sampled on every vertex of every snapshot.
    pub fn sample(&self, traj: &FlowTrajectory) -> SpacetimeField {
        traj.field(|j, s| s.positions().iter().map(|x| self.eval(traj.time(j), x)).collect())
    }
}

pub fn cutoff_eval(cut: &CutoffFunction, t: f64, x: &Vec3) -> f64 {
    cut.eval(t, x)
}

/// `(∂t − Δ) f` at snapshot `j`: forward difference along tracked vertices
/// minus the slice Laplacian.
pub fn heat_operator(traj: &FlowTrajectory, field: &[Vec<f64>], j: usize) -> Result<Vec<f64>, SpacetimeError> {
    traj.check_field(field)?;
    if j + 1 >= traj.len() {
        return Err(SpacetimeError::LastSnapshot(j));
    }
    let dt = traj.time(j + 1) - traj.time(j);
    let lap = laplace_beltrami(traj.snapshot(j), &field[j])?;
    Ok(field[j]
        .iter()
        .zip(&field[j + 1])
        .zip(lap)
        .map(|((a, b), l)| (b - a) / dt - l)
        .collect())
}

/// `(∂t − Δ) η_k` at snapshot `j`.
pub fn cutoff_heat_operator(
    cut: &CutoffFunction,
    traj: &FlowTrajectory,
    j: usize,
) -> Result<Vec<f64>, SpacetimeError> {
    if j + 1 >= traj.len() {
        return Err(SpacetimeError::LastSnapshot(j));
    }
    let eta = cut.sample(traj);
    heat_operator(traj, &eta, j)
}

/// Result of a norm evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub p: f64,
    /// `S` for the whole trajectory or the cylinder label.
    pub region: String,
    pub k: Option<usize>,
    pub value: f64,
    /// Number of vertex-time samples with nonzero weight.
    pub samples: usize,
    pub rule: &'static str,
}

impl NormReport {
    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }
}

/// `∫∫ |v|ᵖ dμ dt` over the region, before taking the root. Returns the
/// integral and the sample count.
pub fn spacetime_integral(
    traj: &FlowTrajectory,
    field: &[Vec<f64>],
    p: f64,
    region: Option<&ParabolicCylinder>,
) -> Result<(f64, usize), SpacetimeError> {
    traj.check_field(field)?;
    let mut total = 0.0;
    let mut samples = 0;
    for j in 0..traj.len() - 1 {
        let dt = traj.time(j + 1) - traj.time(j);
        let s = traj.snapshot(j);
        let mask = region.map(|c| cylinder_membership(c, s, traj.time(j)));
        let mut slice = 0.0;
        for (v, (f, a)) in field[j].iter().zip(s.area_weights()).enumerate() {
            if mask.as_ref().is_some_and(|m| !m[v]) {
                continue;
            }
            slice += f.abs().powf(p) * a;
            samples += 1;
        }
        total += dt * slice;
    }
    Ok((total, samples))
}

/// `‖v‖_{Lᵖ}` over the whole trajectory or a cylinder.
pub fn spacetime_norm(
    traj: &FlowTrajectory,
    field: &[Vec<f64>],
    p: f64,
    region: Option<&ParabolicCylinder>,
) -> Result<NormReport, SpacetimeError> {
    if !(p >= 1.0) {
        return Err(SpacetimeError::InvalidExponent(p));
    }
    let (integral, samples) = spacetime_integral(traj, field, p, region)?;
    Ok(NormReport {
        p,
        region: region.map_or_else(|| "S".to_string(), |c| c.label()),
        k: region.and_then(|c| c.k()),
        value: if samples == 0 { 0.0 } else { integral.powf(1.0 / p) },
        samples,
        rule: QUADRATURE_RULE,
    })
}

/// `∫₀^{t_end} ∫ |v|ᵖ dμ dt` with the last contributing interval truncated at
/// `t_end`.
pub fn integral_until(traj: &FlowTrajectory, field: &[Vec<f64>], p: f64, t_end: f64) -> Result<f64, SpacetimeError> {
    traj.check_field(field)?;
    let mut total = 0.0;
    for j in 0..traj.len() - 1 {
        let t0 = traj.time(j);
        if t0 >= t_end {
            break;
        }
        let dt = traj.time(j + 1).min(t_end) - t0;
        let s = traj.snapshot(j);
        let slice: f64 = field[j]
            .iter()
            .zip(s.area_weights())
            .map(|(f, a)| f.abs().powf(p) * a)
            .sum();
        total += dt * slice;
    }
    Ok(total)
}

/// Largest value of `field` over the samples inside the region, including
/// the last snapshot. `None` when the region is empty.
pub fn region_sup(
    traj: &FlowTrajectory,
    field: &[Vec<f64>],
    region: &ParabolicCylinder,
) -> Result<Option<f64>, SpacetimeError> {
    traj.check_field(field)?;
    let mut best: Option<f64> = None;
    for j in 0..traj.len() {
        let mask = cylinder_membership(region, traj.snapshot(j), traj.time(j));
        for (f, m) in field[j].iter().zip(mask) {
            if m {
                best = Some(best.map_or(*f, |b| b.max(*f)));
            }
        }
    }
    Ok(best)
}

/// Weighted `Lᵖ` norm of one slice.
pub fn slice_norm(mesh: &Hypersurface, field: &[f64], p: f64) -> f64 {
    field
        .iter()
        .zip(mesh.area_weights())
        .map(|(f, a)| f.abs().powf(p) * a)
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Mesh file name of snapshot `j`.
fn snapshot_name(j: usize, dim: usize) -> String {
    let ext = if dim == 1 { "poly" } else { "off" };
    format!("snapshot_{j:05}.{ext}")
}

/// Writes `index.txt` (one line per snapshot: index, time, Δt to the next
/// snapshot, max H, area) and one mesh file per snapshot.
pub fn write_trajectory(dir: &Path, traj: &FlowTrajectory) -> Result<(), SpacetimeError> {
    let io = |source, path: &Path| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    let mut index = String::new();
    let _ = writeln!(index, "# termination {}", traj.termination().as_str());
    let _ = writeln!(index, "# index time dt maxH area");
    for (j, s) in traj.snapshots().iter().enumerate() {
        let dt = if j + 1 < traj.len() { traj.time(j + 1) - traj.time(j) } else { 0.0 };
        let _ = writeln!(
            index,
            "{j} {} {} {} {}",
            traj.time(j),
            dt,
            s.max_abs_mean_curvature(),
            s.total_area()
        );
        let path = dir.join(snapshot_name(j, s.dim()));
        fs::write(&path, to_text(s)).map_err(|e| io(e, &path))?;
    }
    let path = dir.join("index.txt");
    fs::write(&path, index).map_err(|e| io(e, &path))?;
    Ok(())
}

pub fn read_trajectory(dir: &Path) -> Result<FlowTrajectory, SpacetimeError> {
    let path = dir.join("index.txt");
    let text = fs::read_to_string(&path).map_err(|source| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut termination = None;
    let mut times = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# termination ") {
            termination = Termination::parse(rest.trim());
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let idx: usize = tok
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| SpacetimeError::Index(format!("bad line: {line}")))?;
        if idx != times.len() {
            return Err(SpacetimeError::Index(format!("expected index {}, got {idx}", times.len())));
        }
        let t: f64 = tok
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| SpacetimeError::Index(format!("bad time: {line}")))?;
        times.push(t);
    }
    let termination = termination.ok_or_else(|| SpacetimeError::Index("missing termination".into()))?;
    let mut snapshots: Vec<Hypersurface> = Vec::with_capacity(times.len());
    for j in 0..times.len() {
        let p1 = dir.join(snapshot_name(j, 1));
        let path = if p1.exists() { p1 } else { dir.join(snapshot_name(j, 2)) };
        let mesh = read_mesh(&path)?;
        let mesh = match snapshots.first() {
            Some(first) => first.with_positions(mesh.positions().to_vec())?,
            None => mesh,
        };
        snapshots.push(mesh);
    }
    FlowTrajectory::new(snapshots, times, termination)
}
