//! Explicit time integration of mean curvature flow `∂F/∂t = −H ν`, plus the
//! shrinking-sphere reference solution.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Hypersurface};
use crate::spacetime::FlowTrajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("time {t} is at or past the extinction time {extinction}")]
    PastExtinction { t: f64, extinction: f64 },
    #[error("invalid stop criteria: {0}")]
    InvalidStop(String),
    #[error("invalid step size {0}")]
    InvalidStep(f64),
    #[error("geometry failure at t = {time}: {source}")]
    Degenerate {
        time: f64,
        #[source]
        source: GeometryError,
    },
}

/// Why [`evolve`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    MaxTime,
    MaxSteps,
    CurvatureCeiling,
    StepFloor,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::MaxTime => "MaxTime",
            Termination::MaxSteps => "MaxSteps",
            Termination::CurvatureCeiling => "CurvatureCeiling",
            Termination::StepFloor => "StepFloor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "MaxTime" => Some(Termination::MaxTime),
            "MaxSteps" => Some(Termination::MaxSteps),
            "CurvatureCeiling" => Some(Termination::CurvatureCeiling),
            "StepFloor" => Some(Termination::StepFloor),
            _ => None,
        }
    }
}

/// Round sphere (circle for n = 1) of initial radius `r0` moving by MCF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSphereSolution {
    pub n: usize,
    pub r0: f64,
}

impl ExactSphereSolution {
    pub fn new(n: usize, r0: f64) -> Self {
        Self { n, r0 }
    }

    /// `T = R₀² / (2n)`.
    pub fn extinction_time(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * self.n as f64)
    }

    pub fn radius(&self, t: f64) -> Result<f64, FlowError> {
        let extinction = self.extinction_time();
        if t >= extinction {
            return Err(FlowError::PastExtinction { t, extinction });
        }
        Ok((self.r0 * self.r0 - 2.0 * self.n as f64 * t).sqrt())
    }

    pub fn mean_curvature(&self, t: f64) -> Result<f64, FlowError> {
        Ok(self.n as f64 / self.radius(t)?)
    }

    /// Area `w_n` of the unit sphere `Sⁿ`.
    pub fn unit_sphere_area(&self) -> f64 {
        unit_sphere_area(self.n)
    }
}

/// Area of the unit n-sphere: `2π` for n = 1, `4π` for n = 2, and in general
/// `2π^{(n+1)/2} / Γ((n+1)/2)`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // w_n = 2π/(n−1) · w_{n−2}, starting from w_0 = 2 and w_1 = 2π.
    let mut w = if n % 2 == 0 { 2.0 } else { 2.0 * PI };
    let mut k = if n % 2 == 0 { 0 } else { 1 };
    while k < n {
        k += 2;
        w *= 2.0 * PI / (k - 1) as f64;
    }
    w
}

/// `(r(t), H(t))` for the shrinking sphere.
pub fn exact_sphere(n: usize, r0: f64, t: f64) -> Result<(f64, f64), FlowError> {
    let s = ExactSphereSolution::new(n, r0);
    let r = s.radius(t)?;
    Ok((r, n as f64 / r))
}

/// Termination thresholds for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    pub max_time: f64,
    /// Zero is accepted and yields a trajectory with only the initial slice.
    pub max_steps: usize,
    /// Curvature ceiling on `max |H|`.
    pub h_max: f64,
    pub dt_floor: f64,
}

impl StopCriteria {
    pub fn check(&self) -> Result<(), FlowError> {
        for (name, v) in [
            ("max_time", self.max_time),
            ("h_max", self.h_max),
            ("dt_floor", self.dt_floor),
        ] {
            if !(v > 0.0) {
                return Err(FlowError::InvalidStop(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Step-size control and output cadence for [`evolve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub safety: f64,
    /// Record every `stride`-th step.
    pub stride: usize,
    /// Upper bound on the step size.
    pub dt_max: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            safety: 0.1,
            stride: 1,
            dt_max: f64::INFINITY,
        }
    }
}

/// One forward-Euler step `x ← x − H ν dt`.
pub fn step(mesh: &Hypersurface, dt: f64) -> Result<Hypersurface, GeometryError> {
    let positions = mesh
        .positions()
        .iter()
        .zip(mesh.normals())
        .zip(mesh.mean_curvature())
        .map(|((x, nu), h)| x - nu * (h * dt))
        .collect();
    mesh.with_positions(positions)
}

/// `safety · min(h_min², 1 / max_v(H_v² + 1))`.
pub fn adaptive_dt(mesh: &Hypersurface, safety: f64) -> f64 {
    let h = mesh.min_edge_length();
    let hmax = mesh.max_abs_mean_curvature();
    safety * (h * h).min(1.0 / (hmax * hmax + 1.0))
}

/// Evolves with the default safety factor 0.1.
pub fn evolve(mesh0: &Hypersurface, stop: &StopCriteria, stride: usize) -> Result<FlowTrajectory, FlowError> {
    evolve_with(
        mesh0,
        stop,
        &EvolveOptions {
            stride,
            ..EvolveOptions::default()
        },
    )
}

pub fn evolve_with(
    mesh0: &Hypersurface,
    stop: &StopCriteria,
    opts: &EvolveOptions,
) -> Result<FlowTrajectory, FlowError> {
    stop.check()?;
    if !(opts.safety > 0.0) {
        return Err(FlowError::InvalidStep(opts.safety));
    }
    let stride = opts.stride.max(1);
    let mut snapshots = vec![mesh0.clone()];
    let mut times = vec![0.0];
    let mut mesh = mesh0.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut recorded = true;

    let reason = loop {
        if steps >= stop.max_steps {
            break Termination::MaxSteps;
        }
        if t >= stop.max_time {
            break Termination::MaxTime;
        }
        if mesh.max_abs_mean_curvature() >= stop.h_max {
            break Termination::CurvatureCeiling;
        }
        let mut dt = adaptive_dt(&mesh, opts.safety).min(opts.dt_max);
        if dt < stop.dt_floor {
            break Termination::StepFloor;
        }
        let last = t + dt >= stop.max_time;
        if last {
            dt = stop.max_time - t;
        }
        mesh = step(&mesh, dt).map_err(|source| FlowError::Degenerate { time: t, source })?;
        t = if last { stop.max_time } else { t + dt };
        steps += 1;
        recorded = steps % stride == 0;
        if recorded {
            snapshots.push(mesh.clone());
            times.push(t);
        }
    };
    if !recorded {
        snapshots.push(mesh);
        times.push(t);
    }
    Ok(FlowTrajectory::from_parts(snapshots, times, reason))
}
