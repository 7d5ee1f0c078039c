//! Parabolic rescaling `F̃(·, t) = Q F(·, t_i + (t − 1)/Q²)` of stored
//! trajectories and the blow-up sequence built from the running maximum of
//! `H`.
//!
//! Windows are cut from the stored snapshots and transformed arithmetically;
//! nothing is re-simulated, so scale-invariant quantities agree with the
//! source to rounding.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{least_squares_slope, max_h_series};
use crate::flow::Termination;
use crate::geometry::Vec3;
use crate::ineqlab::{constants_table, critical_exponent, lambda_of, mean_curvature_bound_check, region_norm, IneqError};
use crate::spacetime::{region_sup, spacetime_norm, FlowTrajectory, ParabolicCylinder, SpacetimeError};

#[derive(Debug, Error)]
pub enum RescaleError {
    #[error("window [{start}, {t_i}] for Q = {q} leaves the trajectory span [{lo}, {hi}]")]
    WindowOutOfRange {
        q: f64,
        t_i: f64,
        start: f64,
        lo: f64,
        hi: f64,
    },
    #[error("window for Q = {q} at t = {t_i} holds fewer than two snapshots")]
    WindowUnderresolved { q: f64, t_i: f64 },
    #[error("max H = {max_h} never reaches the smallest threshold {threshold}")]
    NoBlowup { max_h: f64, threshold: f64 },
    #[error("trajectory ended by {0:?}, not by the curvature ceiling")]
    NotBlowingUp(Termination),
    #[error("invalid scale {0}")]
    InvalidScale(f64),
    #[error("entry {entry}: the unit cylinder holds no samples")]
    EmptyRegion { entry: usize },
    #[error("entry {entry}: smallness hypothesis not met")]
    HypothesisNotMet { entry: usize },
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error(transparent)]
    Ineq(#[from] IneqError),
    #[error("writing blow-up report: {0}")]
    Io(#[from] std::io::Error),
}

/// Rescaled window over normalized time `[0, 1]`.
#[derive(Debug, Clone)]
pub struct RescaledWindow {
    pub q: f64,
    pub requested_t_i: f64,
    /// `t_i` snapped to the nearest snapshot.
    pub t_i: f64,
    /// Source snapshot indices `lo..=hi`.
    pub source: (usize, usize),
    /// Largest distance, in rescaled time, between a requested window end
    /// and the snapshot chosen for it.
    pub max_time_offset: f64,
    pub trajectory: FlowTrajectory,
}

/// Cuts `[t_i − 1/Q², t_i]` out of `traj` and maps it to `[0, 1]` with
/// positions scaled by `Q`.
pub fn rescale_trajectory(traj: &FlowTrajectory, q: f64, t_i: f64) -> Result<RescaledWindow, RescaleError> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(RescaleError::InvalidScale(q));
    }
    let start = t_i - 1.0 / (q * q);
    let (lo, hi) = (traj.start_time(), traj.final_time());
    let slack = 1e-12 * hi.abs().max(1.0);
    if start < lo - slack || t_i > hi + slack {
        return Err(RescaleError::WindowOutOfRange {
            q,
            t_i,
            start,
            lo,
            hi,
        });
    }
    let j_hi = traj.nearest_index(t_i);
    let j_lo = traj.nearest_index(start);
    if j_lo >= j_hi {
        return Err(RescaleError::WindowUnderresolved { q, t_i });
    }
    let snapped = traj.time(j_hi);
    let q2 = q * q;
    let offset = ((traj.time(j_lo) - start).abs().max((snapped - t_i).abs())) * q2;
    let trajectory = traj
        .slice(j_lo, j_hi)
        .parabolic_transform(q, |t| 1.0 + (t - snapped) * q2);
    Ok(RescaledWindow {
        q,
        requested_t_i: t_i,
        t_i: snapped,
        source: (j_lo, j_hi),
        max_time_offset: offset,
        trajectory,
    })
}

#[derive(Debug, Clone)]
pub struct BlowupEntry {
    pub threshold: f64,
    /// `Q_i = H(x_i, t_i)`, the running maximum at the first snapshot where
    /// it reaches the threshold.
    pub q: f64,
    pub t_i: f64,
    pub snapshot: usize,
    pub vertex: usize,
    pub x_i: Vec3,
    pub window: RescaledWindow,
}

impl BlowupEntry {
    /// `Q_i x_i`, the marked point in rescaled coordinates.
    pub fn rescaled_center(&self) -> Vec3 {
        self.window.trajectory.last().position(self.vertex)
    }

    /// `H̃_i(x_i, 1)`.
    pub fn marked_curvature(&self) -> f64 {
        self.window.trajectory.last().mean_curvature()[self.vertex]
    }
}

#[derive(Debug, Clone)]
pub struct BlowupSequence {
    pub entries: Vec<BlowupEntry>,
    /// Thresholds dropped because they were never reached or their window
    /// starts before the trajectory.
    pub skipped: Vec<f64>,
}

impl BlowupSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn select_blowup_sequence(traj: &FlowTrajectory, thresholds: &[f64]) -> Result<BlowupSequence, RescaleError> {
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_by(f64::total_cmp);
    let series = max_h_series(traj);
    let max_h = series.running_max.last().copied().unwrap_or(f64::NEG_INFINITY);
    if let Some(&smallest) = thresholds.first() {
        if max_h < smallest {
            return Err(RescaleError::NoBlowup {
                max_h,
                threshold: smallest,
            });
        }
    }
    if traj.termination() != Termination::CurvatureCeiling {
        return Err(RescaleError::NotBlowingUp(traj.termination()));
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for threshold in thresholds {
        let Some(j) = series.running_max.iter().position(|&m| m >= threshold) else {
            skipped.push(threshold);
            continue;
        };
        let (snapshot, vertex) = series.running_argmax[j];
        let q = series.running_max[j];
        let t_i = traj.time(snapshot);
        if t_i - 1.0 / (q * q) < traj.start_time() {
            skipped.push(threshold);
            continue;
        }
        let window = rescale_trajectory(traj, q, t_i)?;
        entries.push(BlowupEntry {
            threshold,
            q,
            t_i,
            snapshot,
            vertex,
            x_i: traj.snapshot(snapshot).position(vertex),
            window,
        });
    }
    Ok(BlowupSequence { entries, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalNorm {
    pub q: f64,
    /// `‖H̃_i‖_{L^{n+2}(D̃^i)}`.
    pub h_norm: f64,
    /// `‖1‖_{L^{n+2}(D̃^i)}`.
    pub one_norm: f64,
    /// `h_norm + (B/Q_i) one_norm`.
    pub value: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingSeries {
    pub norms: Vec<LocalNorm>,
    /// Least-squares slope of `ln value` against `ln Q_i`; `NaN` with fewer
    /// than two entries.
    pub slope: f64,
}

impl VanishingSeries {
    pub fn strictly_decreasing(&self) -> bool {
        self.norms.windows(2).all(|w| w[1].value < w[0].value)
    }
}

/// Local norm sums over the unit cylinders centered at the marked points.
pub fn vanishing_local_norms(seq: &BlowupSequence, b: f64) -> Result<VanishingSeries, RescaleError> {
    let mut norms = Vec::with_capacity(seq.len());
    for (i, e) in seq.entries.iter().enumerate() {
        let traj = &e.window.trajectory;
        let p = traj.dim() as f64 + 2.0;
        let d = ParabolicCylinder::level(e.rescaled_center(), 0);
        let (h_norm, samples) = region_norm(traj, &traj.mean_curvature_field(), p, &d)?;
        if samples == 0 {
            return Err(RescaleError::EmptyRegion { entry: i });
        }
        let (one_norm, _) = region_norm(traj, &traj.constant_field(1.0), p, &d)?;
        norms.push(LocalNorm {
            q: e.q,
            h_norm,
            one_norm,
            value: h_norm + b / e.q * one_norm,
            samples,
        });
    }
    let slope = if norms.len() < 2 {
        f64::NAN
    } else {
        let xs: Vec<f64> = norms.iter().map(|n| n.q.ln()).collect();
        let ys: Vec<f64> = norms.iter().map(|n| n.value.ln()).collect();
        least_squares_slope(&xs, &ys)
    };
    Ok(VanishingSeries { norms, slope })
}

/// One row of the blow-up report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessRow {
    pub entry: usize,
    pub q: f64,
    pub t_i: f64,
    pub x_i: [f64; 3],
    /// `‖H̃_i‖_{L^{n+2}(D̃^i)} + (B/Q_i)‖1‖_{L^{n+2}(D̃^i)}`.
    pub local_sum: f64,
    /// `max H̃⁺` over `(D̃^i)′`.
    pub sup_h_plus: f64,
    pub c1: f64,
    pub c_d: f64,
    /// `C_d · local_sum`.
    pub bound: f64,
    pub hypothesis_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub rows: Vec<WitnessRow>,
    /// Whether the bound side strictly decreases; `None` for one row.
    pub bound_decreasing: Option<bool>,
}

impl WitnessReport {
    /// Fails on the first entry whose smallness hypothesis does not hold.
    pub fn require_hypothesis(&self) -> Result<(), RescaleError> {
        match self.rows.iter().find(|r| !r.hypothesis_met) {
            Some(r) => Err(RescaleError::HypothesisNotMet { entry: r.entry }),
            None => Ok(()),
        }
    }

    /// Writes `entry,Q,t_i,x_i,localNormSum,supHplus,C_d,hypothesisMet`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), RescaleError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| RescaleError::Io(e.into());
        w.write_record(["entry", "Q", "t_i", "x_i", "localNormSum", "supHplus", "C_d", "hypothesisMet"])
            .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.entry.to_string(),
                r.q.to_string(),
                r.t_i.to_string(),
                format!("{} {} {}", r.x_i[0], r.x_i[1], r.x_i[2]),
                r.local_sum.to_string(),
                r.sup_h_plus.to_string(),
                r.c_d.to_string(),
                r.hypothesis_met.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tabulates `C_d · local sum` against `sup H̃⁺` on every entry, with `C₁`
/// and `C₃` measured on each rescaled window and pinching `B / Q_i`.
pub fn contradiction_witness(seq: &BlowupSequence, b: f64, c_n: f64) -> Result<WitnessReport, RescaleError> {
    let mut rows = Vec::with_capacity(seq.len());
    for (i, e) in seq.entries.iter().enumerate() {
        let traj = &e.window.trajectory;
        let n = traj.dim();
        let p = n as f64 + 2.0;
        let h = spacetime_norm(traj, &traj.mean_curvature_field(), p, None)?.value;
        let c1 = (1.0 + h.powf(p)).powf(n as f64 / p);
        let table = constants_table(n, lambda_of(n) * critical_exponent(n), p, 0.0, c1, c_n)?;
        let center = e.rescaled_center();
        let m = mean_curvature_bound_check(traj, center, b / e.q, &table)?;
        let h_plus = traj.field(|_, s| s.mean_curvature().iter().map(|h| h.max(0.0)).collect());
        let sup_h_plus = region_sup(traj, &h_plus, &ParabolicCylinder::inner(center))?.unwrap_or(0.0);
        rows.push(WitnessRow {
            entry: i,
            q: e.q,
            t_i: e.t_i,
            x_i: [e.x_i.x, e.x_i.y, e.x_i.z],
            local_sum: m.sum,
            sup_h_plus,
            c1,
            c_d: m.c_d,
            bound: m.bound,
            hypothesis_met: m.hypothesis,
        });
    }
    let bound_decreasing = (rows.len() > 1).then(|| rows.windows(2).all(|w| w[1].bound < w[0].bound));
    Ok(WitnessReport { rows, bound_decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{evolve, StopCriteria};
    use crate::shapes::{circle, icosphere};

    fn stop(max_time: f64, h_max: f64) -> StopCriteria {
        StopCriteria {
            max_time,
            max_steps: 10_000_000,
            h_max,
            dt_floor: 1e-14,
        }
    }

    #[test]
    fn identity_window() {
        let traj = evolve(&icosphere(2, 2.0).unwrap(), &stop(1.2, 1e3), 1).unwrap();
        let j = traj.nearest_index(1.0);
        let w = rescale_trajectory(&traj, 1.0, traj.time(j)).unwrap();
        assert_eq!(w.trajectory.times().last(), Some(&1.0));
        for (k, t) in w.trajectory.times().iter().enumerate() {
            assert!((t - (traj.time(w.source.0 + k) + 1.0 - traj.time(j))).abs() < 1e-15);
        }
        assert_eq!(w.trajectory.snapshot(0).positions(), traj.snapshot(w.source.0).positions());
    }

    #[test]
    fn window_out_of_range() {
        let traj = evolve(&icosphere(1, 1.0).unwrap(), &stop(0.1, 1e3), 1).unwrap();
        assert!(matches!(
            rescale_trajectory(&traj, 2.0, 0.05),
            Err(RescaleError::WindowOutOfRange { .. })
        ));
        assert!(matches!(rescale_trajectory(&traj, 0.0, 0.05), Err(RescaleError::InvalidScale(_))));
    }

    #[test]
    fn rescaled_curvature_is_exact() {
        let traj = evolve(&circle(64, 1.0).unwrap(), &stop(0.4, 1e3), 1).unwrap();
        let w = rescale_trajectory(&traj, 4.0, 0.3).unwrap();
        for (k, s) in w.trajectory.snapshots().iter().enumerate() {
            let src = traj.snapshot(w.source.0 + k);
            for (a, b) in s.mean_curvature().iter().zip(src.mean_curvature()) {
                assert_eq!(a * 4.0, *b);
            }
        }
    }

    #[test]
    fn torus_without_blowup() {
        let m = crate::shapes::torus(2.0, 1.0, 32, 16).unwrap();
        let traj = evolve(&m, &stop(0.05, 1e3), 1).unwrap();
        let peak = max_h_series(&traj).running_max.last().copied().unwrap();
        assert!(peak < 2.0);
        assert!(matches!(
            select_blowup_sequence(&traj, &[2.0, 4.0]),
            Err(RescaleError::NoBlowup { .. })
        ));
    }
}
