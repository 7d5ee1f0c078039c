//! Residual checks of the evolution identities, the pinching constant `B`,
//! the shifted curvature `Ĥ = H + nB`, blow-up data, and the divergence
//! behavior of `∫∫ |H|^α` near extinction.

use serde::Serialize;
use thiserror::Error;

use crate::flow::ExactSphereSolution;
use crate::geometry::{laplace_beltrami, Vec3};
use crate::spacetime::{heat_operator, integral_until, FlowTrajectory, SpacetimeError, SpacetimeField};

/// `Ĥ` below this value is a pinching violation.
pub const HAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("trajectory has a single snapshot")]
    LastSnapshot,
    #[error("Ĥ = {value} < 0 at snapshot {snapshot}, vertex {vertex}: B is too small")]
    PinchingViolated { snapshot: usize, vertex: usize, value: f64 },
    #[error("only {resolved} tail samples are resolved, need at least 4")]
    InsufficientTail { resolved: usize },
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

/// `(A_{j+1} − A_j)/Δt_j` against `−Σ_v H² dμ_v` at slice `j`, relative to
/// the latter. One entry per interval.
pub fn area_derivative_check(traj: &FlowTrajectory) -> Vec<f64> {
    (0..traj.len().saturating_sub(1))
        .map(|j| {
            let s = traj.snapshot(j);
            let dt = traj.time(j + 1) - traj.time(j);
            let lhs = (traj.snapshot(j + 1).total_area() - s.total_area()) / dt;
            let rhs = -s
                .mean_curvature()
                .iter()
                .zip(s.area_weights())
                .map(|(h, a)| h * h * a)
                .sum::<f64>();
            (lhs - rhs).abs() / rhs.abs()
        })
        .collect()
}

/// Residual of `(∂t − Δ)v − c v` over every interval.
#[derive(Debug, Clone)]
pub struct EvolutionResidual {
    /// Per interval, per vertex.
    pub residual: SpacetimeField,
    pub max_abs: Vec<f64>,
    /// `‖residual‖_{L²}` of the slice divided by `‖c v‖_{L²}` (0 when both vanish).
    pub relative_l2: Vec<f64>,
}

impl EvolutionResidual {
    /// Largest absolute residual over all intervals.
    pub fn scale(&self) -> f64 {
        self.max_abs.iter().fold(0.0, |m, &r| m.max(r))
    }
}

/// `(∂t − Δ) v − c v` with forward time differences on tracked vertices.
pub fn evolution_residual(
    traj: &FlowTrajectory,
    v: &[Vec<f64>],
    c: &[Vec<f64>],
) -> Result<EvolutionResidual, DiagnosticsError> {
    if traj.len() < 2 {
        return Err(DiagnosticsError::LastSnapshot);
    }
    let mut residual = Vec::with_capacity(traj.len() - 1);
    let mut max_abs = Vec::with_capacity(traj.len() - 1);
    let mut relative_l2 = Vec::with_capacity(traj.len() - 1);
    for j in 0..traj.len() - 1 {
        let heat = heat_operator(traj, v, j)?;
        let area = traj.snapshot(j).area_weights();
        let mut num = 0.0;
        let mut den = 0.0;
        let mut mx: f64 = 0.0;
        let r: Vec<f64> = heat
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let reaction = c[j][i] * v[j][i];
                let r = h - reaction;
                num += r * r * area[i];
                den += reaction * reaction * area[i];
                mx = mx.max(r.abs());
                r
            })
            .collect();
        relative_l2.push(if num == 0.0 { 0.0 } else { (num / den).sqrt() });
        max_abs.push(mx);
        residual.push(r);
    }
    Ok(EvolutionResidual {
        residual,
        max_abs,
        relative_l2,
    })
}

/// Residual of `∂t H = ΔH + |A|² H`.
pub fn h_evolution_residual(traj: &FlowTrajectory) -> Result<EvolutionResidual, DiagnosticsError> {
    let h = traj.mean_curvature_field();
    let a2 = traj.field(|_, s| s.second_fundamental_form_sq());
    evolution_residual(traj, &h, &a2)
}

/// `(∂t − Δ)|x − x₀|² + 2n` at snapshot `j`, divided by `2n`.
pub fn brakke_residual(traj: &FlowTrajectory, x0: &Vec3, j: usize) -> Result<Vec<f64>, DiagnosticsError> {
    if j + 1 >= traj.len() {
        return Err(SpacetimeError::LastSnapshot(j).into());
    }
    let two_n = 2.0 * traj.dim() as f64;
    let d2 = traj.field(|_, s| s.positions().iter().map(|x| (x - x0).norm_squared()).collect());
    Ok(heat_operator(traj, &d2, j)?
        .into_iter()
        .map(|r| (r + two_n) / two_n)
        .collect())
}

/// `Δ|x − x₀|²` on one slice.
pub fn distance_laplacian(traj: &FlowTrajectory, x0: &Vec3, j: usize) -> Result<Vec<f64>, DiagnosticsError> {
    let s = traj.snapshot(j);
    let d2: Vec<f64> = s.positions().iter().map(|x| (x - x0).norm_squared()).collect();
    Ok(laplace_beltrami(s, &d2).map_err(SpacetimeError::from)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct PinchingReport {
    /// `max(0, −min λ_min)` over every vertex and snapshot.
    pub b: f64,
    /// Smallest principal curvature of each snapshot.
    pub min_lambda: Vec<f64>,
}

pub fn pinching_constant(traj: &FlowTrajectory) -> PinchingReport {
    let min_lambda: Vec<f64> = traj
        .snapshots()
        .iter()
        .map(|s| (0..s.len()).map(|v| s.min_principal(v)).fold(f64::INFINITY, f64::min))
        .collect();
    let lo = min_lambda.iter().copied().fold(f64::INFINITY, f64::min);
    PinchingReport {
        b: (-lo).max(0.0),
        min_lambda,
    }
}

/// `Ĥ = H + nB` and `f = Ĥ² + nB²` on every snapshot.
#[derive(Debug, Clone)]
pub struct HatFields {
    pub b: f64,
    pub hat_h: SpacetimeField,
    pub f: SpacetimeField,
    /// Largest `|A|² − (Ĥ² − 2BĤ + nB²)` over all samples; nonpositive when
    /// the bound holds.
    pub upper_a_excess: f64,
}

pub fn hat_fields(traj: &FlowTrajectory, b: f64) -> Result<HatFields, DiagnosticsError> {
    let n = traj.dim() as f64;
    let mut hat_h = Vec::with_capacity(traj.len());
    let mut f = Vec::with_capacity(traj.len());
    let mut excess = f64::NEG_INFINITY;
    for (j, s) in traj.snapshots().iter().enumerate() {
        let a2 = s.second_fundamental_form_sq();
        let mut hj = Vec::with_capacity(s.len());
        let mut fj = Vec::with_capacity(s.len());
        for (v, h) in s.mean_curvature().iter().enumerate() {
            let hat = h + n * b;
            if hat < -HAT_TOLERANCE {
                return Err(DiagnosticsError::PinchingViolated {
                    snapshot: j,
                    vertex: v,
                    value: hat,
                });
            }
            excess = excess.max(a2[v] - (hat * hat - 2.0 * b * hat + n * b * b));
            hj.push(hat);
            fj.push(hat * hat + n * b * b);
        }
        hat_h.push(hj);
        f.push(fj);
    }
    Ok(HatFields {
        b,
        hat_h,
        f,
        upper_a_excess: excess,
    })
}

/// Per-snapshot maxima of `H` and their running maxima over time.
#[derive(Debug, Clone, Serialize)]
pub struct MaxHSeries {
    pub max_h: Vec<f64>,
    pub argmax: Vec<usize>,
    pub running_max: Vec<f64>,
    /// `(snapshot, vertex)` where the running maximum was attained.
    pub running_argmax: Vec<(usize, usize)>,
}

pub fn max_h_series(traj: &FlowTrajectory) -> MaxHSeries {
    let mut out = MaxHSeries {
        max_h: Vec::new(),
        argmax: Vec::new(),
        running_max: Vec::new(),
        running_argmax: Vec::new(),
    };
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for (j, s) in traj.snapshots().iter().enumerate() {
        let (v, h) = s
            .mean_curvature()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (v, &h)| if h > acc.1 { (v, h) } else { acc });
        if h > best.0 {
            best = (h, (j, v));
        }
        out.max_h.push(h);
        out.argmax.push(v);
        out.running_max.push(best.0);
        out.running_argmax.push(best.1);
    }
    out
}

/// Extinction time extrapolated from the last slice as if it were a round
/// sphere: `t_last + n / (2 H̄²)` with `H̄` the area-averaged curvature.
pub fn extinction_estimate(traj: &FlowTrajectory) -> f64 {
    let s = traj.last();
    let n = traj.dim() as f64;
    let hbar = s
        .mean_curvature()
        .iter()
        .zip(s.area_weights())
        .map(|(h, a)| h * a)
        .sum::<f64>()
        / s.total_area();
    traj.final_time() + n / (2.0 * hbar * hbar)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// Tail behavior of `I(ε) = ∫₀^{T−ε} ∫ |H|^α dμ dt` on the grid
/// `ε = 2^{−m} T`.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceFit {
    pub n: usize,
    pub alpha: f64,
    pub regime: Regime,
    pub extinction: f64,
    pub eps: Vec<f64>,
    pub integrals: Vec<f64>,
    /// Critical: `dI / d ln(1/ε)`. Supercritical: the log-log slope of the
    /// increments `I(ε_{m+1}) − I(ε_m)` against `1/ε`, which tends to
    /// `(α − n)/2 − 1`. Subcritical: the same log-log slope (negative).
    pub slope: f64,
    /// Last Cauchy difference of `I^{1/α}` relative to `I^{1/α}`.
    pub cauchy_tail: f64,
    /// Last Cauchy difference of `I` relative to `I`.
    pub cauchy_tail_integral: f64,
    /// Subcritical limit `I(0)` extrapolated from the two finest samples
    /// assuming `I(0) − I(ε) ∝ ε^{(n+2−α)/2}`.
    pub limit: Option<f64>,
}

/// Where the integrals `I(ε)` come from.
pub enum TailSource<'a> {
    /// A computed trajectory with an extinction-time estimate.
    Trajectory { traj: &'a FlowTrajectory, extinction: f64 },
    /// The closed-form shrinking sphere.
    Exact(ExactSphereSolution),
}

/// Default dyadic exponents `m = 3..=10`.
pub const TAIL_EXPONENTS: std::ops::RangeInclusive<i32> = 3..=10;

pub fn divergence_exponent_fit(
    source: &TailSource<'_>,
    alpha: f64,
    exponents: std::ops::RangeInclusive<i32>,
) -> Result<DivergenceFit, DiagnosticsError> {
    let (n, extinction) = match source {
        TailSource::Trajectory { traj, extinction } => (traj.dim(), *extinction),
        TailSource::Exact(s) => (s.n, s.extinction_time()),
    };
    let mut eps = Vec::new();
    let mut integrals = Vec::new();
    let h_field = match source {
        TailSource::Trajectory { traj, .. } => Some(traj.mean_curvature_field()),
        TailSource::Exact(_) => None,
    };
    for m in exponents {
        let e = extinction * 0.5f64.powi(m);
        let value = match source {
            TailSource::Trajectory { traj, .. } => {
                if extinction - e > traj.final_time() {
                    continue;
                }
                integral_until(traj, h_field.as_ref().expect("set above"), alpha, extinction - e)?
            }
            TailSource::Exact(s) => exact_sphere_integral(s, alpha, e),
        };
        eps.push(e);
        integrals.push(value);
    }
    if eps.len() < 4 {
        return Err(DiagnosticsError::InsufficientTail { resolved: eps.len() });
    }
    let crit = (n + 2) as f64;
    let regime = if (alpha - crit).abs() < 1e-12 {
        Regime::Critical
    } else if alpha > crit {
        Regime::Supercritical
    } else {
        Regime::Subcritical
    };
    let log_inv: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let slope = match regime {
        Regime::Critical => least_squares_slope(&log_inv, &integrals),
        _ => {
            let xs: Vec<f64> = log_inv[..log_inv.len() - 1].to_vec();
            let ys: Vec<f64> = integrals.windows(2).map(|w| (w[1] - w[0]).abs().ln()).collect();
            least_squares_slope(&xs, &ys)
        }
    };
    let k = integrals.len();
    let (a, b) = (integrals[k - 2], integrals[k - 1]);
    let (na, nb) = (a.powf(1.0 / alpha), b.powf(1.0 / alpha));
    let limit = match regime {
        Regime::Subcritical => {
            // I(0) − I(ε) = c ε^γ and ε halves between samples.
            let gamma = (crit - alpha) / 2.0;
            let ratio = 0.5f64.powf(gamma);
            Some(b + (b - a) * ratio / (1.0 - ratio))
        }
        _ => None,
    };
    Ok(DivergenceFit {
        n,
        alpha,
        regime,
        extinction,
        eps,
        integrals,
        slope,
        cauchy_tail: (nb - na).abs() / nb,
        cauchy_tail_integral: (b - a).abs() / b,
        limit,
    })
}

/// `∫₀^{T−ε} wₙ nᵅ r^{n−α} dt` for the exact sphere.
fn exact_sphere_integral(s: &ExactSphereSolution, alpha: f64, eps: f64) -> f64 {
    let n = s.n as f64;
    let w = s.unit_sphere_area() * n.powf(alpha);
    // With σ = r², dt = −dσ/(2n) and the integrand is σ^{(n−α)/2}.
    let e = (n - alpha) / 2.0;
    let hi = s.r0 * s.r0;
    let lo = 2.0 * n * eps;
    let integral = if (e + 1.0).abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi.powf(e + 1.0) - lo.powf(e + 1.0)) / (e + 1.0)
    };
    w * integral / (2.0 * n)
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Empirical constants of the form `H ≥ −l` and `|A|² ≤ C* H² + b`.
#[derive(Debug, Clone, Serialize)]
pub struct CorollaryConstants {
    pub l: f64,
    pub c_star: f64,
    pub b: f64,
}

/// `l = max(0, −min H)`; `C*` is the largest ratio `|A|²/H²` over the samples
/// with `H²` at least the mean of `H²`, and `b` the smallest offset that makes
/// `|A|² ≤ C* H² + b` hold everywhere.
pub fn corollary_constants(traj: &FlowTrajectory) -> CorollaryConstants {
    let mut samples = Vec::new();
    for s in traj.snapshots() {
        let a2 = s.second_fundamental_form_sq();
        for (v, &h) in s.mean_curvature().iter().enumerate() {
            samples.push((h, a2[v]));
        }
    }
    let l = (-samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min)).max(0.0);
    let mean_h2 = samples.iter().map(|s| s.0 * s.0).sum::<f64>() / samples.len() as f64;
    let c_star = samples
        .iter()
        .filter(|s| s.0 * s.0 >= mean_h2 && s.0 != 0.0)
        .map(|s| s.1 / (s.0 * s.0))
        .fold(0.0, f64::max);
    let b = samples
        .iter()
        .map(|s| s.1 - c_star * s.0 * s.0)
        .fold(0.0, f64::max);
    CorollaryConstants { l, c_star, b }
}

/// One row of the diagnostics CSV.
#[derive(Debug, Serialize)]
pub struct DiagnosticsRow<'a> {
    pub experiment: &'a str,
    pub t: f64,
    #[serde(rename = "maxH")]
    pub max_h: f64,
    pub argmax_id: usize,
    #[serde(rename = "minLambda")]
    pub min_lambda: f64,
    pub area: f64,
    /// Empty on the last snapshot.
    #[serde(rename = "areaResidual")]
    pub area_residual: Option<f64>,
    #[serde(rename = "hResidualMax")]
    pub h_residual_max: Option<f64>,
}

/// Rows of the diagnostics CSV, one per snapshot.
pub fn diagnostics_rows<'a>(
    experiment: &'a str,
    traj: &FlowTrajectory,
) -> Result<Vec<DiagnosticsRow<'a>>, DiagnosticsError> {
    let series = max_h_series(traj);
    let pinch = pinching_constant(traj);
    let area = area_derivative_check(traj);
    let hres = if traj.len() > 1 { Some(h_evolution_residual(traj)?) } else { None };
    Ok((0..traj.len())
        .map(|j| DiagnosticsRow {
            experiment,
            t: traj.time(j),
            max_h: series.max_h[j],
            argmax_id: series.argmax[j],
            min_lambda: pinch.min_lambda[j],
            area: traj.snapshot(j).total_area(),
            area_residual: area.get(j).copied(),
            h_residual_max: hres.as_ref().and_then(|r| r.max_abs.get(j).copied()),
        })
        .collect())
}
