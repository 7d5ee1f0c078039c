//! Discrete checks of the Sobolev-type inequalities and Moser iteration
//! estimates along a flow, together with the explicit constants they use.
//!
//! Every check evaluates both sides with the lumped spacetime quadrature of
//! [`crate::spacetime`] and reports them unchanged; a verdict is `lhs ≤ rhs`
//! with no slack.

mod certify;
mod constants;
mod suite;

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{evolution_residual, h_evolution_residual, DiagnosticsError, HAT_TOLERANCE};
use crate::geometry::{tangential_gradient_norm, GeometryError, Hypersurface, Vec3};
use crate::spacetime::{
    cylinder_membership, heat_operator, region_sup, slice_norm, CutoffFunction, FlowTrajectory,
    ParabolicCylinder, SpacetimeError,
};

pub use certify::{CertificationReport, Record};
pub use constants::{
    c3_constant, c_c, cd_constant, constants_for, constants_table, critical_exponent, delta1, delta2, lambda_of,
    ConstantsTable,
};
pub use suite::{
    bump_field, regression_suite, BumpField, SuiteReport, C_N_EMP, PIN_LEMMA31, PIN_MICHAEL_SIMON, PIN_PROP32, SUITE_FIELDS,
    SUITE_MESHES,
};

/// Subsolution residuals up to this multiple of the trajectory's
/// `∂t H = ΔH + |A|²H` residual are accepted as discretization error.
pub const SUBSOLUTION_TOLERANCE_FACTOR: f64 = 10.0;

/// Fewest vertex-time samples the innermost ladder cylinder must hold.
pub const MIN_LADDER_SAMPLES: usize = 100;

/// Default exponent `Q` of the slice Sobolev bound on surfaces.
pub const DEFAULT_SOBOLEV_Q: f64 = 3.0;

#[derive(Debug, Error)]
pub enum IneqError {
    #[error("negative value {value} at sample {index}")]
    NegativeFunction { index: usize, value: f64 },
    #[error("check is implemented for surfaces only, got dimension {0}")]
    UnsupportedDimension(usize),
    #[error("not a subsolution: residual {residual} exceeds {tol} at snapshot {snapshot}, vertex {vertex}")]
    NotSubsolution {
        snapshot: usize,
        vertex: usize,
        residual: f64,
        tol: f64,
    },
    #[error("cylinder D_{k} holds only {samples} samples")]
    LadderUnderresolved { k: usize, samples: usize },
    #[error("q = {q} is below the critical exponent {critical}")]
    SubcriticalExponent { q: f64, critical: f64 },
    #[error("right-hand side vanishes while the left-hand side is {lhs}")]
    ZeroRhs { lhs: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// `lhs / rhs`, with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> Result<f64, IneqError> {
    if rhs == 0.0 {
        if lhs == 0.0 {
            return Ok(0.0);
        }
        return Err(IneqError::ZeroRhs { lhs });
    }
    Ok(lhs / rhs)
}

/// Both sides of an inequality and their quotient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Sides {
    pub fn new(lhs: f64, rhs: f64) -> Result<Self, IneqError> {
        Ok(Self {
            lhs,
            rhs,
            ratio: ratio(lhs, rhs)?,
        })
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

fn require_surface(n: usize) -> Result<(), IneqError> {
    if n != 2 {
        return Err(IneqError::UnsupportedDimension(n));
    }
    Ok(())
}

fn check_nonnegative<'a>(values: impl IntoIterator<Item = &'a f64>) -> Result<(), IneqError> {
    for (index, &value) in values.into_iter().enumerate() {
        if value < -HAT_TOLERANCE || value.is_nan() {
            return Err(IneqError::NegativeFunction { index, value });
        }
    }
    Ok(())
}

fn weighted_sum(mesh: &Hypersurface, values: impl Iterator<Item = f64>) -> f64 {
    values.zip(mesh.area_weights()).map(|(v, a)| v * a).sum()
}

/// Michael–Simon: `(∫ f^{n/(n−1)})^{(n−1)/n}` against `∫ (|∇f| + |H| f)`.
pub fn michael_simon_check(mesh: &Hypersurface, f: &[f64]) -> Result<Sides, IneqError> {
    require_surface(mesh.dim())?;
    check_nonnegative(f)?;
    let grad = tangential_gradient_norm(mesh, f)?;
    let lhs = weighted_sum(mesh, f.iter().map(|x| x * x)).sqrt();
    let rhs = weighted_sum(
        mesh,
        grad.iter()
            .zip(f)
            .zip(mesh.mean_curvature())
            .map(|((g, x), h)| g + h.abs() * x),
    );
    Sides::new(lhs, rhs)
}

/// `‖v‖²_{L^{2Q}}` against `‖∇v‖²_{L²} + ‖H‖^{n+2}_{L^{n+2}} ‖v‖²_{L²}`; the
/// dimensional constant is left out of the right-hand side.
pub fn lemma31_check(mesh: &Hypersurface, v: &[f64], q_exp: f64) -> Result<Sides, IneqError> {
    require_surface(mesh.dim())?;
    if !(q_exp >= 1.0 && q_exp.is_finite()) {
        return Err(IneqError::InvalidParameter(format!("Q must be finite and at least 1, got {q_exp}")));
    }
    let n = mesh.dim() as f64;
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let grad = tangential_gradient_norm(mesh, &abs)?;
    let lhs = slice_norm(mesh, &abs, 2.0 * q_exp).powi(2);
    let grad_sq = weighted_sum(mesh, grad.iter().map(|g| g * g));
    let h_pow = weighted_sum(mesh, mesh.mean_curvature().iter().map(|h| h.abs().powf(n + 2.0)));
    let v_sq = weighted_sum(mesh, abs.iter().map(|x| x * x));
    Sides::new(lhs, grad_sq + h_pow * v_sq)
}

/// Spacetime Sobolev bound with `β = 2(n+2)/n`:
/// `‖v‖^β_{L^β}` against
/// `max_t ‖v‖^{4/n}_{L²(M_t)} (‖∇v‖²_{L²} + max_t ‖v‖²_{L²(M_t)} ‖H‖^{n+2}_{L^{n+2}})`.
pub fn prop32_check(traj: &FlowTrajectory, v: &[Vec<f64>]) -> Result<Sides, IneqError> {
    require_surface(traj.dim())?;
    check_nonnegative(v.iter().flatten())?;
    if v.len() != traj.len() {
        return Err(SpacetimeError::FieldShape(format!("{} slices for {} snapshots", v.len(), traj.len())).into());
    }
    let n = traj.dim() as f64;
    let beta = 2.0 * (n + 2.0) / n;
    let mut lhs = 0.0;
    let mut grad_sq = 0.0;
    let mut h_pow = 0.0;
    let mut max_l2_sq: f64 = 0.0;
    for j in 0..traj.len() {
        let s = traj.snapshot(j);
        max_l2_sq = max_l2_sq.max(weighted_sum(s, v[j].iter().map(|x| x * x)));
        if j + 1 == traj.len() {
            break;
        }
        let dt = traj.time(j + 1) - traj.time(j);
        let grad = tangential_gradient_norm(s, &v[j])?;
        lhs += dt * weighted_sum(s, v[j].iter().map(|x| x.abs().powf(beta)));
        grad_sq += dt * weighted_sum(s, grad.iter().map(|g| g * g));
        h_pow += dt * weighted_sum(s, s.mean_curvature().iter().map(|h| h.abs().powf(n + 2.0)));
    }
    let rhs = max_l2_sq.powf(2.0 / n) * (grad_sq + max_l2_sq * h_pow);
    Sides::new(lhs, rhs)
}

/// Interpolation `‖u‖_r ≤ ε‖u‖_s + ε^{−μ}‖u‖_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub mu: f64,
    pub holds: bool,
}

/// `μ = (1/t − 1/r)/(1/r − 1/s)`.
pub fn interpolation_mu(t: f64, r: f64, s: f64) -> f64 {
    (1.0 / t - 1.0 / r) / (1.0 / r - 1.0 / s)
}

pub fn interpolation_check(
    mesh: &Hypersurface,
    u: &[f64],
    t: f64,
    r: f64,
    s: f64,
    eps: f64,
) -> Result<InterpolationReport, IneqError> {
    if !(1.0 <= t && t < r && r < s && s.is_finite()) {
        return Err(IneqError::InvalidParameter(format!("need 1 <= t < r < s, got ({t}, {r}, {s})")));
    }
    if !(eps > 0.0) {
        return Err(IneqError::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    let mu = interpolation_mu(t, r, s);
    let lhs = slice_norm(mesh, u, r);
    let rhs = eps * slice_norm(mesh, u, s) + eps.powf(-mu) * slice_norm(mesh, u, t);
    Ok(InterpolationReport {
        lhs,
        rhs,
        mu,
        holds: lhs <= rhs,
    })
}

/// `SUBSOLUTION_TOLERANCE_FACTOR` times the largest residual of the
/// mean curvature evolution on `traj`.
pub fn subsolution_tolerance(traj: &FlowTrajectory) -> Result<f64, IneqError> {
    Ok(SUBSOLUTION_TOLERANCE_FACTOR * h_evolution_residual(traj)?.scale())
}

/// A nonnegative `v` verified to satisfy `(∂t − Δ)v ≤ f v + tol` at every
/// sample with a forward difference.
#[derive(Debug, Clone, Copy)]
pub struct Subsolution<'a> {
    traj: &'a FlowTrajectory,
    v: &'a [Vec<f64>],
    f: &'a [Vec<f64>],
    tol: f64,
    worst: f64,
}

impl<'a> Subsolution<'a> {
    pub fn check(
        traj: &'a FlowTrajectory,
        v: &'a [Vec<f64>],
        f: &'a [Vec<f64>],
        tol: f64,
    ) -> Result<Self, IneqError> {
        check_nonnegative(v.iter().flatten())?;
        let res = evolution_residual(traj, v, f)?;
        let mut worst = (f64::NEG_INFINITY, 0, 0);
        for (j, slice) in res.residual.iter().enumerate() {
            for (i, &r) in slice.iter().enumerate() {
                if r > worst.0 {
                    worst = (r, j, i);
                }
            }
        }
        if worst.0 > tol {
            return Err(IneqError::NotSubsolution {
                snapshot: worst.1,
                vertex: worst.2,
                residual: worst.0,
                tol,
            });
        }
        Ok(Self {
            traj,
            v,
            f,
            tol,
            worst: worst.0,
        })
    }

    /// [`Subsolution::check`] with the tolerance of [`subsolution_tolerance`].
    pub fn check_default(
        traj: &'a FlowTrajectory,
        v: &'a [Vec<f64>],
        f: &'a [Vec<f64>],
    ) -> Result<Self, IneqError> {
        Self::check(traj, v, f, subsolution_tolerance(traj)?)
    }

    pub fn trajectory(&self) -> &'a FlowTrajectory {
        self.traj
    }

    pub fn v(&self) -> &'a [Vec<f64>] {
        self.v
    }

    pub fn f(&self) -> &'a [Vec<f64>] {
        self.f
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Largest residual found.
    pub fn worst_residual(&self) -> f64 {
        self.worst
    }
}

/// `‖v‖_{Lᵖ}` over a cylinder, scaled by the regional maximum so that high
/// exponents do not overflow. Returns the norm and the sample count.
pub fn region_norm(
    traj: &FlowTrajectory,
    field: &[Vec<f64>],
    p: f64,
    region: &ParabolicCylinder,
) -> Result<(f64, usize), IneqError> {
    if !(p >= 1.0) {
        return Err(SpacetimeError::InvalidExponent(p).into());
    }
    let masks: Vec<Vec<bool>> = (0..traj.len().saturating_sub(1))
        .map(|j| cylinder_membership(region, traj.snapshot(j), traj.time(j)))
        .collect();
    let mut scale: f64 = 0.0;
    let mut samples = 0;
    for (j, mask) in masks.iter().enumerate() {
        for (f, &m) in field[j].iter().zip(mask) {
            if m {
                scale = scale.max(f.abs());
                samples += 1;
            }
        }
    }
    if scale == 0.0 {
        return Ok((0.0, samples));
    }
    let mut total = 0.0;
    for (j, mask) in masks.iter().enumerate() {
        let dt = traj.time(j + 1) - traj.time(j);
        let s = traj.snapshot(j);
        let slice: f64 = field[j]
            .iter()
            .zip(s.area_weights())
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|((f, a), _)| (f.abs() / scale).powf(p) * a)
            .sum();
        total += dt * slice;
    }
    Ok((scale * total.powf(1.0 / p), samples))
}

/// Outcome of the reverse Hölder check on one cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReverseHolderReport {
    pub k: usize,
    pub beta: f64,
    /// `‖η² v^β‖_{L^{(n+2)/n}}`.
    pub lhs: f64,
    /// `C_a Λ(β)^{1+ν} ‖v^β (η² + |∇η|² + 2η|(∂t − Δ)η|)‖_{L¹}`.
    pub rhs: f64,
    pub ratio: f64,
    pub certified: bool,
    /// Samples where the cutoff weight is nonzero.
    pub samples: usize,
    /// Weighted samples lying outside `D`; zero when the cutoff is masked
    /// correctly.
    pub outside_d: usize,
}

pub fn reverse_holder_check(
    sub: &Subsolution<'_>,
    center: Vec3,
    beta: f64,
    k: usize,
    constants: &ConstantsTable,
) -> Result<ReverseHolderReport, IneqError> {
    if !(beta >= 2.0) {
        return Err(IneqError::InvalidParameter(format!("beta must be at least 2, got {beta}")));
    }
    let c_a = constants.c_a.ok_or(IneqError::SubcriticalExponent {
        q: constants.q,
        critical: critical_exponent(constants.n),
    })?;
    let nu = constants.nu.unwrap_or(0.0);
    let traj = sub.traj;
    let v = sub.v;
    let n = traj.dim() as f64;
    let lambda = (n + 2.0) / n;
    let cut = CutoffFunction::new(center, k)?;
    let eta = cut.sample(traj);
    let outer = ParabolicCylinder::level(center, 0);

    let mut lhs_int = 0.0;
    let mut rhs_int = 0.0;
    let mut samples = 0;
    let mut outside_d = 0;
    for j in 0..traj.len() - 1 {
        let t = traj.time(j);
        let s = traj.snapshot(j);
        let dt = traj.time(j + 1) - t;
        let heat = heat_operator(traj, &eta, j)?;
        let inside = cylinder_membership(&outer, s, t);
        for i in 0..s.len() {
            let e = eta[j][i];
            let grad = cut.tangential_gradient(t, &s.position(i), &s.normal(i)).norm_squared();
            let w = e * e + grad + 2.0 * e * heat[i].abs();
            if w == 0.0 {
                continue;
            }
            samples += 1;
            if !inside[i] {
                outside_d += 1;
            }
            let vb = v[j][i].abs().powf(beta);
            let a = s.area_weights()[i];
            lhs_int += dt * a * (e * e * vb).powf(lambda);
            rhs_int += dt * a * vb * w;
        }
    }
    let lhs = lhs_int.powf(1.0 / lambda);
    let rhs = c_a * constants.big_lambda_of(beta).powf(1.0 + nu) * rhs_int;
    let sides = Sides::new(lhs, rhs)?;
    Ok(ReverseHolderReport {
        k,
        beta,
        lhs,
        rhs,
        ratio: sides.ratio,
        certified: sides.holds(),
        samples,
        outside_d,
    })
}

/// One rung `‖v‖_{L^{βλ^k}(D_k)}` of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rung {
    pub k: usize,
    pub exponent: f64,
    pub value: f64,
    pub samples: usize,
    /// Bound from the previous rung (`None` for `k = 0`).
    pub bound: Option<f64>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub beta: f64,
    pub rungs: Vec<Rung>,
    /// `max v` over `D′`.
    pub sup_inner: f64,
    pub c_b: f64,
    /// `C_b ‖v‖_{L^β(D)}`.
    pub final_bound: f64,
    pub final_certified: bool,
}

impl LadderReport {
    pub fn certified(&self) -> bool {
        self.final_certified && self.rungs.iter().all(|r| r.certified)
    }
}

/// Rung factor `C_z^{1/b} 4^{(k−1)/b} b^{(1+ν)/b}` with `b = βλ^{k−1}`.
pub fn rung_factor(constants: &ConstantsTable, beta: f64, k: usize) -> Option<f64> {
    let c_z = constants.c_z?;
    let nu = constants.nu?;
    let b = beta * constants.lambda.powi(k as i32 - 1);
    Some(c_z.powf(1.0 / b) * 4f64.powf((k as f64 - 1.0) / b) * b.powf((1.0 + nu) / b))
}

pub fn moser_ladder(
    sub: &Subsolution<'_>,
    center: Vec3,
    beta: f64,
    k_max: usize,
    constants: &ConstantsTable,
) -> Result<LadderReport, IneqError> {
    if !(beta >= 2.0) {
        return Err(IneqError::InvalidParameter(format!("beta must be at least 2, got {beta}")));
    }
    let subcritical = || IneqError::SubcriticalExponent {
        q: constants.q,
        critical: critical_exponent(constants.n),
    };
    let c_b = constants.c_b.ok_or_else(subcritical)?;
    let traj = sub.traj;
    let mut rungs: Vec<Rung> = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let exponent = beta * constants.lambda.powi(k as i32);
        let (value, samples) = region_norm(traj, sub.v, exponent, &ParabolicCylinder::level(center, k))?;
        let bound = match k {
            0 => None,
            _ => Some(rung_factor(constants, beta, k).ok_or_else(subcritical)? * rungs[k - 1].value),
        };
        rungs.push(Rung {
            k,
            exponent,
            value,
            samples,
            bound,
            certified: bound.is_none_or(|b| value <= b),
        });
    }
    let last = rungs.last().expect("at least one rung");
    if last.samples < MIN_LADDER_SAMPLES {
        return Err(IneqError::LadderUnderresolved {
            k: last.k,
            samples: last.samples,
        });
    }
    let sup_inner = region_sup(traj, sub.v, &ParabolicCylinder::inner(center))?.unwrap_or(0.0);
    let final_bound = c_b * rungs[0].value;
    Ok(LadderReport {
        beta,
        sup_inner,
        c_b,
        final_bound,
        final_certified: sup_inner <= final_bound,
        rungs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalReport {
    /// `‖f‖_{L^{(n+2)/2}(D)}`.
    pub f_norm: f64,
    pub delta1: f64,
    pub small: bool,
    /// `‖v‖_{L^{((n+2)/n)β}(D₁)}`, evaluated only when `small`.
    pub lhs: Option<f64>,
    /// `C_c ‖v‖_{L^β(D)}`.
    pub rhs: Option<f64>,
    pub certified: Option<bool>,
}

/// Smallness branch of the critical case `q = (n+2)/2`.
pub fn critical_smallness_check(
    sub: &Subsolution<'_>,
    center: Vec3,
    beta: f64,
    constants: &ConstantsTable,
) -> Result<CriticalReport, IneqError> {
    let critical = critical_exponent(constants.n);
    if constants.q != critical {
        return Err(IneqError::InvalidParameter(format!(
            "critical check needs q = {critical}, got {}",
            constants.q
        )));
    }
    if !(beta > 1.0) {
        return Err(IneqError::InvalidParameter(format!("beta must exceed 1, got {beta}")));
    }
    let traj = sub.traj;
    let d = ParabolicCylinder::level(center, 0);
    let (f_norm, _) = region_norm(traj, sub.f, critical, &d)?;
    let d1 = delta1(constants.n, beta, constants.c1, constants.c_n);
    let small = f_norm <= d1;
    if !small {
        return Ok(CriticalReport {
            f_norm,
            delta1: d1,
            small,
            lhs: None,
            rhs: None,
            certified: None,
        });
    }
    let lambda = lambda_of(constants.n);
    let (lhs, _) = region_norm(traj, sub.v, lambda * beta, &ParabolicCylinder::level(center, 1))?;
    let (base, _) = region_norm(traj, sub.v, beta, &d)?;
    let rhs = constants::c_c(constants.n, beta, constants.c1, constants.c_n) * base;
    Ok(CriticalReport {
        f_norm,
        delta1: d1,
        small,
        lhs: Some(lhs),
        rhs: Some(rhs),
        certified: Some(lhs <= rhs),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCurvatureBound {
    pub b: f64,
    /// `‖H‖_{L^{n+2}(D)}`.
    pub h_norm: f64,
    /// `‖1‖_{L^{n+2}(D)}`.
    pub one_norm: f64,
    /// `‖1‖_{L^{(n+2)²/(2n)}(D)}`.
    pub one_norm_q: f64,
    /// `‖H‖_{L^{n+2}(D)} + B ‖1‖_{L^{n+2}(D)}`.
    pub sum: f64,
    pub c1: f64,
    pub c3: f64,
    pub c_d: f64,
    pub delta2: f64,
    pub hypothesis: bool,
    /// `max H⁺` over `D′`.
    pub sup_h_plus: f64,
    /// `C_d · sum`.
    pub bound: f64,
    /// `None` when the hypothesis fails and no certification is attempted.
    pub bound_holds: Option<bool>,
    pub samples: usize,
}

/// `sup_{D′} H⁺ ≤ C_d (‖H‖_{L^{n+2}(D)} + B‖1‖_{L^{n+2}(D)})` under the
/// smallness hypothesis. `constants` supplies `n`, `c_n` and `C₁`.
pub fn mean_curvature_bound_check(
    traj: &FlowTrajectory,
    center: Vec3,
    b: f64,
    constants: &ConstantsTable,
) -> Result<MeanCurvatureBound, IneqError> {
    if !(b >= 0.0) {
        return Err(IneqError::InvalidParameter(format!("pinching constant must be nonnegative, got {b}")));
    }
    let n = traj.dim();
    let p = n as f64 + 2.0;
    let d = ParabolicCylinder::level(center, 0);
    let h = traj.mean_curvature_field();
    let one = traj.constant_field(1.0);
    let (h_norm, samples) = region_norm(traj, &h, p, &d)?;
    let (one_norm, _) = region_norm(traj, &one, p, &d)?;
    let (one_norm_q, _) = region_norm(traj, &one, p * p / (2.0 * n as f64), &d)?;
    let sum = h_norm + b * one_norm;
    let (c1, c_n) = (constants.c1, constants.c_n);
    let c3 = c3_constant(n, c1, c_n, h_norm, b, one_norm, one_norm_q);
    let c_d = cd_constant(n, c1, c3, c_n);
    let d2 = delta2(n, c1, c_n);
    let hypothesis = sum <= d2;
    let h_plus = traj.field(|_, s| s.mean_curvature().iter().map(|h| h.max(0.0)).collect());
    let sup_h_plus = region_sup(traj, &h_plus, &ParabolicCylinder::inner(center))?.unwrap_or(0.0);
    let bound = c_d * sum;
    Ok(MeanCurvatureBound {
        b,
        h_norm,
        one_norm,
        one_norm_q,
        sum,
        c1,
        c3,
        c_d,
        delta2: d2,
        hypothesis,
        sup_h_plus,
        bound,
        bound_holds: hypothesis.then_some(sup_h_plus <= bound),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{evolve, StopCriteria};
    use crate::shapes::icosphere;
    use std::f64::consts::PI;

    fn sphere_traj(level: usize, r0: f64, t_end: f64) -> FlowTrajectory {
        let stop = StopCriteria {
            max_time: t_end,
            max_steps: 1_000_000,
            h_max: 1e3,
            dt_floor: 1e-12,
        };
        evolve(&icosphere(level, r0).unwrap(), &stop, 1).unwrap()
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio(0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(ratio(1.0, 0.0), Err(IneqError::ZeroRhs { .. })));
        assert_eq!(ratio(1.0, 4.0).unwrap(), 0.25);
    }

    #[test]
    fn michael_simon_unit_sphere_constant() {
        let m = icosphere(4, 1.0).unwrap();
        let area = m.total_area();
        let r = michael_simon_check(&m, &vec![1.0; m.len()]).unwrap();
        assert!((r.lhs - area.sqrt()).abs() < 1e-12);
        assert!((r.lhs - (4.0 * PI).sqrt()).abs() < 5e-3);
        assert!((r.rhs - 8.0 * PI).abs() / (8.0 * PI) < 5e-3);
        assert!((r.ratio - 0.14105).abs() < 1e-3);
        let zero = michael_simon_check(&m, &vec![0.0; m.len()]).unwrap();
        assert_eq!(zero.ratio, 0.0);
    }

    #[test]
    fn michael_simon_rejects_negative_and_curves() {
        let m = icosphere(1, 1.0).unwrap();
        let mut f = vec![1.0; m.len()];
        f[3] = -0.5;
        assert!(matches!(
            michael_simon_check(&m, &f),
            Err(IneqError::NegativeFunction { index: 3, .. })
        ));
        let c = crate::shapes::circle(16, 1.0).unwrap();
        assert!(matches!(
            michael_simon_check(&c, &[1.0; 16]),
            Err(IneqError::UnsupportedDimension(1))
        ));
    }

    #[test]
    fn slice_sobolev_constant_on_sphere() {
        let m = icosphere(3, 1.0).unwrap();
        let a = m.total_area();
        let r = lemma31_check(&m, &vec![1.0; m.len()], 3.0).unwrap();
        assert!((r.lhs - a.powf(1.0 / 3.0)).abs() < 1e-12);
        let h4: f64 = m.mean_curvature().iter().zip(m.area_weights()).map(|(h, w)| h.powi(4) * w).sum();
        assert!((r.rhs - h4 * a).abs() < 1e-9 * r.rhs);
        let z = lemma31_check(&m, &vec![0.0; m.len()], 3.0).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
    }

    #[test]
    fn interpolation_constant_field() {
        let m = icosphere(2, 1.0).unwrap();
        let a = m.total_area();
        let r = interpolation_check(&m, &vec![1.0; m.len()], 2.0, 3.0, 6.0, 1.0).unwrap();
        assert!((r.mu - 1.0).abs() < 1e-15);
        assert!((r.lhs - a.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((r.rhs - (a.powf(1.0 / 6.0) + a.sqrt())).abs() < 1e-12);
        assert!(r.holds);
        assert!(interpolation_check(&m, &vec![1.0; m.len()], 3.0, 2.0, 6.0, 1.0).is_err());
    }

    #[test]
    fn region_norm_matches_spacetime_norm() {
        let traj = sphere_traj(2, 2.0, 1.05);
        let h = traj.mean_curvature_field();
        let cyl = ParabolicCylinder::level(traj.snapshot(0).position(0), 0);
        let (a, sa) = region_norm(&traj, &h, 8.0, &cyl).unwrap();
        let b = crate::spacetime::spacetime_norm(&traj, &h, 8.0, Some(&cyl)).unwrap();
        assert_eq!(sa, b.samples);
        assert!((a - b.value).abs() < 1e-12 * b.value);
    }

    #[test]
    fn constant_subsolution_certifies() {
        let traj = sphere_traj(2, 2.5, 1.02);
        let one = traj.constant_field(1.0);
        let sub = Subsolution::check_default(&traj, &one, &one).unwrap();
        assert!(sub.worst_residual() < 0.0);
        let center = traj.snapshot(0).position(0);
        let c = constants_for(&traj, &one, 4.0, 4.0, C_N_EMP).unwrap();
        let rh = reverse_holder_check(&sub, center, 4.0, 1, &c).unwrap();
        assert!(rh.certified);
        assert_eq!(rh.outside_d, 0);
    }

    #[test]
    fn planted_violation_detected() {
        let traj = sphere_traj(1, 2.5, 1.02);
        let tol = subsolution_tolerance(&traj).unwrap();
        let f = traj.constant_field(1.0);
        let v = traj.field(|j, s| vec![1e3 * (tol + 1.0) * (2.0 * traj.time(j)).exp(); s.len()]);
        assert!(matches!(
            Subsolution::check(&traj, &v, &f, tol),
            Err(IneqError::NotSubsolution { .. })
        ));
    }
}
