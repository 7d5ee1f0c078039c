//! Closed-form constants of the Moser iteration.

use serde::Serialize;

use super::IneqError;
use crate::spacetime::{spacetime_norm, FlowTrajectory};

/// `Λ(β) = 100 β`.
pub const LAMBDA_SLOPE: f64 = 100.0;

/// `(n + 2) / 2`, the critical integrability exponent of `f`.
pub fn critical_exponent(n: usize) -> f64 {
    (n as f64 + 2.0) / 2.0
}

/// `λ = (n + 2) / n`.
pub fn lambda_of(n: usize) -> f64 {
    (n as f64 + 2.0) / n as f64
}

/// `ν = (n+2)/(2q − (n+2))`, `None` at the critical exponent.
pub fn nu_of(n: usize, q: f64) -> Option<f64> {
    let np2 = n as f64 + 2.0;
    (q > critical_exponent(n)).then(|| np2 / (2.0 * q - np2))
}

/// Every constant of the supercritical iteration for one choice of
/// `(n, q, β, C₀, C₁, c_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub n: usize,
    pub q: f64,
    pub beta: f64,
    /// Unused (`None`) at the critical exponent.
    pub nu: Option<f64>,
    pub lambda: f64,
    /// `Λ(β)`.
    pub big_lambda: f64,
    pub c_n: f64,
    pub c0: f64,
    pub c1: f64,
    pub c_a: Option<f64>,
    pub c_z: Option<f64>,
    pub c_b: Option<f64>,
    pub c_c: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub c3: Option<f64>,
    pub c_d: Option<f64>,
}

impl ConstantsTable {
    pub fn big_lambda_of(&self, beta: f64) -> f64 {
        LAMBDA_SLOPE * beta
    }

    /// Attaches `C₃` and the `C_d` it induces.
    pub fn with_c3(mut self, c3: f64) -> Self {
        self.c3 = Some(c3);
        self.c_d = Some(cd_constant(self.n, self.c1, c3, self.c_n));
        self
    }
}

fn c_a(c_n: f64, c0: f64, c1: f64, nu: f64) -> f64 {
    (2.0 * c_n * c0 * c1).powf(1.0 + nu)
}

fn c_z(c_n: f64, c_a: f64, nu: f64) -> f64 {
    16.0 * LAMBDA_SLOPE.powf(1.0 + nu) * c_n * c_a
}

fn c_b(n: usize, beta: f64, c_z: f64, nu: f64) -> f64 {
    let lambda = lambda_of(n);
    let n2 = (n * n) as f64;
    (4.0 * lambda.powf(1.0 + nu) * c_z * beta.powf(1.0 + nu)).powf(n2 / beta)
}

/// `C_c = (c_n C₁ Λ(β))^{1/β}`.
pub fn c_c(_n: usize, beta: f64, c1: f64, c_n: f64) -> f64 {
    (c_n * c1 * LAMBDA_SLOPE * beta).powf(1.0 / beta)
}

/// `δ₁ = 1 / (2 c_n C₁ Λ(β))`.
pub fn delta1(_n: usize, beta: f64, c1: f64, c_n: f64) -> f64 {
    1.0 / (2.0 * c_n * c1 * LAMBDA_SLOPE * beta)
}

/// `δ₂ = (δ₁(n, n+2, C₁) / c_n)^{1/2}`.
pub fn delta2(n: usize, c1: f64, c_n: f64) -> f64 {
    (delta1(n, n as f64 + 2.0, c1, c_n) / c_n).sqrt()
}

/// `C₃ = 2 C_c(n, n+2, C₁)² (‖H‖² + n²B²‖1‖²_{L^{n+2}} + nB²‖1‖_{L^{(n+2)²/(2n)}})`.
pub fn c3_constant(n: usize, c1: f64, c_n: f64, h_norm: f64, b: f64, one_norm: f64, one_norm_q: f64) -> f64 {
    let nf = n as f64;
    let cc = c_c(n, nf + 2.0, c1, c_n);
    2.0 * cc * cc * (h_norm * h_norm + nf * nf * b * b * one_norm * one_norm + nf * b * b * one_norm_q)
}

/// `C_d = n C_b(n, (n+2)²/(2n), n+2, C₃, C₁) C_c(n, n+2, C₁)`.
pub fn cd_constant(n: usize, c1: f64, c3: f64, c_n: f64) -> f64 {
    let nf = n as f64;
    let beta = nf + 2.0;
    let q = beta * beta / (2.0 * nf);
    let nu = nu_of(n, q).expect("q exceeds the critical exponent");
    let cz = c_z(c_n, c_a(c_n, c3, c1, nu), nu);
    nf * c_b(n, beta, cz, nu) * c_c(n, beta, c1, c_n)
}

pub fn constants_table(n: usize, q: f64, beta: f64, c0: f64, c1: f64, c_n: f64) -> Result<ConstantsTable, IneqError> {
    let critical = critical_exponent(n);
    if n == 0 {
        return Err(IneqError::InvalidParameter("dimension must be positive".into()));
    }
    if q < critical {
        return Err(IneqError::SubcriticalExponent { q, critical });
    }
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(IneqError::InvalidParameter(format!("beta must exceed 1, got {beta}")));
    }
    if !(c_n > 0.0 && c_n.is_finite()) {
        return Err(IneqError::InvalidParameter(format!("c_n must be positive, got {c_n}")));
    }
    if !(c0 >= 0.0 && c0.is_finite()) || !(c1 >= 1.0 && c1.is_finite()) {
        return Err(IneqError::InvalidParameter(format!("need C0 >= 0 and C1 >= 1, got {c0}, {c1}")));
    }
    let nu = nu_of(n, q);
    let ca = nu.map(|nu| c_a(c_n, c0, c1, nu));
    let cz = nu.zip(ca).map(|(nu, ca)| c_z(c_n, ca, nu));
    let cb = nu.zip(cz).map(|(nu, cz)| c_b(n, beta, cz, nu));
    Ok(ConstantsTable {
        n,
        q,
        beta,
        nu,
        lambda: lambda_of(n),
        big_lambda: LAMBDA_SLOPE * beta,
        c_n,
        c0,
        c1,
        c_a: ca,
        c_z: cz,
        c_b: cb,
        c_c: c_c(n, beta, c1, c_n),
        delta1: delta1(n, beta, c1, c_n),
        delta2: delta2(n, c1, c_n),
        c3: None,
        c_d: None,
    })
}

/// Table with `C₀ = ‖f‖_{L^q(S)}` and `C₁ = (1 + ‖H‖^{n+2}_{L^{n+2}(S)})^{n/(n+2)}`
/// measured on `traj`.
pub fn constants_for(
    traj: &FlowTrajectory,
    f: &[Vec<f64>],
    q: f64,
    beta: f64,
    c_n: f64,
) -> Result<ConstantsTable, IneqError> {
    let n = traj.dim();
    let np2 = n as f64 + 2.0;
    let c0 = spacetime_norm(traj, f, q.max(1.0), None)?.value;
    let h = spacetime_norm(traj, &traj.mean_curvature_field(), np2, None)?.value;
    let c1 = (1.0 + h.powf(np2)).powf(n as f64 / np2);
    constants_table(n, q, beta, c0, c1, c_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_curvature_bound_exponents() {
        let t = constants_table(2, 4.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(t.nu, Some(1.0));
        assert_eq!(t.lambda, 2.0);
        assert_eq!(t.big_lambda, 400.0);
    }

    #[test]
    fn closed_forms() {
        let (c_n, c0, c1) = (0.5, 2.0, 1.5);
        let t = constants_table(2, 4.0, 4.0, c0, c1, c_n).unwrap();
        let ca = (2.0 * c_n * c0 * c1) * (2.0 * c_n * c0 * c1);
        assert!((t.c_a.unwrap() - ca).abs() < 1e-12 * ca);
        let cz = 16.0 * 1e4 * c_n * ca;
        assert!((t.c_z.unwrap() - cz).abs() < 1e-12 * cz);
        let cb = (4.0 * 4.0 * cz * 16.0f64).powf(1.0);
        assert!((t.c_b.unwrap() - cb).abs() < 1e-12 * cb);
        assert!((t.c_c - (c_n * c1 * 400.0f64).powf(0.25)).abs() < 1e-12);
        assert!((t.delta1 - 1.0 / (2.0 * c_n * c1 * 400.0)).abs() < 1e-15);
        assert!((t.delta2 - (t.delta1 / c_n).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_c0_propagates() {
        let t = constants_table(2, 4.0, 4.0, 0.0, 1.3, 0.7).unwrap();
        assert_eq!(t.c_a, Some(0.0));
        let u = constants_table(2, 4.0, 4.0, 5.0, 1.3, 0.7).unwrap();
        assert_eq!(t.delta1, u.delta1);
    }

    #[test]
    fn doubling_c1() {
        let a = constants_table(2, 4.0, 4.0, 1.0, 1.2, 0.3).unwrap();
        let b = constants_table(2, 4.0, 4.0, 1.0, 2.4, 0.3).unwrap();
        assert!((b.delta1 - a.delta1 / 2.0).abs() < 1e-15);
        assert!((b.delta2 - a.delta2 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn critical_and_subcritical() {
        let t = constants_table(2, 2.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        assert!(t.nu.is_none() && t.c_a.is_none() && t.c_b.is_none());
        assert!(matches!(
            constants_table(2, 1.5, 4.0, 1.0, 1.0, 1.0),
            Err(IneqError::SubcriticalExponent { .. })
        ));
    }

    #[test]
    fn monotone_on_grid() {
        let grid = [0.1, 0.5, 1.0, 2.0, 8.0];
        for n in [1, 2] {
            let q = lambda_of(n) * critical_exponent(n);
            for (i, &c0) in grid.iter().enumerate() {
                for (j, &c1x) in grid.iter().enumerate() {
                    let c1 = 1.0 + c1x;
                    let t = constants_table(n, q, 4.0, c0, c1, 0.4).unwrap();
                    if i + 1 < grid.len() {
                        let u = constants_table(n, q, 4.0, grid[i + 1], c1, 0.4).unwrap();
                        assert!(u.c_a >= t.c_a && u.c_b >= t.c_b && u.c_c >= t.c_c);
                        assert!(cd_constant(n, c1, grid[i + 1], 0.4) >= cd_constant(n, c1, c0, 0.4));
                    }
                    if j + 1 < grid.len() {
                        let c1b = 1.0 + grid[j + 1];
                        let u = constants_table(n, q, 4.0, c0, c1b, 0.4).unwrap();
                        assert!(u.c_a >= t.c_a && u.c_b >= t.c_b && u.c_c >= t.c_c);
                        assert!(u.delta1 <= t.delta1 && u.delta2 <= t.delta2);
                        assert!(cd_constant(n, c1b, c0, 0.4) >= cd_constant(n, c1, c0, 0.4));
                    }
                }
            }
        }
    }
}
