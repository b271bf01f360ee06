//! Piecewise-polynomial reconstructions of the numerical solution inside
//! one accepted step.
//!
//! Each accepted step `(u_n, u_{n+1})` is extended to a continuous
//! function of local time `tau in [0, dt]` whose residual
//! `u_hat'(tau) - f(t_n + tau, u_hat(tau))` drives the residual error
//! estimators. The degree matches the order of the generating method so
//! the residual preserves its convergence rate:
//!
//! * [`Reconstruction::linear`] - interpolates the endpoints (Euler);
//! * [`Reconstruction::quadratic_left`] - additionally matches the slope
//!   `f_n` at the left endpoint (second-order methods);
//! * [`Reconstruction::cubic_central`] - Hermite cubic matching values and
//!   slopes at both endpoints (third-order methods).
//!
//! Coefficients are stored per component in the monomial basis in local
//! time, so evaluation and differentiation are plain Horner loops.

use crate::{Error, Result};

/// Reconstruction degree used by each method in the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionKind {
    Linear,
    QuadraticLeft,
    CubicCentral,
}

impl ReconstructionKind {
    /// The reconstruction paired with each method: degree equal to the
    /// method's order keeps the residual at the method's convergence
    /// rate.
    pub fn for_method(method: crate::tableau::Method) -> ReconstructionKind {
        match method {
            crate::tableau::Method::Euler => ReconstructionKind::Linear,
            crate::tableau::Method::Heun2Euler1 => ReconstructionKind::QuadraticLeft,
            crate::tableau::Method::Bs3 => ReconstructionKind::CubicCentral,
        }
    }
}

/// Polynomial reconstruction of one step, evaluable at any local time
/// `tau in [0, dt]`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub kind: ReconstructionKind,
    /// Step length; the reconstruction lives on `[0, dt]` in local time.
    pub dt: f64,
    /// `coeffs[c]` holds the ascending monomial coefficients of component
    /// `c` as a function of local time.
    coeffs: Vec<Vec<f64>>,
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput {
            message: format!("reconstruction step size must be positive and finite, got {dt}"),
        })
    }
}

impl Reconstruction {
    /// Straight line between the endpoint values.
    pub fn linear(u_n: &[f64], u_np1: &[f64], dt: f64) -> Result<Reconstruction> {
        check_dt(dt)?;
        let coeffs = u_n
            .iter()
            .zip(u_np1)
            .map(|(&u0, &u1)| vec![u0, (u1 - u0) / dt])
            .collect();
        Ok(Reconstruction { kind: ReconstructionKind::Linear, dt, coeffs })
    }

    /// Quadratic matching `u_n`, the left slope `f_n`, and `u_{n+1}`.
    pub fn quadratic_left(
        u_n: &[f64],
        f_n: &[f64],
        u_np1: &[f64],
        dt: f64,
    ) -> Result<Reconstruction> {
        check_dt(dt)?;
        let coeffs = u_n
            .iter()
            .zip(f_n)
            .zip(u_np1)
            .map(|((&u0, &d0), &u1)| vec![u0, d0, (u1 - u0) / (dt * dt) - d0 / dt])
            .collect();
        Ok(Reconstruction { kind: ReconstructionKind::QuadraticLeft, dt, coeffs })
    }

    /// Cubic Hermite interpolant matching values and slopes at both
    /// endpoints.
    pub fn cubic_central(
        u_n: &[f64],
        f_n: &[f64],
        u_np1: &[f64],
        f_np1: &[f64],
        dt: f64,
    ) -> Result<Reconstruction> {
        check_dt(dt)?;
        let dt2 = dt * dt;
        let dt3 = dt2 * dt;
        let coeffs = u_n
            .iter()
            .zip(f_n)
            .zip(u_np1)
            .zip(f_np1)
            .map(|(((&u0, &d0), &u1), &d1)| {
                let du = u1 - u0;
                vec![
                    u0,
                    d0,
                    3.0 * du / dt2 - (2.0 * d0 + d1) / dt,
                    -2.0 * du / dt3 + (d0 + d1) / dt2,
                ]
            })
            .collect();
        Ok(Reconstruction { kind: ReconstructionKind::CubicCentral, dt, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Polynomial degree of the reconstruction.
    pub fn degree(&self) -> usize {
        match self.kind {
            ReconstructionKind::Linear => 1,
            ReconstructionKind::QuadraticLeft => 2,
            ReconstructionKind::CubicCentral => 3,
        }
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if (0.0..=self.dt).contains(&tau) {
            Ok(())
        } else {
            Err(Error::OutOfStepRange { tau, dt: self.dt })
        }
    }

    /// Value `u_hat(tau)`.
    pub fn eval(&self, tau: f64) -> Result<Vec<f64>> {
        self.check_tau(tau)?;
        Ok(self
            .coeffs
            .iter()
            .map(|c| c.iter().rev().fold(0.0, |acc, &a| acc * tau + a))
            .collect())
    }

    /// Derivative `u_hat'(tau)` with respect to local time.
    pub fn eval_derivative(&self, tau: f64) -> Result<Vec<f64>> {
        self.check_tau(tau)?;
        Ok(self
            .coeffs
            .iter()
            .map(|c| {
                let mut acc = 0.0;
                for k in (1..c.len()).rev() {
                    acc = acc * tau + k as f64 * c[k];
                }
                acc
            })
            .collect())
    }
}
