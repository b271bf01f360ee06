//! Weighted error estimators that decide step acceptance.
//!
//! All estimators produce a dimensionless weighted measure `w`; a step is
//! accepted when `w <= 1`, i.e. the estimate is under the prescribed
//! tolerance.
//!
//! * [`embedded_estimate`] - the classical pairwise estimate: an RMS norm
//!   of the difference between the update and the embedded solution,
//!   scaled componentwise by `tau_a + tau_r * max(|u_n|, |u_{n+1}|)`.
//! * [`residual_norm_l1`] / [`residual_norm_l2`] - norms of the defect
//!   `u_hat'(tau) - f(t_n + tau, u_hat(tau))` of a
//!   [`Reconstruction`](crate::reconstruction::Reconstruction), computed
//!   with adaptive Gauss-Kronrod quadrature, then scaled by
//!   [`weighted_residual_estimate`]. The L2 variant carries a `sqrt(dt)`
//!   factor so both scale identically on smooth problems.
//!
//! An unconverged quadrature does not abort: the returned raw norm is
//! inflated by the outstanding error bound, which makes the step
//! controller conservative exactly when the defect is hard to integrate.

mod quadrature;

pub use quadrature::{gauss_kronrod, integrate, QuadratureResult, QuadratureSettings};

use crate::reconstruction::Reconstruction;
use crate::{euclidean_norm, Error, Result};

/// Selects how the step error is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Embedded,
    ResidualL1,
    ResidualL2,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::Embedded,
        EstimatorKind::ResidualL1,
        EstimatorKind::ResidualL2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Embedded => "embedded",
            EstimatorKind::ResidualL1 => "residual-l1",
            EstimatorKind::ResidualL2 => "residual-l2",
        }
    }

    pub fn from_name(name: &str) -> Result<EstimatorKind> {
        match name {
            "embedded" => Ok(EstimatorKind::Embedded),
            "residual-l1" => Ok(EstimatorKind::ResidualL1),
            "residual-l2" => Ok(EstimatorKind::ResidualL2),
            _ => Err(Error::UnknownEstimator { name: name.to_string() }),
        }
    }

    pub fn is_residual(&self) -> bool {
        !matches!(self, EstimatorKind::Embedded)
    }

    /// Default control order `k` for a method of classical order `p`:
    /// the embedded estimate shrinks like `dt^p`, the residual norms like
    /// `dt^(p+1)`.
    pub fn default_control_order(&self, method_order: u32) -> f64 {
        if self.is_residual() {
            (method_order + 1) as f64
        } else {
            method_order as f64
        }
    }
}

/// A weighted error measure together with its unweighted ingredient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    /// Dimensionless weighted measure; accept the step iff `w <= 1`.
    pub w: f64,
    /// Unweighted norm (Euclidean difference for the embedded estimate,
    /// quadrature norm for residual estimates).
    pub raw_norm: f64,
}

/// Classical embedded estimate
/// `w = sqrt(mean_i ((u_i - u_hat_i) / (tau_a + tau_r * max(|u_n_i|, |u_np1_i|)))^2)`.
pub fn embedded_estimate(
    u_n: &[f64],
    u_np1: &[f64],
    u_hat: &[f64],
    tau_a: f64,
    tau_r: f64,
) -> Result<ErrorEstimate> {
    let m = u_np1.len();
    if m == 0 || u_n.len() != m || u_hat.len() != m {
        return Err(Error::InvalidInput {
            message: "embedded estimate needs equal-length non-empty states".to_string(),
        });
    }
    let mut sum = 0.0;
    let mut raw = 0.0;
    for i in 0..m {
        let denom = tau_a + tau_r * u_np1[i].abs().max(u_n[i].abs());
        if denom == 0.0 {
            return Err(Error::ZeroErrorDenominator);
        }
        let diff = u_np1[i] - u_hat[i];
        raw += diff * diff;
        let r = diff / denom;
        sum += r * r;
    }
    Ok(ErrorEstimate { w: (sum / m as f64).sqrt(), raw_norm: raw.sqrt() })
}

/// Raw residual norm from quadrature, with the convergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorm {
    /// Norm of the residual over the step. If the quadrature did not
    /// converge this is already inflated by the outstanding error bound.
    pub raw: f64,
    pub quadrature_converged: bool,
    pub subdivisions: u32,
}

fn residual_magnitude<F>(rec: &Reconstruction, f: &F, t_n: f64, tau: f64) -> f64
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let u_hat = rec.eval(tau).expect("quadrature node inside step");
    let du_hat = rec.eval_derivative(tau).expect("quadrature node inside step");
    let rhs = f(t_n + tau, &u_hat);
    let mut sum = 0.0;
    for (d, r) in du_hat.iter().zip(&rhs) {
        let diff = d - r;
        sum += diff * diff;
    }
    sum.sqrt()
}

/// `integral over [0, dt] of |u_hat'(tau) - f(t_n + tau, u_hat(tau))| dtau`.
pub fn residual_norm_l1<F>(
    rec: &Reconstruction,
    f: F,
    t_n: f64,
    settings: &QuadratureSettings,
) -> ResidualNorm
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let result = integrate(|tau| residual_magnitude(rec, &f, t_n, tau), 0.0, rec.dt, settings);
    let raw = if result.converged {
        result.value
    } else {
        result.value + result.error_estimate
    };
    ResidualNorm {
        raw,
        quadrature_converged: result.converged,
        subdivisions: result.subdivisions,
    }
}

/// `sqrt(dt) * L2 norm` of the residual over the step: the extra
/// `sqrt(dt)` makes the L1 and L2 variants dimensionally interchangeable.
pub fn residual_norm_l2<F>(
    rec: &Reconstruction,
    f: F,
    t_n: f64,
    settings: &QuadratureSettings,
) -> ResidualNorm
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let result = integrate(
        |tau| {
            let r = residual_magnitude(rec, &f, t_n, tau);
            r * r
        },
        0.0,
        rec.dt,
        settings,
    );
    let squared = if result.converged {
        result.value
    } else {
        result.value + result.error_estimate
    };
    // Roundoff can push a tiny squared integral below zero.
    let raw = (rec.dt * squared.max(0.0)).sqrt();
    ResidualNorm {
        raw,
        quadrature_converged: result.converged,
        subdivisions: result.subdivisions,
    }
}

/// Scales a raw residual norm into the dimensionless measure
/// `w = raw / (tau_a + tau_r * max(|u_n|, |u_np1|))` (Euclidean norms).
pub fn weighted_residual_estimate(
    raw: f64,
    u_n: &[f64],
    u_np1: &[f64],
    tau_a: f64,
    tau_r: f64,
) -> Result<ErrorEstimate> {
    let denom = tau_a + tau_r * euclidean_norm(u_n).max(euclidean_norm(u_np1));
    if denom == 0.0 {
        return Err(Error::ZeroErrorDenominator);
    }
    Ok(ErrorEstimate { w: raw / denom, raw_norm: raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::Reconstruction;
    use crate::tableau::{rk_step, Method};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embedded_estimate_rms_example() {
        // Differences (1e-4, 2e-4) against flat weights 1e-4 give
        // w = sqrt((1 + 4) / 2).
        let u_n = [0.0, 0.0];
        let u_np1 = [1e-4, 2e-4];
        let u_hat = [0.0, 0.0];
        let est = embedded_estimate(&u_n, &u_np1, &u_hat, 1e-4, 0.0).unwrap();
        assert_relative_eq!(est.w, (2.5f64).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let err = embedded_estimate(&[0.0], &[0.0], &[1.0], 0.0, 1.0).unwrap_err();
        assert_eq!(err, Error::ZeroErrorDenominator);
        let err = weighted_residual_estimate(1.0, &[0.0], &[0.0], 0.0, 1.0).unwrap_err();
        assert_eq!(err, Error::ZeroErrorDenominator);
    }

    #[test]
    fn estimator_names_round_trip() {
        for kind in EstimatorKind::ALL {
            assert_eq!(EstimatorKind::from_name(kind.name()).unwrap(), kind);
        }
        assert!(EstimatorKind::from_name("residual-linf").is_err());
    }

    #[test]
    fn default_control_orders() {
        assert_eq!(EstimatorKind::Embedded.default_control_order(2), 2.0);
        assert_eq!(EstimatorKind::ResidualL1.default_control_order(2), 3.0);
        assert_eq!(EstimatorKind::ResidualL2.default_control_order(3), 4.0);
    }

    /// Complex scalar test problem u' = lambda u encoded as a 2-vector;
    /// the Euclidean norm of the encoding equals the complex modulus, so
    /// scalar closed forms apply verbatim.
    fn complex_rhs(lambda: Complex64) -> impl Fn(f64, &[f64]) -> Vec<f64> {
        move |_t, u| {
            let z = Complex64::new(u[0], u[1]) * lambda;
            vec![z.re, z.im]
        }
    }

    fn random_case(rng: &mut ChaCha8Rng) -> (Complex64, f64, Vec<f64>) {
        // Decaying-to-oscillatory lambda, moderate magnitudes.
        let lambda = Complex64::new(rng.gen_range(-4.0..-0.05), rng.gen_range(-3.0..3.0));
        let dt = rng.gen_range(0.05..1.0);
        let u = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        (lambda, dt, u)
    }

    #[test]
    fn euler_residual_norms_match_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let settings = QuadratureSettings::default();
        for _ in 0..20 {
            let (lambda, dt, u) = random_case(&mut rng);
            if euclidean_norm(&u) < 0.1 {
                continue;
            }
            let f = complex_rhs(lambda);
            let step = rk_step(&Method::Euler.tableau(), &f, 0.0, &u, dt, None).unwrap();
            let rec = Reconstruction::linear(&u, &step.u_next, dt).unwrap();
            let norm_u = euclidean_norm(&u);
            let expected_l1 = 0.5 * dt * dt * lambda.norm_sqr() * norm_u;
            let expected_l2 = dt * dt * lambda.norm_sqr() * norm_u / 3f64.sqrt();
            let l1 = residual_norm_l1(&rec, &f, 0.0, &settings);
            let l2 = residual_norm_l2(&rec, &f, 0.0, &settings);
            assert!(l1.quadrature_converged && l2.quadrature_converged);
            assert_relative_eq!(l1.raw, expected_l1, max_relative = 1e-7);
            assert_relative_eq!(l2.raw, expected_l2, max_relative = 1e-7);
        }
    }

    #[test]
    fn heun_residual_norms_match_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let settings = QuadratureSettings::default();
        for _ in 0..20 {
            let (lambda, dt, u) = random_case(&mut rng);
            if euclidean_norm(&u) < 0.1 {
                continue;
            }
            let f = complex_rhs(lambda);
            let step = rk_step(&Method::Heun2Euler1.tableau(), &f, 0.0, &u, dt, None).unwrap();
            let rec =
                Reconstruction::quadratic_left(&u, &step.stages[0], &step.u_next, dt).unwrap();
            let norm_u = euclidean_norm(&u);
            let l3 = lambda.norm().powi(3);
            let expected_l1 = dt.powi(3) * l3 * norm_u / 6.0;
            let expected_l2 = dt.powi(3) * l3 * norm_u / (2.0 * 5f64.sqrt());
            let l1 = residual_norm_l1(&rec, &f, 0.0, &settings);
            let l2 = residual_norm_l2(&rec, &f, 0.0, &settings);
            assert_relative_eq!(l1.raw, expected_l1, max_relative = 1e-7);
            assert_relative_eq!(l2.raw, expected_l2, max_relative = 1e-7);
        }
    }

    #[test]
    fn bs3_l2_residual_norm_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let settings = QuadratureSettings::default();
        for _ in 0..20 {
            let (lambda, dt, u) = random_case(&mut rng);
            if euclidean_norm(&u) < 0.1 {
                continue;
            }
            let f = complex_rhs(lambda);
            let step = rk_step(&Method::Bs3.tableau(), &f, 0.0, &u, dt, None).unwrap();
            let rec = Reconstruction::cubic_central(
                &u,
                &step.stages[0],
                &step.u_next,
                step.f_next.as_deref().unwrap(),
                dt,
            )
            .unwrap();
            let z = lambda * dt;
            let shape = (8.0 + z.norm_sqr() - 5.0 * z.re).sqrt();
            let expected = dt.powi(4) * lambda.norm().powi(4) * euclidean_norm(&u) * shape
                / (6.0 * 105f64.sqrt());
            let l2 = residual_norm_l2(&rec, &f, 0.0, &settings);
            assert_relative_eq!(l2.raw, expected, max_relative = 1e-7);
        }
    }

    /// Spec-level spot value: bs3 cubic reconstruction on u' = -u with
    /// dt = 1 from u = 1 has L2 residual norm
    /// sqrt(14/105) / 6 = 0.0608581...
    #[test]
    fn bs3_l2_spot_value() {
        let f = |_t: f64, u: &[f64]| vec![-u[0], 0.0];
        let u = [1.0, 0.0];
        let step = rk_step(&Method::Bs3.tableau(), f, 0.0, &u, 1.0, None).unwrap();
        let rec = Reconstruction::cubic_central(
            &u,
            &step.stages[0],
            &step.u_next,
            step.f_next.as_deref().unwrap(),
            1.0,
        )
        .unwrap();
        let l2 = residual_norm_l2(&rec, &f, 0.0, &QuadratureSettings::default());
        assert_relative_eq!(l2.raw, 0.060858061945018, max_relative = 1e-9);
    }

    /// The L1 norm never exceeds the sqrt(dt)-weighted L2 norm
    /// (Cauchy-Schwarz).
    #[test]
    fn l1_below_l2() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let settings = QuadratureSettings::default();
        for _ in 0..20 {
            let (lambda, dt, u) = random_case(&mut rng);
            let f = complex_rhs(lambda);
            let step = rk_step(&Method::Heun2Euler1.tableau(), &f, 0.0, &u, dt, None).unwrap();
            let rec =
                Reconstruction::quadratic_left(&u, &step.stages[0], &step.u_next, dt).unwrap();
            let l1 = residual_norm_l1(&rec, &f, 0.0, &settings);
            let l2 = residual_norm_l2(&rec, &f, 0.0, &settings);
            assert!(l1.raw <= l2.raw * (1.0 + 1e-10), "l1 {} l2 {}", l1.raw, l2.raw);
        }
    }

    /// Scaling all inputs by s scales the raw norms by |s| (the
    /// reconstructions and the rhs here are linear).
    #[test]
    fn residual_norms_are_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let settings = QuadratureSettings::default();
        let lambda = Complex64::new(-1.2, 0.7);
        let f = complex_rhs(lambda);
        for _ in 0..10 {
            let scale: f64 = rng.gen_range(-50.0..50.0);
            let u = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let dt = rng.gen_range(0.1..0.9);
            let step = rk_step(&Method::Euler.tableau(), &f, 0.0, &u, dt, None).unwrap();
            let rec = Reconstruction::linear(&u, &step.u_next, dt).unwrap();
            let base = residual_norm_l1(&rec, &f, 0.0, &settings).raw;

            let u_s: Vec<f64> = u.iter().map(|x| x * scale).collect();
            let step_s = rk_step(&Method::Euler.tableau(), &f, 0.0, &u_s, dt, None).unwrap();
            let rec_s = Reconstruction::linear(&u_s, &step_s.u_next, dt).unwrap();
            let scaled = residual_norm_l1(&rec_s, &f, 0.0, &settings).raw;
            assert_relative_eq!(scaled, base * scale.abs(), max_relative = 1e-9);
        }
    }

    /// An exhausted quadrature budget inflates the raw norm instead of
    /// erroring out.
    #[test]
    fn unconverged_quadrature_inflates_raw_norm() {
        let f = complex_rhs(Complex64::new(-2.0, 1.0));
        let u = [1.0, 0.5];
        let step = rk_step(&Method::Heun2Euler1.tableau(), &f, 0.0, &u, 0.7, None).unwrap();
        let rec = Reconstruction::quadratic_left(&u, &step.stages[0], &step.u_next, 0.7).unwrap();
        let strict = QuadratureSettings { rtol: 1e-15, atol: 0.0, max_subdiv: 0 };
        let flagged = residual_norm_l1(&rec, &f, 0.0, &strict);
        let converged =
            residual_norm_l1(&rec, &f, 0.0, &QuadratureSettings::default());
        assert!(!flagged.quadrature_converged);
        assert!(flagged.raw > converged.raw);
    }

    #[test]
    fn weighted_residual_uses_larger_endpoint_norm() {
        let est = weighted_residual_estimate(1.0, &[3.0, 4.0], &[0.1, 0.0], 0.5, 0.1).unwrap();
        // denom = 0.5 + 0.1 * 5 = 1.0
        assert_relative_eq!(est.w, 1.0, max_relative = 1e-15);
        assert_eq!(est.raw_norm, 1.0);
    }
}
