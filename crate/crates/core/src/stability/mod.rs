//! Step-size-control stability analysis on the linear test problem
//! `u' = lambda u`.
//!
//! For a step size that puts `z = dt * lambda` on the stability boundary
//! `|R(z)| = 1`, the coupled dynamics of the logarithmic solution
//! magnitude and step size under a PID-family controller linearize to a
//! small Jacobian whose entries depend on two numbers: the boundary
//! slope `mu = Re(R'(z) z / R(z))` and the error estimate's logarithmic
//! step-size sensitivity (`nu = Re(E'(z) z / E(z))` for the embedded
//! difference polynomial, or `q = d log|e| / d log dt` for residual
//! estimators). The controller is stable at that boundary point iff the
//! Jacobian's spectral radius stays below one; [`stability_map`] sweeps
//! the boundary ray by ray and reports the radius at each crossing.
//!
//! Accept/reject chatter observed on real problems (many rejected steps
//! in a narrow parameter band) corresponds exactly to rays where the
//! radius exceeds one.

pub mod eigen;

pub use eigen::spectral_radius;

use crate::controller::ControllerConfig;
use crate::estimators::{integrate, EstimatorKind, QuadratureSettings};
use crate::tableau::{Method, Polynomial};
use crate::{Error, Result};
use num_complex::Complex64;

/// A point `z = r e^{i phi}` on a method's stability boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub phi: f64,
    pub r: f64,
    pub z: Complex64,
}

const MARCH_STEP: f64 = 1e-2;
const RADIUS_CAP: f64 = 20.0;

/// Default ray grid: 256 uniform angles in `(pi/2, pi]`. The upper half
/// suffices because the boundary is symmetric about the real axis.
pub fn default_phi_grid() -> Vec<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    (1..=256)
        .map(|i| half_pi + half_pi * i as f64 / 256.0)
        .collect()
}

/// First crossing of the stability boundary `|R(z)| = 1` along the ray
/// `z = r e^{i phi}`: marches outward in steps of 1e-2, then bisects the
/// bracketing interval down to machine-level width.
///
/// `phi` must lie in `(pi/2, 3 pi/2]`, the half-plane where explicit
/// methods have bounded stability regions; rays that never leave the
/// region before `r = 20` are reported as having no crossing.
pub fn boundary_radius(stability: &Polynomial, phi: f64) -> Result<BoundaryPoint> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    if !(phi > half_pi && phi <= 3.0 * half_pi) {
        return Err(Error::PhiOutOfRange { phi });
    }
    let direction = Complex64::from_polar(1.0, phi);
    let inside = |r: f64| stability.eval(direction * r).norm() <= 1.0;

    let mut lo = 0.0;
    let mut hi = None;
    let mut r = MARCH_STEP;
    while r <= RADIUS_CAP {
        if inside(r) {
            lo = r;
        } else {
            hi = Some(r);
            break;
        }
        r += MARCH_STEP;
    }
    let Some(mut hi) = hi else {
        return Err(Error::NoBoundaryCrossing { phi, r_max: RADIUS_CAP });
    };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BoundaryPoint { phi, r: lo, z: direction * lo })
}

fn log_derivative(p: &Polynomial, z: Complex64, what: &'static str) -> Result<f64> {
    let value = p.eval(z);
    if value.norm() == 0.0 {
        return Err(Error::SensitivityPole { what });
    }
    Ok((p.derivative().eval(z) * z / value).re)
}

/// Boundary slope `mu = Re(R'(z) z / R(z))` of the stability polynomial.
pub fn mu(stability: &Polynomial, z: Complex64) -> Result<f64> {
    log_derivative(stability, z, "the stability polynomial")
}

/// Embedded-estimate sensitivity `nu = Re(E'(z) z / E(z))` of the error
/// polynomial `E = R - R_embedded`.
pub fn nu(error_poly: &Polynomial, z: Complex64) -> Result<f64> {
    log_derivative(error_poly, z, "the error polynomial")
}

/// Logarithmic step-size sensitivity `q = d log|e| / d log dt` of a
/// residual error estimate on `u' = lambda u`, evaluated at
/// `lambda = z / dt`.
///
/// The linear and quadratic reconstructions give the constants 2 and 3
/// (the estimate is a pure power of the step size); the central cubic
/// reconstruction's L2 norm has a closed form in `z`, and its L1 norm is
/// evaluated by differentiating under the integral sign. The result
/// depends on `z` only - `dt` fixes the parameterization, not the value.
pub fn residual_log_sensitivity(
    method: Method,
    estimator: EstimatorKind,
    z: Complex64,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput {
            message: format!("step size dt = {dt} must be positive and finite"),
        });
    }
    match estimator {
        EstimatorKind::Embedded => Err(Error::InvalidInput {
            message: "embedded estimates use the error-polynomial sensitivity, not q"
                .to_string(),
        }),
        EstimatorKind::ResidualL1 | EstimatorKind::ResidualL2 => match method {
            Method::Euler => Ok(2.0),
            Method::Heun2Euler1 => Ok(3.0),
            Method::Bs3 => {
                if estimator == EstimatorKind::ResidualL2 {
                    Ok(central_l2_sensitivity(z))
                } else {
                    central_l1_sensitivity(z, dt)
                }
            }
        },
    }
}

/// Closed form for the central cubic reconstruction's L2 residual on the
/// linear problem:
/// `q = (64 + 10 |z|^2 - 45 Re z) / (2 (8 + |z|^2 - 5 Re z))`.
fn central_l2_sensitivity(z: Complex64) -> f64 {
    let abs2 = z.norm_sqr();
    let re = z.re;
    (64.0 + 10.0 * abs2 - 45.0 * re) / (2.0 * (8.0 + abs2 - 5.0 * re))
}

/// The central cubic reconstruction's L1 residual at step `dt` is
/// `|e| = |lambda|^4 |u| * integral of h(t) dt over [0, dt]` with
/// `h(t) = (1/6) t (dt - t) |t - 2 dt + t dt lambda|`. Differentiating
/// under the integral sign (the boundary term vanishes since
/// `h(dt) = 0`):
/// `q = dt * (integral of dh/d(dt)) / (integral of h)`.
fn central_l1_sensitivity(z: Complex64, dt: f64) -> Result<f64> {
    let lambda = z / dt;
    // g(t) = t - 2 dt + t dt lambda; the |g| factor has a kink where g
    // vanishes, which only happens on the real axis.
    let g = |t: f64| Complex64::new(t - 2.0 * dt, 0.0) + lambda * (t * dt);
    let h = |t: f64| t * (dt - t) * g(t).norm() / 6.0;
    let dh_ddt = |t: f64| {
        let gt = g(t);
        let dg = lambda * t - 2.0;
        let dnorm = (gt.conj() * dg).re / gt.norm();
        (t * gt.norm() + t * (dt - t) * dnorm) / 6.0
    };

    // Integration panels, split at the kink when it falls inside.
    let mut cuts = vec![0.0, dt];
    if z.im == 0.0 {
        let denom = 1.0 + z.re;
        if denom != 0.0 {
            let t_star = 2.0 * dt / denom;
            if t_star > 0.0 && t_star < dt {
                cuts.insert(1, t_star);
            }
        }
    }

    let settings = QuadratureSettings { rtol: 1e-12, atol: 1e-300, max_subdiv: 500 };
    let mut denominator = 0.0;
    let mut numerator = 0.0;
    for pair in cuts.windows(2) {
        let value = integrate(&h, pair[0], pair[1], &settings);
        let slope = integrate(&dh_ddt, pair[0], pair[1], &settings);
        if !value.converged || !slope.converged {
            return Err(Error::InvalidInput {
                message: "sensitivity quadrature did not converge".to_string(),
            });
        }
        denominator += value.value;
        numerator += slope.value;
    }
    if denominator == 0.0 {
        return Err(Error::SensitivityPole { what: "the residual integral" });
    }
    Ok(dt * numerator / denominator)
}

/// Linearized controller dynamics at a boundary point: 2x2 for an I
/// controller, 4x4 for PI, 6x6 for PID, in the state ordering
/// `(eta_n, chi_n, eta_{n-1}, chi_{n-1}, ...)` of logarithmic solution
/// magnitudes and step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlJacobian {
    pub entries: Vec<Vec<f64>>,
    /// Boundary slope `Re(R'(z) z / R(z))`.
    pub mu: f64,
    /// Estimator sensitivity: `nu` for embedded, `q` for residual.
    pub nu_or_q: f64,
}

/// Assembles the controller-dynamics Jacobian for the given
/// method/estimator/controller combination at `z`:
///
/// ```text
/// [ 1        mu          0        0         0        0        ]
/// [ -b1/k    1 - b1 s/k  -b2/k    -b2 s/k   -b3/k    -b3 s/k  ]
/// [ 1        0           0 ...                                ]
/// [ 0        1           0 ...                                ]
/// [ ...            (index-shift identity pattern)             ]
/// ```
///
/// with `s` the estimator sensitivity. Trailing zero controller
/// coefficients shrink the matrix: `beta = (b1, 0, 0)` gives the 2x2
/// upper-left block, `(b1, b2, 0)` the 4x4 one.
///
/// The linearization is meaningful when `z` lies on the stability
/// boundary of the method (where the step-size fixed point exists); the
/// assembly itself is defined for any `z` that avoids the sensitivity
/// poles.
pub fn build_jacobian(
    controller: &ControllerConfig,
    estimator: EstimatorKind,
    method: Method,
    z: Complex64,
) -> Result<ControlJacobian> {
    controller.validate()?;
    let tableau = method.tableau();
    let mu_value = mu(&tableau.stability_polynomial(), z)?;
    let sensitivity = match estimator {
        EstimatorKind::Embedded => nu(&tableau.embedded_error_polynomial()?, z)?,
        EstimatorKind::ResidualL1 | EstimatorKind::ResidualL2 => {
            residual_log_sensitivity(method, estimator, z, 1.0)?
        }
    };

    let [b1, b2, b3] = controller.beta;
    let k = controller.k;
    let n = if b3 != 0.0 {
        6
    } else if b2 != 0.0 {
        4
    } else {
        2
    };
    let mut entries = vec![vec![0.0; n]; n];
    entries[0][0] = 1.0;
    entries[0][1] = mu_value;
    entries[1][0] = -b1 / k;
    entries[1][1] = 1.0 - b1 * sensitivity / k;
    if n >= 4 {
        entries[1][2] = -b2 / k;
        entries[1][3] = -b2 * sensitivity / k;
    }
    if n == 6 {
        entries[1][4] = -b3 / k;
        entries[1][5] = -b3 * sensitivity / k;
    }
    for row in 2..n {
        entries[row][row - 2] = 1.0;
    }
    Ok(ControlJacobian { entries, mu: mu_value, nu_or_q: sensitivity })
}

/// One ray of a stability map: `None` fields record per-point failures
/// (no boundary crossing, sensitivity pole) without aborting the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub phi: f64,
    pub boundary: Option<BoundaryPoint>,
    pub spectral_radius: Option<f64>,
}

/// Sweeps the stability boundary along the given rays and evaluates the
/// controller-dynamics spectral radius at each crossing. Points where
/// the boundary or the Jacobian cannot be computed are reported with
/// empty fields rather than failing the whole map; each point is
/// independent of the others, so callers may compute them in parallel.
pub fn stability_map(
    method: Method,
    estimator: EstimatorKind,
    controller: &ControllerConfig,
    phi_grid: &[f64],
) -> Vec<MapPoint> {
    let stability = method.tableau().stability_polynomial();
    phi_grid
        .iter()
        .map(|&phi| map_point(method, estimator, controller, &stability, phi))
        .collect()
}

/// Computes a single stability-map ray; exposed so callers can
/// distribute rays across threads.
pub fn map_point(
    method: Method,
    estimator: EstimatorKind,
    controller: &ControllerConfig,
    stability: &Polynomial,
    phi: f64,
) -> MapPoint {
    match boundary_radius(stability, phi) {
        Err(_) => MapPoint { phi, boundary: None, spectral_radius: None },
        Ok(point) => {
            let radius = build_jacobian(controller, estimator, method, point.z)
                .and_then(|jac| spectral_radius(&jac.entries))
                .ok();
            MapPoint { phi, boundary: Some(point), spectral_radius: radius }
        }
    }
}
