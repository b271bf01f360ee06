//! Adaptive explicit Runge-Kutta integration with certified error control.
//!
//! This crate combines three ingredients that are usually kept separate:
//!
//! * **Embedded Runge-Kutta methods** ([`tableau`]) with the classic
//!   pairwise error estimate, plus **continuous reconstructions** of the
//!   numerical solution inside each step ([`reconstruction`]).
//! * **Residual-based error estimators** ([`estimators`]): instead of
//!   comparing two discrete solutions, the reconstruction is substituted
//!   into the ODE and the resulting defect is integrated with adaptive
//!   Gauss-Kronrod quadrature. The residual feeds both the step-size
//!   controller and a rigorous a posteriori global error bound
//!   ([`integrator::gronwall_bound`]).
//! * **Step-size control analysis** ([`stability`]): the coupled
//!   step/error dynamics of an integrator + controller pair are linearized
//!   on the stability boundary, and the spectral radius of the resulting
//!   Jacobian predicts whether the controller oscillates (accept/reject
//!   chatter) or settles onto the boundary smoothly.
//!
//! The [`integrator::solve`] loop ties the first two together: any method
//! from the registry, any estimator, and a PID-family controller
//! ([`controller`]) with error-per-step or error-per-unit-step weighting.
//! The [`problems`] module provides the test problems used by the
//! command-line driver and the acceptance suite.
//!
//! ```
//! use rk_certify::controller::{ControlMode, ControllerConfig};
//! use rk_certify::estimators::EstimatorKind;
//! use rk_certify::integrator::{solve, SolveConfig};
//! use rk_certify::problems;
//! use rk_certify::tableau::Method;
//!
//! let problem = problems::lipschitz_linear();
//! let cfg = SolveConfig {
//!     method: Method::Bs3,
//!     estimator: EstimatorKind::ResidualL2,
//!     controller: ControllerConfig::pi_controller(4.0, ControlMode::ErrorPerStep),
//!     tau_a: 1e-6,
//!     tau_r: 1e-6,
//!     ..SolveConfig::default()
//! };
//! let trace = solve(&problem, &cfg).unwrap();
//! let exact = 1f64.exp();
//! assert!((trace.u_final[0] - exact).abs() < 1e-4);
//! assert_eq!(trace.n_rejected, 0);
//! ```

pub mod controller;
pub mod estimators;
pub mod integrator;
pub mod problems;
pub mod reconstruction;
pub mod stability;
pub mod tableau;

use std::fmt;

/// Right-hand side of an ODE system `u' = f(t, u)`.
pub type RhsFn = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;

/// Errors reported by the library.
///
/// Solver-level aborts ([`Error::StepSizeUnderflow`],
/// [`Error::TooManyRejections`]) carry the time at which integration gave
/// up; the partial trace travels alongside in
/// [`integrator::SolveFailure`].
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Method name not in the registry.
    UnknownMethod { name: String },
    /// Estimator name not recognized.
    UnknownEstimator { name: String },
    /// The embedded estimator needs a tableau with secondary weights.
    NoEmbeddedWeights { method: String },
    /// A precondition on user input was violated.
    InvalidInput { message: String },
    /// A stage value or right-hand side evaluation was not finite.
    NonFiniteState { t: f64 },
    /// An error-weight denominator was exactly zero.
    ZeroErrorDenominator,
    /// Reconstruction evaluated outside its step interval.
    OutOfStepRange { tau: f64, dt: f64 },
    /// The controller drove the step size below the minimum.
    StepSizeUnderflow { t: f64, dt: f64 },
    /// A single step was rejected more times than allowed.
    TooManyRejections { t: f64, count: u32 },
    /// No stability-boundary crossing found along a ray.
    NoBoundaryCrossing { phi: f64, r_max: f64 },
    /// Ray angle outside the supported half-plane.
    PhiOutOfRange { phi: f64 },
    /// Simultaneous root iteration did not converge.
    RootsNotConverged { sweeps: u32 },
    /// Logarithmic derivative evaluated at a zero of its polynomial.
    SensitivityPole { what: &'static str },
    /// Global error bound requested from a trace without residual data.
    GronwallUnavailable,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownMethod { name } => write!(
                f,
                "unknown method '{name}' (known: euler, heun2_euler1, bs3)"
            ),
            Error::UnknownEstimator { name } => write!(
                f,
                "unknown estimator '{name}' (known: embedded, residual-l1, residual-l2)"
            ),
            Error::NoEmbeddedWeights { method } => {
                write!(f, "method '{method}' has no embedded weights")
            }
            Error::InvalidInput { message } => write!(f, "invalid input: {message}"),
            Error::NonFiniteState { t } => {
                write!(f, "non-finite state or derivative at t = {t}")
            }
            Error::ZeroErrorDenominator => {
                write!(f, "error weight denominator is zero (tau_a + tau_r * |u| = 0)")
            }
            Error::OutOfStepRange { tau, dt } => {
                write!(f, "reconstruction evaluated at tau = {tau} outside [0, {dt}]")
            }
            Error::StepSizeUnderflow { t, dt } => {
                write!(f, "step size underflow at t = {t} (dt = {dt})")
            }
            Error::TooManyRejections { t, count } => {
                write!(f, "step at t = {t} rejected {count} times in a row")
            }
            Error::NoBoundaryCrossing { phi, r_max } => write!(
                f,
                "no stability boundary crossing along phi = {phi} for r <= {r_max}"
            ),
            Error::PhiOutOfRange { phi } => write!(
                f,
                "ray angle phi = {phi} outside (pi/2, 3*pi/2]"
            ),
            Error::RootsNotConverged { sweeps } => {
                write!(f, "root iteration did not converge within {sweeps} sweeps")
            }
            Error::SensitivityPole { what } => {
                write!(f, "logarithmic derivative of {what} evaluated at one of its zeros")
            }
            Error::GronwallUnavailable => write!(
                f,
                "global error bound needs a residual-estimator trace and a Lipschitz constant"
            ),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Euclidean norm of a vector.
pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean norm of the difference `a - b`.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
