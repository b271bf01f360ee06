//! The adaptive integration loop: step, estimate, accept/reject, control.
//!
//! [`solve`] drives any registered method with any estimator:
//!
//! 1. take a trial step ([`rk_step`](crate::tableau::rk_step)), reusing
//!    the cached first-stage derivative where possible (FSAL, retries);
//! 2. measure it - the embedded pairwise estimate, or a residual norm of
//!    the step reconstruction;
//! 3. ask the controller for the step ratio and commit or redo on it: the
//!    attempt advances unless the proposed ratio falls below
//!    [`ACCEPT_SAFETY`](crate::controller::ACCEPT_SAFETY), and the next
//!    (or retried) step is `ratio * dt` either way. The controller
//!    history advances only on acceptance; a rejected attempt retries
//!    from the same state.
//!
//! Every attempt (accepted or not) is recorded in the returned
//! [`IntegrationTrace`]. On residual-estimator runs with a known
//! one-sided Lipschitz constant, each accepted step also accumulates
//! `integral of |residual(s)| * exp(-L (s - t0)) ds`, from which
//! [`gronwall_bound`] produces a certified bound on the global error at
//! the final time.
//!
//! The final step is truncated to land on `t_end` exactly; the truncated
//! length is not fed back as the controller's base step, so the step-size
//! dynamics never see the artificial cut.

use crate::controller::{
    initial_step_size, propose, step_advances, ControlMode, ControllerConfig, ControllerState,
};
use crate::estimators::{
    embedded_estimate, integrate, residual_norm_l1, residual_norm_l2,
    weighted_residual_estimate, ErrorEstimate, EstimatorKind, QuadratureSettings,
};
use crate::problems::Problem;
use crate::reconstruction::{Reconstruction, ReconstructionKind};
use crate::tableau::{embedded_solution, rk_step, Method, StepOutput};
use crate::{Error, Result};

/// Everything [`solve`] needs besides the problem itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub method: Method,
    pub estimator: EstimatorKind,
    pub controller: ControllerConfig,
    /// Absolute tolerance component of the error weights.
    pub tau_a: f64,
    /// Relative tolerance component of the error weights.
    pub tau_r: f64,
    /// Tolerances for the residual quadrature.
    pub quadrature: QuadratureSettings,
    /// One-sided Lipschitz constant for the certified global bound;
    /// falls back to the problem's own constant when `None`.
    pub lipschitz: Option<f64>,
    /// Integration interval; falls back to the problem's span.
    pub t_span: Option<(f64, f64)>,
}

impl SolveConfig {
    /// Configuration with both tolerance components set to `tol` and
    /// default quadrature settings.
    pub fn new(
        method: Method,
        estimator: EstimatorKind,
        controller: ControllerConfig,
        tol: f64,
    ) -> SolveConfig {
        SolveConfig {
            method,
            estimator,
            controller,
            tau_a: tol,
            tau_r: tol,
            quadrature: QuadratureSettings::default(),
            lipschitz: None,
            t_span: None,
        }
    }
}

impl Default for SolveConfig {
    /// Third-order FSAL method, residual-L2 estimate, PI control at the
    /// residual's order, tolerance `1e-6`.
    fn default() -> Self {
        SolveConfig::new(
            Method::Bs3,
            EstimatorKind::ResidualL2,
            ControllerConfig::pi_controller(4.0, crate::controller::ControlMode::ErrorPerStep),
            1e-6,
        )
    }
}

/// One attempted step, accepted or rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Time at the start of the attempt.
    pub t: f64,
    /// Attempted step size.
    pub dt: f64,
    /// Weighted error measure of the attempt.
    pub w: f64,
    pub accepted: bool,
    /// Unweighted estimate: Euclidean update difference for the embedded
    /// estimator, quadrature norm for residual estimators.
    pub raw_norm: f64,
    /// Contribution to the certified-bound integral (accepted residual
    /// steps only, zero otherwise).
    pub gronwall_increment: f64,
}

/// Complete record of an integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationTrace {
    pub records: Vec<StepRecord>,
    pub t_start: f64,
    pub t_final: f64,
    pub u_final: Vec<f64>,
    pub n_accepted: usize,
    pub n_rejected: usize,
    /// `integral of |residual(s)| exp(-L (s - t_start)) ds` accumulated
    /// over accepted steps; meaningful only if `lipschitz` is set.
    pub gronwall_integral: f64,
    /// Lipschitz constant the integral was accumulated with.
    pub lipschitz: Option<f64>,
}

impl IntegrationTrace {
    /// Attempted step sizes of accepted steps, in order.
    pub fn accepted_step_sizes(&self) -> Vec<f64> {
        self.records.iter().filter(|r| r.accepted).map(|r| r.dt).collect()
    }
}

/// An aborted run: the diagnostic plus everything integrated so far.
#[derive(Debug, Clone)]
pub struct SolveFailure {
    pub error: Error,
    pub partial: IntegrationTrace,
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "integration aborted at t = {} after {} accepted / {} rejected steps: {}",
            self.partial.t_final, self.partial.n_accepted, self.partial.n_rejected, self.error
        )
    }
}

impl std::error::Error for SolveFailure {}

/// Builds the reconstruction matching the method's order from a completed
/// step.
pub fn step_reconstruction(
    method: Method,
    u_n: &[f64],
    out: &StepOutput,
    dt: f64,
) -> Result<Reconstruction> {
    match ReconstructionKind::for_method(method) {
        ReconstructionKind::Linear => Reconstruction::linear(u_n, &out.u_next, dt),
        ReconstructionKind::QuadraticLeft => {
            Reconstruction::quadratic_left(u_n, &out.stages[0], &out.u_next, dt)
        }
        ReconstructionKind::CubicCentral => {
            let f_np1 = out.f_next.as_deref().ok_or(Error::InvalidInput {
                message: "central reconstruction needs the endpoint derivative".to_string(),
            })?;
            Reconstruction::cubic_central(u_n, &out.stages[0], &out.u_next, f_np1, dt)
        }
    }
}

/// Fraction of the starting-step recommendation actually used. The
/// heuristic estimates the right scale but has no margin; starting a
/// quarter below it costs a couple of ramp-up steps at worst and keeps
/// the very first attempts from being rejected before the controller has
/// any history.
const STARTING_STEP_SAFETY: f64 = 0.25;

/// Margin applied to the calibrated opening step of residual runs so the
/// first committed attempt sits just below the estimator's equilibrium
/// instead of exactly on it.
const RESIDUAL_START_SAFETY: f64 = 0.9;

/// Widest factor the opening-step calibration may apply in either
/// direction; guards against a probe landing outside the power-law
/// regime the inversion assumes.
const RESIDUAL_START_MAX_CORRECTION: f64 = 1e2;

/// Relative floor added to each certified-bound increment on top of the
/// quadrature's own error allowance. The exact integral dominates the
/// true error by the triangle inequality, so only numerical noise can
/// put the computed value under it; the Gauss-Kronrod difference tracks
/// truncation error but can undercount by a few ulps per panel on
/// integrands with norm kinks, and a certified quantity must absorb
/// that.
const GRONWALL_INCREMENT_MARGIN: f64 = 1e-10;

struct RunState {
    records: Vec<StepRecord>,
    n_accepted: usize,
    n_rejected: usize,
    gronwall_integral: f64,
}

impl RunState {
    fn into_trace(
        self,
        t_start: f64,
        t_final: f64,
        u_final: Vec<f64>,
        lipschitz: Option<f64>,
    ) -> IntegrationTrace {
        IntegrationTrace {
            records: self.records,
            t_start,
            t_final,
            u_final,
            n_accepted: self.n_accepted,
            n_rejected: self.n_rejected,
            gronwall_integral: self.gronwall_integral,
            lipschitz,
        }
    }
}

/// Integrates the problem over its time span, returning the full trace,
/// or the partial trace plus a diagnostic when the run aborts (step-size
/// underflow, too many consecutive rejections, estimator failure).
pub fn solve(problem: &Problem, cfg: &SolveConfig) -> std::result::Result<IntegrationTrace, SolveFailure> {
    let (t0, t_end) = cfg.t_span.unwrap_or(problem.t_span);
    let u0 = problem.u0.clone();
    let f = |t: f64, u: &[f64]| (problem.f)(t, u);

    let empty_failure = |error: Error| SolveFailure {
        error,
        partial: IntegrationTrace {
            records: Vec::new(),
            t_start: t0,
            t_final: t0,
            u_final: u0.clone(),
            n_accepted: 0,
            n_rejected: 0,
            gronwall_integral: 0.0,
            lipschitz: None,
        },
    };

    if !(t_end > t0) {
        return Err(empty_failure(Error::InvalidInput {
            message: format!("time span ({t0}, {t_end}) is not increasing"),
        }));
    }
    if !(cfg.tau_a >= 0.0 && cfg.tau_r >= 0.0 && cfg.tau_a + cfg.tau_r > 0.0) {
        return Err(empty_failure(Error::InvalidInput {
            message: "tolerances must be nonnegative and not both zero".to_string(),
        }));
    }
    if let Err(e) = cfg.controller.validate() {
        return Err(empty_failure(e));
    }
    let tableau = cfg.method.tableau();
    if cfg.estimator == EstimatorKind::Embedded && tableau.b_hat.is_none() {
        return Err(empty_failure(Error::NoEmbeddedWeights {
            method: tableau.name.to_string(),
        }));
    }

    let lipschitz = cfg.lipschitz.or(problem.lipschitz);
    let certify = cfg.estimator.is_residual() && lipschitz.is_some();
    let trace_lipschitz = if certify { lipschitz } else { None };

    let span = t_end - t0;
    let dt_min = cfg.controller.dt_min.unwrap_or(1e-14 * span);
    let dt_max = cfg.controller.dt_max.unwrap_or(span);
    let mut ctrl = cfg.controller;
    ctrl.dt_min = Some(dt_min);
    ctrl.dt_max = Some(dt_max);

    let mut dt_ctrl = match initial_step_size(&f, t0, &u0, tableau.order, cfg.tau_a, cfg.tau_r) {
        Ok(h) => (STARTING_STEP_SAFETY * h).clamp(dt_min, dt_max),
        Err(e) => return Err(empty_failure(e)),
    };

    // Derivative at the current (t, u), when known: the FSAL stage of the
    // last accepted step, or the first stage of a rejected attempt.
    let mut f1_cache: Option<Vec<f64>> = None;

    // The starting-step heuristic estimates the local truncation error,
    // which is what the embedded estimator weighs; a reconstruction
    // residual reaches its equilibrium at a different step size because
    // its weight grows one order faster in `dt`. Residual runs therefore
    // spend one scouting evaluation at the heuristic step and invert the
    // measured weight through the local power law `w ~ dt^k` to land the
    // opening step on the estimator's own equilibrium. The probe is
    // discarded: nothing is committed, no attempt is recorded, and only
    // the step-independent first-stage derivative is kept for reuse.
    if cfg.estimator.is_residual() {
        let exponent = match ctrl.mode {
            ControlMode::ErrorPerStep => Some(1.0 / ctrl.k),
            ControlMode::ErrorPerUnitStep if ctrl.k > 1.0 => Some(1.0 / (ctrl.k - 1.0)),
            ControlMode::ErrorPerUnitStep => None,
        };
        if let Some(exponent) = exponent {
            if let Ok(out) = rk_step(&tableau, &f, t0, &u0, dt_ctrl, None) {
                if let Some(first) = out.stages.first() {
                    f1_cache = Some(first.clone());
                }
                let weight = step_reconstruction(cfg.method, &u0, &out, dt_ctrl)
                    .and_then(|rec| {
                        let norm = if cfg.estimator == EstimatorKind::ResidualL1 {
                            residual_norm_l1(&rec, &f, t0, &cfg.quadrature)
                        } else {
                            residual_norm_l2(&rec, &f, t0, &cfg.quadrature)
                        };
                        weighted_residual_estimate(
                            norm.raw,
                            &u0,
                            &out.u_next,
                            cfg.tau_a,
                            cfg.tau_r,
                        )
                    });
                if let Ok(est) = weight {
                    if est.w.is_finite() && est.w > 0.0 {
                        // Step at which the controller's fixed point sits:
                        // w = 1 for error-per-step, w = dt for
                        // error-per-unit-step.
                        let target = match ctrl.mode {
                            ControlMode::ErrorPerStep => 1.0 / est.w,
                            ControlMode::ErrorPerUnitStep => dt_ctrl / est.w,
                        };
                        let correction = target.powf(exponent).clamp(
                            1.0 / RESIDUAL_START_MAX_CORRECTION,
                            RESIDUAL_START_MAX_CORRECTION,
                        );
                        dt_ctrl = (RESIDUAL_START_SAFETY * correction * dt_ctrl)
                            .clamp(dt_min, dt_max);
                    }
                }
            }
        }
    }

    let mut run = RunState {
        records: Vec::new(),
        n_accepted: 0,
        n_rejected: 0,
        gronwall_integral: 0.0,
    };
    let mut t = t0;
    let mut u = u0;
    let mut state = ControllerState::new();
    let mut consecutive_rejections: u32 = 0;

    while t < t_end {
        let remaining = t_end - t;
        let truncated = dt_ctrl >= remaining;
        let dt_attempt = if truncated { remaining } else { dt_ctrl };
        if t + dt_attempt == t {
            return Err(SolveFailure {
                error: Error::StepSizeUnderflow { t, dt: dt_attempt },
                partial: run.into_trace(t0, t, u, trace_lipschitz),
            });
        }

        let out = match rk_step(&tableau, &f, t, &u, dt_attempt, f1_cache.as_deref()) {
            Ok(out) => out,
            Err(Error::NonFiniteState { .. }) => {
                // Blow-up inside the stages: reject and halve.
                run.records.push(StepRecord {
                    t,
                    dt: dt_attempt,
                    w: f64::INFINITY,
                    accepted: false,
                    raw_norm: f64::INFINITY,
                    gronwall_increment: 0.0,
                });
                run.n_rejected += 1;
                consecutive_rejections += 1;
                if consecutive_rejections > ctrl.max_rejections {
                    return Err(SolveFailure {
                        error: Error::TooManyRejections { t, count: consecutive_rejections },
                        partial: run.into_trace(t0, t, u, trace_lipschitz),
                    });
                }
                dt_ctrl = (0.5 * dt_attempt).max(dt_min);
                continue;
            }
            Err(e) => {
                return Err(SolveFailure {
                    error: e,
                    partial: run.into_trace(t0, t, u, trace_lipschitz),
                });
            }
        };

        // Residual runs reuse the reconstruction for the certified bound.
        let mut reconstruction: Option<Reconstruction> = None;
        let estimate: std::result::Result<ErrorEstimate, Error> = match cfg.estimator {
            EstimatorKind::Embedded => embedded_solution(&tableau, &u, dt_attempt, &out.stages)
                .and_then(|u_hat| {
                    embedded_estimate(&u, &out.u_next, &u_hat, cfg.tau_a, cfg.tau_r)
                }),
            EstimatorKind::ResidualL1 | EstimatorKind::ResidualL2 => {
                step_reconstruction(cfg.method, &u, &out, dt_attempt).and_then(|rec| {
                    let norm = if cfg.estimator == EstimatorKind::ResidualL1 {
                        residual_norm_l1(&rec, &f, t, &cfg.quadrature)
                    } else {
                        residual_norm_l2(&rec, &f, t, &cfg.quadrature)
                    };
                    let est = weighted_residual_estimate(
                        norm.raw,
                        &u,
                        &out.u_next,
                        cfg.tau_a,
                        cfg.tau_r,
                    )?;
                    reconstruction = Some(rec);
                    Ok(est)
                })
            }
        };
        let estimate = match estimate {
            Ok(est) => est,
            Err(e) => {
                return Err(SolveFailure {
                    error: e,
                    partial: run.into_trace(t0, t, u, trace_lipschitz),
                });
            }
        };

        if !estimate.w.is_finite() {
            run.records.push(StepRecord {
                t,
                dt: dt_attempt,
                w: f64::INFINITY,
                accepted: false,
                raw_norm: estimate.raw_norm,
                gronwall_increment: 0.0,
            });
            run.n_rejected += 1;
            consecutive_rejections += 1;
            if consecutive_rejections > ctrl.max_rejections {
                return Err(SolveFailure {
                    error: Error::TooManyRejections { t, count: consecutive_rejections },
                    partial: run.into_trace(t0, t, u, trace_lipschitz),
                });
            }
            dt_ctrl = (0.5 * dt_attempt).max(dt_min);
            continue;
        }

        let proposal = match propose(&ctrl, &state, estimate.w, dt_attempt) {
            Ok(p) => p,
            Err(e) => {
                return Err(SolveFailure {
                    error: e,
                    partial: run.into_trace(t0, t, u, trace_lipschitz),
                });
            }
        };
        let accepted = step_advances(proposal.factor);
        // An accepted truncated step rescales the controller's nominal
        // step, so the artificial cut never enters the dynamics; in every
        // other case the ratio applies to what was actually tried.
        let dt_next = if accepted && truncated {
            (proposal.factor * dt_ctrl).clamp(dt_min, dt_max)
        } else {
            proposal.dt_next
        };

        if accepted {
            let gronwall_increment = if certify {
                let rec = reconstruction
                    .as_ref()
                    .expect("residual runs build a reconstruction");
                let lip = lipschitz.expect("certify implies a Lipschitz constant");
                let weighted = |tau: f64| {
                    let u_hat = rec.eval(tau).expect("quadrature node inside step");
                    let du_hat = rec.eval_derivative(tau).expect("quadrature node inside step");
                    let rhs = f(t + tau, &u_hat);
                    let mut sum = 0.0;
                    for (d, r) in du_hat.iter().zip(&rhs) {
                        let diff = d - r;
                        sum += diff * diff;
                    }
                    sum.sqrt() * (-lip * (t - t0 + tau)).exp()
                };
                let q = integrate(weighted, 0.0, dt_attempt, &cfg.quadrature);
                // The increment feeds a certified upper bound, so the
                // quadrature's own error allowance always rides on top of
                // its best value, converged or not, plus a roundoff floor.
                q.value + q.error_estimate + GRONWALL_INCREMENT_MARGIN * q.value
            } else {
                0.0
            };

            run.records.push(StepRecord {
                t,
                dt: dt_attempt,
                w: estimate.w,
                accepted: true,
                raw_norm: estimate.raw_norm,
                gronwall_increment,
            });
            run.n_accepted += 1;
            run.gronwall_integral += gronwall_increment;
            consecutive_rejections = 0;
            state = proposal.state;
            f1_cache = out.f_next;
            u = out.u_next;
            t = if truncated { t_end } else { t + dt_attempt };
            dt_ctrl = dt_next;
        } else {
            run.records.push(StepRecord {
                t,
                dt: dt_attempt,
                w: estimate.w,
                accepted: false,
                raw_norm: estimate.raw_norm,
                gronwall_increment: 0.0,
            });
            run.n_rejected += 1;
            consecutive_rejections += 1;
            if consecutive_rejections > ctrl.max_rejections {
                return Err(SolveFailure {
                    error: Error::TooManyRejections { t, count: consecutive_rejections },
                    partial: run.into_trace(t0, t, u, trace_lipschitz),
                });
            }
            // The first stage is unchanged at (t, u); reuse it on retry.
            let mut stages = out.stages;
            f1_cache = Some(stages.swap_remove(0));
            dt_ctrl = dt_next;
        }
    }

    Ok(run.into_trace(t0, t_end, u, trace_lipschitz))
}

/// Certified global error bound at the final time:
/// `(delta0 + gronwall_integral) * exp(L * (t_final - t_start))`, where
/// `delta0` bounds the initial error (zero when starting from exact
/// data).
///
/// The trace must come from a residual-estimator run that accumulated
/// its integral with the same Lipschitz constant.
pub fn gronwall_bound(trace: &IntegrationTrace, lipschitz: f64, delta0: f64) -> Result<f64> {
    match trace.lipschitz {
        None => Err(Error::GronwallUnavailable),
        Some(l) if l != lipschitz => Err(Error::InvalidInput {
            message: format!(
                "trace was accumulated with Lipschitz constant {l}, not {lipschitz}"
            ),
        }),
        Some(_) => Ok((delta0 + trace.gronwall_integral)
            * (lipschitz * (trace.t_final - trace.t_start)).exp()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControlMode;
    use crate::euclidean_distance;
    use crate::problems::Problem;
    use approx::assert_relative_eq;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn decay_problem() -> Problem {
        Problem {
            name: "decay",
            f: Box::new(|_t, u| vec![-u[0]]),
            u0: vec![1.0],
            t_span: (0.0, 2.0),
            lipschitz: None,
            reference: Some(Box::new(|t| vec![(-t).exp()])),
        }
    }

    fn growth_problem() -> Problem {
        Problem {
            name: "growth",
            f: Box::new(|_t, u| vec![u[0]]),
            u0: vec![1.0],
            t_span: (0.0, 1.0),
            lipschitz: Some(1.0),
            reference: Some(Box::new(|t| vec![t.exp()])),
        }
    }

    fn pi_cfg(method: Method, estimator: EstimatorKind, tol: f64) -> SolveConfig {
        let k = estimator.default_control_order(method.order());
        SolveConfig::new(
            method,
            estimator,
            ControllerConfig::pi_controller(k, ControlMode::ErrorPerStep),
            tol,
        )
    }

    #[test]
    fn reaches_endpoint_exactly() {
        for estimator in EstimatorKind::ALL {
            let trace = solve(&decay_problem(), &pi_cfg(Method::Bs3, estimator, 1e-6)).unwrap();
            assert_eq!(trace.t_final, 2.0);
            let exact = (-2.0f64).exp();
            assert!((trace.u_final[0] - exact).abs() < 1e-4);
            assert!(trace.n_accepted > 0);
        }
    }

    #[test]
    fn trace_bookkeeping_invariants() {
        let trace = solve(&decay_problem(), &pi_cfg(Method::Heun2Euler1, EstimatorKind::ResidualL1, 1e-5))
            .unwrap();
        assert_eq!(trace.n_accepted + trace.n_rejected, trace.records.len());
        let mut last_t = f64::NEG_INFINITY;
        for r in trace.records.iter().filter(|r| r.accepted) {
            assert!(r.t > last_t);
            assert!(r.w.is_finite() && r.w >= 0.0);
            last_t = r.t;
        }
        for r in trace.records.iter().filter(|r| !r.accepted) {
            assert_eq!(r.gronwall_increment, 0.0);
        }
        // Accepted steps tile the interval.
        let total: f64 = trace.records.iter().filter(|r| r.accepted).map(|r| r.dt).sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let cfg = pi_cfg(Method::Bs3, EstimatorKind::ResidualL2, 1e-7);
        let a = solve(&decay_problem(), &cfg).unwrap();
        let b = solve(&decay_problem(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    /// FSAL bookkeeping: an embedded bs3 run with no rejections spends
    /// exactly 3 evaluations per step after the first (the fourth stage
    /// is reused), plus 2 for the starting-step heuristic and 1 for the
    /// first stage of the first step.
    #[test]
    fn fsal_reuses_last_stage() {
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = calls.clone();
        let problem = Problem {
            name: "counted",
            f: Box::new(move |_t, u| {
                counter.fetch_add(1, Ordering::Relaxed);
                vec![-u[0]]
            }),
            u0: vec![1.0],
            t_span: (0.0, 1.0),
            lipschitz: None,
            reference: None,
        };
        let trace = solve(&problem, &pi_cfg(Method::Bs3, EstimatorKind::Embedded, 1e-6)).unwrap();
        assert_eq!(trace.n_rejected, 0, "rejection-free run expected at this tolerance");
        let expected = 2 + 1 + 3 * trace.n_accepted;
        assert_eq!(calls.load(Ordering::Relaxed), expected);
    }

    #[test]
    fn rejected_attempts_are_recorded_and_retried_smaller() {
        // A stability-limited run with the I controller rejects plenty:
        // the step size keeps bumping into the stability boundary.
        let problem = crate::problems::hairer_wanner();
        let cfg = SolveConfig::new(
            Method::Heun2Euler1,
            EstimatorKind::Embedded,
            ControllerConfig::i_controller(2.0, ControlMode::ErrorPerStep),
            1e-4,
        );
        let trace = solve(&problem, &cfg).unwrap();
        assert!(trace.n_rejected > 50, "expected plenty of rejections, got {}", trace.n_rejected);
        for pair in trace.records.windows(2) {
            if !pair[0].accepted {
                // A rejected attempt is followed by a retry at the same t
                // with a smaller step.
                assert_eq!(pair[1].t, pair[0].t);
                assert!(pair[1].dt < pair[0].dt);
            }
        }
    }

    #[test]
    fn gronwall_bound_covers_true_error() {
        let problem = growth_problem();
        let cfg = pi_cfg(Method::Bs3, EstimatorKind::ResidualL2, 1e-6);
        let trace = solve(&problem, &cfg).unwrap();
        assert_eq!(trace.lipschitz, Some(1.0));
        let bound = gronwall_bound(&trace, 1.0, 0.0).unwrap();
        let reference = problem.reference.as_ref().unwrap()(trace.t_final);
        let err = euclidean_distance(&trace.u_final, &reference);
        assert!(bound >= err, "bound {bound} < error {err}");
        assert!(bound > 0.0);
        // The bound is not vacuously loose on this short interval.
        assert!(bound < 1e-2, "{bound}");
    }

    #[test]
    fn gronwall_bound_requires_residual_trace() {
        let trace = solve(&growth_problem(), &pi_cfg(Method::Bs3, EstimatorKind::Embedded, 1e-6))
            .unwrap();
        assert!(matches!(gronwall_bound(&trace, 1.0, 0.0), Err(Error::GronwallUnavailable)));
        let trace = solve(&decay_problem(), &pi_cfg(Method::Bs3, EstimatorKind::ResidualL2, 1e-6))
            .unwrap();
        // decay_problem carries no Lipschitz constant.
        assert!(gronwall_bound(&trace, 0.0, 0.0).is_err());
    }

    #[test]
    fn gronwall_constant_mismatch_is_rejected() {
        let trace = solve(&growth_problem(), &pi_cfg(Method::Bs3, EstimatorKind::ResidualL2, 1e-6))
            .unwrap();
        assert!(gronwall_bound(&trace, 2.0, 0.0).is_err());
        assert!(gronwall_bound(&trace, 1.0, 0.0).is_ok());
    }

    #[test]
    fn embedded_estimator_needs_embedded_weights() {
        let failure = solve(&decay_problem(), &pi_cfg(Method::Euler, EstimatorKind::Embedded, 1e-6))
            .unwrap_err();
        assert!(matches!(failure.error, Error::NoEmbeddedWeights { .. }));
        assert!(failure.partial.records.is_empty());
    }

    #[test]
    fn persistent_blowup_aborts_with_partial_trace() {
        let problem = Problem {
            name: "blowup",
            f: Box::new(|_t, u| vec![u[0] * f64::NAN]),
            u0: vec![1.0],
            t_span: (0.0, 1.0),
            lipschitz: None,
            reference: None,
        };
        // The starting-step heuristic already sees NaN.
        let failure = solve(&problem, &pi_cfg(Method::Bs3, EstimatorKind::Embedded, 1e-6))
            .unwrap_err();
        assert!(matches!(failure.error, Error::NonFiniteState { .. }));

        // NaN that only appears after t = 0.5: the run makes progress,
        // then rejects until the cap trips.
        let problem = Problem {
            name: "wall",
            f: Box::new(|t, u| vec![if t > 0.5 { f64::NAN } else { -u[0] }]),
            u0: vec![1.0],
            t_span: (0.0, 1.0),
            lipschitz: None,
            reference: None,
        };
        let mut cfg = pi_cfg(Method::Bs3, EstimatorKind::Embedded, 1e-6);
        cfg.controller.max_rejections = 20;
        let failure = solve(&problem, &cfg).unwrap_err();
        assert!(matches!(failure.error, Error::TooManyRejections { .. }));
        assert!(failure.partial.n_accepted > 0);
        assert!(failure.partial.t_final > 0.0);
    }

    #[test]
    fn invalid_span_is_rejected() {
        let mut cfg = pi_cfg(Method::Bs3, EstimatorKind::ResidualL2, 1e-6);
        cfg.t_span = Some((1.0, 1.0));
        assert!(solve(&decay_problem(), &cfg).is_err());
        cfg.t_span = Some((2.0, 1.0));
        assert!(solve(&decay_problem(), &cfg).is_err());
    }

    #[test]
    fn error_per_unit_step_mode_runs() {
        let mut cfg = pi_cfg(Method::Bs3, EstimatorKind::ResidualL1, 1e-6);
        cfg.controller.mode = ControlMode::ErrorPerUnitStep;
        let trace = solve(&decay_problem(), &cfg).unwrap();
        assert_eq!(trace.t_final, 2.0);
        assert!((trace.u_final[0] - (-2.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn smooth_residual_run_has_no_rejections() {
        for estimator in [EstimatorKind::ResidualL1, EstimatorKind::ResidualL2] {
            let trace = solve(&decay_problem(), &pi_cfg(Method::Bs3, estimator, 1e-8)).unwrap();
            assert_eq!(trace.n_rejected, 0);
        }
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let problem = decay_problem();
        let reference = (-2.0f64).exp();
        let mut last_err = f64::INFINITY;
        for tol in [1e-4, 1e-6, 1e-8] {
            let trace = solve(&problem, &pi_cfg(Method::Bs3, EstimatorKind::ResidualL2, tol))
                .unwrap();
            let err = (trace.u_final[0] - reference).abs();
            assert!(err < last_err, "tol {tol}: {err} !< {last_err}");
            last_err = err;
        }
    }
}
