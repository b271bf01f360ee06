//! PID-family step-size control.
//!
//! After every attempted step the weighted error measure `w` is converted
//! to a control input `eps` (its reciprocal in error-per-step mode,
//! `dt / w` in error-per-unit-step mode) and the next step size is
//!
//! ```text
//! dt_next = limiter(eps_new^(b1/k) * eps_prev^(b2/k) * eps_prev2^(b3/k)) * dt
//! ```
//!
//! where `k` is the asymptotic order of the error measure and
//! `limiter(a) = 1 + atan(a - 1)` damps large factors smoothly (growth is
//! capped near 2.57, shrinkage near 0.21). The classical I controller is
//! `beta = (1, 0, 0)`; the PI choice used throughout the experiments is
//! `beta = (0.6, -0.2, 0)`.
//!
//! The limited step ratio doubles as the accept/redo signal: a step is
//! committed whenever the proposed ratio is at least [`ACCEPT_SAFETY`],
//! and redone (at `ratio * dt`) otherwise. The multiplicative law above
//! has its fixed point exactly at `w = 1`, so a controller that redid
//! every `w > 1` attempt would chatter around its own equilibrium;
//! deciding on the proposed ratio instead redoes a step only when the
//! controller calls for a real cut, which is the convention behind the
//! reference step counts. [`accept`] reports the plain tolerance verdict
//! `w <= 1` and is independent of the commit decision.
//!
//! The history `(eps_prev, eps_prev2)` starts at 1 and is shifted only
//! when the integrator commits an accepted step; a rejected attempt
//! recomputes its proposal from the same history.

use crate::{Error, Result};

/// Whether `w` holds the error of the whole step or the error per unit
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// `eps = 1 / w`.
    ErrorPerStep,
    /// `eps = dt / w`.
    ErrorPerUnitStep,
}

impl ControlMode {
    pub fn name(&self) -> &'static str {
        match self {
            ControlMode::ErrorPerStep => "eps",
            ControlMode::ErrorPerUnitStep => "epus",
        }
    }

    pub fn from_name(name: &str) -> Result<ControlMode> {
        match name {
            "eps" => Ok(ControlMode::ErrorPerStep),
            "epus" => Ok(ControlMode::ErrorPerUnitStep),
            _ => Err(Error::InvalidInput {
                message: format!("unknown control mode '{name}' (known: eps, epus)"),
            }),
        }
    }
}

/// Controller gains and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// PID gains `(b1, b2, b3)` applied to the current and the two
    /// previous control inputs.
    pub beta: [f64; 3],
    /// Asymptotic order of the error measure; the gains are divided by it.
    pub k: f64,
    pub mode: ControlMode,
    /// Hard step bounds; `None` leaves the corresponding side unclamped
    /// (the integrator fills both relative to the interval length).
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    /// Cap on consecutive rejections of a single step.
    pub max_rejections: u32,
}

impl ControllerConfig {
    pub fn new(beta: [f64; 3], k: f64, mode: ControlMode) -> ControllerConfig {
        ControllerConfig { beta, k, mode, dt_min: None, dt_max: None, max_rejections: 100 }
    }

    /// Integral controller `beta = (1, 0, 0)`.
    pub fn i_controller(k: f64, mode: ControlMode) -> ControllerConfig {
        ControllerConfig::new([1.0, 0.0, 0.0], k, mode)
    }

    /// Proportional-integral controller `beta = (0.6, -0.2, 0)`.
    pub fn pi_controller(k: f64, mode: ControlMode) -> ControllerConfig {
        ControllerConfig::new([0.6, -0.2, 0.0], k, mode)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidInput {
                message: format!("control order k must be positive, got {}", self.k),
            });
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput {
                message: "controller gains must be finite".to_string(),
            });
        }
        if let (Some(lo), Some(hi)) = (self.dt_min, self.dt_max) {
            if lo > hi {
                return Err(Error::InvalidInput {
                    message: format!("dt_min {lo} exceeds dt_max {hi}"),
                });
            }
        }
        Ok(())
    }
}

/// Control-input history `(eps_prev, eps_prev2)`, both initialized to 1
/// so the first steps behave like an I controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub eps_prev: f64,
    pub eps_prev2: f64,
}

impl ControllerState {
    pub fn new() -> ControllerState {
        ControllerState { eps_prev: 1.0, eps_prev2: 1.0 }
    }
}

impl Default for ControllerState {
    fn default() -> Self {
        ControllerState::new()
    }
}

/// Smooth step-ratio limiter `1 + atan(a - 1)`; fixes the point `a = 1`
/// and flattens both tails.
pub fn limiter(a: f64) -> f64 {
    1.0 + (a - 1.0).atan()
}

/// Cap applied to the control input when the error estimate vanishes.
const EPS_CAP: f64 = 1e10;

/// Smallest proposed step ratio at which an attempt is committed rather
/// than redone; see the module docs for why the decision rides on the
/// ratio instead of on `w` itself.
///
/// The value trades rejection churn against transient tolerance
/// overshoots. Raising it toward 1 redoes steps aggressively and chatters
/// on problems that ride a stability boundary; lowering it keeps redos
/// rare but lets the committed error drift further above the target
/// before a cut is forced. 0.77 keeps every redo a genuine cut (the
/// retry runs at barely three quarters of the failed step) while still
/// catching the sharp-overshoot attempts that precede a transient.
pub const ACCEPT_SAFETY: f64 = 0.77;

/// Whether the weighted error measure met the tolerance (`w <= 1`).
///
/// This is the reporting predicate; the solve loop's commit decision is
/// [`step_advances`] on the proposed step ratio, which tolerates
/// transient overshoots near the controller's `w = 1` equilibrium.
pub fn accept(w: f64) -> bool {
    w <= 1.0
}

/// Whether an attempt whose proposal came out with the given step ratio
/// advances the solution (ratio at least [`ACCEPT_SAFETY`]) or is redone.
pub fn step_advances(factor: f64) -> bool {
    factor >= ACCEPT_SAFETY
}

/// One controller update, computed by [`propose`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    /// Limited step ratio `limiter(eps_new^(b1/k) * ...)`, before the
    /// hard step bounds; doubles as the accept/redo signal.
    pub factor: f64,
    /// `factor * dt` clamped to the configured step bounds.
    pub dt_next: f64,
    /// History with the attempt's control input shifted in; the
    /// integrator commits it only when the step advances.
    pub state: ControllerState,
}

/// Proposes the next step size from the current measure `w` observed on a
/// step of size `dt`, without mutating the history. The integrator
/// commits the returned state only when the step is accepted.
///
/// A non-finite `w` is an error; the integrator treats it as a rejection
/// with plain step halving.
pub fn propose(
    cfg: &ControllerConfig,
    state: &ControllerState,
    w: f64,
    dt: f64,
) -> Result<Proposal> {
    if !w.is_finite() || w < 0.0 {
        return Err(Error::InvalidInput { message: format!("error measure w = {w}") });
    }
    let eps_raw = match cfg.mode {
        ControlMode::ErrorPerStep => 1.0 / w,
        ControlMode::ErrorPerUnitStep => dt / w,
    };
    let eps = if eps_raw.is_finite() { eps_raw.min(EPS_CAP) } else { EPS_CAP };

    let factor = limiter(
        eps.powf(cfg.beta[0] / cfg.k)
            * state.eps_prev.powf(cfg.beta[1] / cfg.k)
            * state.eps_prev2.powf(cfg.beta[2] / cfg.k),
    );
    let mut dt_next = factor * dt;
    if let Some(hi) = cfg.dt_max {
        dt_next = dt_next.min(hi);
    }
    if let Some(lo) = cfg.dt_min {
        dt_next = dt_next.max(lo);
    }
    let state = ControllerState { eps_prev: eps, eps_prev2: state.eps_prev };
    Ok(Proposal { factor, dt_next, state })
}

/// Starting step size for a problem of order `p`, from the scaled norms
/// of the state, the derivative, and a finite-difference curvature probe
/// (one explicit Euler trial step).
pub fn initial_step_size<F>(
    f: F,
    t0: f64,
    u0: &[f64],
    p: u32,
    tau_a: f64,
    tau_r: f64,
) -> Result<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let m = u0.len();
    if m == 0 {
        return Err(Error::InvalidInput { message: "empty initial state".to_string() });
    }
    let scale: Vec<f64> = u0.iter().map(|&u| tau_a + tau_r * u.abs()).collect();
    if scale.iter().any(|&s| s <= 0.0) {
        return Err(Error::ZeroErrorDenominator);
    }
    let rms = |v: &[f64]| -> f64 {
        let sum: f64 = v.iter().zip(&scale).map(|(x, s)| (x / s) * (x / s)).sum();
        (sum / m as f64).sqrt()
    };

    let f0 = f(t0, u0);
    if f0.len() != m || !f0.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFiniteState { t: t0 });
    }
    let d0 = rms(u0);
    let d1 = rms(&f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };

    // Explicit Euler probe to estimate the derivative's rate of change.
    let u1: Vec<f64> = u0.iter().zip(&f0).map(|(u, k)| u + h0 * k).collect();
    let f1 = f(t0 + h0, &u1);
    if f1.len() != m || !f1.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFiniteState { t: t0 + h0 });
    }
    let df: Vec<f64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&df) / h0;

    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d_max).powf(1.0 / (p as f64 + 1.0))
    };
    Ok((100.0 * h0).min(h1))
}
