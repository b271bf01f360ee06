//! Fully resolved run descriptions shared by the direct subcommands and
//! the canned experiments, and their execution against the solver.

use crate::output::{self, Summary, SweepRow};
use rayon::prelude::*;
use rk_certify::controller::{ControlMode, ControllerConfig};
use rk_certify::estimators::EstimatorKind;
use rk_certify::integrator::{gronwall_bound, solve, IntegrationTrace, SolveConfig};
use rk_certify::problems::{self, Problem};
use rk_certify::stability::{default_phi_grid, stability_map};
use rk_certify::tableau::Method;
use std::path::Path;

pub const BBM_WAVE_SPEED: f64 = 1.2;
pub const BBM_DEFAULT_GRID: usize = 256;
pub const ADVECTION_DEFAULT_GRID: usize = 128;

/// A test problem together with its per-problem parameters.
#[derive(Clone, Copy)]
pub enum ProblemId {
    HairerWanner,
    Krogh { phi: f64 },
    RigidBody,
    Bbm { n: usize },
    LipschitzLinear,
    LipschitzNonlinear,
    Advection { n: usize },
}

impl ProblemId {
    /// Resolves a problem name plus the optional per-problem flags.
    /// Flags that do not apply to the named problem are rejected rather
    /// than ignored.
    pub fn parse(name: &str, phi: Option<f64>, grid_size: Option<usize>) -> Result<ProblemId, String> {
        let takes_phi = name == "krogh";
        let takes_grid = matches!(name, "bbm" | "advection");
        if phi.is_some() && !takes_phi {
            return Err(format!("--phi does not apply to problem {name:?}"));
        }
        if grid_size.is_some() && !takes_grid {
            return Err(format!("--grid-size does not apply to problem {name:?}"));
        }
        match name {
            "hairer-wanner" => Ok(ProblemId::HairerWanner),
            "krogh" => {
                let phi = phi.ok_or("problem krogh requires --phi")?;
                Ok(ProblemId::Krogh { phi })
            }
            "rigidbody" => Ok(ProblemId::RigidBody),
            "bbm" => Ok(ProblemId::Bbm { n: grid_size.unwrap_or(BBM_DEFAULT_GRID) }),
            "lipschitz-linear" => Ok(ProblemId::LipschitzLinear),
            "lipschitz-nonlinear" => Ok(ProblemId::LipschitzNonlinear),
            "advection" => {
                Ok(ProblemId::Advection { n: grid_size.unwrap_or(ADVECTION_DEFAULT_GRID) })
            }
            _ => Err(format!(
                "unknown problem {name:?}; expected hairer-wanner, krogh, rigidbody, bbm, \
                 lipschitz-linear, lipschitz-nonlinear, or advection"
            )),
        }
    }

    pub fn build(self) -> Result<Problem, String> {
        match self {
            ProblemId::HairerWanner => Ok(problems::hairer_wanner()),
            ProblemId::Krogh { phi } => Ok(problems::krogh(phi)),
            ProblemId::RigidBody => Ok(problems::rigid_body()),
            ProblemId::Bbm { n } => {
                problems::bbm_fourier(n, BBM_WAVE_SPEED).map_err(|e| e.to_string())
            }
            ProblemId::LipschitzLinear => Ok(problems::lipschitz_linear()),
            ProblemId::LipschitzNonlinear => Ok(problems::lipschitz_nonlinear()),
            ProblemId::Advection { n } => {
                problems::advection_1d_upwind(n).map_err(|e| e.to_string())
            }
        }
    }

    /// Default output-file prefix.
    pub fn default_name(self) -> &'static str {
        match self {
            ProblemId::HairerWanner => "hairer_wanner",
            ProblemId::Krogh { .. } => "krogh",
            ProblemId::RigidBody => "rigidbody",
            ProblemId::Bbm { .. } => "bbm",
            ProblemId::LipschitzLinear => "lipschitz_linear",
            ProblemId::LipschitzNonlinear => "lipschitz_nonlinear",
            ProblemId::Advection { .. } => "advection",
        }
    }
}

/// One fully specified integration run.
#[derive(Clone)]
pub struct RunSpec {
    /// Output-file prefix.
    pub name: String,
    pub problem: ProblemId,
    pub method: Method,
    pub estimator: EstimatorKind,
    pub beta: [f64; 3],
    pub k: f64,
    pub tol: f64,
    pub mode: ControlMode,
}

impl RunSpec {
    fn solve_config(&self) -> SolveConfig {
        let controller = ControllerConfig::new(self.beta, self.k, self.mode);
        SolveConfig::new(self.method, self.estimator, controller, self.tol)
    }
}

/// Which knob a sweep varies.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Tolerance,
    Phi,
}

impl SweepParameter {
    pub fn tag(self) -> &'static str {
        match self {
            SweepParameter::Tolerance => "tol",
            SweepParameter::Phi => "phi",
        }
    }
}

struct RunOutcome {
    trace: IntegrationTrace,
    summary: Summary,
    completed: bool,
}

fn euclidean_error(trace: &IntegrationTrace, problem: &Problem) -> Option<f64> {
    let reference = problem.reference.as_ref()?;
    let exact = reference(trace.t_final);
    let err = trace
        .u_final
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Some(err)
}

fn execute(problem: &Problem, spec: &RunSpec) -> RunOutcome {
    match solve(problem, &spec.solve_config()) {
        Ok(trace) => {
            let summary = Summary {
                n_accepted: trace.n_accepted,
                n_rejected: trace.n_rejected,
                final_error: euclidean_error(&trace, problem),
                gronwall_bound: problem
                    .lipschitz
                    .and_then(|l| gronwall_bound(&trace, l, 0.0).ok()),
                diagnostic: None,
            };
            RunOutcome { trace, summary, completed: true }
        }
        Err(failure) => {
            let summary = Summary {
                n_accepted: failure.partial.n_accepted,
                n_rejected: failure.partial.n_rejected,
                final_error: None,
                gronwall_bound: None,
                diagnostic: Some(failure.to_string()),
            };
            RunOutcome { trace: failure.partial, summary, completed: false }
        }
    }
}

/// Integrates once and writes `<name>_trace.csv` plus
/// `<name>_summary.json`. Returns whether the solve completed; an abort
/// still writes the partial trace and puts the diagnostic in the
/// summary.
pub fn run_integrate(spec: &RunSpec, out_dir: &Path) -> Result<bool, String> {
    let problem = spec.problem.build()?;
    let outcome = execute(&problem, spec);
    output::write_file(
        &out_dir.join(format!("{}_trace.csv", spec.name)),
        &output::trace_csv(&outcome.trace),
    )?;
    output::write_file(
        &out_dir.join(format!("{}_summary.json", spec.name)),
        &output::summary_json(&outcome.summary),
    )?;
    if let Some(diagnostic) = &outcome.summary.diagnostic {
        eprintln!("run {}: {diagnostic}", spec.name);
    }
    Ok(outcome.completed)
}

/// Runs `base` once per sweep value, in parallel on the given pool, and
/// writes `<name>_sweep.csv` with rows ordered by parameter value.
/// Returns whether every solve completed; points whose solve aborted
/// keep their partial step counts and leave the error fields empty.
pub fn run_sweep(
    base: &RunSpec,
    parameter: SweepParameter,
    values: &[f64],
    out_dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<bool, String> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let outcomes: Vec<(f64, RunOutcome)> = pool.install(|| {
        sorted
            .par_iter()
            .map(|&value| {
                let mut spec = base.clone();
                match parameter {
                    SweepParameter::Tolerance => spec.tol = value,
                    SweepParameter::Phi => spec.problem = ProblemId::Krogh { phi: value },
                }
                let problem = spec.problem.build()?;
                Ok((value, execute(&problem, &spec)))
            })
            .collect::<Result<_, String>>()
    })?;

    let mut completed = true;
    let rows: Vec<SweepRow> = outcomes
        .iter()
        .map(|(value, outcome)| {
            if let Some(diagnostic) = &outcome.summary.diagnostic {
                eprintln!("sweep {} at {}: {diagnostic}", base.name, output::fmt17(*value));
                completed = false;
            }
            SweepRow {
                parameter: *value,
                n_accepted: outcome.summary.n_accepted,
                n_rejected: outcome.summary.n_rejected,
                error: outcome.summary.final_error,
                gronwall_bound: outcome.summary.gronwall_bound,
            }
        })
        .collect();
    output::write_file(
        &out_dir.join(format!("{}_sweep.csv", base.name)),
        &output::sweep_csv(&rows),
    )?;
    Ok(completed)
}

/// Evaluates the control-loop spectral radius along the stability
/// boundary on the default 256-ray grid and writes `<name>_map.csv`.
pub fn run_map(
    name: &str,
    method: Method,
    estimator: EstimatorKind,
    controller: &ControllerConfig,
    out_dir: &Path,
) -> Result<(), String> {
    let points = stability_map(method, estimator, controller, &default_phi_grid());
    output::write_file(&out_dir.join(format!("{name}_map.csv")), &output::map_csv(&points))
}
