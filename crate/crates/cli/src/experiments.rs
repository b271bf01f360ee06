//! Canned experiment configurations: the study's two step-count tables,
//! the rotation-angle rejection sweep, the work-precision and certified-
//! bound tolerance sweeps, and the two semidiscrete step-size plateaus.

use crate::runspec::{ProblemId, RunSpec, SweepParameter, ADVECTION_DEFAULT_GRID, BBM_DEFAULT_GRID};
use rk_certify::controller::ControlMode;
use rk_certify::estimators::EstimatorKind;
use rk_certify::tableau::Method;
use std::f64::consts::PI;

pub const EXPERIMENT_IDS: [&str; 7] =
    ["table1", "table2", "krogh", "rigidbody", "bbm", "lipschitz", "advection"];

const I_GAINS: [f64; 3] = [1.0, 0.0, 0.0];
const PI_GAINS: [f64; 3] = [0.6, -0.2, 0.0];
const TABLE_TOL: f64 = 1e-4;

/// One unit of work inside an experiment.
pub enum Action {
    Integrate(RunSpec),
    Sweep { base: RunSpec, parameter: SweepParameter, values: Vec<f64> },
}

/// File-name fragment for an estimator.
fn tag(estimator: EstimatorKind) -> String {
    estimator.name().replace('-', "_")
}

fn spec(
    name: String,
    problem: ProblemId,
    method: Method,
    estimator: EstimatorKind,
    beta: [f64; 3],
    tol: f64,
) -> RunSpec {
    RunSpec {
        name,
        problem,
        method,
        estimator,
        beta,
        k: estimator.default_control_order(method.order()),
        tol,
        mode: ControlMode::ErrorPerStep,
    }
}

/// The six step-count columns of one table: each controller crossed
/// with each estimator on the stiff scalar benchmark.
fn table(name: &str, method: Method) -> Vec<Action> {
    let mut actions = Vec::new();
    for (controller_tag, gains) in [("i", I_GAINS), ("pi", PI_GAINS)] {
        for estimator in EstimatorKind::ALL {
            actions.push(Action::Integrate(spec(
                format!("{name}_{}_{controller_tag}", tag(estimator)),
                ProblemId::HairerWanner,
                method,
                estimator,
                gains,
                TABLE_TOL,
            )));
        }
    }
    actions
}

/// Rejected-step counts over 65 rotation angles in `[0, pi]`, once per
/// controller, with the L1 residual estimator.
fn krogh() -> Vec<Action> {
    let values: Vec<f64> = (0..=64).map(|i| i as f64 * PI / 64.0).collect();
    [("krogh_i", I_GAINS), ("krogh_pi", PI_GAINS)]
        .into_iter()
        .map(|(name, gains)| Action::Sweep {
            base: spec(
                name.to_string(),
                ProblemId::Krogh { phi: 0.0 },
                Method::Bs3,
                EstimatorKind::ResidualL1,
                gains,
                TABLE_TOL,
            ),
            parameter: SweepParameter::Phi,
            values: values.clone(),
        })
        .collect()
}

fn tolerance_range(exponents: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    exponents.map(|e| 10f64.powi(-e)).collect()
}

/// Work-precision data on the rigid body, one tolerance sweep per
/// estimator.
fn rigidbody() -> Vec<Action> {
    EstimatorKind::ALL
        .into_iter()
        .map(|estimator| Action::Sweep {
            base: spec(
                format!("rigidbody_{}", tag(estimator)),
                ProblemId::RigidBody,
                Method::Bs3,
                estimator,
                PI_GAINS,
                TABLE_TOL,
            ),
            parameter: SweepParameter::Tolerance,
            values: tolerance_range(4..=9),
        })
        .collect()
}

/// Certified-bound reliability data: both Lipschitz problems crossed
/// with both adaptive methods, swept over tolerance with the L2
/// residual estimator.
fn lipschitz() -> Vec<Action> {
    let mut actions = Vec::new();
    for (problem, problem_tag) in [
        (ProblemId::LipschitzLinear, "linear"),
        (ProblemId::LipschitzNonlinear, "nonlinear"),
    ] {
        for method in [Method::Heun2Euler1, Method::Bs3] {
            actions.push(Action::Sweep {
                base: spec(
                    format!("lipschitz_{problem_tag}_{}", method.name()),
                    problem,
                    method,
                    EstimatorKind::ResidualL2,
                    PI_GAINS,
                    TABLE_TOL,
                ),
                parameter: SweepParameter::Tolerance,
                values: tolerance_range(3..=7),
            });
        }
    }
    actions
}

/// One traversal of a semidiscrete problem per estimator.
fn traversals(name: &str, problem: ProblemId) -> Vec<Action> {
    EstimatorKind::ALL
        .into_iter()
        .map(|estimator| {
            Action::Integrate(spec(
                format!("{name}_{}", tag(estimator)),
                problem,
                Method::Bs3,
                estimator,
                PI_GAINS,
                TABLE_TOL,
            ))
        })
        .collect()
}

pub fn actions(id: &str) -> Option<Vec<Action>> {
    match id {
        "table1" => Some(table("table1", Method::Heun2Euler1)),
        "table2" => Some(table("table2", Method::Bs3)),
        "krogh" => Some(krogh()),
        "rigidbody" => Some(rigidbody()),
        "bbm" => Some(traversals("bbm", ProblemId::Bbm { n: BBM_DEFAULT_GRID })),
        "lipschitz" => Some(lipschitz()),
        "advection" => {
            Some(traversals("advection", ProblemId::Advection { n: ADVECTION_DEFAULT_GRID }))
        }
        _ => None,
    }
}
