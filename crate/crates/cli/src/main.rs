//! Command-line driver for the adaptive Runge-Kutta toolkit: integrates
//! the built-in test problems under embedded or reconstruction-residual
//! error control, evaluates step-size-control stability maps, sweeps
//! tolerances or rotation angles, and reproduces the canned experiments
//! as CSV/JSON artifacts.
//!
//! Exit codes: 0 when every solve completed, 1 when a solver aborted
//! (partial artifacts are still written), 2 for an invalid
//! specification.

mod experiments;
mod output;
mod runspec;

use clap::{Args, Parser, Subcommand};
use experiments::Action;
use rk_certify::controller::{ControlMode, ControllerConfig};
use rk_certify::estimators::EstimatorKind;
use rk_certify::tableau::Method;
use runspec::{ProblemId, RunSpec, SweepParameter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

const EXIT_SOLVER_FAILURE: u8 = 1;
const EXIT_INVALID_SPEC: u8 = 2;

fn parse_method(s: &str) -> Result<Method, String> {
    Method::from_name(s).map_err(|e| e.to_string())
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    EstimatorKind::from_name(s).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<ControlMode, String> {
    match s {
        "eps" => Ok(ControlMode::ErrorPerStep),
        "epus" => Ok(ControlMode::ErrorPerUnitStep),
        _ => Err(format!("unknown mode {s:?}; expected eps or epus")),
    }
}

fn parse_sweep_parameter(s: &str) -> Result<SweepParameter, String> {
    match s {
        "tol" => Ok(SweepParameter::Tolerance),
        "phi" => Ok(SweepParameter::Phi),
        _ => Err(format!("unknown sweep parameter {s:?}; expected tol or phi")),
    }
}

/// Controller gain triple parsed from `b1,b2,b3`.
#[derive(Clone)]
struct Gains([f64; 3]);

impl FromStr for Gains {
    type Err = String;

    fn from_str(s: &str) -> Result<Gains, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated gains, got {s:?}"));
        }
        let mut gains = [0.0; 3];
        for (slot, part) in gains.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("bad gain {part:?}: {e}"))?;
            if !slot.is_finite() {
                return Err(format!("gain {part:?} is not finite"));
            }
        }
        Ok(Gains(gains))
    }
}

/// Nonempty comma-separated list of finite sweep values.
#[derive(Clone)]
struct ValueList(Vec<f64>);

impl FromStr for ValueList {
    type Err = String;

    fn from_str(s: &str) -> Result<ValueList, String> {
        let values = s
            .split(',')
            .map(|part| {
                let value = part
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad sweep value {part:?}: {e}"))?;
                if !value.is_finite() {
                    return Err(format!("sweep value {part:?} is not finite"));
                }
                Ok(value)
            })
            .collect::<Result<Vec<f64>, String>>()?;
        if values.is_empty() {
            return Err("sweep value list is empty".to_string());
        }
        Ok(ValueList(values))
    }
}

#[derive(Parser)]
#[command(
    name = "rk-certify",
    version,
    about = "Adaptive explicit Runge-Kutta runs with residual-based error control, \
             certified global bounds, and step-size-control stability maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one problem; writes <name>_trace.csv and <name>_summary.json
    Integrate(IntegrateArgs),
    /// Control-loop spectral radii along the stability boundary; writes <name>_map.csv
    StabilityMap(StabilityMapArgs),
    /// One integration per parameter value; writes <name>_sweep.csv
    Sweep(SweepArgs),
    /// Run a canned experiment: table1 | table2 | krogh | rigidbody | bbm | lipschitz | advection
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct ControlArgs {
    /// Runge-Kutta pair: euler | heun2_euler1 | bs3
    #[arg(long, value_parser = parse_method)]
    method: Method,

    /// Error estimator: embedded | residual-l1 | residual-l2
    #[arg(long, value_parser = parse_estimator)]
    estimator: EstimatorKind,

    /// Controller gains "b1,b2,b3"; defaults to the PI pair 0.6,-0.2,0
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<Gains>,

    /// Control order the gains are divided by; defaults to the
    /// estimator's asymptotic order for the chosen method
    #[arg(long)]
    k: Option<u32>,

    /// Tolerance; both the absolute and the relative weight use it
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,

    /// Step-size weighting: eps (error per step) | epus (error per unit step)
    #[arg(long, default_value = "eps", value_parser = parse_mode)]
    mode: ControlMode,
}

impl ControlArgs {
    fn gains(&self) -> [f64; 3] {
        self.beta.as_ref().map(|g| g.0).unwrap_or([0.6, -0.2, 0.0])
    }

    fn control_order(&self) -> Result<f64, String> {
        match self.k {
            Some(0) => Err("control order k must be at least 1".to_string()),
            Some(k) => Ok(f64::from(k)),
            None => Ok(self.estimator.default_control_order(self.method.order())),
        }
    }

    fn validated_tol(&self) -> Result<f64, String> {
        if self.tol > 0.0 && self.tol.is_finite() {
            Ok(self.tol)
        } else {
            Err(format!("tolerance must be positive and finite, got {}", self.tol))
        }
    }
}

#[derive(Args)]
struct ProblemArgs {
    /// Test problem: hairer-wanner | krogh | rigidbody | bbm |
    /// lipschitz-linear | lipschitz-nonlinear | advection
    #[arg(long)]
    problem: String,

    /// Rotation angle; applies to the krogh problem only
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,

    /// Grid resolution; applies to the semidiscrete problems (bbm, advection)
    #[arg(long)]
    grid_size: Option<usize>,
}

impl ProblemArgs {
    fn resolve(&self) -> Result<ProblemId, String> {
        ProblemId::parse(&self.problem, self.phi, self.grid_size)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file prefix; defaults to a name derived from the run
    #[arg(long)]
    name: Option<String>,

    /// Directory the artifact files are written into
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

impl OutputArgs {
    fn prepare(&self) -> Result<&Path, String> {
        std::fs::create_dir_all(&self.output_dir)
            .map_err(|e| format!("cannot create {}: {e}", self.output_dir.display()))?;
        Ok(&self.output_dir)
    }
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    control: ControlArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct StabilityMapArgs {
    #[command(flatten)]
    control: ControlArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    control: ControlArgs,

    /// Which parameter the values replace: tol | phi
    #[arg(long, value_parser = parse_sweep_parameter)]
    parameter: SweepParameter,

    /// Comma-separated sweep values; output rows are ordered by value
    #[arg(long, allow_hyphen_values = true)]
    values: ValueList,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment id: table1 | table2 | krogh | rigidbody | bbm | lipschitz | advection
    id: String,

    /// Directory the artifact files are written into
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

/// Thread pool for sweeps, capped by `RK_CERTIFY_THREADS` when set.
fn sweep_pool() -> Result<rayon::ThreadPool, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("RK_CERTIFY_THREADS") {
        let threads: usize = raw
            .trim()
            .parse()
            .map_err(|_| format!("RK_CERTIFY_THREADS must be a positive integer, got {raw:?}"))?;
        if threads == 0 {
            return Err("RK_CERTIFY_THREADS must be positive".to_string());
        }
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| format!("cannot build thread pool: {e}"))
}

fn integrate(args: &IntegrateArgs) -> Result<bool, String> {
    let problem = args.problem.resolve()?;
    let spec = RunSpec {
        name: args
            .output
            .name
            .clone()
            .unwrap_or_else(|| problem.default_name().to_string()),
        problem,
        method: args.control.method,
        estimator: args.control.estimator,
        beta: args.control.gains(),
        k: args.control.control_order()?,
        tol: args.control.validated_tol()?,
        mode: args.control.mode,
    };
    runspec::run_integrate(&spec, args.output.prepare()?)
}

fn stability_map(args: &StabilityMapArgs) -> Result<bool, String> {
    let controller = ControllerConfig::new(
        args.control.gains(),
        args.control.control_order()?,
        args.control.mode,
    );
    controller.validate().map_err(|e| e.to_string())?;
    let name = args.output.name.clone().unwrap_or_else(|| {
        format!(
            "{}_{}",
            args.control.method.name(),
            args.control.estimator.name().replace('-', "_")
        )
    });
    runspec::run_map(
        &name,
        args.control.method,
        args.control.estimator,
        &controller,
        args.output.prepare()?,
    )?;
    Ok(true)
}

fn sweep(args: &SweepArgs) -> Result<bool, String> {
    // When the sweep itself supplies the angles, a --phi value would
    // never be used; resolve the problem with a placeholder instead of
    // demanding one.
    let phi = match args.parameter {
        SweepParameter::Phi => args.problem.phi.or(Some(0.0)),
        SweepParameter::Tolerance => args.problem.phi,
    };
    let problem = ProblemId::parse(&args.problem.problem, phi, args.problem.grid_size)?;
    if args.parameter == SweepParameter::Phi && !matches!(problem, ProblemId::Krogh { .. }) {
        return Err("--parameter phi applies to the krogh problem only".to_string());
    }
    if args.parameter == SweepParameter::Tolerance {
        if let Some(bad) = args.values.0.iter().find(|v| **v <= 0.0) {
            return Err(format!("swept tolerances must be positive, got {bad}"));
        }
    }
    let base = RunSpec {
        name: args.output.name.clone().unwrap_or_else(|| {
            format!("{}_{}", problem.default_name(), args.parameter.tag())
        }),
        problem,
        method: args.control.method,
        estimator: args.control.estimator,
        beta: args.control.gains(),
        k: args.control.control_order()?,
        tol: args.control.validated_tol()?,
        mode: args.control.mode,
    };
    runspec::run_sweep(&base, args.parameter, &args.values.0, args.output.prepare()?, &sweep_pool()?)
}

fn experiment(args: &ExperimentArgs) -> Result<bool, String> {
    let actions = experiments::actions(&args.id).ok_or_else(|| {
        format!(
            "unknown experiment {:?}; expected one of {}",
            args.id,
            experiments::EXPERIMENT_IDS.join(", ")
        )
    })?;
    std::fs::create_dir_all(&args.output_dir)
        .map_err(|e| format!("cannot create {}: {e}", args.output_dir.display()))?;
    let pool = sweep_pool()?;
    let mut completed = true;
    for action in actions {
        completed &= match action {
            Action::Integrate(spec) => runspec::run_integrate(&spec, &args.output_dir)?,
            Action::Sweep { base, parameter, values } => {
                runspec::run_sweep(&base, parameter, &values, &args.output_dir, &pool)?
            }
        };
    }
    Ok(completed)
}

fn run(cli: &Cli) -> Result<bool, String> {
    match &cli.command {
        Command::Integrate(args) => integrate(args),
        Command::StabilityMap(args) => stability_map(args),
        Command::Sweep(args) => sweep(args),
        Command::Experiment(args) => experiment(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_SOLVER_FAILURE),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_INVALID_SPEC)
        }
    }
}
