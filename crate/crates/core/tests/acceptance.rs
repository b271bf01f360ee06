//! End-to-end acceptance checks, one test per headline capability.
//!
//! Each test prints a single `[criterion N] PASS — ...` line (visible
//! with `--nocapture`) after its assertions; the test name itself gives
//! the pass/fail line in the default harness output. Step counts are
//! compared against the reference tallies for the two benchmark tables;
//! everything else checks closed forms, fitted convergence orders,
//! certified error bounds, and qualitative step-size behavior at the
//! stated tolerances.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rk_certify::controller::{limiter, ControlMode, ControllerConfig};
use rk_certify::estimators::{
    integrate, residual_norm_l1, residual_norm_l2, EstimatorKind, QuadratureSettings,
};
use rk_certify::integrator::{gronwall_bound, solve, IntegrationTrace, SolveConfig};
use rk_certify::problems::{self, Problem};
use rk_certify::reconstruction::Reconstruction;
use rk_certify::stability::{
    boundary_radius, build_jacobian, default_phi_grid, residual_log_sensitivity,
    spectral_radius, stability_map,
};
use rk_certify::tableau::{rk_step, Method};
use std::f64::consts::PI;
use std::time::Instant;

fn pi_ctrl(k: f64) -> ControllerConfig {
    ControllerConfig::pi_controller(k, ControlMode::ErrorPerStep)
}

fn i_ctrl(k: f64) -> ControllerConfig {
    ControllerConfig::i_controller(k, ControlMode::ErrorPerStep)
}

fn run(problem: &Problem, method: Method, est: EstimatorKind, ctrl: ControllerConfig, tol: f64) -> IntegrationTrace {
    let cfg = SolveConfig::new(method, est, ctrl, tol);
    solve(problem, &cfg).unwrap_or_else(|f| panic!("{} failed: {:?}", problem.name, f.error))
}

fn l2_error(trace: &IntegrationTrace, problem: &Problem) -> f64 {
    let exact = problem.reference.as_ref().expect("reference solution")(trace.t_final);
    trace
        .u_final
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Least-squares slope of `ys` against `xs`.
fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Relative standard deviation (percent) of the last half of the
/// controller-chosen steps. The terminal step is excluded: its length is
/// cut to land on the end of the interval, not chosen by the controller.
fn plateau_rel_std_percent(trace: &IntegrationTrace) -> f64 {
    let mut dts: Vec<f64> = trace.records.iter().filter(|r| r.accepted).map(|r| r.dt).collect();
    dts.pop();
    let tail = &dts[dts.len() / 2..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / tail.len() as f64;
    100.0 * var.sqrt() / mean
}

/// The six (controller, estimator) columns shared by both benchmark
/// tables: I and PI each with the embedded, L1-residual, and L2-residual
/// estimators. Control order is the embedded order for the embedded
/// estimator and one higher for the residual estimators.
fn table_columns(p: f64) -> [(&'static str, bool, EstimatorKind, f64); 6] {
    [
        ("I/embedded", false, EstimatorKind::Embedded, p),
        ("I/residual-l1", false, EstimatorKind::ResidualL1, p + 1.0),
        ("I/residual-l2", false, EstimatorKind::ResidualL2, p + 1.0),
        ("PI/embedded", true, EstimatorKind::Embedded, p),
        ("PI/residual-l1", true, EstimatorKind::ResidualL1, p + 1.0),
        ("PI/residual-l2", true, EstimatorKind::ResidualL2, p + 1.0),
    ]
}

fn table_counts(method: Method, p: f64, tol: f64) -> Vec<(String, usize, usize)> {
    table_columns(p)
        .iter()
        .map(|(name, pi, est, k)| {
            let ctrl = if *pi { pi_ctrl(*k) } else { i_ctrl(*k) };
            let trace = run(&problems::hairer_wanner(), method, *est, ctrl, tol);
            (name.to_string(), trace.n_accepted, trace.n_rejected)
        })
        .collect()
}

#[test]
fn criterion_1_second_order_table() {
    let start = Instant::now();
    let counts = table_counts(Method::Heun2Euler1, 2.0, 1e-4);
    let reference = [1877.0, 1811.0, 1815.0, 1918.0, 1824.0, 1828.0];
    for ((name, accepted, _), expected) in counts.iter().zip(reference) {
        let deviation = (*accepted as f64 - expected) / expected;
        assert!(
            deviation.abs() <= 0.03,
            "{name}: accepted {accepted} deviates {:.2}% from {expected}",
            100.0 * deviation
        );
    }
    let rejected: Vec<usize> = counts.iter().map(|c| c.2).collect();
    let residual_max = rejected[1].max(rejected[2]);
    assert!(
        rejected[0] >= 5 * residual_max,
        "I/embedded rejected {} is not at least 5x I/residual rejected {residual_max}",
        rejected[0]
    );
    assert_eq!(rejected[4], 0, "PI/residual-l1 rejected steps");
    assert_eq!(rejected[5], 0, "PI/residual-l2 rejected steps");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "ran {elapsed:.1}s, budget 10s");
    println!(
        "[criterion 1] PASS — accepted {:?} within 3%, rejected {:?}, {elapsed:.2}s",
        counts.iter().map(|c| c.1).collect::<Vec<_>>(),
        rejected
    );
}

#[test]
fn criterion_2_third_order_table() {
    let start = Instant::now();
    let counts = table_counts(Method::Bs3, 3.0, 1e-4);
    let reference = [1318.0, 1327.0, 1326.0, 1330.0, 1333.0, 1333.0];
    for ((name, accepted, _), expected) in counts.iter().zip(reference) {
        let deviation = (*accepted as f64 - expected) / expected;
        assert!(
            deviation.abs() <= 0.03,
            "{name}: accepted {accepted} deviates {:.2}% from {expected}",
            100.0 * deviation
        );
    }
    let rejected: Vec<usize> = counts.iter().map(|c| c.2).collect();
    assert!(
        (80..=160).contains(&rejected[0]),
        "I/embedded rejected {} outside [80, 160]",
        rejected[0]
    );
    for i in 3..6 {
        assert!(rejected[i] <= 2, "{}: rejected {} exceeds 2", counts[i].0, rejected[i]);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "ran {elapsed:.1}s, budget 30s");
    println!(
        "[criterion 2] PASS — accepted {:?} within 3%, rejected {:?}, {elapsed:.2}s",
        counts.iter().map(|c| c.1).collect::<Vec<_>>(),
        rejected
    );
}

/// Complex scalar problem `u' = lambda u` encoded as a 2-vector; the
/// Euclidean norm of the encoding equals the complex modulus, so the
/// scalar closed forms for the reconstruction residuals apply verbatim.
fn complex_rhs(lambda: Complex64) -> impl Fn(f64, &[f64]) -> Vec<f64> {
    move |_t, u| {
        let z = Complex64::new(u[0], u[1]) * lambda;
        vec![z.re, z.im]
    }
}

#[test]
fn criterion_3_closed_form_residual_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let settings = QuadratureSettings::default();
    let mut checked = 0;
    while checked < 100 {
        let lambda = Complex64::new(rng.gen_range(-4.0..-0.05), rng.gen_range(-3.0..3.0));
        let dt = rng.gen_range(0.05..1.0);
        let u: Vec<f64> = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let norm_u = (u[0] * u[0] + u[1] * u[1]).sqrt();
        if norm_u < 0.1 {
            continue;
        }
        checked += 1;
        let f = complex_rhs(lambda);
        let rel = |got: f64, want: f64| (got - want).abs() / want.abs();

        // Linear reconstruction of the forward Euler step.
        let step = rk_step(&Method::Euler.tableau(), &f, 0.0, &u, dt, None).unwrap();
        let rec = Reconstruction::linear(&u, &step.u_next, dt).unwrap();
        let l1 = residual_norm_l1(&rec, &f, 0.0, &settings).raw;
        let l2 = residual_norm_l2(&rec, &f, 0.0, &settings).raw;
        let scale = dt * dt * lambda.norm_sqr() * norm_u;
        assert!(rel(l1, 0.5 * scale) < 1e-7, "euler L1 at lambda={lambda}, dt={dt}");
        assert!(rel(l2, scale / 3f64.sqrt()) < 1e-7, "euler L2 at lambda={lambda}, dt={dt}");

        // Left quadratic reconstruction of the second-order step.
        let step = rk_step(&Method::Heun2Euler1.tableau(), &f, 0.0, &u, dt, None).unwrap();
        let rec = Reconstruction::quadratic_left(&u, &step.stages[0], &step.u_next, dt).unwrap();
        let l1 = residual_norm_l1(&rec, &f, 0.0, &settings).raw;
        let l2 = residual_norm_l2(&rec, &f, 0.0, &settings).raw;
        let scale = dt.powi(3) * lambda.norm().powi(3) * norm_u;
        assert!(rel(l1, scale / 6.0) < 1e-7, "heun L1 at lambda={lambda}, dt={dt}");
        assert!(rel(l2, scale / (2.0 * 5f64.sqrt())) < 1e-7, "heun L2 at lambda={lambda}, dt={dt}");

        // Central cubic reconstruction of the third-order step.
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
        let expected = dt.powi(4) * lambda.norm().powi(4) * norm_u * shape / (6.0 * 105f64.sqrt());
        let l2 = residual_norm_l2(&rec, &f, 0.0, &settings).raw;
        assert!(rel(l2, expected) < 1e-7, "cubic L2 at lambda={lambda}, dt={dt}");
    }
    println!("[criterion 3] PASS — 100 random (lambda, dt, u) triples match closed forms to 1e-7");
}

#[test]
fn criterion_4_stability_maps() {
    let grid = default_phi_grid();

    // (a) second-order method, residual estimators, PI: contractive on
    // the whole boundary grid.
    for est in [EstimatorKind::ResidualL1, EstimatorKind::ResidualL2] {
        let map = stability_map(Method::Heun2Euler1, est, &pi_ctrl(3.0), &grid);
        assert_eq!(map.len(), 256);
        for point in &map {
            let rho = point
                .spectral_radius
                .unwrap_or_else(|| panic!("no radius at phi={}", point.phi));
            assert!(rho < 1.0, "rho={rho} at phi={} for {est:?}", point.phi);
        }
    }

    // (b) same method and controller with the embedded estimator loses
    // contractivity somewhere on the boundary.
    let map = stability_map(Method::Heun2Euler1, EstimatorKind::Embedded, &pi_ctrl(2.0), &grid);
    let max_rho = map.iter().filter_map(|p| p.spectral_radius).fold(0.0f64, f64::max);
    assert!(max_rho > 1.0, "embedded PI max rho {max_rho} never exceeds 1");

    // (c) forward Euler with a residual estimator and the deadbeat
    // controller is neutrally stable at the negative real axis crossing.
    let stability = Method::Euler.tableau().stability_polynomial();
    let z = boundary_radius(&stability, PI).unwrap().z;
    let jac = build_jacobian(&i_ctrl(2.0), EstimatorKind::ResidualL1, Method::Euler, z).unwrap();
    let rho = spectral_radius(&jac.entries).unwrap();
    assert!((rho - 1.0).abs() <= 1e-6, "rho at phi=pi is {rho}");

    // (d) the (2,2) Jacobian entry of the deadbeat loop with the central
    // cubic L2 residual matches its closed form at random boundary points.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let stability = Method::Bs3.tableau().stability_polynomial();
    let k = 4.0;
    for _ in 0..50 {
        let phi = rng.gen_range(PI / 2.0..PI);
        let z = boundary_radius(&stability, phi).unwrap().z;
        let jac = build_jacobian(&i_ctrl(k), EstimatorKind::ResidualL2, Method::Bs3, z).unwrap();
        let expected = 1.0
            - (64.0 + 10.0 * z.norm_sqr() - 45.0 * z.re)
                / (2.0 * k * (8.0 + z.norm_sqr() - 5.0 * z.re));
        assert!(
            (jac.entries[1][1] - expected).abs() <= 1e-12,
            "J22 at phi={phi}: {} vs {expected}",
            jac.entries[1][1]
        );
    }

    // (e) the L1 sensitivity of the central cubic residual agrees with a
    // finite-difference log-derivative of the norm integral itself.
    let settings = QuadratureSettings { rtol: 1e-13, atol: 1e-300, max_subdiv: 2000 };
    let norm_integral = |dt: f64, lambda: Complex64| {
        let h = move |t: f64| {
            let g = Complex64::new(t - 2.0 * dt, 0.0) + lambda * (t * dt);
            t * (dt - t) * g.norm() / 6.0
        };
        let q = integrate(h, 0.0, dt, &settings);
        assert!(q.converged);
        q.value
    };
    for _ in 0..50 {
        let phi = rng.gen_range(PI / 2.0..PI);
        let lambda = boundary_radius(&stability, phi).unwrap().z;
        let s = 1.0 + 1e-6;
        let fd = (norm_integral(s, lambda).ln() - norm_integral(1.0 / s, lambda).ln())
            / (2.0 * s.ln());
        let q = residual_log_sensitivity(Method::Bs3, EstimatorKind::ResidualL1, lambda, 1.0)
            .unwrap();
        assert!((q - fd).abs() < 1e-6, "L1 sensitivity {q} vs finite difference {fd} at phi={phi}");
    }

    println!("[criterion 4] PASS — contractive residual/PI map, embedded blow-up, neutral Euler point, closed-form and finite-difference Jacobian checks");
}

#[test]
fn criterion_5_rotation_angle_sweep() {
    let start = Instant::now();
    let tol = 1e-4;
    let mut pi_max = 0usize;
    let mut i_band_max = 0usize;
    for i in 0..=64 {
        let phi = i as f64 * PI / 64.0;
        let problem = problems::krogh(phi);
        let trace = run(&problem, Method::Bs3, EstimatorKind::ResidualL1, pi_ctrl(4.0), tol);
        pi_max = pi_max.max(trace.n_rejected);
        // The band where the deadbeat loop crosses the contractivity
        // boundary: one sixteenth of a turn either side of phi = 5pi/8.
        if (36..=44).contains(&i) {
            let trace = run(&problem, Method::Bs3, EstimatorKind::ResidualL1, i_ctrl(4.0), tol);
            i_band_max = i_band_max.max(trace.n_rejected);
        }
    }
    assert!(i_band_max > 20, "I controller band max rejected {i_band_max} does not exceed 20");
    assert!(pi_max <= 2, "PI max rejected {pi_max} exceeds 2");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "ran {elapsed:.1}s, budget 120s");
    println!(
        "[criterion 5] PASS — I band max rejected {i_band_max} > 20, PI max rejected {pi_max} <= 2, {elapsed:.1}s"
    );
}

#[test]
fn criterion_6_tolerance_scaling() {
    let tolerances: Vec<f64> = (4..=9).map(|e| 10f64.powi(-e)).collect();
    let log_tols: Vec<f64> = tolerances.iter().map(|t| t.ln()).collect();

    let slope_for = |est: EstimatorKind, k: f64| -> (f64, usize) {
        let mut log_errs = Vec::new();
        let mut rejected = 0;
        for &tol in &tolerances {
            let problem = problems::rigid_body();
            let trace = run(&problem, Method::Bs3, est, pi_ctrl(k), tol);
            rejected += trace.n_rejected;
            log_errs.push(l2_error(&trace, &problem).ln());
        }
        (fitted_slope(&log_tols, &log_errs), rejected)
    };

    let (embedded_slope, _) = slope_for(EstimatorKind::Embedded, 3.0);
    assert!(
        (embedded_slope - 1.0).abs() <= 0.1,
        "embedded error-per-step slope {embedded_slope} outside 1.0 +- 0.1"
    );
    for est in [EstimatorKind::ResidualL1, EstimatorKind::ResidualL2] {
        let (slope, rejected) = slope_for(est, 4.0);
        assert!(
            (slope - 0.75).abs() <= 0.1,
            "{est:?} error-per-step slope {slope} outside 0.75 +- 0.1"
        );
        assert_eq!(rejected, 0, "{est:?} rejected steps across the tolerance sweep");
    }
    println!(
        "[criterion 6] PASS — embedded slope {embedded_slope:.3}, residual slopes at tau^(3/4) with zero rejections"
    );
}

#[test]
fn criterion_7_certified_global_bound() {
    let problems_and_lipschitz: [(fn() -> Problem, &str); 2] = [
        (problems::lipschitz_linear, "linear"),
        (problems::lipschitz_nonlinear, "nonlinear"),
    ];
    let methods = [(Method::Heun2Euler1, 2.0), (Method::Bs3, 3.0)];
    let tolerances: Vec<f64> = (3..=7).map(|e| 10f64.powi(-e)).collect();
    let log_tols: Vec<f64> = tolerances.iter().map(|t| t.ln()).collect();

    // Reliability: the certified bound dominates the true final-time
    // error in every cell of the (problem, method, tolerance) grid,
    // with the two-term controller the step-size studies use.
    for (make, pname) in problems_and_lipschitz {
        for (method, p) in methods {
            for &tol in &tolerances {
                let problem = make();
                let lipschitz = problem.lipschitz.expect("certified problems carry L");
                let trace =
                    run(&problem, method, EstimatorKind::ResidualL2, pi_ctrl(p + 1.0), tol);
                let bound = gronwall_bound(&trace, lipschitz, 0.0).unwrap();
                let error = l2_error(&trace, &problem);
                assert!(
                    bound >= error,
                    "{pname}/{method:?}/tau={tol:.0e}: bound {bound:.6e} < error {error:.6e}"
                );
            }
        }
    }

    // Convergence order: the fitted error slope matches the
    // error-per-step prediction p/(p+1). The deadbeat controller is
    // used here: on the problem whose equilibrium step grows by a fixed
    // ratio each step (the flattening solution of the nonlinear
    // equation), a two-term controller trails that geometric ramp by a
    // tolerance-dependent factor, which contaminates the loose end of
    // the fit with servo lag rather than estimator behavior; the
    // deadbeat loop has the smallest such lag in the controller family.
    for (make, pname) in problems_and_lipschitz {
        for (method, p) in methods {
            let mut log_errs = Vec::new();
            for &tol in &tolerances {
                let problem = make();
                let trace =
                    run(&problem, method, EstimatorKind::ResidualL2, i_ctrl(p + 1.0), tol);
                log_errs.push(l2_error(&trace, &problem).ln());
            }
            let slope = fitted_slope(&log_tols, &log_errs);
            let target = p / (p + 1.0);
            assert!(
                (slope - target).abs() <= 0.1,
                "{pname}/{method:?}: error slope {slope} outside {target} +- 0.1"
            );
        }
    }
    println!(
        "[criterion 7] PASS — bound >= error on all 20 grid cells; error slopes within p/(p+1) +- 0.1"
    );
}

#[test]
fn criterion_8_dispersive_wave_plateau() {
    let start = Instant::now();
    let tol = 1e-4;
    for (est, k) in [
        (EstimatorKind::Embedded, 3.0),
        (EstimatorKind::ResidualL1, 4.0),
        (EstimatorKind::ResidualL2, 4.0),
    ] {
        let problem = problems::bbm_fourier(256, 1.2).unwrap();
        let trace = run(&problem, Method::Bs3, est, pi_ctrl(k), tol);
        assert_eq!(trace.n_rejected, 0, "{est:?} rejected steps");
        if est.is_residual() {
            let rel_std = plateau_rel_std_percent(&trace);
            assert!(
                rel_std < 2.0,
                "{est:?} step-size plateau relative std {rel_std:.2}% is not under 2%"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "ran {elapsed:.1}s, budget 120s");
    println!(
        "[criterion 8] PASS — zero rejections for all estimators, residual step sizes plateau, {elapsed:.1}s"
    );
}

#[test]
fn criterion_9_property_spot_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    // Order conditions of every tableau and its embedded weights.
    let order_of = |b: &[f64], tableau: &rk_certify::tableau::ButcherTableau| -> u32 {
        let c = &tableau.c;
        let dot = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        let sums = [
            b.iter().sum::<f64>(),
            dot(b, c),
            dot(b, &c.iter().map(|x| x * x).collect::<Vec<_>>()),
            b.iter()
                .enumerate()
                .map(|(i, bi)| bi * dot(&tableau.a[i], c))
                .sum::<f64>(),
        ];
        let targets = [1.0, 0.5, 1.0 / 3.0, 1.0 / 6.0];
        let mut order = 0;
        if (sums[0] - targets[0]).abs() < 1e-14 {
            order = 1;
            if (sums[1] - targets[1]).abs() < 1e-14 {
                order = 2;
                if (sums[2] - targets[2]).abs() < 1e-14 && (sums[3] - targets[3]).abs() < 1e-14 {
                    order = 3;
                }
            }
        }
        order
    };
    for (method, p, p_hat) in [
        (Method::Euler, 1, None),
        (Method::Heun2Euler1, 2, Some(1)),
        (Method::Bs3, 3, Some(2)),
    ] {
        let tableau = method.tableau();
        assert_eq!(order_of(&tableau.b, &tableau), p, "{method:?} order");
        if let Some(p_hat) = p_hat {
            let b_hat = tableau.b_hat.as_ref().unwrap();
            assert_eq!(order_of(b_hat, &tableau), p_hat, "{method:?} embedded order");
        }
    }

    // Reconstructions interpolate both endpoints.
    for _ in 0..20 {
        let dt = rng.gen_range(0.05..2.0);
        let u0: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u1: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let f0: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let f1: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for rec in [
            Reconstruction::linear(&u0, &u1, dt).unwrap(),
            Reconstruction::quadratic_left(&u0, &f0, &u1, dt).unwrap(),
            Reconstruction::cubic_central(&u0, &f0, &u1, &f1, dt).unwrap(),
        ] {
            let at0 = rec.eval(0.0).unwrap();
            let at1 = rec.eval(dt).unwrap();
            for i in 0..3 {
                assert!((at0[i] - u0[i]).abs() < 1e-12);
                assert!((at1[i] - u1[i]).abs() < 1e-11);
            }
        }
    }

    // The four-component mixing problem's coupling matrix is an
    // involution: U^2 = I for U with -1/2 on the diagonal and +1/2
    // elsewhere.
    let u_mat = [[-0.5, 0.5, 0.5, 0.5], [0.5, -0.5, 0.5, 0.5], [0.5, 0.5, -0.5, 0.5], [
        0.5, 0.5, 0.5, -0.5,
    ]];
    for i in 0..4 {
        for j in 0..4 {
            let entry: f64 = (0..4).map(|l| u_mat[i][l] * u_mat[l][j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((entry - expected).abs() < 1e-15);
        }
    }

    // The step-ratio limiter stays inside its arctan range and fixes 1.
    assert!((limiter(1.0) - 1.0).abs() < 1e-15);
    for _ in 0..200 {
        let a = 10f64.powf(rng.gen_range(-8.0..8.0));
        let k = limiter(a);
        assert!(k > 1.0 - PI / 2.0 && k < 1.0 + PI / 2.0, "limiter({a}) = {k}");
    }
    // At f64 extremes the arctan rounds to its asymptote, so the open
    // mathematical bounds close up to within one ulp.
    assert!(limiter(1e300) <= 1.0 + PI / 2.0);
    assert!(limiter(0.0) > 1.0 - PI / 2.0);

    // Boundary points satisfy |R(z)| = 1.
    for method in Method::ALL {
        let stability = method.tableau().stability_polynomial();
        for _ in 0..30 {
            let phi = rng.gen_range(PI / 2.0..PI);
            let point = boundary_radius(&stability, phi).unwrap();
            assert!(
                (stability.eval(point.z).norm() - 1.0).abs() < 1e-10,
                "{method:?} boundary residual at phi={phi}"
            );
        }
    }

    // Spectral radius agrees with the closed-form eigenvalues of random
    // 2x2 matrices.
    for _ in 0..100 {
        let m: Vec<Vec<f64>> = vec![
            vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
            vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
        ];
        let trace = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = trace * trace / 4.0 - det;
        let expected = if disc >= 0.0 {
            (trace / 2.0 + disc.sqrt()).abs().max((trace / 2.0 - disc.sqrt()).abs())
        } else {
            det.abs().sqrt()
        };
        let got = spectral_radius(&m).unwrap();
        assert!((got - expected).abs() < 1e-9 * expected.max(1.0), "{got} vs {expected}");
    }

    // The stability-limited upwind semidiscretization also reaches a
    // step-size plateau under residual control.
    let problem = problems::advection_1d_upwind(128).unwrap();
    let trace = run(&problem, Method::Bs3, EstimatorKind::ResidualL1, pi_ctrl(4.0), 1e-4);
    let rel_std = plateau_rel_std_percent(&trace);
    assert!(rel_std < 2.0, "upwind plateau relative std {rel_std:.2}%");

    println!("[criterion 9] PASS — order conditions, interpolation, involution, limiter range, boundary residuals, eigenvalue oracle, stability-limited plateau");
}
