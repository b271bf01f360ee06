//! Test problems: right-hand sides, initial data, and (where available)
//! exact reference solutions.
//!
//! The suite covers the regimes the estimators and controllers are
//! exercised in: a stiff oscillatory linear system for step-count tables
//! ([`hairer_wanner`]), a nonlinear system whose stiffness direction is
//! tunable ([`krogh`]), a periodic conservative system with an exact
//! elliptic-function solution ([`rigid_body`]), two scalar problems with
//! known one-sided Lipschitz constants for certified error bounds
//! ([`lipschitz_linear`], [`lipschitz_nonlinear`]), and two desk-scale
//! PDE semidiscretizations: a dispersive wave equation in Fourier space
//! ([`bbm_fourier`]) and a stability-limited upwind advection scheme
//! ([`advection_1d_upwind`]).

pub mod elliptic;
pub mod fft;

use crate::{Error, Result, RhsFn};
use fft::Radix2Fft;
use num_complex::Complex64;

/// Exact or reference solution as a function of time.
pub type ReferenceFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// An initial value problem `u' = f(t, u)`, `u(t0) = u0`.
pub struct Problem {
    pub name: &'static str,
    pub f: Box<RhsFn>,
    pub u0: Vec<f64>,
    pub t_span: (f64, f64),
    /// One-sided Lipschitz constant of `f`, when known.
    pub lipschitz: Option<f64>,
    /// Exact solution, when known.
    pub reference: Option<Box<ReferenceFn>>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.u0.len())
            .field("t_span", &self.t_span)
            .field("lipschitz", &self.lipschitz)
            .field("has_reference", &self.reference.is_some())
            .finish()
    }
}

/// Stiff linear oscillatory problem
/// `u' = -2000 (cos(t) u1 + sin(t) u2 + 1, -sin(t) u1 + cos(t) u2 + 1)`,
/// `u(0) = (1, 0)` on `[0, 1.57]`. The step-size controller must track a
/// rotating stiff direction; step counts on this problem separate stable
/// from oscillating controller configurations.
pub fn hairer_wanner() -> Problem {
    Problem {
        name: "hairer_wanner",
        f: Box::new(|t, u| {
            let (s, c) = t.sin_cos();
            vec![
                -2000.0 * (c * u[0] + s * u[1] + 1.0),
                -2000.0 * (-s * u[0] + c * u[1] + 1.0),
            ]
        }),
        u0: vec![1.0, 0.0],
        t_span: (0.0, 1.57),
        lipschitz: None,
        reference: None,
    }
}

fn mat_vec4(m: &[[f64; 4]; 4], v: &[f64]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

fn mat_mul4(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// The involution with `-1/2` on the diagonal and `+1/2` elsewhere.
fn krogh_u_matrix() -> [[f64; 4]; 4] {
    let mut u = [[0.5; 4]; 4];
    for (i, row) in u.iter_mut().enumerate() {
        row[i] = -0.5;
    }
    u
}

/// Nonlinear 4-dimensional test problem
/// `u' = -B u + U^T (z1^2/2 - z2^2/2, z1 z2, z3^2, z4^2)^T` with
/// `z = U u` and `B = U^T diag-block(rotation(phi), 1, 1/2) U`,
/// `u(0) = (0, -2, -1, -1)` on `[0, 100]`.
///
/// The parameter `phi` rotates the dominant eigenvalue pair of the
/// Jacobian along an arc of modulus 10; near `phi = 5 pi / 8` a simple
/// integral controller sits at the edge of its stability region and
/// rejects many steps, while a PI controller stays smooth.
pub fn krogh(phi: f64) -> Problem {
    let u_mat = krogh_u_matrix();
    let (s, c) = phi.sin_cos();
    let d = [
        [-10.0 * c, -10.0 * s, 0.0, 0.0],
        [10.0 * s, -10.0 * c, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.5],
    ];
    // U is symmetric, so U^T D U = U D U.
    let b = mat_mul4(&u_mat, &mat_mul4(&d, &u_mat));
    Problem {
        name: "krogh",
        f: Box::new(move |_t, u| {
            let z = mat_vec4(&u_mat, u);
            let q = [
                0.5 * (z[0] * z[0] - z[1] * z[1]),
                z[0] * z[1],
                z[2] * z[2],
                z[3] * z[3],
            ];
            let bu = mat_vec4(&b, u);
            let uq = mat_vec4(&u_mat, &q);
            (0..4).map(|i| -bu[i] + uq[i]).collect()
        }),
        u0: vec![0.0, -2.0, -1.0, -1.0],
        t_span: (0.0, 100.0),
        lipschitz: None,
        reference: None,
    }
}

/// Euler equations of a rigid body,
/// `u' = (u2 u3, -u1 u3, -0.51 u1 u2)`, `u(0) = (0, 1, 1)`, integrated
/// over exactly one period.
///
/// The exact solution is `(sn(t|m), cn(t|m), dn(t|m))` with `m = 0.51`;
/// the period `4 K(m)` and the reference values come from
/// [`elliptic`].
pub fn rigid_body() -> Problem {
    let m = 0.51;
    let period = 4.0 * elliptic::complete_elliptic_k(m);
    Problem {
        name: "rigid_body",
        f: Box::new(|_t, u| vec![u[1] * u[2], -u[0] * u[2], -0.51 * u[0] * u[1]]),
        u0: vec![0.0, 1.0, 1.0],
        t_span: (0.0, period),
        lipschitz: None,
        reference: Some(Box::new(move |t| {
            let (sn, cn, dn) = elliptic::jacobi_sn_cn_dn(t, m);
            vec![sn, cn, dn]
        })),
    }
}

/// `u' = u` on `(0, 1)` with `u(0) = 1`: one-sided Lipschitz constant
/// `L = 1`, exact solution `e^t`. The simplest test of the certified
/// global error bound.
pub fn lipschitz_linear() -> Problem {
    Problem {
        name: "lipschitz_linear",
        f: Box::new(|_t, u| vec![u[0]]),
        u0: vec![1.0],
        t_span: (0.0, 1.0),
        lipschitz: Some(1.0),
        reference: Some(Box::new(|t| vec![t.exp()])),
    }
}

/// `u' = exp(-u)` on `(0, 100)` with `u(0) = 1`: the right-hand side is
/// monotonically decreasing, so the one-sided Lipschitz constant is
/// `L = 0` and the certified bound carries no exponential growth factor.
/// Exact solution `log(e + t)`.
pub fn lipschitz_nonlinear() -> Problem {
    Problem {
        name: "lipschitz_nonlinear",
        f: Box::new(|_t, u| vec![(-u[0]).exp()]),
        u0: vec![1.0],
        t_span: (0.0, 100.0),
        lipschitz: Some(0.0),
        reference: Some(Box::new(|t| vec![(std::f64::consts::E + t).ln()])),
    }
}

const BBM_DOMAIN: (f64, f64) = (-90.0, 90.0);

/// Fourier collocation semidiscretization of the dispersive wave
/// equation `(I - d_xx) u_t + d_x(u^2/2) + d_x u = 0` on the periodic
/// domain `[-90, 90]`, with the solitary traveling wave
/// `A sech^2(K (x - c t))`, `A = 3(c-1)`, `K = (1/2) sqrt(1 - 1/c)` as
/// initial data and reference.
///
/// In spectral space the right-hand side is
/// `u_t(k) = -(i k~ / (1 + k~^2)) (u^2/2 + u)(k)` with scaled
/// wavenumber `k~ = 2 pi k / 180`; the symbol vanishes at `k = 0`, so
/// the discrete mean is conserved exactly, and the Nyquist mode is set
/// to zero to keep the odd symbol real-to-real. The mixed-derivative
/// term makes the problem non-stiff: the stable step size approaches a
/// constant independent of the grid, which is exactly the plateau the
/// step-size trace should show.
///
/// `n` must be a power of two; the time span is one domain traversal,
/// `180 / c`.
pub fn bbm_fourier(n: usize, c: f64) -> Result<Problem> {
    if !(c > 1.0) {
        return Err(Error::InvalidInput {
            message: format!("wave speed c = {c} must exceed 1"),
        });
    }
    let plan = Radix2Fft::new(n)?;
    let length = BBM_DOMAIN.1 - BBM_DOMAIN.0;
    let dx = length / n as f64;
    let symbol: Vec<Complex64> = (0..n)
        .map(|j| {
            if j == n / 2 {
                return Complex64::new(0.0, 0.0); // Nyquist
            }
            let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let kt = 2.0 * std::f64::consts::PI * k / length;
            Complex64::new(0.0, -kt / (1.0 + kt * kt))
        })
        .collect();
    let amplitude = 3.0 * (c - 1.0);
    let width = 0.5 * (1.0 - 1.0 / c).sqrt();
    let grid: Vec<f64> = (0..n).map(|j| BBM_DOMAIN.0 + j as f64 * dx).collect();
    let wave_profile = move |xi: f64| {
        let sech = 1.0 / (width * xi).cosh();
        amplitude * sech * sech
    };
    let u0: Vec<f64> = grid.iter().map(|&x| wave_profile(x)).collect();

    let reference_grid = grid.clone();
    Ok(Problem {
        name: "bbm_fourier",
        f: Box::new(move |_t, u| {
            let mut buf: Vec<Complex64> = u
                .iter()
                .map(|&v| Complex64::new(0.5 * v * v + v, 0.0))
                .collect();
            plan.forward(&mut buf);
            for (z, s) in buf.iter_mut().zip(&symbol) {
                *z *= s;
            }
            plan.inverse(&mut buf);
            buf.iter().map(|z| z.re).collect()
        }),
        u0,
        t_span: (0.0, length / c),
        lipschitz: None,
        reference: Some(Box::new(move |t| {
            reference_grid
                .iter()
                .map(|&x| {
                    let shifted = x - c * t - BBM_DOMAIN.0;
                    let xi = shifted.rem_euclid(length) + BBM_DOMAIN.0;
                    wave_profile(xi)
                })
                .collect()
        })),
    })
}

/// First-order upwind semidiscretization of `u_t + u_x = 0` on the
/// periodic domain `[-1, 1]` with `u0(x) = sin(pi x)`, over one
/// traversal.
///
/// The circulant eigenvalues `-(n/2)(1 - exp(-2 pi i k / n))` fill a
/// circle in the left half-plane of radius `n/2`, so the step size is
/// limited by stability rather than accuracy - the regime where
/// step-size control either settles on the stability boundary or
/// oscillates. The upwind operator is dissipative, giving the one-sided
/// Lipschitz constant `L = 0`, and the semidiscrete system is linear, so
/// the reference is the exact circulant matrix exponential applied to
/// the initial data.
pub fn advection_1d_upwind(n: usize) -> Result<Problem> {
    if n < 2 {
        return Err(Error::InvalidInput {
            message: format!("advection grid needs at least 2 cells, got {n}"),
        });
    }
    let h = 2.0 / n as f64;
    let u0: Vec<f64> = (0..n)
        .map(|j| (std::f64::consts::PI * (-1.0 + j as f64 * h)).sin())
        .collect();

    // Reference: diagonalize the circulant by the plain DFT (any n).
    let u0_hat: Vec<Complex64> = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| {
                    let angle = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                    u0[j] * Complex64::from_polar(1.0, angle)
                })
                .sum()
        })
        .collect();
    let eigenvalues: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (Complex64::from_polar(1.0, angle) - 1.0) / h
        })
        .collect();

    Ok(Problem {
        name: "advection_upwind",
        f: Box::new(move |_t, u| {
            let n = u.len();
            (0..n)
                .map(|j| {
                    let left = u[(j + n - 1) % n];
                    -(u[j] - left) / h
                })
                .collect()
        }),
        u0,
        t_span: (0.0, 2.0),
        lipschitz: Some(0.0),
        reference: Some(Box::new(move |t| {
            let n = u0_hat.len();
            (0..n)
                .map(|j| {
                    let z: Complex64 = (0..n)
                        .map(|k| {
                            let angle = 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                            u0_hat[k]
                                * (eigenvalues[k] * t).exp()
                                * Complex64::from_polar(1.0, angle)
                        })
                        .sum();
                    z.re / n as f64
                })
                .collect()
        })),
    })
}
