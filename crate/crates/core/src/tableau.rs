//! Butcher tableaus, single explicit Runge-Kutta steps, and the stability
//! polynomials attached to a tableau.
//!
//! Three methods are registered:
//!
//! | name           | stages | order | embedded order | notes                      |
//! |----------------|--------|-------|----------------|----------------------------|
//! | `euler`        | 1      | 1     | -              | no embedded weights        |
//! | `heun2_euler1` | 2      | 2     | 1              | embedded Euler solution    |
//! | `bs3`          | 4      | 3     | 2              | FSAL; last stage is `u(t+dt)` |
//!
//! For FSAL tableaus the last stage row reproduces the update weights, so
//! the last stage derivative equals `f(t + dt, u_next)` and can be reused
//! as the first stage of the following step. [`rk_step`] reports it as
//! [`StepOutput::f_next`]; reuse is the caller's responsibility.

use num_complex::Complex64;

use crate::{Error, Result};

/// Real-coefficient polynomial in ascending degree order, evaluable at
/// complex arguments. Used for stability functions, embedded error
/// functions, and characteristic polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending-degree coefficients, trimming
    /// trailing zeros. The zero polynomial is stored as a single zero
    /// coefficient.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation at a complex argument.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Horner evaluation at a real argument.
    pub fn eval_real(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::new(vec![0.0]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Polynomial::new(coeffs)
    }
}

/// Method registry identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Heun2Euler1,
    Bs3,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Euler, Method::Heun2Euler1, Method::Bs3];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Heun2Euler1 => "heun2_euler1",
            Method::Bs3 => "bs3",
        }
    }

    pub fn from_name(name: &str) -> Result<Method> {
        match name {
            "euler" => Ok(Method::Euler),
            "heun2_euler1" => Ok(Method::Heun2Euler1),
            "bs3" => Ok(Method::Bs3),
            _ => Err(Error::UnknownMethod { name: name.to_string() }),
        }
    }

    pub fn tableau(&self) -> ButcherTableau {
        match self {
            Method::Euler => ButcherTableau::euler(),
            Method::Heun2Euler1 => ButcherTableau::heun2_euler1(),
            Method::Bs3 => ButcherTableau::bs3(),
        }
    }

    /// Classical order of the update.
    pub fn order(&self) -> u32 {
        match self {
            Method::Euler => 1,
            Method::Heun2Euler1 => 2,
            Method::Bs3 => 3,
        }
    }
}

/// Looks up a tableau by its registry name.
pub fn make_tableau(name: &str) -> Result<ButcherTableau> {
    Ok(Method::from_name(name)?.tableau())
}

/// Coefficients of an explicit (embedded) Runge-Kutta method.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    /// Strictly lower-triangular stage coefficients, `a[i][j]` for `j < i`.
    pub a: Vec<Vec<f64>>,
    /// Update weights.
    pub b: Vec<f64>,
    /// Embedded (secondary) weights, if the method carries them.
    pub b_hat: Option<Vec<f64>>,
    /// Stage abscissae; `c[i]` equals the `i`-th row sum of `a`.
    pub c: Vec<f64>,
    /// Classical order of the update defined by `b`.
    pub order: u32,
    /// Order of the embedded solution defined by `b_hat`.
    pub embedded_order: Option<u32>,
    /// First-same-as-last: the final stage evaluates `f` at the step result.
    pub fsal: bool,
    pub name: &'static str,
}

impl ButcherTableau {
    pub fn euler() -> ButcherTableau {
        ButcherTableau {
            a: vec![vec![]],
            b: vec![1.0],
            b_hat: None,
            c: vec![0.0],
            order: 1,
            embedded_order: None,
            fsal: false,
            name: "euler",
        }
    }

    /// Heun's second-order method with the explicit Euler step as the
    /// embedded first-order solution. Not FSAL: the second stage samples the
    /// Euler predictor at `t + dt`, not the trapezoidal update.
    pub fn heun2_euler1() -> ButcherTableau {
        ButcherTableau {
            a: vec![vec![], vec![1.0]],
            b: vec![0.5, 0.5],
            b_hat: Some(vec![1.0, 0.0]),
            c: vec![0.0, 1.0],
            order: 2,
            embedded_order: Some(1),
            fsal: false,
            name: "heun2_euler1",
        }
    }

    /// Bogacki-Shampine 3(2) in its FSAL form: the fourth stage evaluates
    /// `f` at the third-order update, and the embedded weights use it.
    pub fn bs3() -> ButcherTableau {
        ButcherTableau {
            a: vec![
                vec![],
                vec![0.5],
                vec![0.0, 0.75],
                vec![2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0],
            ],
            b: vec![2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0],
            b_hat: Some(vec![7.0 / 24.0, 0.25, 1.0 / 3.0, 0.125]),
            c: vec![0.0, 0.5, 0.75, 1.0],
            order: 3,
            embedded_order: Some(2),
            fsal: true,
            name: "bs3",
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Checks the structural invariants: stage abscissae equal the row
    /// sums of `a`, weight lengths match the stage count, and FSAL
    /// tableaus end in a stage that reproduces the update.
    pub fn validate(&self) -> Result<()> {
        let s = self.stages();
        if self.a.len() != s || self.c.len() != s {
            return Err(Error::InvalidInput {
                message: format!("tableau '{}' has inconsistent dimensions", self.name),
            });
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != i {
                return Err(Error::InvalidInput {
                    message: format!(
                        "tableau '{}' row {i} is not strictly lower triangular",
                        self.name
                    ),
                });
            }
            let row_sum: f64 = row.iter().sum();
            if (row_sum - self.c[i]).abs() > 1e-14 {
                return Err(Error::InvalidInput {
                    message: format!("tableau '{}' violates c[{i}] = row sum", self.name),
                });
            }
        }
        if let Some(b_hat) = &self.b_hat {
            if b_hat.len() != s {
                return Err(Error::InvalidInput {
                    message: format!("tableau '{}' has mismatched embedded weights", self.name),
                });
            }
        }
        if self.fsal {
            let last = s - 1;
            let row = &self.a[last];
            let matches_b = row
                .iter()
                .zip(&self.b[..last])
                .all(|(x, y)| (x - y).abs() <= 1e-15)
                && self.b[last] == 0.0
                && (self.c[last] - 1.0).abs() <= 1e-15;
            if !matches_b {
                return Err(Error::InvalidInput {
                    message: format!("tableau '{}' marked FSAL but last stage is not the update", self.name),
                });
            }
        }
        Ok(())
    }

    /// Stage polynomials `P_i(z)` defined by `P_i = 1 + z * sum_j a_ij P_j`.
    /// Applying the method to `u' = lambda u` gives stage values
    /// `y_i = P_i(dt * lambda) * u`.
    fn stage_polynomials(&self) -> Vec<Polynomial> {
        let s = self.stages();
        let mut polys: Vec<Vec<f64>> = Vec::with_capacity(s);
        for i in 0..s {
            let mut coeffs = vec![0.0; i + 1];
            coeffs[0] = 1.0;
            for (j, &a_ij) in self.a[i].iter().enumerate() {
                if a_ij == 0.0 {
                    continue;
                }
                for (d, &c) in polys[j].iter().enumerate() {
                    coeffs[d + 1] += a_ij * c;
                }
            }
            polys.push(coeffs);
        }
        polys.into_iter().map(Polynomial::new).collect()
    }

    fn weighted_update_polynomial(&self, weights: &[f64]) -> Polynomial {
        let stage_polys = self.stage_polynomials();
        let mut coeffs = vec![0.0; self.stages() + 1];
        coeffs[0] = 1.0;
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (d, &c) in stage_polys[i].coeffs().iter().enumerate() {
                coeffs[d + 1] += w * c;
            }
        }
        Polynomial::new(coeffs)
    }

    /// Linear stability function `R(z)`: one step on `u' = lambda u`
    /// multiplies the solution by `R(dt * lambda)`.
    pub fn stability_polynomial(&self) -> Polynomial {
        self.weighted_update_polynomial(&self.b)
    }

    /// Difference `E(z) = R(z) - R_hat(z)` between the stability functions
    /// of the update and of the embedded solution. On `u' = lambda u` the
    /// embedded error estimate of one step is `|E(dt * lambda)| * |u|`.
    pub fn embedded_error_polynomial(&self) -> Result<Polynomial> {
        let b_hat = self.b_hat.as_ref().ok_or_else(|| Error::NoEmbeddedWeights {
            method: self.name.to_string(),
        })?;
        let r = self.stability_polynomial();
        let r_hat = self.weighted_update_polynomial(b_hat);
        let n = r.coeffs().len().max(r_hat.coeffs().len());
        let mut diff = vec![0.0; n];
        for (d, slot) in diff.iter_mut().enumerate() {
            let x = r.coeffs().get(d).copied().unwrap_or(0.0);
            let y = r_hat.coeffs().get(d).copied().unwrap_or(0.0);
            *slot = x - y;
        }
        Ok(Polynomial::new(diff))
    }
}

/// Result of one explicit Runge-Kutta step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Proposed solution at `t + dt`.
    pub u_next: Vec<f64>,
    /// Stage derivatives `k_i = f(t + c_i dt, y_i)`; `stages[0]` is
    /// `f(t, u)`.
    pub stages: Vec<Vec<f64>>,
    /// `f(t + dt, u_next)`, available without extra work for FSAL
    /// tableaus (it is the last stage); `None` otherwise.
    pub f_next: Option<Vec<f64>>,
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Takes one explicit step of size `dt` from `(t, u)`.
///
/// `first_stage` optionally supplies a previously computed `f(t, u)`
/// (FSAL reuse, or a retry after a rejected step); when absent it is
/// evaluated. Inputs are never mutated. A non-finite stage value or
/// derivative aborts with [`Error::NonFiniteState`] so the caller can
/// retry with a smaller step.
pub fn rk_step<F>(
    tableau: &ButcherTableau,
    f: F,
    t: f64,
    u: &[f64],
    dt: f64,
    first_stage: Option<&[f64]>,
) -> Result<StepOutput>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput {
            message: format!("step size must be positive and finite, got {dt}"),
        });
    }
    let s = tableau.stages();
    let m = u.len();
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut y = vec![0.0; m];
    for i in 0..s {
        let k_i = if i == 0 {
            match first_stage {
                Some(k) => k.to_vec(),
                None => f(t, u),
            }
        } else {
            y.copy_from_slice(u);
            for (j, &a_ij) in tableau.a[i].iter().enumerate() {
                if a_ij == 0.0 {
                    continue;
                }
                let k_j = &stages[j];
                for (y_c, &k_c) in y.iter_mut().zip(k_j) {
                    *y_c += dt * a_ij * k_c;
                }
            }
            if !all_finite(&y) {
                return Err(Error::NonFiniteState { t });
            }
            f(t + tableau.c[i] * dt, &y)
        };
        if k_i.len() != m || !all_finite(&k_i) {
            return Err(Error::NonFiniteState { t });
        }
        stages.push(k_i);
    }
    let mut u_next = u.to_vec();
    for (i, &b_i) in tableau.b.iter().enumerate() {
        if b_i == 0.0 {
            continue;
        }
        for (u_c, &k_c) in u_next.iter_mut().zip(&stages[i]) {
            *u_c += dt * b_i * k_c;
        }
    }
    if !all_finite(&u_next) {
        return Err(Error::NonFiniteState { t });
    }
    let f_next = if tableau.fsal {
        Some(stages[s - 1].clone())
    } else {
        None
    };
    Ok(StepOutput { u_next, stages, f_next })
}

/// Embedded (secondary) solution `u + dt * sum_i b_hat_i k_i` from the
/// stage derivatives of a completed step.
pub fn embedded_solution(
    tableau: &ButcherTableau,
    u: &[f64],
    dt: f64,
    stages: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let b_hat = tableau.b_hat.as_ref().ok_or_else(|| Error::NoEmbeddedWeights {
        method: tableau.name.to_string(),
    })?;
    let mut u_hat = u.to_vec();
    for (i, &w) in b_hat.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (u_c, &k_c) in u_hat.iter_mut().zip(&stages[i]) {
            *u_c += dt * w * k_c;
        }
    }
    Ok(u_hat)
}
