//! Spectral radius of small real matrices.
//!
//! The controller-dynamics Jacobians are at most 6x6, so a dense
//! eigensolver would be overkill: the characteristic polynomial from the
//! Faddeev-LeVerrier recurrence plus simultaneous root iteration
//! (Durand-Kerner) covers every case, with a closed form for 2x2.

use crate::{Error, Result};
use num_complex::Complex64;

const MAX_SWEEPS: u32 = 1000;
const ROOT_TOL: f64 = 1e-10;

/// Coefficients `c` of the monic characteristic polynomial
/// `x^n + c[0] x^{n-1} + ... + c[n-1]`, by the Faddeev-LeVerrier
/// recurrence `M_{k+1} = A (M_k + c_k I)`, `c_{k+1} = -tr(M_{k+1})/(k+1)`.
fn characteristic_polynomial(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = Vec::with_capacity(n);
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for k in 1..=n {
        let trace: f64 = (0..n).map(|i| m[i][i]).sum();
        let c = -trace / k as f64;
        coeffs.push(c);
        if k == n {
            break;
        }
        // m <- a * (m + c I)
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += c;
        }
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|l| a[i][l] * m[l][j]).sum();
            }
        }
        m = next;
    }
    coeffs
}

/// Evaluates the monic polynomial `x^d + c[0] x^{d-1} + ... + c[d-1]`.
fn eval_monic(coeffs: &[f64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for &c in coeffs {
        acc = acc * x + c;
    }
    acc
}

/// All roots of the monic polynomial with the given trailing
/// coefficients, by Durand-Kerner iteration from the standard
/// `(0.4 + 0.9i)^j` seeds.
fn durand_kerner(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..d).map(|j| seed.powu(j as u32)).collect();
    let scale = 1.0 + coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    for _ in 0..MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for j in 0..d {
            let mut denom = Complex64::new(1.0, 0.0);
            for i in 0..d {
                if i != j {
                    denom *= roots[j] - roots[i];
                }
            }
            let delta = eval_monic(coeffs, roots[j]) / denom;
            roots[j] -= delta;
            max_delta = max_delta.max(delta.norm());
        }
        if max_delta < ROOT_TOL {
            return Ok(roots);
        }
    }
    // Multiple roots stall the update size at the cluster diameter; a
    // tiny residual still certifies the value of each iterate.
    let max_residual = roots
        .iter()
        .map(|&x| eval_monic(coeffs, x).norm())
        .fold(0.0, f64::max);
    if max_residual < 1e-8 * scale {
        return Ok(roots);
    }
    Err(Error::RootsNotConverged { sweeps: MAX_SWEEPS })
}

/// Largest eigenvalue modulus of a real square matrix of size at most 6.
pub fn spectral_radius(m: &[Vec<f64>]) -> Result<f64> {
    let n = m.len();
    if n == 0 || n > 6 || m.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput {
            message: format!("spectral radius needs a square matrix of size 1..=6, got {n} rows"),
        });
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput {
            message: "matrix entries must be finite".to_string(),
        });
    }
    if n == 1 {
        return Ok(m[0][0].abs());
    }
    if n == 2 {
        return Ok(spectral_radius_2x2(m[0][0], m[0][1], m[1][0], m[1][1]));
    }
    let mut coeffs = characteristic_polynomial(m);
    // Trailing zero coefficients are zero eigenvalues (modulus 0): strip
    // them so the root iteration sees only simple structure.
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        return Ok(0.0);
    }
    let roots = durand_kerner(&coeffs)?;
    Ok(roots.iter().map(|r| r.norm()).fold(0.0, f64::max))
}

/// Closed form for 2x2: roots of `x^2 - tr x + det`.
fn spectral_radius_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let trace = a + d;
    let det = a * d - b * c;
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (0.5 * (trace + s)).abs().max((0.5 * (trace - s)).abs())
    } else {
        // Complex pair: |x|^2 = det.
        det.sqrt()
    }
}
