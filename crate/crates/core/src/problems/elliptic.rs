//! Jacobi elliptic functions and the complete elliptic integral, by the
//! arithmetic-geometric mean.
//!
//! The rigid-body test problem has the exact solution
//! `(sn(t|m), cn(t|m), dn(t|m))` with parameter `m = 0.51` and period
//! `4 K(m)`; these routines provide that reference without hardcoded
//! constants. Conventions follow the parameter form: `K(m)` with
//! `m = k^2`.

/// Arithmetic-geometric mean of `a > 0` and `b > 0`.
fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a.abs() {
            break;
        }
        let next_a = 0.5 * (a + b);
        let next_b = (a * b).sqrt();
        a = next_a;
        b = next_b;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind,
/// `K(m) = integral of (1 - m sin^2 t)^{-1/2) dt over [0, pi/2]`,
/// for parameter `0 <= m < 1`.
pub fn complete_elliptic_k(m: f64) -> f64 {
    assert!((0.0..1.0).contains(&m), "parameter m = {m} outside [0, 1)");
    std::f64::consts::FRAC_PI_2 / agm(1.0, (1.0 - m).sqrt())
}

/// Jacobi elliptic functions `(sn, cn, dn)(u | m)` for parameter
/// `0 <= m < 1`, by the descending Landen transformation.
pub fn jacobi_sn_cn_dn(u: f64, m: f64) -> (f64, f64, f64) {
    assert!((0.0..1.0).contains(&m), "parameter m = {m} outside [0, 1)");
    if m == 0.0 {
        return (u.sin(), u.cos(), 1.0);
    }

    // Landen scale sequence: stop once the co-scale c_n vanishes.
    let mut a = vec![1.0f64];
    let mut c = vec![m.sqrt()];
    let mut b = (1.0 - m).sqrt();
    while *c.last().unwrap() > f64::EPSILON * a.last().unwrap() {
        let an = *a.last().unwrap();
        a.push(0.5 * (an + b));
        c.push(0.5 * (an - b));
        b = (an * b).sqrt();
        if a.len() > 64 {
            break;
        }
    }

    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        let s = (c[i] / a[i] * phi.sin()).clamp(-1.0, 1.0);
        phi = 0.5 * (phi + s.asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    // dn never vanishes on the real axis (it stays in [sqrt(1 - m), 1]), so
    // the identity dn^2 = 1 - m sn^2 is stable everywhere; the textbook ratio
    // cos(phi_0) / cos(phi_1 - phi_0) is 0/0 at quarter periods.
    let dn = (1.0 - m * sn * sn).max(0.0).sqrt();
    (sn, cn, dn)
}
