//! Adaptive Gauss-Kronrod quadrature (7-point Gauss / 15-point Kronrod)
//! with largest-error-first interval bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// 15-point Kronrod abscissae on [-1, 1] (positive half, descending);
/// the odd-indexed entries together with the center form the embedded
/// 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

/// 7-point Gauss weights (for XGK indices 1, 3, 5 and the center).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod weights matching XGK.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Tolerances and work cap for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_subdiv: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings { rtol: 1e-8, atol: 1e-14, max_subdiv: 10_000 }
    }
}

/// Outcome of an adaptive quadrature run. When `converged` is false the
/// tolerance was not met within the subdivision budget and
/// `error_estimate` is the remaining error bound; callers are expected to
/// treat `value + error_estimate` as a pessimistic result rather than
/// aborting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: u32,
    pub converged: bool,
}

/// One 15-point Kronrod panel. Returns the integral approximation and a
/// conservative error estimate obtained by comparing against the embedded
/// 7-point Gauss value, rescaled as in QUADPACK so that rough integrands
/// are not underestimated.
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    for j in 0..7 {
        let x = half * XGK[j];
        let v1 = f(center - x);
        let v2 = f(center + x);
        fv1[j] = v1;
        fv2[j] = v2;
        let sum = v1 + v2;
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * sum;
        }
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (v1.abs() + v2.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`, bisecting the segment with the largest
/// error estimate until the total satisfies
/// `error <= max(atol, rtol * |value|)` or `max_subdiv` bisections have
/// been spent. Never panics on rough integrands: running out of budget
/// (or hitting non-finite values) yields a flagged result.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rtol: f64,
    atol: f64,
    max_subdiv: u32,
) -> QuadratureResult {
    if a == b {
        return QuadratureResult { value: 0.0, error_estimate: 0.0, subdivisions: 0, converged: true };
    }

    let (value, error) = kronrod_panel(&f, a, b);
    if !value.is_finite() || !error.is_finite() {
        return QuadratureResult {
            value: f64::NAN,
            error_estimate: f64::INFINITY,
            subdivisions: 0,
            converged: false,
        };
    }

    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total_value = value;
    let mut total_error = error;
    // Error attached to segments too short to bisect further.
    let mut stuck_error = 0.0;
    let mut subdivisions = 0;

    let tolerance = |v: f64| atol.max(rtol * v.abs());

    while total_error + stuck_error > tolerance(total_value) && subdivisions < max_subdiv {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; its error cannot be
            // reduced any further.
            stuck_error += worst.error;
            total_error -= worst.error;
            continue;
        }
        subdivisions += 1;
        let (v1, e1) = kronrod_panel(&f, worst.a, mid);
        let (v2, e2) = kronrod_panel(&f, mid, worst.b);
        if !(v1.is_finite() && e1.is_finite() && v2.is_finite() && e2.is_finite()) {
            return QuadratureResult {
                value: f64::NAN,
                error_estimate: f64::INFINITY,
                subdivisions,
                converged: false,
            };
        }
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }

    let final_error = total_error + stuck_error;
    QuadratureResult {
        value: total_value,
        error_estimate: final_error,
        subdivisions,
        converged: final_error <= tolerance(total_value),
    }
}

/// Convenience wrapper taking [`QuadratureSettings`].
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> QuadratureResult {
    gauss_kronrod(f, a, b, settings.rtol, settings.atol, settings.max_subdiv)
}
