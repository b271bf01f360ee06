//! Byte-stable serialization of run artifacts.
//!
//! Floating-point values are printed with 17 significant digits so every
//! finite `f64` round-trips exactly; together with the deterministic
//! solver this makes each artifact identical across runs on one
//! platform.

use rk_certify::integrator::IntegrationTrace;
use rk_certify::stability::MapPoint;
use std::fmt::Write as _;
use std::path::Path;

/// 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Optional float as a CSV field: empty when absent.
fn fmt17_or_empty(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// JSON number; non-finite values have no JSON representation and are
/// mapped to `null`.
fn json_number(x: f64) -> String {
    if x.is_finite() {
        fmt17(x)
    } else {
        "null".to_string()
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Headline numbers of one integration run.
pub struct Summary {
    pub n_accepted: usize,
    pub n_rejected: usize,
    /// Euclidean distance to the reference solution at the final time;
    /// absent when the problem has no reference.
    pub final_error: Option<f64>,
    /// Certified global error bound; absent when the problem has no
    /// one-sided Lipschitz constant.
    pub gronwall_bound: Option<f64>,
    /// Abort diagnostic; present exactly when the run did not complete.
    pub diagnostic: Option<String>,
}

pub fn summary_json(summary: &Summary) -> String {
    let mut fields = vec![
        format!("  \"n_accepted\": {}", summary.n_accepted),
        format!("  \"n_rejected\": {}", summary.n_rejected),
    ];
    if let Some(error) = summary.final_error {
        fields.push(format!("  \"final_error\": {}", json_number(error)));
    }
    if let Some(bound) = summary.gronwall_bound {
        fields.push(format!("  \"gronwall_bound\": {}", json_number(bound)));
    }
    if let Some(diagnostic) = &summary.diagnostic {
        fields.push(format!("  \"error\": \"{}\"", json_escape(diagnostic)));
    }
    format!("{{\n{}\n}}\n", fields.join(",\n"))
}

/// One row per attempted step, accepted and rejected alike.
pub fn trace_csv(trace: &IntegrationTrace) -> String {
    let mut out = String::from("step_index,t,dt,w,accepted,raw_norm,gronwall_increment\n");
    for (index, record) in trace.records.iter().enumerate() {
        let _ = writeln!(
            out,
            "{index},{},{},{},{},{},{}",
            fmt17(record.t),
            fmt17(record.dt),
            fmt17(record.w),
            record.accepted,
            fmt17(record.raw_norm),
            fmt17(record.gronwall_increment),
        );
    }
    out
}

/// One row per boundary ray. Rays with no boundary crossing keep the
/// angle and leave every derived field empty; rays where only the
/// spectral radius is unavailable leave just that field empty.
pub fn map_csv(points: &[MapPoint]) -> String {
    let mut out = String::from("phi,r,z_re,z_im,spectral_radius\n");
    for point in points {
        let (r, z_re, z_im) = match &point.boundary {
            Some(b) => (fmt17(b.r), fmt17(b.z.re), fmt17(b.z.im)),
            None => (String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{r},{z_re},{z_im},{}",
            fmt17(point.phi),
            fmt17_or_empty(point.spectral_radius),
        );
    }
    out
}

/// One sweep point: the parameter value plus that run's summary.
pub struct SweepRow {
    pub parameter: f64,
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub error: Option<f64>,
    pub gronwall_bound: Option<f64>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("parameter,n_accepted,n_rejected,error,gronwall_bound,total_steps\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt17(row.parameter),
            row.n_accepted,
            row.n_rejected,
            fmt17_or_empty(row.error),
            fmt17_or_empty(row.gronwall_bound),
            row.n_accepted + row.n_rejected,
        );
    }
    out
}
