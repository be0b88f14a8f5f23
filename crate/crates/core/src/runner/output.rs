use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::report::{IterateRecord, ResolvedSteps, SolveReport, Termination};

use super::RunConfig;

/// Column order of `trace.csv`.
pub const TRACE_HEADER: [&str; 7] =
    ["k", "f_value", "penalty_value", "F_gamma", "proj_grad_norm_sq", "inner_iters", "elapsed_ns"];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn write_trace_csv(path: &Path, report: &SolveReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for r in &report.trace {
        w.write_record([
            r.k.to_string(),
            format_float(r.f_value),
            format_float(r.penalty_value),
            format_float(r.f_gamma),
            format_float(r.proj_grad_norm_sq),
            r.inner_iters.to_string(),
            r.elapsed_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FinalMetrics {
    k: usize,
    f_value: f64,
    penalty_value: f64,
    #[serde(rename = "F_gamma")]
    f_gamma: f64,
    proj_grad_norm_sq: f64,
}

impl From<&IterateRecord> for FinalMetrics {
    fn from(r: &IterateRecord) -> Self {
        FinalMetrics {
            k: r.k,
            f_value: r.f_value,
            penalty_value: r.penalty_value,
            f_gamma: r.f_gamma,
            proj_grad_norm_sq: r.proj_grad_norm_sq,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    library_version: &'static str,
    problem: &'a str,
    algorithm: &'a str,
    seed: u64,
    termination: Termination,
    iterations: usize,
    final_x: &'a [f64],
    final_y: &'a [f64],
    /// Metrics of the last trace row.
    final_metrics: Option<FinalMetrics>,
    steps: ResolvedSteps,
    estimated_penalty_rows: usize,
    clamped_penalty_rows: usize,
    notes: &'a [String],
    config: &'a RunConfig,
}

pub fn write_summary(path: &Path, config: &RunConfig, report: &SolveReport) -> Result<()> {
    let summary = Summary {
        library_version: env!("CARGO_PKG_VERSION"),
        problem: &report.problem,
        algorithm: &report.algorithm,
        seed: report.config.seed,
        termination: report.termination,
        iterations: report.iterations(),
        final_x: &report.x,
        final_y: &report.y,
        final_metrics: report.last().map(FinalMetrics::from),
        steps: report.steps,
        estimated_penalty_rows: report.estimated_penalty_rows(),
        clamped_penalty_rows: report.clamped_penalty_rows(),
        notes: &report.notes,
        config,
    };
    write_json(path, &summary)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 12345.678901234567, 0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
        assert_eq!(format_float(f64::NAN), "NaN");
    }
}
