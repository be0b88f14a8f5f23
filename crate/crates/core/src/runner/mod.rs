//! Batch experiment runner behind the `pbgd` binary: run configuration,
//! compatibility validation, and the `solve`, `sweep`, `check` and
//! `hyperclean` commands with their output files.
//!
//! Configuration layers as flags over a JSON config file over the defaults
//! of [`RunConfig`]; the binary applies the flag layer.

mod check;
mod hyperclean;
mod output;
mod sweep;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use check::{cmd_check, CheckSelection, CheckSummary};
pub use hyperclean::{cmd_hyperclean, HypercleanOutcome, HypercleanRun};
pub use output::{format_float, write_summary, write_trace_csv, TRACE_HEADER};
pub use sweep::{cmd_sweep, AlphaRule, GammaSummary, SweepOutcome, SweepRow, SweepSpec};

use crate::config::{InnerSchedule, SolverConfig};
use crate::error::{Error, Result};
use crate::penalty::PenaltyKind;
use crate::problem::ProblemSpec;
use crate::problems::{self, HypercleanParams};
use crate::report::{SolveReport, Termination};
use crate::solvers::{self, Algorithm};

/// One solve: problem selection and parameters, algorithm, solver settings
/// and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Catalog name, e.g. `quadratic` or `toy-nc`.
    pub problem: String,
    pub algorithm: Algorithm,
    /// Noise level for `quadratic-noisy`.
    pub noise_std: Option<f64>,
    /// Instance parameters for `hyperclean`.
    pub hyperclean: HypercleanParams,
    /// Keep the Hessian-product (Jacobian) oracles. Off forces first-order only.
    pub jacobian: bool,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    pub emit_trace: bool,
    pub emit_summary: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "quadratic".into(),
            algorithm: Algorithm::VPbgd,
            noise_std: None,
            hyperclean: HypercleanParams::default(),
            jacobian: true,
            solver: SolverConfig::default(),
            out_dir: PathBuf::from("out"),
            emit_trace: true,
            emit_summary: true,
        }
    }
}

impl RunConfig {
    /// Reads a JSON config file; absent keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn build_problem(&self) -> Result<ProblemSpec> {
        let canonical = self.problem.replace('_', "-");
        let problem = match canonical.as_str() {
            "quadratic-noisy" => problems::quadratic_noisy(self.noise_std.unwrap_or(problems::QUADRATIC_NOISE_STD)),
            "hyperclean" => problems::hyperclean_synthetic(&self.hyperclean)?,
            _ => problems::lookup(&canonical)?.problem,
        };
        Ok(if self.jacobian { problem } else { problem.without_hessian_products() })
    }
}

/// Rejects algorithm/problem/config combinations before any work is done.
pub fn validate_compatibility(algorithm: Algorithm, problem: &ProblemSpec, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    let fail = |msg: String| Err(Error::InvalidConfig(msg));
    let name = problem.name();
    let c = problem.constants();
    let uses_inner = matches!(algorithm, Algorithm::VPbgd | Algorithm::VPbgdConstrained)
        || (algorithm == Algorithm::Pbgd && config.penalty == PenaltyKind::ValueGap);
    if uses_inner && config.inner_schedule == InnerSchedule::Logarithmic && (c.mu.is_none() || c.l_g.is_none()) {
        return fail(format!("logarithmic inner schedule needs mu and L_g, which `{name}` does not declare"));
    }
    match algorithm {
        Algorithm::Pbpl if !problem.has_jacobian() => {
            fail(format!("pbpl needs Jacobian (Hessian-product) oracles, which `{name}` lacks"))
        }
        Algorithm::Pbpl if !problem.lower_unconstrained() => fail("pbpl needs an unconstrained lower level".into()),
        Algorithm::GPbgd if !problem.has_hvp() => fail(format!("g-pbgd needs Hessian-product oracles, which `{name}` lacks")),
        Algorithm::GPbgd if config.alpha.is_none() => fail("g-pbgd needs an explicit alpha".into()),
        Algorithm::Pbgd if config.penalty == PenaltyKind::GradNormSq && !problem.has_hvp() => {
            fail(format!("grad-norm-sq penalty needs Hessian-product oracles, which `{name}` lacks"))
        }
        Algorithm::Pbgd if config.penalty == PenaltyKind::GradNorm => {
            fail("grad-norm penalty is nonsmooth; use pbpl".into())
        }
        Algorithm::VPbsgd if !problem.has_stochastic_oracles() => {
            fail(format!("v-pbsgd needs stochastic oracles, which `{name}` lacks"))
        }
        Algorithm::VPbsgd if config.inner_schedule == InnerSchedule::Logarithmic => {
            fail("v-pbsgd needs a fixed inner schedule".into())
        }
        Algorithm::VPbgd | Algorithm::VPbsgd if !problem.lower_unconstrained() => {
            fail(format!("`{name}` has a constrained lower level; use v-pbgd-con"))
        }
        Algorithm::VPbgdConstrained if !problem.lower_set().is_bounded() => {
            fail("v-pbgd-con needs a bounded lower-level set".into())
        }
        _ => Ok(()),
    }
}

/// Result of `solve`: the report and the process exit status.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

/// Exit status of a finished solve: 0 unless it diverged.
pub fn exit_code(termination: Termination) -> i32 {
    match termination {
        Termination::BudgetExhausted | Termination::StationarityReached => 0,
        Termination::Diverged => 2,
    }
}

/// Runs one solve and writes `trace.csv` and `summary.json` into `out_dir`.
pub fn cmd_solve(config: &RunConfig) -> Result<SolveOutcome> {
    let problem = config.build_problem()?;
    validate_compatibility(config.algorithm, &problem, &config.solver)?;
    let report = solvers::solve(&problem, config.algorithm, &config.solver)?;
    let files = emit(config, &report)?;
    Ok(SolveOutcome { exit_code: exit_code(report.termination), report, files })
}

fn emit(config: &RunConfig, report: &SolveReport) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    if !(config.emit_trace || config.emit_summary) {
        return Ok(files);
    }
    std::fs::create_dir_all(&config.out_dir)?;
    if config.emit_trace {
        let path = config.out_dir.join("trace.csv");
        write_trace_csv(&path, report)?;
        files.push(path);
    }
    if config.emit_summary {
        let path = config.out_dir.join("summary.json");
        write_summary(&path, config, report)?;
        files.push(path);
    }
    Ok(files)
}
