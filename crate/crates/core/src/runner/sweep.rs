use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::problems;
use crate::report::Termination;
use crate::rng;
use crate::solvers::{self, constant};
use crate::verify::{fit_loglog_slope, sample_point};

use super::output::{format_float, write_json};
use super::{validate_compatibility, RunConfig};

/// How each member run of a sweep picks its outer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaRule {
    /// The solver's own rule (the rate-bound step when `alpha` is unset).
    Auto,
    /// The base configuration's `alpha` for every `γ`.
    Fixed,
    /// `α = 1/(L_f + γ L_g)`, the smoothness of `f + γ g`.
    Lipschitz,
}

impl fmt::Display for AlphaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaRule::Auto => "auto",
            AlphaRule::Fixed => "fixed",
            AlphaRule::Lipschitz => "lipschitz",
        })
    }
}

impl FromStr for AlphaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(AlphaRule::Auto),
            "fixed" => Ok(AlphaRule::Fixed),
            "lipschitz" => Ok(AlphaRule::Lipschitz),
            other => Err(Error::InvalidArgument(format!("unknown alpha rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub gammas: Vec<f64>,
    /// Starts per `γ`. One start uses the base `x0`/`y0`; more draw seeded
    /// starts from the catalog sampling box, shared across `γ`.
    pub starts_per_gamma: usize,
    pub alpha_rule: AlphaRule,
}

/// One member run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub start: usize,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub alpha: Option<f64>,
    /// Rows until `‖G_γ‖² <= tol` (the trace length when the tolerance was met).
    pub iterations: usize,
    pub reached_tolerance: bool,
    pub final_penalty: f64,
    pub termination: Option<Termination>,
    pub failure: Option<String>,
}

/// Geometric means over the starts of one `γ` that reached the tolerance;
/// fitting slopes to these equals the pooled log-log fit over all starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub gamma: f64,
    pub runs: usize,
    pub reached: usize,
    pub geo_mean_iterations: Option<f64>,
    pub geo_mean_final_penalty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub per_gamma: Vec<GammaSummary>,
    /// Log-log slope of the terminal penalty against `γ`.
    pub penalty_slope: Option<f64>,
    /// Log-log slope of iterations-to-tolerance against `γ`.
    pub iterations_slope: Option<f64>,
    pub failures: Vec<String>,
}

fn starts(spec: &SweepSpec, problem: &ProblemSpec) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let base = &spec.base.solver;
    if spec.starts_per_gamma == 1 {
        let x0 = base.x0.clone().unwrap_or_else(|| vec![0.0; problem.dx()]);
        let y0 = base.y0.clone().unwrap_or_else(|| vec![0.0; problem.dy()]);
        return Ok(vec![(x0, y0)]);
    }
    let entry = problems::lookup(&spec.base.problem)?;
    let mut rng = rng::substream(base.seed, rng::DATA, 0);
    Ok((0..spec.starts_per_gamma)
        .map(|_| {
            let (x, y) = sample_point(&entry, &mut rng);
            (x.as_slice().to_vec(), y.as_slice().to_vec())
        })
        .collect())
}

fn alpha_for(rule: AlphaRule, problem: &ProblemSpec, base: Option<f64>, gamma: f64) -> Result<Option<f64>> {
    match rule {
        AlphaRule::Auto => Ok(None),
        AlphaRule::Fixed => base
            .map(Some)
            .ok_or_else(|| Error::InvalidConfig("alpha rule `fixed` needs an explicit alpha".into())),
        AlphaRule::Lipschitz => {
            let c = problem.constants();
            Ok(Some(1.0 / (constant(c.l_f, "l_f")? + gamma * constant(c.l_g, "l_g")?)))
        }
    }
}

fn run_member(spec: &SweepSpec, problem: &ProblemSpec, gamma: f64, start: usize, x0: &[f64], y0: &[f64]) -> SweepRow {
    let mut row = SweepRow {
        gamma,
        start,
        x0: x0.to_vec(),
        y0: y0.to_vec(),
        alpha: None,
        iterations: 0,
        reached_tolerance: false,
        final_penalty: f64::NAN,
        termination: None,
        failure: None,
    };
    let result = alpha_for(spec.alpha_rule, problem, spec.base.solver.alpha, gamma).and_then(|alpha| {
        let mut cfg = spec.base.solver.clone().with_gamma(gamma).with_start(x0.to_vec(), y0.to_vec());
        cfg.alpha = alpha;
        solvers::solve(problem, spec.base.algorithm, &cfg)
    });
    match result {
        Ok(report) => {
            row.alpha = report.steps.alpha;
            row.iterations = report.iterations();
            row.reached_tolerance = report.termination == Termination::StationarityReached;
            row.final_penalty = report.last().map_or(f64::NAN, |r| r.penalty_value);
            row.termination = Some(report.termination);
            if report.termination == Termination::Diverged {
                row.failure = Some("diverged".into());
            }
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}

fn geo_mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v.ln(), n + 1));
    (n > 0).then(|| (sum / n as f64).exp())
}

/// Runs every `(γ, start)` pair concurrently, then fits the two log-log
/// slopes over the per-`γ` geometric means. Writes `sweep.csv` and `slopes.json`
/// into `base.out_dir` once all members have finished.
pub fn cmd_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    if spec.gammas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs >= 3 gamma values to fit a slope, got {}",
            spec.gammas.len()
        )));
    }
    if spec.starts_per_gamma == 0 {
        return Err(Error::InvalidArgument("starts_per_gamma must be >= 1".into()));
    }
    let problem = spec.base.build_problem()?;
    for &gamma in &spec.gammas {
        validate_compatibility(spec.base.algorithm, &problem, &spec.base.solver.clone().with_gamma(gamma))?;
    }
    let starts = starts(spec, &problem)?;
    let jobs: Vec<(f64, usize)> =
        spec.gammas.iter().flat_map(|&g| (0..starts.len()).map(move |s| (g, s))).collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(g, s)| run_member(spec, &problem, g, s, &starts[s].0, &starts[s].1))
        .collect();

    let mut failures: Vec<String> = rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("gamma {} start {}: {f}", r.gamma, r.start)))
        .collect();
    failures.extend(
        rows.iter()
            .filter(|r| r.failure.is_none() && !r.reached_tolerance)
            .map(|r| format!("gamma {} start {}: tolerance not reached in {} iterations", r.gamma, r.start, r.iterations)),
    );
    let per_gamma: Vec<GammaSummary> = spec
        .gammas
        .iter()
        .map(|&gamma| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.gamma == gamma).collect();
            let ok: Vec<&&SweepRow> = mine.iter().filter(|r| r.reached_tolerance).collect();
            GammaSummary {
                gamma,
                runs: mine.len(),
                reached: ok.len(),
                geo_mean_iterations: geo_mean(ok.iter().map(|r| r.iterations as f64)),
                geo_mean_final_penalty: geo_mean(ok.iter().map(|r| r.final_penalty)),
            }
        })
        .collect();
    let mut fit = |what: &str, pick: &dyn Fn(&GammaSummary) -> Option<f64>| {
        let pairs: Vec<(f64, f64)> =
            per_gamma.iter().filter_map(|s| pick(s).filter(|v| *v > 0.0).map(|v| (s.gamma, v))).collect();
        match fit_loglog_slope(&pairs) {
            Ok(s) => Some(s),
            Err(e) => {
                failures.push(format!("{what} slope: {e}"));
                None
            }
        }
    };
    let penalty_slope = fit("penalty", &|s| s.geo_mean_final_penalty);
    let iterations_slope = fit("iterations", &|s| s.geo_mean_iterations);
    let outcome = SweepOutcome { rows, per_gamma, penalty_slope, iterations_slope, failures };
    write_outputs(spec, &outcome)?;
    Ok(outcome)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|c| format_float(*c)).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize)]
struct Slopes<'a> {
    problem: &'a str,
    algorithm: String,
    alpha_rule: AlphaRule,
    gammas: &'a [f64],
    penalty_vs_gamma: Option<f64>,
    iterations_vs_gamma: Option<f64>,
    per_gamma: &'a [GammaSummary],
    failures: &'a [String],
}

fn write_outputs(spec: &SweepSpec, outcome: &SweepOutcome) -> Result<()> {
    let dir = &spec.base.out_dir;
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    w.write_record([
        "gamma", "start", "x0", "y0", "alpha", "iterations", "reached_tolerance", "final_penalty", "termination", "failure",
    ])?;
    for r in &outcome.rows {
        w.write_record([
            format_float(r.gamma),
            r.start.to_string(),
            join(&r.x0),
            join(&r.y0),
            r.alpha.map(format_float).unwrap_or_default(),
            r.iterations.to_string(),
            r.reached_tolerance.to_string(),
            format_float(r.final_penalty),
            r.termination.map(|t| format!("{t:?}")).unwrap_or_default(),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    write_json(
        &dir.join("slopes.json"),
        &Slopes {
            problem: &spec.base.problem,
            algorithm: spec.base.algorithm.to_string(),
            alpha_rule: spec.alpha_rule,
            gammas: &spec.gammas,
            penalty_vs_gamma: outcome.penalty_slope,
            iterations_vs_gamma: outcome.iterations_slope,
            per_gamma: &outcome.per_gamma,
            failures: &outcome.failures,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SolverConfig;

    fn spec(gammas: Vec<f64>, dir: &std::path::Path) -> SweepSpec {
        SweepSpec {
            base: RunConfig {
                problem: "quadratic".into(),
                solver: SolverConfig { max_iters: 20_000, tol_proj_grad: Some(1e-6), ..SolverConfig::default() }
                    .with_start(vec![0.0], vec![1.0]),
                out_dir: dir.to_path_buf(),
                ..RunConfig::default()
            },
            gammas,
            starts_per_gamma: 1,
            alpha_rule: AlphaRule::Auto,
        }
    }

    #[test]
    fn two_gammas_are_rejected() {
        let dir = std::env::temp_dir().join(format!("pbgd-sweep2-{}", std::process::id()));
        assert!(matches!(cmd_sweep(&spec(vec![1.0, 10.0], &dir)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quadratic_penalty_scales_as_inverse_square() {
        // Terminal y = -1/(2γ), so p = y² = 1/(4γ²).
        let dir = std::env::temp_dir().join(format!("pbgd-sweep3-{}", std::process::id()));
        let out = cmd_sweep(&spec(vec![1.0, 10.0, 100.0], &dir)).unwrap();
        assert!((out.penalty_slope.unwrap() + 2.0).abs() < 1e-3, "{:?}", out.penalty_slope);
        assert!(dir.join("sweep.csv").exists() && dir.join("slopes.json").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
