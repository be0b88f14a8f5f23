use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::config::{InnerSchedule, SolverConfig};
use crate::error::{Error, Result};
use crate::problems::{hyperclean_instance, HypercleanParams};
use crate::report::Termination;
use crate::solvers::{self, Algorithm};
use crate::Vector;

use super::output::{format_float, write_json, write_summary, write_trace_csv};
use super::{validate_compatibility, RunConfig};

/// A hyper-cleaning run: instance parameters, algorithm and solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypercleanRun {
    pub params: HypercleanParams,
    /// `v-pbgd` or `v-pbsgd`.
    pub algorithm: Algorithm,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
}

impl Default for HypercleanRun {
    fn default() -> Self {
        HypercleanRun {
            params: HypercleanParams::default(),
            algorithm: Algorithm::VPbgd,
            solver: SolverConfig {
                gamma: 2.0,
                alpha: Some(2.0),
                max_iters: 3000,
                inner_schedule: InnerSchedule::Fixed { iters: 20 },
                tol_proj_grad: None,
                batch_size: 32,
                ..SolverConfig::default()
            },
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypercleanOutcome {
    pub algorithm: String,
    pub termination: Termination,
    pub iterations: usize,
    /// Learned per-sample weights `σ(x_i)`.
    pub weights: Vec<f64>,
    pub corrupted: Vec<bool>,
    /// `None` when the class is empty.
    pub corrupted_mean_weight: Option<f64>,
    pub clean_mean_weight: Option<f64>,
    /// `clean_mean_weight - corrupted_mean_weight`.
    pub separation: Option<f64>,
    /// Validation accuracy of the lower-level solution with uniform weights.
    pub val_accuracy_uniform: f64,
    /// Validation accuracy of the lower-level solution with learned weights.
    pub val_accuracy_learned: f64,
    pub val_loss_uniform: f64,
    pub val_loss_learned: f64,
}

fn class_mean(weights: &[f64], corrupted: &[bool], want: bool) -> Option<f64> {
    let picked: Vec<f64> = weights.iter().zip(corrupted).filter(|(_, &c)| c == want).map(|(w, _)| *w).collect();
    (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
}

/// Learns sample weights on the synthetic instance and writes
/// `weights.csv`, `hyperclean.json`, `trace.csv` and `summary.json`.
pub fn cmd_hyperclean(run: &HypercleanRun) -> Result<HypercleanOutcome> {
    if !matches!(run.algorithm, Algorithm::VPbgd | Algorithm::VPbsgd) {
        return Err(Error::InvalidConfig(format!("hyperclean runs v-pbgd or v-pbsgd, not {}", run.algorithm)));
    }
    let inst = hyperclean_instance(&run.params)?;
    let n = run.params.n_train;
    let mut solver = run.solver.clone();
    if solver.x0.is_none() {
        solver.x0 = Some(vec![0.0; n]);
    }
    validate_compatibility(run.algorithm, &inst.problem, &solver)?;
    let report = solvers::solve(&inst.problem, run.algorithm, &solver)?;

    let data = &inst.data;
    let x = Vector::from_vec(report.x.clone());
    let weights: Vec<f64> = x.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
    let corrupted = data.corrupted.clone();
    let corrupted_mean_weight = class_mean(&weights, &corrupted, true);
    let clean_mean_weight = class_mean(&weights, &corrupted, false);
    let w_uniform = data.solve_lower(&Vector::zeros(n));
    let w_learned = data.solve_lower(&x);
    let outcome = HypercleanOutcome {
        algorithm: report.algorithm.clone(),
        termination: report.termination,
        iterations: report.iterations(),
        separation: clean_mean_weight.zip(corrupted_mean_weight).map(|(c, b)| c - b),
        weights,
        corrupted,
        corrupted_mean_weight,
        clean_mean_weight,
        val_accuracy_uniform: data.val_accuracy(&w_uniform),
        val_accuracy_learned: data.val_accuracy(&w_learned),
        val_loss_uniform: data.val_loss(&w_uniform),
        val_loss_learned: data.val_loss(&w_learned),
    };

    let dir = &run.out_dir;
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("weights.csv"))?;
    w.write_record(["index", "corrupted", "weight"])?;
    for (i, (wt, c)) in outcome.weights.iter().zip(&outcome.corrupted).enumerate() {
        w.write_record([i.to_string(), c.to_string(), format_float(*wt)])?;
    }
    w.flush()?;
    write_json(&dir.join("hyperclean.json"), &HypercleanJson { params: &run.params, outcome: &outcome })?;
    write_trace_csv(&dir.join("trace.csv"), &report)?;
    let echo = RunConfig {
        problem: "hyperclean".into(),
        algorithm: run.algorithm,
        hyperclean: run.params.clone(),
        solver,
        out_dir: dir.clone(),
        ..RunConfig::default()
    };
    write_summary(&dir.join("summary.json"), &echo, &report)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct HypercleanJson<'a> {
    params: &'a HypercleanParams,
    #[serde(flatten)]
    outcome: &'a HypercleanOutcome,
}
