use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pbgd::runner::{
    cmd_check, cmd_hyperclean, cmd_solve, cmd_sweep, AlphaRule, CheckSelection, HypercleanRun, RunConfig, SweepSpec,
};
use pbgd::solvers::Algorithm;
use pbgd::{InnerSchedule, PenaltyKind};

#[derive(Parser)]
#[command(name = "pbgd", version, about = "Penalty-based bilevel gradient solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write trace.csv and summary.json.
    Solve(RunArgs),
    /// Run a solver over several gamma values and fit log-log slopes.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated penalty parameters (at least three).
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        starts: usize,
        /// auto, fixed or lipschitz.
        #[arg(long, default_value = "auto")]
        alpha_rule: AlphaRule,
    },
    /// Run the verification battery on one problem or `all`.
    Check {
        #[arg(default_value = "all")]
        target: String,
        #[arg(long)]
        kind: Option<PenaltyKind>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Learn sample weights on the synthetic hyper-cleaning instance.
    Hyperclean(HypercleanArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    algo: Option<Algorithm>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Fill unset steps from the problem constants (the default).
    #[arg(long, conflicts_with = "no_auto_steps")]
    auto_steps: bool,
    #[arg(long)]
    no_auto_steps: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Fixed number of inner iterations per outer step.
    #[arg(long, conflicts_with = "log_schedule")]
    inner_iters: Option<usize>,
    /// Logarithmic inner schedule from the problem constants.
    #[arg(long)]
    log_schedule: bool,
    /// Stop once the projected-gradient norm falls below this.
    #[arg(long)]
    tol: Option<f64>,
    /// Run the full budget without a stopping tolerance.
    #[arg(long, conflicts_with = "tol")]
    no_tol: bool,
    #[arg(long)]
    penalty: Option<PenaltyKind>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y0: Option<Vec<f64>>,
    #[arg(long)]
    prox_step: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    /// Drop the Hessian-product oracles.
    #[arg(long)]
    no_jacobian: bool,
    /// Record wall-clock time per trace row.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> pbgd::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let s = &mut c.solver;
        macro_rules! set {
            ($field:expr, $flag:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(c.problem, self.problem);
        set!(c.algorithm, self.algo);
        set!(s.gamma, self.gamma);
        set!(s.max_iters, self.max_iters);
        set!(s.penalty, self.penalty);
        set!(s.batch_size, self.batch_size);
        set!(s.seed, self.seed);
        set!(c.out_dir, self.out);
        if self.alpha.is_some() {
            s.alpha = self.alpha;
        }
        if self.beta.is_some() {
            s.beta = self.beta;
        }
        if self.prox_step.is_some() {
            s.prox_step = self.prox_step;
        }
        if self.x0.is_some() {
            s.x0 = self.x0.clone();
        }
        if self.y0.is_some() {
            s.y0 = self.y0.clone();
        }
        if self.auto_steps {
            s.auto_steps = true;
        }
        if self.no_auto_steps {
            s.auto_steps = false;
        }
        if let Some(iters) = self.inner_iters {
            s.inner_schedule = InnerSchedule::Fixed { iters };
        }
        if self.log_schedule {
            s.inner_schedule = InnerSchedule::Logarithmic;
        }
        if self.tol.is_some() {
            s.tol_proj_grad = self.tol;
        }
        if self.no_tol {
            s.tol_proj_grad = None;
        }
        if self.timing {
            s.timing = true;
        }
        if self.noise_std.is_some() {
            c.noise_std = self.noise_std;
        }
        if self.no_jacobian {
            c.jacobian = false;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct HypercleanArgs {
    /// JSON hyper-cleaning configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Fraction of training labels flipped.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// v-pbgd or v-pbsgd.
    #[arg(long)]
    algo: Option<Algorithm>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    inner_iters: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl HypercleanArgs {
    fn resolve(&self) -> pbgd::Result<HypercleanRun> {
        let mut r = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text)
                    .map_err(|e| pbgd::Error::InvalidConfig(format!("{}: {e}", path.display())))?
            }
            None => HypercleanRun::default(),
        };
        let p = &mut r.params;
        p.n_train = self.n_train.unwrap_or(p.n_train);
        p.n_val = self.n_val.unwrap_or(p.n_val);
        p.dim = self.dim.unwrap_or(p.dim);
        p.noise_rate = self.noise.unwrap_or(p.noise_rate);
        p.lambda_reg = self.lambda.unwrap_or(p.lambda_reg);
        if let Some(seed) = self.seed {
            p.seed = seed;
            r.solver.seed = seed;
        }
        r.algorithm = self.algo.unwrap_or(r.algorithm);
        r.solver.gamma = self.gamma.unwrap_or(r.solver.gamma);
        r.solver.alpha = self.alpha.or(r.solver.alpha);
        r.solver.max_iters = self.max_iters.unwrap_or(r.solver.max_iters);
        if let Some(iters) = self.inner_iters {
            r.solver.inner_schedule = InnerSchedule::Fixed { iters };
        }
        r.solver.batch_size = self.batch_size.unwrap_or(r.solver.batch_size);
        if let Some(out) = &self.out {
            r.out_dir = out.clone();
        }
        Ok(r)
    }
}

fn run(cli: Cli) -> pbgd::Result<u8> {
    match cli.command {
        Command::Solve(args) => {
            let outcome = cmd_solve(&args.resolve()?)?;
            let r = &outcome.report;
            println!("{} on {}: {:?} after {} iterations", r.algorithm, r.problem, r.termination, r.iterations());
            println!("final x = {:?}", r.x);
            println!("final y = {:?}", r.y);
            for note in &r.notes {
                println!("note: {note}");
            }
            Ok(outcome.exit_code as u8)
        }
        Command::Sweep { run, gammas, starts, alpha_rule } => {
            let spec = SweepSpec { base: run.resolve()?, gammas, starts_per_gamma: starts, alpha_rule };
            let out = cmd_sweep(&spec)?;
            for g in &out.per_gamma {
                println!(
                    "gamma {:>8}: {}/{} reached, geometric-mean iterations {:?}, penalty {:?}",
                    g.gamma, g.reached, g.runs, g.geo_mean_iterations, g.geo_mean_final_penalty
                );
            }
            println!("slope(penalty vs gamma) = {:?}", out.penalty_slope);
            println!("slope(iterations vs gamma) = {:?}", out.iterations_slope);
            for f in &out.failures {
                println!("failure: {f}");
            }
            Ok(0)
        }
        Command::Check { target, kind, rho, seed, out } => {
            let selection = CheckSelection { problem: Some(target), kind, rho, seed };
            let summary = cmd_check(&selection, &out)?;
            for c in summary.checks.iter().filter(|c| !c.passed()) {
                println!("{:?} {}: {}", c.status, c.name, c.details.join("; "));
            }
            println!("{} passed, {} failed, {} skipped", summary.pass, summary.fail, summary.skipped);
            Ok(summary.exit_code() as u8)
        }
        Command::Hyperclean(args) => {
            let out = cmd_hyperclean(&args.resolve()?)?;
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            println!("corrupted mean weight {}", show(out.corrupted_mean_weight));
            println!("clean mean weight     {}", show(out.clean_mean_weight));
            println!("separation            {}", show(out.separation));
            println!(
                "validation accuracy   uniform {:.4}, learned {:.4}",
                out.val_accuracy_uniform, out.val_accuracy_learned
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
