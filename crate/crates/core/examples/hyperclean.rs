//! Learn per-sample weights that down-weight flipped labels on a synthetic
//! logistic-regression instance.
//!
//! `cargo run --release --example hyperclean`

use pbgd::runner::{cmd_hyperclean, HypercleanRun};
use pbgd::solvers::Algorithm;

fn main() -> pbgd::Result<()> {
    for algorithm in [Algorithm::VPbgd, Algorithm::VPbsgd] {
        let run = HypercleanRun {
            algorithm,
            out_dir: std::env::temp_dir().join(format!("pbgd-hyperclean-{algorithm}")),
            ..HypercleanRun::default()
        };
        let out = cmd_hyperclean(&run)?;
        println!("{algorithm}: {:?} after {} iterations", out.termination, out.iterations);
        println!(
            "  mean weight clean {:.3}, corrupted {:.3}",
            out.clean_mean_weight.unwrap_or(f64::NAN),
            out.corrupted_mean_weight.unwrap_or(f64::NAN)
        );
        println!(
            "  validation accuracy uniform {:.3} -> learned {:.3}",
            out.val_accuracy_uniform, out.val_accuracy_learned
        );
    }
    Ok(())
}
