//! Run the verification battery over the catalog and print a table.
//!
//! `cargo run --example property_checks`

use pbgd::verify::{check_all, CheckStatus};

fn main() {
    let checks = check_all(0);
    for c in &checks {
        println!(
            "{:<8} {:<48} worst {:>9.2e}  tol {:>8.1e}  n = {}",
            format!("{:?}", c.status),
            c.name,
            c.worst_residual,
            c.tolerance,
            c.samples
        );
    }
    let failed = checks.iter().filter(|c| c.status == CheckStatus::Fail).count();
    println!("{} checks, {failed} failed", checks.len());
}
