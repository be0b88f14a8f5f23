use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::PenaltyKind;
use crate::problems;
use crate::verify::{check_all, check_entry, CheckReport, CheckStatus};

use super::output::write_json;

/// What `check` runs: the whole catalog, or one entry with an optional
/// replacement `(kind, ρ)` for its squared-distance declarations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckSelection {
    /// `None` or `"all"` selects every entry plus the projection checks.
    pub problem: Option<String>,
    pub kind: Option<PenaltyKind>,
    pub rho: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub seed: u64,
    pub passed: bool,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    pub checks: Vec<CheckReport>,
}

impl CheckSummary {
    /// Nonzero iff some check failed.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Runs the selected battery and writes `checks.json` into `out_dir`.
pub fn cmd_check(selection: &CheckSelection, out_dir: &Path) -> Result<CheckSummary> {
    let all = selection.problem.as_deref().is_none_or(|p| p == "all");
    let checks = if all {
        if selection.kind.is_some() || selection.rho.is_some() {
            return Err(Error::InvalidArgument("--kind/--rho need a single problem".into()));
        }
        check_all(selection.seed)
    } else {
        let mut entry = problems::lookup(selection.problem.as_deref().unwrap_or_default())?;
        if selection.kind.is_some() || selection.rho.is_some() {
            let kind = selection.kind.unwrap_or(PenaltyKind::ValueGap);
            let rho = match selection.rho {
                Some(r) => r,
                None => entry
                    .declared
                    .iter()
                    .find(|(k, _)| *k == kind)
                    .map(|d| d.1)
                    .ok_or_else(|| Error::InvalidArgument(format!("no declared rho for {kind}; pass --rho")))?,
            };
            entry.declared = vec![(kind, rho)];
        }
        check_entry(&entry, selection.seed)
    };
    let count = |s: CheckStatus| checks.iter().filter(|c| c.status == s).count();
    let summary = CheckSummary {
        seed: selection.seed,
        passed: count(CheckStatus::Fail) == 0,
        pass: count(CheckStatus::Pass),
        fail: count(CheckStatus::Fail),
        skipped: count(CheckStatus::Skipped),
        checks,
    };
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("checks.json"), &summary)?;
    Ok(summary)
}
