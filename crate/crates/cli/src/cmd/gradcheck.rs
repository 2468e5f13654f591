use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use dialsent_core::autodiff::{op_suite, OpKind, SuiteEntry};
use dialsent_core::model::model_grad_check;

use crate::{CliError, CliResult, RunDir};

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Largest relative error accepted.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Corrupt one operation's backward rule (negative control).
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct GradcheckSummary {
    pub tolerance: f64,
    pub passed: bool,
    pub worst: String,
    pub checks: Vec<SuiteEntry>,
}

pub fn check_all(eps: f64, tolerance: f64, fault: Option<OpKind>) -> dialsent_core::Result<GradcheckSummary> {
    let mut checks = op_suite(eps, fault)?;
    checks.push(SuiteEntry {
        name: "hierarchical_model".into(),
        report: model_grad_check(eps, fault)?,
    });
    let worst = checks
        .iter()
        .max_by(|a, b| a.report.max_rel_error.total_cmp(&b.report.max_rel_error))
        .map(|e| e.name.clone())
        .unwrap_or_default();
    Ok(GradcheckSummary {
        tolerance,
        passed: checks.iter().all(|e| e.report.passes(tolerance)),
        worst,
        checks,
    })
}

pub fn summary_table(s: &GradcheckSummary) -> String {
    let mut out = String::from("check                max_rel_error  worst coordinate\n");
    for e in &s.checks {
        let r = &e.report;
        let _ = writeln!(
            out,
            "{:<20} {:>13.3e}  {}[{}] analytic {:.6e} numeric {:.6e}  {}",
            e.name,
            r.max_rel_error,
            r.worst_param,
            r.worst_index,
            r.analytic,
            r.numeric,
            if r.passes(s.tolerance) { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(
        out,
        "{} (worst: {}, tolerance {:e})",
        if s.passed { "PASS" } else { "FAIL" },
        s.worst,
        s.tolerance
    );
    out
}

pub fn run(a: GradcheckArgs) -> CliResult {
    let fault = a
        .inject_fault
        .as_deref()
        .map(str::parse::<OpKind>)
        .transpose()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let summary = check_all(a.eps, a.tolerance, fault)?;
    let table = summary_table(&summary);
    print!("{table}");
    if let Some(out) = &a.out {
        let mut dir = RunDir::create(out, "gradcheck")?;
        dir.write_json("gradcheck.json", &summary)?;
        dir.write("gradcheck.txt", &table)?;
        dir.finish(serde_json::json!({ "eps": a.eps }))?;
    }
    if summary.passed {
        Ok(())
    } else {
        Err(CliError::numeric(format!("gradient check failed at {}", summary.worst)))
    }
}
