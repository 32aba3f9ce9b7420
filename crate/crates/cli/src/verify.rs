//! Legitimacy suite over a scenario, rendered as a line-per-check report.

use std::fmt::Write;

use qrenewal::legitimacy::{run_suite, CheckReport, SuiteOptions, SuiteReport};

use crate::error::CliResult;
use crate::scenario::Scenario;

/// Suite options for the scenario: its own time horizon, and `cpt_tol` in
/// place of the default CPT tolerance when given.
pub fn suite_options(scenario: &Scenario, cpt_tol: Option<f64>) -> CliResult<SuiteOptions> {
    let spec = scenario.spec()?;
    let t_max = scenario.times().into_iter().fold(0.0_f64, f64::max);
    let mut opts = SuiteOptions::for_spec(&spec, if t_max > 0.0 { t_max } else { 1.0 });
    if let Some(t) = cpt_tol {
        opts.cpt_tol = t;
    }
    Ok(opts)
}

pub fn verify(scenario: &Scenario, cpt_tol: Option<f64>) -> CliResult<SuiteReport> {
    Ok(run_suite(&scenario.spec()?, &suite_options(scenario, cpt_tol)?))
}

fn status(r: &CheckReport) -> &'static str {
    match (r.passed, r.vacuous) {
        (true, true) => "PASS (vacuous)",
        (true, false) => "PASS",
        (false, _) => "FAIL",
    }
}

/// One line per check (`name max_residual tolerance status`); failing checks
/// are followed by indented lines naming the worst sample point and any
/// numerical notes; the last line is the summary.
pub fn render(scenario: &Scenario, report: &SuiteReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# scenario {}", scenario.name);
    let width = report.reports.iter().map(|r| r.check_name.len()).max().unwrap_or(0);
    for r in &report.reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.3e}  {:>9.1e}  {}",
            r.check_name,
            r.max_residual,
            r.tolerance,
            status(r)
        );
        if !r.passed {
            if let Some(p) = r.worst_point() {
                let _ = writeln!(out, "    worst at {p}");
            }
            for n in r.notes.iter().take(5) {
                let _ = writeln!(out, "    {n}");
            }
        }
    }
    let failed: Vec<&str> = report.failures().map(|r| r.check_name.as_str()).collect();
    if failed.is_empty() {
        let _ = writeln!(out, "SUMMARY PASS ({} checks)", report.reports.len());
    } else {
        let _ = writeln!(out, "SUMMARY FAIL ({} of {} checks: {})", failed.len(), report.reports.len(), failed.join(", "));
    }
    out
}
