//! Pairwise agreement of the three propagation methods on `P_e(t)`.

use std::fmt::Write;

use crate::curves::{compute, CurveTable};
use crate::error::CliResult;
use crate::scenario::{Method, Scenario};

/// Discrepancy floor below which two curves are considered equal.
pub const FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub first: Method,
    pub second: Method,
    pub max_difference: f64,
    /// Largest ratio of difference to allowance over the grid.
    pub worst_ratio: f64,
    pub worst_time: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub table: CurveTable,
    pub pairs: Vec<PairComparison>,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.pairs.iter().all(|p| p.passed)
    }
}

/// Allowance at each time: `max(3 sigma, Dyson bound, FLOOR)` with sigma the
/// Monte Carlo standard error when either side is Monte Carlo.
fn allowance(table: &CurveTable, method: Method) -> Vec<f64> {
    let n = table.rows.len();
    match method {
        Method::Montecarlo => table.column("std_err_montecarlo").unwrap_or(vec![0.0; n]).iter().map(|s| 3.0 * s).collect(),
        Method::Dyson => table.column("bound_dyson").unwrap_or(vec![0.0; n]),
        Method::Laplace => vec![0.0; n],
    }
}

/// Runs all three methods on the scenario and compares each pair.
pub fn compare(scenario: &Scenario) -> CliResult<Comparison> {
    let mut s = scenario.clone();
    s.methods = vec![Method::Laplace, Method::Dyson, Method::Montecarlo];
    let table = compute(&s)?;
    let times = table.column("t").expect("time column");
    let mut pairs = Vec::new();
    for (a, b) in [(Method::Laplace, Method::Dyson), (Method::Laplace, Method::Montecarlo), (Method::Dyson, Method::Montecarlo)] {
        let pa = table.column(&format!("pe_{}", a.name())).expect("computed");
        let pb = table.column(&format!("pe_{}", b.name())).expect("computed");
        let (aa, ab) = (allowance(&table, a), allowance(&table, b));
        let mut worst = (0.0_f64, 0.0_f64, 0.0_f64);
        for i in 0..times.len() {
            let diff = (pa[i] - pb[i]).abs();
            let allowed = aa[i].max(ab[i]).max(FLOOR);
            let ratio = diff / allowed;
            worst.0 = worst.0.max(diff);
            if ratio > worst.1 {
                worst.1 = ratio;
                worst.2 = times[i];
            }
        }
        pairs.push(PairComparison {
            first: a,
            second: b,
            max_difference: worst.0,
            worst_ratio: worst.1,
            worst_time: worst.2,
            passed: worst.1 <= 1.0,
        });
    }
    Ok(Comparison { table, pairs })
}

pub fn render(scenario: &Scenario, c: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# scenario {} ({} trajectories, seed {})", scenario.name, scenario.trajectories, scenario.seed);
    for p in &c.pairs {
        let _ = writeln!(
            out,
            "{:<22}  max|diff| {:>10.3e}  worst diff/allowed {:>8.3} at t={:.4}  {}",
            format!("{}-{}", p.first.name(), p.second.name()),
            p.max_difference,
            p.worst_ratio,
            p.worst_time,
            if p.passed { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(out, "SUMMARY {}", if c.passed() { "PASS" } else { "FAIL" });
    out
}
