//! Curve tables: excited-state population and legitimacy diagnostics on the
//! scenario grid, one column group per method.

use std::io::Write;
use std::path::Path;

use qrenewal::laplace::{invert_laplace, LaplaceMapFamily, TalbotOptions};
use qrenewal::legitimacy::min_choi_eigenvalue;
use qrenewal::linalg::CMat;
use qrenewal::trajectory::{dyson_series_grid, monte_carlo};
use qrenewal::{DensityMatrix, RenewalSpec};

use crate::error::{CliError, CliResult};
use crate::scenario::{Method, Scenario};

/// Largest tolerated trace defect of the inverted map.
pub const TRACE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CurveTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// CSV with a one-line header, LF line endings and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format_value(*x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes the CSV through a temporary file in the target directory, so
    /// the path holds either the complete table or its previous content.
    pub fn write_csv(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

fn format_value(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let wrap = |e: std::io::Error| CliError::Write { path: path.into(), source: e };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

fn population(state: &CMat, level: usize) -> f64 {
    state[(level, level)].re
}

fn trace_defect(state: &CMat) -> f64 {
    let tr: qrenewal::linalg::C64 = (0..state.nrows()).map(|k| state[(k, k)]).sum();
    (tr - 1.0).norm()
}

/// Population, trace defect and smallest Choi eigenvalue by Laplace inversion.
pub fn laplace_curve(spec: &RenewalSpec, rho0: &DensityMatrix, times: &[f64], level: usize) -> qrenewal::Result<Vec<[f64; 3]>> {
    let family = LaplaceMapFamily::map(spec);
    let opts = TalbotOptions::default();
    times
        .iter()
        .map(|t| {
            let map = invert_laplace(&family, *t, &opts)?;
            let state = map.apply(rho0)?;
            Ok([population(&state, level), trace_defect(&state), min_choi_eigenvalue(&map)])
        })
        .collect()
}

fn method_error(method: Method) -> impl Fn(qrenewal::Error) -> CliError {
    move |e| CliError::Method { method: method.name().into(), source: e }
}

/// Computes every requested method on the scenario grid and checks the
/// table invariants before returning it.
pub fn compute(scenario: &Scenario) -> CliResult<CurveTable> {
    let spec = scenario.spec()?;
    let times = scenario.times();
    let rho0 = &scenario.initial_state;
    let level = scenario.excited_level();
    let mut columns = vec!["t".to_string()];
    let mut data: Vec<Vec<f64>> = vec![times.clone()];
    let mut std_err: Option<Vec<f64>> = None;

    for method in &scenario.methods {
        match method {
            Method::Laplace => {
                let curve = laplace_curve(&spec, rho0, &times, level).map_err(method_error(*method))?;
                columns.extend(["pe_laplace", "trace_defect_laplace", "min_choi_laplace"].map(String::from));
                for k in 0..3 {
                    data.push(curve.iter().map(|r| r[k]).collect());
                }
                if let Some((i, r)) = curve.iter().enumerate().find(|(_, r)| !(r[1] <= TRACE_TOL)) {
                    return Err(CliError::Check(format!(
                        "laplace trace defect {:.3e} at t = {} exceeds {TRACE_TOL:.0e}",
                        r[1], times[i]
                    )));
                }
            }
            Method::Dyson => {
                let out = dyson_series_grid(&spec, rho0, &times, &scenario.dyson).map_err(method_error(*method))?;
                columns.extend(["pe_dyson", "trace_defect_dyson", "bound_dyson"].map(String::from));
                data.push(out.iter().map(|o| population(&o.state, level)).collect());
                data.push(out.iter().map(|o| trace_defect(&o.state)).collect());
                data.push(out.iter().map(|o| o.bound).collect());
            }
            Method::Montecarlo => {
                let res = monte_carlo(&spec, rho0, &times, scenario.trajectories, scenario.seed)
                    .map_err(method_error(*method))?;
                columns.extend(["pe_montecarlo", "trace_defect_montecarlo", "std_err_montecarlo"].map(String::from));
                data.push((0..times.len()).map(|i| res.population(i, level)).collect());
                data.push((0..times.len()).map(|i| res.trace_defect(i)).collect());
                let se: Vec<f64> = (0..times.len()).map(|i| res.population_std_err[i][level]).collect();
                data.push(se.clone());
                std_err = Some(se);
            }
        }
    }

    if let Some((label, companion)) = scenario.companion_spec()? {
        let curve = laplace_curve(&companion, rho0, &times, level).map_err(method_error(Method::Laplace))?;
        columns.push(format!("pe_laplace_{label}"));
        data.push(curve.iter().map(|r| r[0]).collect());
    }

    // populations must stay in [-eps, 1 + eps]
    for (c, name) in columns.iter().enumerate() {
        if !name.starts_with("pe_") {
            continue;
        }
        for (i, p) in data[c].iter().enumerate() {
            let eps = std_err.as_ref().map_or(0.0, |s| 3.0 * s[i]).max(1e-6);
            if !(*p >= -eps && *p <= 1.0 + eps) {
                return Err(CliError::Check(format!("{name} = {p} at t = {} is not a probability", times[i])));
            }
        }
    }

    let rows = (0..times.len()).map(|i| data.iter().map(|col| col[i]).collect()).collect();
    Ok(CurveTable { columns, rows })
}
