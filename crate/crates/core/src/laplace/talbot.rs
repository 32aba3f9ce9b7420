//! Fixed-Talbot numerical inversion of Laplace transforms.
//!
//! The contour `s(theta) = r theta (cot theta + i)`, `theta in (-pi, pi)`,
//! with `r = 2M / (5t)` is discretised by the trapezoid rule in `theta`.
//! Singularities must sit left of the contour; every transform used in this
//! crate has its singularities in the closed left half plane.

use crate::error::{Error, Result};
use crate::linalg::{max_abs, max_abs_diff, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TalbotOptions {
    /// Number of contour nodes `M`.
    pub nodes: usize,
    /// Maximum allowed discrepancy between the `M` and `M/2` node results,
    /// relative to `max(1, |f(t)|)`. `None` skips the check.
    pub convergence_tol: Option<f64>,
}

impl Default for TalbotOptions {
    fn default() -> Self {
        Self { nodes: 32, convergence_tol: Some(1e-6) }
    }
}

impl TalbotOptions {
    pub fn unchecked(nodes: usize) -> Self {
        Self { nodes, convergence_tol: None }
    }
}

fn sum_contour<F>(f: &F, t: f64, m: usize) -> Result<CMat>
where
    F: Fn(C64) -> Result<CMat>,
{
    let mf = m as f64;
    let r = 2.0 * mf / (5.0 * t);
    let head = f(C64::new(r, 0.0))?;
    let mut acc = head * C64::new((r * t).exp(), 0.0);
    for k in 1..m {
        let theta = k as f64 * std::f64::consts::PI / mf;
        let cot = theta.cos() / theta.sin();
        let s = C64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let w = (s * t).exp() * C64::new(1.0, sigma);
        let upper = f(s)?;
        let lower = f(s.conj())?;
        acc += upper * w + lower * w.conj();
    }
    Ok(acc * C64::new(r / (2.0 * mf), 0.0))
}

/// Inverts a matrix-valued transform at `t > 0`.
pub fn invert<F>(f: F, t: f64, opts: &TalbotOptions) -> Result<CMat>
where
    F: Fn(C64) -> Result<CMat>,
{
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("Talbot inversion needs t > 0, got {t}")));
    }
    if opts.nodes < 4 {
        return Err(Error::InvalidParameter("Talbot inversion needs at least 4 nodes".into()));
    }
    let full = sum_contour(&f, t, opts.nodes)?;
    if let Some(tol) = opts.convergence_tol {
        let coarse = sum_contour(&f, t, opts.nodes / 2)?;
        let discrepancy = max_abs_diff(&full, &coarse) / max_abs(&full).max(1.0);
        if !(discrepancy <= tol) {
            return Err(Error::ContourNonconvergence { t, discrepancy });
        }
    }
    Ok(full)
}

pub fn invert_scalar<F>(f: F, t: f64, opts: &TalbotOptions) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let m = invert(|s| f(s).map(|v| CMat::from_element(1, 1, v)), t, opts)?;
    Ok(m[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mu = 1.7;
        for t in [0.05, 0.5, 1.0, 3.0, 10.0] {
            let v = invert_scalar(|s| Ok(1.0 / (s + mu)), t, &TalbotOptions::default()).unwrap();
            assert!((v.re - (-mu * t).exp()).abs() < 1e-10, "t={t}");
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn step_and_ramp() {
        let one = invert_scalar(|s| Ok(1.0 / s), 2.0, &TalbotOptions::default()).unwrap();
        assert!((one.re - 1.0).abs() < 1e-10);
        let ramp = invert_scalar(|s| Ok(1.0 / (s * s)), 2.5, &TalbotOptions::default()).unwrap();
        assert!((ramp.re - 2.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(invert_scalar(|s| Ok(1.0 / s), 0.0, &TalbotOptions::default()).is_err());
    }

    #[test]
    fn detects_delayed_step() {
        // exp(-s)/s grows on the left part of the contour
        let res = invert_scalar(|s| Ok((-s).exp() / s), 0.9, &TalbotOptions::default());
        assert!(matches!(res, Err(Error::ContourNonconvergence { .. })));
    }
}
