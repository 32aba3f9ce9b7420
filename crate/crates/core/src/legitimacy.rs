//! Executable checks of the structural identities of quantum renewal
//! processes and of the legitimacy of their maps.
//!
//! Every check samples a set of points, computes a residual at each, and
//! passes when the largest residual is within tolerance. Numerical failures
//! at a point are recorded as infinite residuals with a note.

use std::fmt;

use crate::error::Result;
use crate::laplace::{self, invert_laplace, LaplaceMapFamily, Ordering, RenewalSpec, Side, TalbotOptions};
use crate::linalg::{eye, hermitian_eigenvalues, inverse, max_abs, max_abs_diff, CMat, C64};
use crate::superop::SuperOp;
use crate::wtd::{jump_count_probs_adaptive, sprinkling_hat_modified, ModifiedWtdSequence, WaitingTime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplePoint {
    Frequency(C64),
    Time(f64),
}

impl fmt::Display for SamplePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplePoint::Frequency(u) => write!(f, "u={:.6e}{:+.6e}i", u.re, u.im),
            SamplePoint::Time(t) => write!(f, "t={t:.6e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check_name: String,
    pub sample_points: Vec<SamplePoint>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Residual at each sample point, in order.
    pub details: Vec<f64>,
    /// True when the identity holds trivially for this spec (nothing modified).
    pub vacuous: bool,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn collect(
        name: impl Into<String>,
        points: Vec<SamplePoint>,
        tolerance: f64,
        mut residual: impl FnMut(SamplePoint) -> Result<f64>,
    ) -> Self {
        let mut details = Vec::with_capacity(points.len());
        let mut notes = Vec::new();
        for p in &points {
            match residual(*p) {
                Ok(r) if r.is_finite() => details.push(r),
                Ok(r) => {
                    notes.push(format!("{p}: residual {r}"));
                    details.push(f64::INFINITY);
                }
                Err(e) => {
                    notes.push(format!("{p}: {e}"));
                    details.push(f64::INFINITY);
                }
            }
        }
        let max_residual = details.iter().copied().fold(0.0, f64::max);
        Self {
            check_name: name.into(),
            sample_points: points,
            max_residual,
            tolerance,
            passed: max_residual <= tolerance,
            details,
            vacuous: false,
            notes,
        }
    }

    fn vacuous(mut self) -> Self {
        self.vacuous = true;
        self
    }

    /// The sample point with the largest residual.
    pub fn worst_point(&self) -> Option<SamplePoint> {
        self.details
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.sample_points[i])
    }
}

fn frequencies(us: &[C64]) -> Vec<SamplePoint> {
    us.iter().map(|u| SamplePoint::Frequency(*u)).collect()
}

fn times(ts: &[f64]) -> Vec<SamplePoint> {
    ts.iter().map(|t| SamplePoint::Time(*t)).collect()
}

fn at_u(p: SamplePoint) -> C64 {
    match p {
        SamplePoint::Frequency(u) => u,
        SamplePoint::Time(_) => unreachable!("frequency check sampled at a time"),
    }
}

/// `n` points `a + i y` with `a` the largest stage rate of `seq` (at least 1)
/// and `y` log-spaced over `[a/10, 100 a]`.
pub fn default_frequencies(seq: &ModifiedWtdSequence, n: usize) -> Vec<C64> {
    let a = seq.max_rate().max(1.0);
    log_grid(0.1 * a, 100.0 * a, n).into_iter().map(|y| C64::new(a, y)).collect()
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
    }
}

fn relative(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

/// Trace defect and Choi negativity of the time-domain map of `spec` in the
/// given ordering. The residual at each time is the larger of the trace
/// defect and the negative part of the smallest Choi eigenvalue.
pub fn check_cpt_grid(spec: &RenewalSpec, ordering: Ordering, grid: &[f64], tol: f64) -> CheckReport {
    let name = format!("cpt_grid[{}]", ordering_name(ordering));
    let spec = match spec.with_ordering(ordering) {
        Ok(s) => s,
        Err(e) => {
            let mut r = CheckReport::collect(name, times(grid), tol, |_| Ok(f64::INFINITY));
            r.notes = vec![e.to_string()];
            return r;
        }
    };
    let family = LaplaceMapFamily::map(&spec);
    let opts = TalbotOptions::default();
    let mut min_choi = f64::INFINITY;
    let mut report = CheckReport::collect(name, times(grid), tol, |p| {
        let SamplePoint::Time(t) = p else { unreachable!() };
        let map = invert_laplace(&family, t, &opts)?;
        let report = map.certify_cpt(tol);
        min_choi = min_choi.min(report.min_choi_eigenvalue);
        Ok(report.trace_defect.max(-report.min_choi_eigenvalue).max(0.0))
    });
    if min_choi < 0.0 {
        report.notes.push(format!("min Choi eigenvalue {min_choi:.3e}"));
    }
    report
}

fn ordering_name(o: Ordering) -> &'static str {
    match o {
        Ordering::Forward => "forward",
        Ordering::Inverse => "inverse",
    }
}

/// Which map/kernel pair is tested by [`check_kernel_duality`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelConstruction {
    /// Unmodified process on the spec's side, with general `M` and `J`.
    SemiMarkov,
    /// Unmodified reference process in the given ordering.
    Reference(Ordering),
    /// First `k` intervals modified.
    Modified,
    /// Closed form for exactly one modified interval.
    SingleModified,
    /// Last `k` intervals modified.
    InverseOrdered,
}

impl fmt::Display for KernelConstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelConstruction::SemiMarkov => write!(f, "semimarkov"),
            KernelConstruction::Reference(o) => write!(f, "reference_{}", ordering_name(*o)),
            KernelConstruction::Modified => write!(f, "modified"),
            KernelConstruction::SingleModified => write!(f, "single_modified"),
            KernelConstruction::InverseOrdered => write!(f, "inverse_ordered"),
        }
    }
}

fn pair_at(spec: &RenewalSpec, which: KernelConstruction, u: C64) -> Result<(SuperOp, SuperOp)> {
    Ok(match which {
        KernelConstruction::SemiMarkov => (laplace::map_hat_semimarkov(spec, u)?, laplace::kernel_hat_semimarkov(spec, u)?),
        KernelConstruction::Reference(o) => {
            let reference = spec.with_wtds(spec.wtds().truncated(0))?;
            let map = match o {
                Ordering::Forward => laplace::map_hat_semimarkov(&reference.with_side(Side::Left), u)?,
                Ordering::Inverse => laplace::map_hat_inverse_order(&reference, u)?,
            };
            (map, laplace::kernel_hat_reference(spec, u, o)?)
        }
        KernelConstruction::Modified => (laplace::map_hat_modified(spec, u)?, laplace::kernel_hat_modified(spec, u)?),
        KernelConstruction::SingleModified => {
            (laplace::map_hat_modified(spec, u)?, laplace::kernel_hat_single_modified(spec, u)?)
        }
        KernelConstruction::InverseOrdered => {
            (laplace::map_hat_inverse_order(spec, u)?, laplace::kernel_hat_inverse(spec, u)?)
        }
    })
}

/// `K(u) = u - Lambda(u)^-1`, residual relative to `max(1, |u|, |K|)`.
pub fn check_kernel_duality(spec: &RenewalSpec, which: KernelConstruction, us: &[C64], tol: f64) -> CheckReport {
    let n = spec.dim() * spec.dim();
    CheckReport::collect(format!("kernel_duality[{which}]"), frequencies(us), tol, |p| {
        let u = at_u(p);
        let (map, kernel) = pair_at(spec, which, u)?;
        let expected = eye(n) * u - inverse(map.matrix(), "map")?;
        Ok(relative(max_abs_diff(kernel.matrix(), &expected), max_abs(kernel.matrix()).max(u.norm())))
    })
}

/// `u Lambda - 1 = K_0 Lambda + I` with the reference kernel of the spec's
/// ordering, residual relative to `max(1, |u Lambda|)`.
pub fn check_inhomogeneous_relation(spec: &RenewalSpec, us: &[C64], tol: f64) -> CheckReport {
    let n = spec.dim() * spec.dim();
    let ordering = spec.ordering();
    let report = CheckReport::collect(
        format!("inhomogeneous_relation[{}]", ordering_name(ordering)),
        frequencies(us),
        tol,
        |p| {
            let u = at_u(p);
            let (map, inhom) = match ordering {
                Ordering::Forward => (laplace::map_hat_modified(spec, u)?, laplace::inhom_hat_modified(spec, u)?),
                Ordering::Inverse => (laplace::map_hat_inverse_order(spec, u)?, laplace::inhom_hat_inverse(spec, u)?),
            };
            let k0 = laplace::kernel_hat_reference(spec, u, ordering)?;
            let lhs = map.matrix() * u - eye(n);
            let rhs = k0.matrix() * map.matrix() + inhom.matrix();
            Ok(relative(max_abs_diff(&lhs, &rhs), max_abs(&lhs)))
        },
    );
    if spec.wtds().k() == 0 {
        report.vacuous()
    } else {
        report
    }
}

/// `g (1 - E f)^-1 = (u - L)^-1 (1 - (E - 1) S)^-1`, all at `u - L`.
pub fn check_fs_identity(spec: &RenewalSpec, us: &[C64], tol: f64) -> CheckReport {
    CheckReport::collect("fs_identity", frequencies(us), tol, |p| laplace::identity_fs_check(spec, at_u(p)))
}

struct Transforms<'a> {
    spec: &'a RenewalSpec,
    u: C64,
}

impl Transforms<'_> {
    fn on(&self, h: impl Fn(C64) -> Result<C64>) -> Result<CMat> {
        self.spec.l_function().eval_matrix(h, self.u)
    }
    fn f(&self, w: &WaitingTime) -> Result<CMat> {
        self.on(|x| w.laplace_pdf(x))
    }
    fn s(&self, w: &WaitingTime) -> Result<CMat> {
        let base = &self.spec.wtds().base;
        self.on(|x| sprinkling_hat_modified(w, base, x))
    }
}

/// `I_k = Lambda_0^-1 Lambda_k - 1`, read off the forward maps.
fn inhom_from_maps(spec: &RenewalSpec, k: usize, u: C64) -> Result<CMat> {
    let n = spec.dim() * spec.dim();
    let lam0 = laplace::map_hat_semimarkov(&spec.with_wtds(spec.wtds().truncated(0))?.with_side(Side::Left), u)?;
    let lamk = laplace::map_hat_modified(&spec.with_wtds(spec.wtds().truncated(k))?, u)?;
    Ok(inverse(lam0.matrix(), "unmodified map")? * lamk.matrix() - eye(n))
}

/// Induction over the number of modified intervals: for each `k < K`,
/// `I_{k+1} - I_k = (E - 1)(S_{k+1} - S) E f_k ... E f_1`, with both
/// inhomogeneous terms read off the maps, and for each modified WTD
/// `f_r - f = (1 - f)(S_r - S)`.
pub fn check_induction_a3(spec: &RenewalSpec, us: &[C64], tol: f64) -> CheckReport {
    let n = spec.dim() * spec.dim();
    let k_total = spec.wtds().k();
    let report = CheckReport::collect("induction_a3", frequencies(us), tol, |p| {
        let u = at_u(p);
        let tr = Transforms { spec, u };
        let base = &spec.wtds().base;
        let f = tr.f(base)?;
        let s = tr.s(base)?;
        let e = spec.e().matrix();
        let e_minus = e - eye(n);
        let mut worst = 0.0_f64;
        let mut prefix = eye(n);
        let mut previous = CMat::zeros(n, n);
        for (r, w) in spec.wtds().modified.iter().enumerate() {
            let fr = tr.f(w)?;
            let sr = tr.s(w)?;
            let lhs = &fr - &f;
            let rhs = (eye(n) - &f) * (&sr - &s);
            worst = worst.max(relative(max_abs_diff(&lhs, &rhs), max_abs(&sr)));
            let next = inhom_from_maps(spec, r + 1, u)?;
            let step = &e_minus * (&sr - &s) * &prefix;
            worst = worst.max(relative(max_abs_diff(&(&next - &previous), &step), max_abs(&next)));
            prefix = e * fr * prefix;
            previous = next;
        }
        Ok(worst)
    });
    if k_total == 0 {
        report.vacuous()
    } else {
        report
    }
}

/// Scalar normalization of the jump statistics: in Laplace space
/// `sum_r g_r f_{r-1}...f_1 + g/(1-f) f_k...f_1 = 1/u` (residual of `u`
/// times the left side minus one), and in time `sum_n p(n, t) = 1`.
pub fn check_normalization(seq: &ModifiedWtdSequence, us: &[C64], grid: &[f64], tol: f64) -> CheckReport {
    let mut points = frequencies(us);
    points.extend(times(grid));
    CheckReport::collect("normalization", points, tol, |p| match p {
        SamplePoint::Frequency(u) => {
            let mut prefix = C64::new(1.0, 0.0);
            let mut acc = C64::new(0.0, 0.0);
            for w in &seq.modified {
                acc += w.laplace_survival(u)? * prefix;
                prefix *= w.laplace_pdf(u)?;
            }
            let f = seq.base.laplace_pdf(u)?;
            acc += seq.base.laplace_survival(u)? / (1.0 - f) * prefix;
            Ok((u * acc - 1.0).norm())
        }
        SamplePoint::Time(t) => {
            let counts = jump_count_probs_adaptive(seq, t, 1e-8)?;
            Ok((counts.probs.iter().sum::<f64>() - 1.0).abs().max(counts.tail))
        }
    })
}

/// One-dimensional reduction: with `d = 1` the only generator is `0` and
/// the only channel is `1`, so the modified map must equal `1/u`.
pub fn check_scalar_reduction(seq: &ModifiedWtdSequence, us: &[C64], tol: f64) -> CheckReport {
    let spec = RenewalSpec::renewal(SuperOp::zero(1), SuperOp::identity(1), seq.clone(), Ordering::Forward);
    let mut failure = None;
    let mut report = CheckReport::collect("scalar_reduction", frequencies(us), tol, |p| match &spec {
        Ok(spec) => {
            let map = laplace::map_hat(spec, at_u(p))?;
            Ok((map.matrix()[(0, 0)] * at_u(p) - 1.0).norm())
        }
        Err(e) => {
            failure = Some(e.to_string());
            Ok(f64::INFINITY)
        }
    });
    report.notes.extend(failure);
    report
}

/// Smallest eigenvalue of the Hermitian part of the Choi matrix of `map`.
pub fn min_choi_eigenvalue(map: &SuperOp) -> f64 {
    hermitian_eigenvalues(&map.choi())[0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub frequencies: Vec<C64>,
    pub times: Vec<f64>,
    pub identity_tol: f64,
    pub inhomogeneous_tol: f64,
    pub cpt_tol: f64,
    pub normalization_tol: f64,
}

impl SuiteOptions {
    /// 20 default frequencies and a 20-point log grid on `[t_max/1000, t_max]`.
    pub fn for_spec(spec: &RenewalSpec, t_max: f64) -> Self {
        Self {
            frequencies: default_frequencies(spec.wtds(), 20),
            times: log_grid(t_max * 1e-3, t_max, 20),
            identity_tol: 1e-10,
            inhomogeneous_tol: 1e-9,
            cpt_tol: 1e-6,
            normalization_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub reports: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.reports.iter().filter(|r| !r.passed)
    }
}

/// All checks that apply to `spec`. Orderings and constructions that the
/// spec cannot express (general `M`, `J` with modification or inverse
/// ordering) are skipped.
pub fn run_suite(spec: &RenewalSpec, opts: &SuiteOptions) -> SuiteReport {
    let us = &opts.frequencies;
    let mut reports = Vec::new();
    let plain = spec.is_plain();
    let k = spec.wtds().k();

    reports.push(check_cpt_grid(spec, spec.ordering(), &opts.times, opts.cpt_tol));
    if plain {
        let other = match spec.ordering() {
            Ordering::Forward => Ordering::Inverse,
            Ordering::Inverse => Ordering::Forward,
        };
        reports.push(check_cpt_grid(spec, other, &opts.times, opts.cpt_tol));
    }

    reports.push(check_kernel_duality(spec, KernelConstruction::SemiMarkov, us, opts.identity_tol));
    if plain {
        for o in [Ordering::Forward, Ordering::Inverse] {
            reports.push(check_kernel_duality(spec, KernelConstruction::Reference(o), us, opts.identity_tol));
        }
        if k > 0 {
            reports.push(check_kernel_duality(spec, KernelConstruction::Modified, us, opts.identity_tol));
            reports.push(check_kernel_duality(spec, KernelConstruction::InverseOrdered, us, opts.identity_tol));
        }
        if k == 1 {
            reports.push(check_kernel_duality(spec, KernelConstruction::SingleModified, us, opts.identity_tol));
        }
        reports.push(check_inhomogeneous_relation(spec, us, opts.inhomogeneous_tol));
        reports.push(check_induction_a3(spec, us, opts.identity_tol));
    }
    reports.push(check_fs_identity(spec, us, opts.identity_tol));
    reports.push(check_normalization(spec.wtds(), us, &opts.times, opts.normalization_tol));
    reports.push(check_scalar_reduction(spec.wtds(), us, opts.identity_tol));
    reports.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    SuiteReport { reports }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expo(rate: f64) -> WaitingTime {
        WaitingTime::exponential(rate).unwrap()
    }

    fn fig3a_like(k: usize) -> RenewalSpec {
        let seq = ModifiedWtdSequence::new(expo(1.0), vec![expo(7.0), expo(5.0), expo(1.0)]).truncated(k);
        RenewalSpec::renewal(
            SuperOp::decay_generator([1.1; 3]),
            SuperOp::amplitude_damping(0.8).unwrap(),
            seq,
            Ordering::Forward,
        )
        .unwrap()
    }

    fn us() -> Vec<C64> {
        default_frequencies(&fig3a_like(3).wtds().clone(), 20)
    }

    #[test]
    fn semigroup_only_spec_is_cpt() {
        let spec = RenewalSpec::renewal(
            SuperOp::decay_generator([0.5, 0.5, 1.0]),
            SuperOp::identity(2),
            ModifiedWtdSequence::unmodified(expo(1.0)),
            Ordering::Forward,
        )
        .unwrap();
        let r = check_cpt_grid(&spec, Ordering::Forward, &log_grid(0.01, 5.0, 10), 1e-9);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn modified_spec_is_cpt() {
        let r = check_cpt_grid(&fig3a_like(3), Ordering::Forward, &log_grid(0.01, 10.0, 20), 1e-6);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn corrupted_channel_fails() {
        let e = SuperOp::identity(2).scale(0.9).add(&SuperOp::transpose(2).scale(0.1)).unwrap();
        let spec = RenewalSpec::renewal_unchecked(
            SuperOp::decay_generator([0.05; 3]),
            e,
            ModifiedWtdSequence::unmodified(expo(1.0)),
            Ordering::Forward,
        )
        .unwrap();
        let r = check_cpt_grid(&spec, Ordering::Forward, &log_grid(0.1, 10.0, 10), 1e-6);
        assert!(!r.passed);
        assert!(r.notes.iter().any(|n| n.contains("min Choi eigenvalue")));
    }

    #[test]
    fn duality_holds_for_every_construction() {
        let spec = fig3a_like(3);
        for which in [
            KernelConstruction::SemiMarkov,
            KernelConstruction::Reference(Ordering::Forward),
            KernelConstruction::Reference(Ordering::Inverse),
            KernelConstruction::Modified,
            KernelConstruction::InverseOrdered,
        ] {
            let r = check_kernel_duality(&spec, which, &us(), 1e-10);
            assert!(r.passed, "{which}: {}", r.max_residual);
        }
        let single = check_kernel_duality(&fig3a_like(1), KernelConstruction::SingleModified, &us(), 1e-10);
        assert!(single.passed, "{}", single.max_residual);
        let erlang = RenewalSpec::renewal(
            SuperOp::decay_generator([0.3, 0.7, 1.2]),
            SuperOp::pauli_x(),
            ModifiedWtdSequence::unmodified(WaitingTime::erlang(3, 2.0).unwrap()),
            Ordering::Forward,
        )
        .unwrap();
        assert!(check_kernel_duality(&erlang, KernelConstruction::SemiMarkov, &us(), 1e-10).passed);
    }

    #[test]
    fn identity_spec_has_zero_duality_residual() {
        let spec = RenewalSpec::renewal(
            SuperOp::zero(2),
            SuperOp::identity(2),
            ModifiedWtdSequence::unmodified(expo(1.0)),
            Ordering::Forward,
        )
        .unwrap();
        let r = check_kernel_duality(&spec, KernelConstruction::SemiMarkov, &us(), 1e-14);
        assert!(r.passed, "{}", r.max_residual);
    }

    #[test]
    fn inhomogeneous_relation_both_orderings() {
        let fwd = check_inhomogeneous_relation(&fig3a_like(3), &us(), 1e-9);
        assert!(fwd.passed && !fwd.vacuous, "{}", fwd.max_residual);
        let inv = fig3a_like(3).with_ordering(Ordering::Inverse).unwrap();
        let r = check_inhomogeneous_relation(&inv, &us(), 1e-9);
        assert!(r.passed, "{}", r.max_residual);
        let k0 = check_inhomogeneous_relation(&fig3a_like(0), &us(), 1e-12);
        assert!(k0.passed && k0.vacuous);
    }

    #[test]
    fn induction_steps() {
        let r = check_induction_a3(&fig3a_like(3), &us(), 1e-10);
        assert!(r.passed, "{}", r.max_residual);
        // a "modified" interval identical to the base: both sides vanish
        let same = fig3a_like(0).with_wtds(ModifiedWtdSequence::new(expo(1.0), vec![expo(1.0)])).unwrap();
        let r = check_induction_a3(&same, &us(), 1e-13);
        assert!(r.passed, "{}", r.max_residual);
    }

    #[test]
    fn scalar_identities_are_exact() {
        let seq = fig3a_like(3).wtds().clone();
        let r = check_scalar_reduction(&seq, &us(), 1e-13);
        assert!(r.passed, "{}", r.max_residual);
        let scalar = RenewalSpec::renewal(SuperOp::zero(1), SuperOp::identity(1), seq, Ordering::Forward).unwrap();
        let r = check_induction_a3(&scalar, &us(), 1e-13);
        assert!(r.passed, "{}", r.max_residual);
    }

    #[test]
    fn normalization_in_both_domains() {
        let seq = fig3a_like(3).wtds().clone();
        let r = check_normalization(&seq, &us(), &log_grid(0.01, 10.0, 10), 1e-6);
        assert!(r.passed, "{}", r.max_residual);
        let laplace_only = check_normalization(&seq, &us(), &[], 1e-10);
        assert!(laplace_only.passed);
        let poisson = check_normalization(&ModifiedWtdSequence::unmodified(expo(2.0)), &[], &[0.5, 3.0], 1e-8);
        assert!(poisson.passed);
    }

    #[test]
    fn suite_passes_and_is_reproducible() {
        let spec = fig3a_like(3);
        let opts = SuiteOptions::for_spec(&spec, 10.0);
        let a = run_suite(&spec, &opts);
        assert!(a.passed(), "{:?}", a.failures().map(|r| &r.check_name).collect::<Vec<_>>());
        assert_eq!(a, run_suite(&spec, &opts));
    }
}
