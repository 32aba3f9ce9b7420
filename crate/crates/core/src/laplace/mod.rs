//! Laplace-domain maps, memory kernels and inhomogeneous terms of quantum
//! renewal processes, and their inversion to the time domain.
//!
//! All constructions use the substitution `h(u) -> h(u - L)` of a scalar
//! waiting-time transform by a function of a generator. Products are written
//! so that the rightmost factor acts first in time.

pub mod talbot;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, eye, inverse, max_abs, CMat, EigenDecomposition, C64};
use crate::superop::{SuperOp, DEFAULT_CPT_TOL};
use crate::wtd::{sprinkling_hat_modified, ModifiedWtdSequence, WaitingTime};

pub use talbot::TalbotOptions;

/// Which intervals carry the modified waiting times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ordering {
    /// The first `k` intervals after the initial time.
    Forward,
    /// The last `k` intervals before the observation time.
    Inverse,
}

/// Factor order of the unmodified semi-Markov maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Cached spectral data of a generator for evaluating `h(u - G)`.
#[derive(Debug, Clone)]
pub struct MatrixFunction {
    dim: usize,
    spectral: EigenDecomposition,
    diagonal: bool,
}

impl MatrixFunction {
    pub fn new(generator: &SuperOp) -> Result<Self> {
        let spectral = generator.spectral_decompose()?;
        let n = spectral.values.len();
        let diagonal = spectral.vectors == eye(n);
        Ok(Self { dim: generator.dim(), spectral, diagonal })
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.spectral.values
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// `h(u - G)` as a raw matrix.
    pub fn eval_matrix(&self, h: impl Fn(C64) -> Result<C64>, u: C64) -> Result<CMat> {
        let mut values = Vec::with_capacity(self.spectral.values.len());
        for lam in &self.spectral.values {
            let x = u - lam;
            values.push(h(x).map_err(|e| match e {
                Error::PoleAtU { .. } => Error::PoleAtShiftedU { re: u.re, im: u.im },
                other => other,
            })?);
        }
        if self.diagonal {
            return Ok(CMat::from_diagonal(&linalg::CVec::from_vec(values)));
        }
        let mut it = values.into_iter();
        Ok(self.spectral.reconstruct_with(|_| it.next().expect("one value per eigenvalue")))
    }

    pub fn evaluate(&self, h: impl Fn(C64) -> Result<C64>, u: C64) -> Result<SuperOp> {
        SuperOp::from_matrix(self.dim, self.eval_matrix(h, u)?)
    }
}

/// `h(u - gen)` for a generator without cached spectral data.
pub fn matfun(gen: &SuperOp, h: impl Fn(C64) -> Result<C64>, u: C64) -> Result<SuperOp> {
    MatrixFunction::new(gen)?.evaluate(h, u)
}

/// Full specification of a quantum renewal process.
#[derive(Debug, Clone)]
pub struct RenewalSpec {
    l: SuperOp,
    m: SuperOp,
    e: SuperOp,
    j: SuperOp,
    wtds: ModifiedWtdSequence,
    ordering: Ordering,
    side: Side,
    l_fun: Arc<MatrixFunction>,
    m_fun: Arc<MatrixFunction>,
}

fn check_generator(g: &SuperOp, dim: usize) -> Result<()> {
    if g.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: g.dim() });
    }
    let defect = g.trace_row_defect();
    if defect > 1e-10 * max_abs(g.matrix()).max(1.0) {
        return Err(Error::NotTracePreservingGenerator { defect });
    }
    Ok(())
}

fn check_channel(c: &SuperOp, dim: usize, name: &str) -> Result<()> {
    if c.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
    }
    let report = c.certify_cpt(DEFAULT_CPT_TOL);
    if !report.is_cpt {
        return Err(Error::InvalidParameter(format!(
            "{name} channel is not CPT (trace defect {:.3e}, min Choi eigenvalue {:.3e})",
            report.trace_defect, report.min_choi_eigenvalue
        )));
    }
    Ok(())
}

impl RenewalSpec {
    /// General process `F(t) = E e^{Lt} J`, `G(t) = e^{Mt}`.
    pub fn new(
        l: SuperOp,
        m: SuperOp,
        e: SuperOp,
        j: SuperOp,
        wtds: ModifiedWtdSequence,
        ordering: Ordering,
        side: Side,
    ) -> Result<Self> {
        let dim = l.dim();
        check_channel(&e, dim, "jump")?;
        check_channel(&j, dim, "pre-interval")?;
        Self::assemble(l, m, e, j, wtds, ordering, side)
    }

    /// Renewal process with `M = L` and `J = 1`.
    pub fn renewal(l: SuperOp, e: SuperOp, wtds: ModifiedWtdSequence, ordering: Ordering) -> Result<Self> {
        let dim = l.dim();
        Self::new(l.clone(), l, e, SuperOp::identity(dim), wtds, ordering, Side::Left)
    }

    /// Like [`RenewalSpec::renewal`] but accepts a jump map that is not CPT,
    /// so that the legitimacy checks can be exercised on illegitimate input.
    pub fn renewal_unchecked(l: SuperOp, e: SuperOp, wtds: ModifiedWtdSequence, ordering: Ordering) -> Result<Self> {
        let dim = l.dim();
        if e.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
        }
        Self::assemble(l.clone(), l, e, SuperOp::identity(dim), wtds, ordering, Side::Left)
    }

    fn assemble(
        l: SuperOp,
        m: SuperOp,
        e: SuperOp,
        j: SuperOp,
        wtds: ModifiedWtdSequence,
        ordering: Ordering,
        side: Side,
    ) -> Result<Self> {
        let dim = l.dim();
        check_generator(&l, dim)?;
        check_generator(&m, dim)?;
        let plain = m == l && j.is_identity(0.0);
        if !plain && (wtds.k() > 0 || ordering == Ordering::Inverse) {
            return Err(Error::Unsupported(
                "modified or inverse-ordered processes need M = L and J = 1".into(),
            ));
        }
        let l_fun = Arc::new(MatrixFunction::new(&l)?);
        let m_fun = if m == l { l_fun.clone() } else { Arc::new(MatrixFunction::new(&m)?) };
        Ok(Self { l, m, e, j, wtds, ordering, side, l_fun, m_fun })
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }
    pub fn l(&self) -> &SuperOp {
        &self.l
    }
    pub fn m(&self) -> &SuperOp {
        &self.m
    }
    pub fn e(&self) -> &SuperOp {
        &self.e
    }
    pub fn j(&self) -> &SuperOp {
        &self.j
    }
    pub fn wtds(&self) -> &ModifiedWtdSequence {
        &self.wtds
    }
    pub fn ordering(&self) -> Ordering {
        self.ordering
    }
    pub fn side(&self) -> Side {
        self.side
    }
    pub fn l_function(&self) -> &MatrixFunction {
        &self.l_fun
    }

    /// `M = L` and `J = 1`.
    pub fn is_plain(&self) -> bool {
        Arc::ptr_eq(&self.l_fun, &self.m_fun) && self.j.is_identity(0.0)
    }

    pub fn with_ordering(&self, ordering: Ordering) -> Result<Self> {
        let mut s = self.clone();
        s.ordering = ordering;
        if ordering == Ordering::Inverse {
            s.require_plain()?;
        }
        Ok(s)
    }

    pub fn with_side(&self, side: Side) -> Self {
        let mut s = self.clone();
        s.side = side;
        s
    }

    pub fn with_wtds(&self, wtds: ModifiedWtdSequence) -> Result<Self> {
        let mut s = self.clone();
        s.wtds = wtds;
        if s.wtds.k() > 0 {
            s.require_plain()?;
        }
        Ok(s)
    }

    fn require_plain(&self) -> Result<()> {
        if self.is_plain() {
            Ok(())
        } else {
            Err(Error::Unsupported("modified or inverse-ordered processes need M = L and J = 1".into()))
        }
    }

    fn on_l(&self, h: impl Fn(C64) -> Result<C64>, u: C64) -> Result<CMat> {
        self.l_fun.eval_matrix(h, u)
    }

    fn on_m(&self, h: impl Fn(C64) -> Result<C64>, u: C64) -> Result<CMat> {
        self.m_fun.eval_matrix(h, u)
    }

    fn f_l(&self, w: &WaitingTime, u: C64) -> Result<CMat> {
        self.on_l(|x| w.laplace_pdf(x), u)
    }

    fn g_l(&self, w: &WaitingTime, u: C64) -> Result<CMat> {
        self.on_l(|x| w.laplace_survival(x), u)
    }

    fn s_l(&self, first: &WaitingTime, u: C64) -> Result<CMat> {
        let base = &self.wtds.base;
        self.on_l(|x| sprinkling_hat_modified(first, base, x), u)
    }

    fn k_l(&self, u: C64) -> Result<CMat> {
        let base = &self.wtds.base;
        self.on_l(|x| base.classical_kernel_hat(x), u)
    }

    fn u_minus_l(&self, u: C64) -> CMat {
        eye(self.dim() * self.dim()) * u - self.l.matrix()
    }

    fn wrap(&self, m: CMat) -> SuperOp {
        SuperOp::from_matrix(self.dim(), m).expect("dimension preserved")
    }

    /// Products `P_r = E f_r ... E f_1` for `r = 0..=k`.
    fn forward_prefixes(&self, u: C64) -> Result<Vec<CMat>> {
        let n = self.dim() * self.dim();
        let mut out = vec![eye(n)];
        for w in &self.wtds.modified {
            let next = self.e.matrix() * self.f_l(w, u)? * out.last().expect("nonempty");
            out.push(next);
        }
        Ok(out)
    }

    /// Products `Q_r = f_1 E ... f_r E` for `r = 0..=k`.
    fn inverse_prefixes(&self, u: C64) -> Result<Vec<CMat>> {
        let n = self.dim() * self.dim();
        let mut out = vec![eye(n)];
        for w in &self.wtds.modified {
            let next = out.last().expect("nonempty") * self.f_l(w, u)? * self.e.matrix();
            out.push(next);
        }
        Ok(out)
    }

    fn resolvent_ef(&self, u: C64) -> Result<CMat> {
        let n = self.dim() * self.dim();
        let ef = self.e.matrix() * self.f_l(&self.wtds.base, u)?;
        inverse(&(eye(n) - ef), "1 - E f(u - L)")
    }

    fn resolvent_fe(&self, u: C64) -> Result<CMat> {
        let n = self.dim() * self.dim();
        let fe = self.f_l(&self.wtds.base, u)? * self.e.matrix();
        inverse(&(eye(n) - fe), "1 - f(u - L) E")
    }

    /// `1 + I` in the forward ordering.
    fn inhom_forward_raw(&self, u: C64) -> Result<CMat> {
        let n = self.dim() * self.dim();
        let e_minus = self.e.matrix() - eye(n);
        let s = self.s_l(&self.wtds.base, u)?;
        let prefixes = self.forward_prefixes(u)?;
        let mut acc = CMat::zeros(n, n);
        for (r, w) in self.wtds.modified.iter().enumerate() {
            acc += &e_minus * (self.s_l(w, u)? - &s) * &prefixes[r];
        }
        Ok(acc)
    }

    /// Order-reversed forward inhomogeneous term.
    fn inhom_reversed_raw(&self, u: C64) -> Result<CMat> {
        let n = self.dim() * self.dim();
        let e_minus = self.e.matrix() - eye(n);
        let s = self.s_l(&self.wtds.base, u)?;
        let prefixes = self.inverse_prefixes(u)?;
        let mut acc = CMat::zeros(n, n);
        for (r, w) in self.wtds.modified.iter().enumerate() {
            acc += &prefixes[r] * (self.s_l(w, u)? - &s) * &e_minus;
        }
        Ok(acc)
    }
}

/// Unmodified semi-Markov map: `g(u-M) (1 - E f(u-L) J)^-1` on the left
/// side, factors swapped on the right side.
pub fn map_hat_semimarkov(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    let n = spec.dim() * spec.dim();
    let base = &spec.wtds.base;
    let a = spec.e.matrix() * spec.f_l(base, u)? * spec.j.matrix();
    let r = inverse(&(eye(n) - a), "1 - E f(u - L) J")?;
    let g = spec.on_m(|x| base.laplace_survival(x), u)?;
    Ok(spec.wrap(match spec.side {
        Side::Left => g * r,
        Side::Right => r * g,
    }))
}

/// Memory kernel of the unmodified semi-Markov map.
pub fn kernel_hat_semimarkov(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    let base = &spec.wtds.base;
    let a = spec.e.matrix() * spec.f_l(base, u)? * spec.j.matrix();
    let f_m = spec.on_m(|x| base.laplace_pdf(x), u)?;
    let g_m_inv = spec.on_m(
        |x| {
            let g = base.laplace_survival(x)?;
            if g.norm() < 1e-300 {
                return Err(Error::ZeroSurvival { re: x.re, im: x.im });
            }
            Ok(1.0 / g)
        },
        u,
    )?;
    let core = a - f_m;
    Ok(spec.wrap(
        spec.m.matrix()
            + match spec.side {
                Side::Left => core * g_m_inv,
                Side::Right => g_m_inv * core,
            },
    ))
}

/// Map of the process whose first `k` intervals are modified.
pub fn map_hat_modified(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    spec.require_plain()?;
    let prefixes = spec.forward_prefixes(u)?;
    let n = spec.dim() * spec.dim();
    let mut acc = CMat::zeros(n, n);
    for (r, w) in spec.wtds.modified.iter().enumerate() {
        acc += spec.g_l(w, u)? * &prefixes[r];
    }
    acc += spec.g_l(&spec.wtds.base, u)? * spec.resolvent_ef(u)? * prefixes.last().expect("nonempty");
    Ok(spec.wrap(acc))
}

/// Map of the process whose last `k` intervals are modified: every term of
/// [`map_hat_modified`] with its factor order reversed.
pub fn map_hat_inverse_order(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    spec.require_plain()?;
    let prefixes = spec.inverse_prefixes(u)?;
    let n = spec.dim() * spec.dim();
    let mut acc = CMat::zeros(n, n);
    for (r, w) in spec.wtds.modified.iter().enumerate() {
        acc += &prefixes[r] * spec.g_l(w, u)?;
    }
    acc += prefixes.last().expect("nonempty") * spec.resolvent_fe(u)? * spec.g_l(&spec.wtds.base, u)?;
    Ok(spec.wrap(acc))
}

/// Kernel of the unmodified renewal process: `L + (E - 1) k(u - L)` forward,
/// `L + k(u - L) (E - 1)` inverse.
pub fn kernel_hat_reference(spec: &RenewalSpec, u: C64, ordering: Ordering) -> Result<SuperOp> {
    let n = spec.dim() * spec.dim();
    let e_minus = spec.e.matrix() - eye(n);
    let k = spec.k_l(u)?;
    Ok(spec.wrap(
        spec.l.matrix()
            + match ordering {
                Ordering::Forward => e_minus * k,
                Ordering::Inverse => k * e_minus,
            },
    ))
}

/// Inhomogeneous term `sum_r (E - 1)(S_r - S) E f_{r-1} ... E f_1`.
pub fn inhom_hat_modified(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    spec.require_plain()?;
    Ok(spec.wrap(spec.inhom_forward_raw(u)?))
}

/// Inhomogeneous term of the inverse ordering: the order-reversed forward
/// term conjugated by the unmodified inverse-ordered map.
pub fn inhom_hat_inverse(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    spec.require_plain()?;
    let reference = spec.with_wtds(spec.wtds.truncated(0))?;
    let lam0 = map_hat_inverse_order(&reference, u)?.into_matrix();
    let lam0_inv = inverse(&lam0, "unmodified inverse-ordered map")?;
    Ok(spec.wrap(lam0_inv * spec.inhom_reversed_raw(u)? * lam0))
}

/// Kernel `L + (1 + I)^-1 {(E - 1) k(u - L) + I (u - L)}` of the forward
/// modified process.
pub fn kernel_hat_modified(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    spec.require_plain()?;
    let n = spec.dim() * spec.dim();
    let i = spec.inhom_forward_raw(u)?;
    let e_minus = spec.e.matrix() - eye(n);
    let num = e_minus * spec.k_l(u)? + &i * spec.u_minus_l(u);
    let inv = inverse(&(eye(n) + i), "1 + I")?;
    Ok(spec.wrap(spec.l.matrix() + inv * num))
}

/// Closed form of the forward kernel when exactly one interval is modified:
/// `L + [1 - (E - 1)(S - S_1)]^-1 (E - 1) k_1`, where `k_1 = f_1 / g` with
/// `g` the survival of the base distribution.
pub fn kernel_hat_single_modified(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    spec.require_plain()?;
    if spec.wtds.k() != 1 {
        return Err(Error::InvalidParameter(format!(
            "single-modification kernel needs k = 1, got k = {}",
            spec.wtds.k()
        )));
    }
    let n = spec.dim() * spec.dim();
    let first = &spec.wtds.modified[0];
    let base = &spec.wtds.base;
    let e_minus = spec.e.matrix() - eye(n);
    let diff = spec.s_l(base, u)? - spec.s_l(first, u)?;
    let k1 = spec.on_l(
        |x| {
            let g = base.laplace_survival(x)?;
            if g.norm() < 1e-300 {
                return Err(Error::ZeroSurvival { re: x.re, im: x.im });
            }
            Ok(first.laplace_pdf(x)? / g)
        },
        u,
    )?;
    let inv = inverse(&(eye(n) - &e_minus * diff), "1 - (E - 1)(S - S_1)")?;
    Ok(spec.wrap(spec.l.matrix() + inv * e_minus * k1))
}

/// Kernel of the inverse-ordered modified process: the order reversal of
/// [`kernel_hat_modified`], `L + {k(u - L)(E - 1) + (u - L) I^T}(1 + I^T)^-1`.
pub fn kernel_hat_inverse(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    spec.require_plain()?;
    let n = spec.dim() * spec.dim();
    let it = spec.inhom_reversed_raw(u)?;
    let e_minus = spec.e.matrix() - eye(n);
    let num = spec.k_l(u)? * e_minus + spec.u_minus_l(u) * &it;
    let inv = inverse(&(eye(n) + it), "1 + I^T")?;
    Ok(spec.wrap(spec.l.matrix() + num * inv))
}

/// The map selected by the spec's ordering: semi-Markov (respecting `side`)
/// when nothing is modified and the ordering is forward.
pub fn map_hat(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    match spec.ordering {
        Ordering::Inverse => map_hat_inverse_order(spec, u),
        Ordering::Forward if spec.wtds.k() > 0 => map_hat_modified(spec, u),
        Ordering::Forward => map_hat_semimarkov(spec, u),
    }
}

/// The memory kernel matching [`map_hat`].
pub fn kernel_hat(spec: &RenewalSpec, u: C64) -> Result<SuperOp> {
    match spec.ordering {
        Ordering::Inverse => kernel_hat_inverse(spec, u),
        Ordering::Forward if spec.wtds.k() > 0 => kernel_hat_modified(spec, u),
        Ordering::Forward => kernel_hat_semimarkov(spec, u),
    }
}

/// Residual of `g(u-L)(1 - E f(u-L))^-1 = (u-L)^-1 (1 - (E-1) S(u-L))^-1`.
pub fn identity_fs_check(spec: &RenewalSpec, u: C64) -> Result<f64> {
    let n = spec.dim() * spec.dim();
    let base = &spec.wtds.base;
    let lhs = spec.g_l(base, u)? * spec.resolvent_ef(u)?;
    let resolvent = inverse(&spec.u_minus_l(u), "u - L")?;
    let s = spec.s_l(base, u)?;
    let inner = inverse(&(eye(n) - (spec.e.matrix() - eye(n)) * s), "1 - (E - 1) S")?;
    Ok(linalg::max_abs_diff(&lhs, &(resolvent * inner)))
}

type Evaluator = dyn Fn(C64) -> Result<SuperOp> + Send + Sync;

/// A superoperator-valued Laplace transform analytic for `Re(u) > abscissa`.
#[derive(Clone)]
pub struct LaplaceMapFamily {
    dim: usize,
    abscissa: f64,
    evaluator: Arc<Evaluator>,
}

impl std::fmt::Debug for LaplaceMapFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LaplaceMapFamily")
            .field("dim", &self.dim)
            .field("abscissa", &self.abscissa)
            .finish_non_exhaustive()
    }
}

impl LaplaceMapFamily {
    pub fn new(
        dim: usize,
        abscissa: f64,
        evaluator: impl Fn(C64) -> Result<SuperOp> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, abscissa, evaluator: Arc::new(evaluator) }
    }

    /// The dynamical map of a spec, see [`map_hat`].
    pub fn map(spec: &RenewalSpec) -> Self {
        let spec = spec.clone();
        Self::new(spec.dim(), 0.0, move |u| map_hat(&spec, u))
    }

    /// Resolvent `(u - G)^-1`, whose inverse transform is `e^{Gt}`.
    pub fn resolvent(gen: &SuperOp) -> Self {
        let gen = gen.clone();
        let n = gen.dim() * gen.dim();
        Self::new(gen.dim(), 0.0, move |u| {
            let m = inverse(&(eye(n) * u - gen.matrix()), "u - G")?;
            SuperOp::from_matrix(gen.dim(), m)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn abscissa(&self) -> f64 {
        self.abscissa
    }

    /// Evaluates the transform, or its analytic continuation left of the
    /// abscissa as needed by the inversion contour.
    pub fn eval(&self, u: C64) -> Result<SuperOp> {
        (self.evaluator)(u)
    }

    /// Largest Cauchy-Riemann defect `|dF/dx + i dF/dy|` at the sample points,
    /// relative to `max(1, |F|)`, from central differences with step `h`.
    pub fn cauchy_riemann_defect(&self, points: &[C64], h: f64) -> Result<f64> {
        let mut worst = 0.0_f64;
        for &u in points {
            let dx = (self.eval(u + h)?.into_matrix() - self.eval(u - h)?.into_matrix()) / C64::new(2.0 * h, 0.0);
            let ih = C64::new(0.0, h);
            let dy = (self.eval(u + ih)?.into_matrix() - self.eval(u - ih)?.into_matrix())
                / C64::new(2.0 * h, 0.0);
            let scale = max_abs(self.eval(u)?.matrix()).max(1.0);
            let defect = max_abs(&(dx + dy * C64::new(0.0, 1.0)));
            worst = worst.max(defect / scale);
        }
        Ok(worst)
    }
}

/// Time-domain value of a map family by fixed-Talbot inversion; `t = 0`
/// returns the identity.
pub fn invert_laplace(family: &LaplaceMapFamily, t: f64, opts: &TalbotOptions) -> Result<SuperOp> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(SuperOp::identity(family.dim));
    }
    let m = talbot::invert(|u| family.eval(u).map(SuperOp::into_matrix), t, opts)?;
    SuperOp::from_matrix(family.dim, m)
}
