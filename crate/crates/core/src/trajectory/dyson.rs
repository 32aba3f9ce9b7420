//! Truncated Dyson series by recursive product integration.
//!
//! The `n`-jump contribution is built from the `(n-1)`-jump one by a single
//! convolution, `a_n(s) = int_0^s K_n(s - r) a_{n-1}(r) dr`, so the nested
//! simplex integrals never have to be formed explicitly. Functions of time
//! are tabulated at composite Gauss-Legendre nodes; the integral up to a node
//! inside its own panel uses Lagrange interpolation on that panel.
//!
//! Two exact representations are available: waiting-time densities with a
//! survival factor for the last interval, and the renewal (sprinkling)
//! density with jump factors `E - 1` and no survival factor.

use crate::error::{Error, Result};
use crate::laplace::RenewalSpec;
use crate::linalg::{eye, norm1, CMat, CVec, Flow, C64};
use crate::quad::{gauss_legendre_on, lagrange_weights};
use crate::superop::{DensityMatrix, OperatorBasis};
use crate::wtd::{jump_count_probs, renewal_density, ModifiedWtdSequence};

use super::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Waiting-time densities between jumps, survival after the last one.
    WaitingTime,
    /// Renewal density between jumps with jump factors `E - 1`.
    Sprinkling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DysonOptions {
    /// Highest jump number kept; `None` chooses it from `tolerance`.
    pub n_max: Option<usize>,
    /// Largest admissible truncation bound.
    pub tolerance: f64,
    pub nodes_per_panel: usize,
    /// Panel width times the fastest rate in the problem.
    pub panel_rate_width: f64,
    pub representation: Representation,
}

impl Default for DysonOptions {
    fn default() -> Self {
        Self {
            n_max: None,
            tolerance: 1e-9,
            nodes_per_panel: 16,
            panel_rate_width: 4.0,
            representation: Representation::WaitingTime,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DysonOutput {
    pub time: f64,
    /// `rho(t)` as a `d x d` matrix.
    pub state: CMat,
    /// Bound on the entrywise error from dropping terms beyond `n_max`.
    pub bound: f64,
    pub n_max: usize,
}

/// Factors of the series `sum_n e^{M tau_last} w_last B K_n ... K_1 x0` with
/// `K_n(tau) = w_n(tau) E e^{L tau} J`.
struct Chain<'a> {
    l: Flow,
    m: Flow,
    e: CMat,
    j: Option<CMat>,
    kernel_weight: &'a (dyn Fn(usize, f64) -> f64 + Sync),
    final_weight: &'a (dyn Fn(usize, f64) -> f64 + Sync),
}

struct Layout {
    h: f64,
    panels: usize,
    /// Reference nodes and weights on `[0, 1]`.
    x: Vec<f64>,
    w: Vec<f64>,
    /// Sub-rule on `[0, 1]` for partial panels.
    z: Vec<f64>,
    wz: Vec<f64>,
    /// `interp[q][m]`: Lagrange weights at `x_q z_m`.
    interp: Vec<Vec<Vec<f64>>>,
}

impl Layout {
    fn new(horizon: f64, rate: f64, nodes: usize, width: f64) -> Self {
        let panels = ((horizon * rate / width).ceil() as usize).max(1);
        let (x, w) = gauss_legendre_on(nodes, 0.0, 1.0);
        let (z, wz) = (x.clone(), w.clone());
        let interp = x
            .iter()
            .map(|xq| z.iter().map(|zm| lagrange_weights(&x, xq * zm)).collect())
            .collect();
        Self { h: horizon / panels as f64, panels, x, w, z, wz, interp }
    }

    fn q(&self) -> usize {
        self.x.len()
    }

    fn node(&self, p: usize, q: usize) -> f64 {
        (p as f64 + self.x[q]) * self.h
    }

    fn len(&self) -> usize {
        self.panels * self.q()
    }
}

impl Chain<'_> {
    fn rate(&self, wtd_rate: f64) -> f64 {
        wtd_rate + self.l.rate_scale().max(self.m.rate_scale())
    }

    /// `sum_i c_i e^{L tau_i} b_i` accumulated into `acc`.
    fn push(&self, acc: &mut CMat, c: f64, tau: f64, b: &CMat) {
        match self.l.diagonal() {
            Some(vals) => {
                for (i, lam) in vals.iter().enumerate() {
                    let f = (lam * tau).exp() * c;
                    for col in 0..b.ncols() {
                        acc[(i, col)] += f * b[(i, col)];
                    }
                }
            }
            None => *acc += self.l.matrix(tau) * b * C64::new(c, 0.0),
        }
    }

    fn pre(&self, a: &CMat) -> CMat {
        match &self.j {
            Some(j) => j * a,
            None => a.clone(),
        }
    }

    /// Results at each grid time for `n = 0..=n_max`.
    fn run(&self, x0: &CMat, grid: &[f64], n_max: usize, layout: &Layout) -> Vec<CMat> {
        let mut out: Vec<CMat> = grid
            .iter()
            .map(|t| self.m.apply(*t, x0) * C64::new((self.final_weight)(0, *t), 0.0))
            .collect();
        if n_max == 0 {
            return out;
        }
        let nq = layout.q();
        let (rows, cols) = x0.shape();
        let b0 = self.pre(x0);
        // a_1 at the nodes
        let mut a: Vec<CMat> = (0..layout.len())
            .map(|i| {
                let s = layout.node(i / nq, i % nq);
                let mut acc = CMat::zeros(rows, cols);
                self.push(&mut acc, (self.kernel_weight)(1, s), s, &b0);
                &self.e * acc
            })
            .collect();
        self.accumulate(&mut out, &a, 1, grid, layout);
        for n in 2..=n_max {
            let b: Vec<CMat> = a.iter().map(|x| self.pre(x)).collect();
            let next: Vec<CMat> = (0..layout.len())
                .map(|i| {
                    let (p, q) = (i / nq, i % nq);
                    let s = layout.node(p, q);
                    let mut acc = CMat::zeros(rows, cols);
                    for pp in 0..p {
                        for j in 0..nq {
                            let r = layout.node(pp, j);
                            let c = layout.h * layout.w[j] * (self.kernel_weight)(n, s - r);
                            self.push(&mut acc, c, s - r, &b[pp * nq + j]);
                        }
                    }
                    let span = layout.x[q] * layout.h;
                    for (m, zm) in layout.z.iter().enumerate() {
                        let r = p as f64 * layout.h + zm * span;
                        let mut bi = CMat::zeros(rows, cols);
                        for (j, lw) in layout.interp[q][m].iter().enumerate() {
                            bi += &b[p * nq + j] * C64::new(*lw, 0.0);
                        }
                        let c = span * layout.wz[m] * (self.kernel_weight)(n, s - r);
                        self.push(&mut acc, c, s - r, &bi);
                    }
                    &self.e * acc
                })
                .collect();
            a = next;
            self.accumulate(&mut out, &a, n, grid, layout);
        }
        out
    }

    /// Adds `int_0^t w_final(n, t - s) e^{M (t - s)} a_n(s) ds` at each grid time.
    fn accumulate(&self, out: &mut [CMat], a: &[CMat], n: usize, grid: &[f64], layout: &Layout) {
        let nq = layout.q();
        for (g, &t) in grid.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            let full = ((t / layout.h).floor() as usize).min(layout.panels);
            let mut acc = CMat::zeros(a[0].nrows(), a[0].ncols());
            for p in 0..full {
                for j in 0..nq {
                    let s = layout.node(p, j);
                    let c = layout.h * layout.w[j] * (self.final_weight)(n, t - s);
                    acc += self.m.apply(t - s, &a[p * nq + j]) * C64::new(c, 0.0);
                }
            }
            let start = full as f64 * layout.h;
            let span = t - start;
            if full < layout.panels && span > 0.0 {
                for (m, zm) in layout.z.iter().enumerate() {
                    let local = (start + zm * span) / layout.h - full as f64;
                    let lw = lagrange_weights(&layout.x, local);
                    let mut ai = CMat::zeros(a[0].nrows(), a[0].ncols());
                    for (j, w) in lw.iter().enumerate() {
                        ai += &a[full * nq + j] * C64::new(*w, 0.0);
                    }
                    let s = start + zm * span;
                    let c = span * layout.wz[m] * (self.final_weight)(n, t - s);
                    acc += self.m.apply(t - s, &ai) * C64::new(c, 0.0);
                }
            }
            out[g] += acc;
        }
    }
}

/// Smallest `n` whose waiting-time tail at `t` is at most `tol`, together
/// with the tail of every `n` up to it.
fn jump_tails(seq: &ModifiedWtdSequence, t: f64, cap: usize) -> Result<Vec<f64>> {
    let counts = jump_count_probs(seq, t, cap)?;
    let mut tails = vec![0.0; cap + 1];
    let mut acc = counts.tail;
    for n in (0..=cap).rev() {
        tails[n] = acc;
        acc += counts.probs[n];
    }
    Ok(tails)
}

/// Majorant of the sprinkling-series tail beyond `n`: `kappa sum_{m > n} x^m / m!`
/// with `x = kappa c s_max t`.
fn sprinkling_tail(kappa: f64, x: f64, n: usize) -> f64 {
    let mut term = 1.0;
    for m in 1..=n {
        term *= x / m as f64;
    }
    let mut sum = 0.0;
    let mut m = n;
    loop {
        m += 1;
        term *= x / m as f64;
        sum += term;
        if m as f64 > x && term < 1e-18 * sum.max(1e-300) {
            break;
        }
        if m > n + 10_000 {
            return f64::INFINITY;
        }
    }
    kappa * sum
}

/// Truncated series for `rho(t)` on a time grid.
pub fn dyson_series_grid(
    spec: &RenewalSpec,
    rho0: &DensityMatrix,
    grid: &[f64],
    opts: &DysonOptions,
) -> Result<Vec<DysonOutput>> {
    if rho0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: rho0.dim() });
    }
    if let Some(t) = grid.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NegativeTime(*t));
    }
    if opts.nodes_per_panel < 2 || !(opts.panel_rate_width > 0.0) {
        return Err(Error::QuadratureFailure("need at least two nodes per panel and a positive width".into()));
    }
    let dim = spec.dim();
    let nc = dim * dim;
    let basis = OperatorBasis::new(dim);
    let rho_coords = basis.coords(rho0.matrix());
    let horizon = grid.iter().fold(0.0_f64, |a, b| a.max(*b));
    let variant = Variant::of(spec);
    let seq = spec.wtds().clone();
    let transposed = variant != Variant::Forward;

    let (l, m, e, j) = match variant {
        Variant::Forward => (
            spec.l().matrix().clone(),
            spec.m().matrix().clone(),
            spec.e().matrix().clone(),
            spec.j().matrix().clone(),
        ),
        // the reversed products are transposes of forward products of
        // transposed factors
        Variant::Inverse => (
            spec.l().matrix().transpose(),
            spec.m().matrix().transpose(),
            spec.e().matrix().transpose(),
            spec.j().matrix().transpose(),
        ),
        Variant::Right => (
            spec.l().matrix().transpose(),
            spec.m().matrix().transpose(),
            spec.j().matrix().transpose(),
            spec.e().matrix().transpose(),
        ),
    };
    let x0 = if transposed { eye(nc) } else { CMat::from_column_slice(nc, 1, rho_coords.as_slice()) };
    let finish = |r: &CMat| -> CMat {
        let coords: CVec = if transposed { r.transpose() * &rho_coords } else { r.column(0).into_owned() };
        basis.operator(&coords)
    };

    match opts.representation {
        Representation::WaitingTime => {
            let kernel = |n: usize, tau: f64| seq.interval(n).pdf(tau).unwrap_or(0.0);
            let last = |n: usize, tau: f64| seq.interval(n + 1).survival(tau).unwrap_or(0.0);
            let chain = Chain {
                l: Flow::new(&l),
                m: Flow::new(&m),
                e,
                j: if spec.j().is_identity(0.0) { None } else { Some(j) },
                kernel_weight: &kernel,
                final_weight: &last,
            };
            let cap = 16usize.max((4.0 * seq.max_rate() * horizon) as usize + 40);
            let tails = jump_tails(&seq, horizon, cap)?;
            let n_max = match opts.n_max {
                Some(n) => n,
                None => (0..=cap).find(|n| tails[*n] <= opts.tolerance).ok_or_else(|| {
                    Error::QuadratureFailure("jump-count tail does not reach the tolerance".into())
                })?,
            };
            let bound_at = |t: f64| -> Result<f64> {
                if n_max > cap {
                    return Ok(0.0_f64.max(jump_count_probs(&seq, t, n_max)?.tail));
                }
                Ok(jump_tails(&seq, t, n_max)?[n_max])
            };
            if bound_at(horizon)? > opts.tolerance {
                return Err(Error::TruncationTooLoose { bound: bound_at(horizon)?, tolerance: opts.tolerance });
            }
            let layout = Layout::new(horizon, chain.rate(seq.max_rate()), opts.nodes_per_panel, opts.panel_rate_width);
            let raw = chain.run(&x0, grid, n_max, &layout);
            grid.iter()
                .zip(&raw)
                .map(|(t, r)| Ok(DysonOutput { time: *t, state: finish(r), bound: bound_at(*t)?, n_max }))
                .collect()
        }
        Representation::Sprinkling => {
            if seq.k() > 0 || !spec.is_plain() || variant == Variant::Right {
                return Err(Error::Unsupported(
                    "the sprinkling series needs an unmodified process with M = L, J = 1 and no right ordering".into(),
                ));
            }
            let base = seq.base.clone();
            let kernel = move |_n: usize, tau: f64| renewal_density(&base, &base, tau).unwrap_or(0.0);
            let one = |_n: usize, _tau: f64| 1.0;
            let e_minus = &e - eye(nc);
            let chain = Chain {
                l: Flow::new(&l),
                m: Flow::new(&l),
                e: e_minus.clone(),
                j: None,
                kernel_weight: &kernel,
                final_weight: &one,
            };
            let layout = Layout::new(horizon, chain.rate(seq.max_rate()), opts.nodes_per_panel, opts.panel_rate_width);
            let s_max = (0..layout.len())
                .map(|i| layout.node(i / layout.q(), i % layout.q()))
                .chain([0.0, horizon])
                .map(|t| kernel(1, t))
                .fold(0.0, f64::max);
            let kappa = chain.l.norm_bound();
            let c = norm1(&e_minus);
            let rho_norm: f64 = rho_coords.iter().map(|z| z.norm()).sum();
            // the transposed chain is bounded in the dual norm
            let scale = if transposed { nc as f64 * rho_norm } else { rho_norm };
            let bound_at = |t: f64, n: usize| scale * sprinkling_tail(kappa, kappa * c * s_max * t, n);
            let n_max = match opts.n_max {
                Some(n) => n,
                None => (0..10_000).find(|n| bound_at(horizon, *n) <= opts.tolerance).ok_or_else(|| {
                    Error::QuadratureFailure("sprinkling majorant does not reach the tolerance".into())
                })?,
            };
            if bound_at(horizon, n_max) > opts.tolerance {
                return Err(Error::TruncationTooLoose { bound: bound_at(horizon, n_max), tolerance: opts.tolerance });
            }
            let raw = chain.run(&x0, grid, n_max, &layout);
            Ok(grid
                .iter()
                .zip(&raw)
                .map(|(t, r)| DysonOutput { time: *t, state: finish(r), bound: bound_at(*t, n_max), n_max })
                .collect())
        }
    }
}

/// Truncated series for `rho(t)` at a single time.
pub fn dyson_series(spec: &RenewalSpec, rho0: &DensityMatrix, t: f64, opts: &DysonOptions) -> Result<DysonOutput> {
    Ok(dyson_series_grid(spec, rho0, &[t], opts)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::{invert_laplace, LaplaceMapFamily, Ordering, Side, TalbotOptions};
    use crate::linalg::max_abs_diff;
    use crate::superop::SuperOp;
    use crate::wtd::WaitingTime;

    fn expo(rate: f64) -> WaitingTime {
        WaitingTime::exponential(rate).unwrap()
    }

    fn excited() -> DensityMatrix {
        DensityMatrix::from_bloch([0.0, 0.0, -1.0]).unwrap()
    }

    fn laplace_state(spec: &RenewalSpec, t: f64) -> CMat {
        let map = invert_laplace(&LaplaceMapFamily::map(spec), t, &TalbotOptions::default()).unwrap();
        map.apply(&excited()).unwrap()
    }

    #[test]
    fn zero_jumps_is_the_survival_term() {
        let l = SuperOp::decay_generator([1.1; 3]);
        let w = WaitingTime::erlang(2, 1.0).unwrap();
        let spec = RenewalSpec::renewal(
            l.clone(),
            SuperOp::amplitude_damping(0.8).unwrap(),
            ModifiedWtdSequence::unmodified(w.clone()),
            Ordering::Forward,
        )
        .unwrap();
        let opts = DysonOptions { n_max: Some(0), tolerance: 1.0, ..Default::default() };
        let out = dyson_series(&spec, &excited(), 1.3, &opts).unwrap();
        let expected = l.semigroup(1.3).unwrap().apply(&excited()).unwrap() * C64::new(w.survival(1.3).unwrap(), 0.0);
        assert!(max_abs_diff(&out.state, &expected) < 1e-14);
        let tight = DysonOptions { n_max: Some(0), tolerance: 1e-9, ..Default::default() };
        assert!(matches!(dyson_series(&spec, &excited(), 1.3, &tight), Err(Error::TruncationTooLoose { .. })));
    }

    #[test]
    fn exponential_series_reaches_the_semigroup() {
        let mu = 1.0;
        let l = SuperOp::decay_generator([1.1; 3]);
        let e = SuperOp::amplitude_damping(0.8).unwrap();
        let spec =
            RenewalSpec::renewal(l.clone(), e.clone(), ModifiedWtdSequence::unmodified(expo(mu)), Ordering::Forward)
                .unwrap();
        let gen = l.add(&e.sub(&SuperOp::identity(2)).unwrap().scale(mu)).unwrap();
        let grid = [0.0, 0.7, 2.0, 5.0];
        let out = dyson_series_grid(&spec, &excited(), &grid, &DysonOptions::default()).unwrap();
        for o in &out {
            let exact = gen.semigroup(o.time).unwrap().apply(&excited()).unwrap();
            assert!(max_abs_diff(&o.state, &exact) < 1e-9 + o.bound, "t={}", o.time);
        }
    }

    #[test]
    fn both_representations_agree() {
        let spec = RenewalSpec::renewal(
            SuperOp::decay_generator([0.6, 0.9, 1.1]),
            SuperOp::amplitude_damping(0.8).unwrap().compose(&SuperOp::pauli_x()).unwrap(),
            ModifiedWtdSequence::unmodified(WaitingTime::erlang(2, 2.0).unwrap()),
            Ordering::Forward,
        )
        .unwrap();
        let grid = [0.5, 1.5, 3.0];
        let fg = dyson_series_grid(&spec, &excited(), &grid, &DysonOptions::default()).unwrap();
        let sp = dyson_series_grid(
            &spec,
            &excited(),
            &grid,
            &DysonOptions { representation: Representation::Sprinkling, ..Default::default() },
        )
        .unwrap();
        for (a, b) in fg.iter().zip(&sp) {
            assert!(max_abs_diff(&a.state, &b.state) < 1e-8, "t={}", a.time);
        }
    }

    #[test]
    fn reversed_variants_match_laplace() {
        let seq = ModifiedWtdSequence::new(expo(1.0), vec![expo(5.0), expo(0.5)]);
        let fwd = RenewalSpec::renewal(
            SuperOp::decay_generator([2.0; 3]),
            SuperOp::amplitude_damping(0.87).unwrap(),
            seq,
            Ordering::Forward,
        )
        .unwrap();
        let inv = fwd.with_ordering(Ordering::Inverse).unwrap();
        let right = RenewalSpec::new(
            SuperOp::decay_generator([0.5, 0.8, 1.1]),
            SuperOp::decay_generator([0.2, 0.2, 0.4]),
            SuperOp::amplitude_damping(0.4).unwrap(),
            SuperOp::pauli_x(),
            ModifiedWtdSequence::unmodified(WaitingTime::erlang(2, 1.5).unwrap()),
            Ordering::Forward,
            Side::Right,
        )
        .unwrap();
        for spec in [fwd, inv, right.clone(), right.with_side(Side::Left)] {
            let grid = [0.4, 1.7, 3.0];
            let out = dyson_series_grid(&spec, &excited(), &grid, &DysonOptions::default()).unwrap();
            for o in &out {
                let lap = laplace_state(&spec, o.time);
                assert!(max_abs_diff(&o.state, &lap) < 1e-7, "{:?} t={}", Variant::of(&spec), o.time);
            }
        }
    }
}
