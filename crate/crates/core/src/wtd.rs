//! Phase-type waiting time distributions, renewal statistics and the
//! classical semi-Markov solver.
//!
//! Every distribution here is a chain of exponential stages, so its Laplace
//! transform is the rational function `f(u) = prod_i mu_i / (mu_i + u)` and
//! can be evaluated at any argument away from the poles `u = -mu_i`,
//! including at shifted superoperator arguments `u - L`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::laplace::talbot::{self, TalbotOptions};
use crate::linalg::{CMat, C64};

/// Exponential, Erlang or hypoexponential waiting time.
#[derive(Debug, Clone, PartialEq)]
pub enum WaitingTime {
    Exponential { rate: f64 },
    Erlang { shape: u32, rate: f64 },
    Hypoexponential { rates: Vec<f64> },
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("rate {rate} must be positive and finite")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

fn pole_scale(u: C64, rate: f64) -> bool {
    (u + rate).norm() <= 1e-14 * rate
}

impl WaitingTime {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self::Exponential { rate })
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        if shape == 0 {
            return Err(Error::InvalidParameter("Erlang shape must be at least 1".into()));
        }
        Ok(Self::Erlang { shape, rate })
    }

    pub fn hypoexponential(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidParameter("hypoexponential needs at least one stage".into()));
        }
        rates.iter().try_for_each(|r| check_rate(*r))?;
        Ok(Self::Hypoexponential { rates })
    }

    /// Rates of the exponential stages traversed in order.
    pub fn stage_rates(&self) -> Vec<f64> {
        match self {
            Self::Exponential { rate } => vec![*rate],
            Self::Erlang { shape, rate } => vec![*rate; *shape as usize],
            Self::Hypoexponential { rates } => rates.clone(),
        }
    }

    pub fn max_rate(&self) -> f64 {
        self.stage_rates().into_iter().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.stage_rates().iter().map(|r| 1.0 / r).sum()
    }

    /// Sub-generator of the stage chain and its exit-rate vector.
    fn phase_matrix(&self) -> DMatrix<f64> {
        let rates = self.stage_rates();
        let m = rates.len();
        let mut q = DMatrix::zeros(m, m);
        for (i, r) in rates.iter().enumerate() {
            q[(i, i)] = -r;
            if i + 1 < m {
                q[(i, i + 1)] = *r;
            }
        }
        q
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            Self::Exponential { rate } => rate * (-rate * t).exp(),
            Self::Erlang { shape, rate } => erlang_pdf(*shape, *rate, t),
            Self::Hypoexponential { rates } => {
                let e = (self.phase_matrix() * t).exp();
                let last = rates.len() - 1;
                (e[(0, last)] * rates[last]).max(0.0)
            }
        })
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            Self::Exponential { rate } => (-rate * t).exp(),
            Self::Erlang { shape, rate } => {
                let x = rate * t;
                let mut term = 1.0;
                let mut sum = 1.0;
                for j in 1..*shape {
                    term *= x / j as f64;
                    sum += term;
                }
                (sum * (-x).exp()).min(1.0)
            }
            Self::Hypoexponential { .. } => {
                let e = (self.phase_matrix() * t).exp();
                e.row(0).iter().sum::<f64>().clamp(0.0, 1.0)
            }
        })
    }

    /// `f(u) = prod mu_i / (mu_i + u)`.
    pub fn laplace_pdf(&self, u: C64) -> Result<C64> {
        let mut acc = C64::new(1.0, 0.0);
        for r in self.stage_rates() {
            if pole_scale(u, r) {
                return Err(Error::PoleAtU { re: u.re, im: u.im });
            }
            acc *= r / (u + r);
        }
        Ok(acc)
    }

    /// `g(u) = (1 - f(u)) / u`, summed stage by stage so that `u = 0` gives
    /// the mean without cancellation.
    pub fn laplace_survival(&self, u: C64) -> Result<C64> {
        let mut prefix = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for r in self.stage_rates() {
            if pole_scale(u, r) {
                return Err(Error::PoleAtU { re: u.re, im: u.im });
            }
            acc += prefix / (u + r);
            prefix *= r / (u + r);
        }
        Ok(acc)
    }

    /// Classical renewal kernel `k(u) = f(u) / g(u)`.
    pub fn classical_kernel_hat(&self, u: C64) -> Result<C64> {
        let g = self.laplace_survival(u)?;
        if g.norm() < 1e-300 {
            return Err(Error::ZeroSurvival { re: u.re, im: u.im });
        }
        Ok(self.laplace_pdf(u)? / g)
    }

    /// Sprinkling (renewal) density `S(u) = f(u) / (1 - f(u))`.
    pub fn sprinkling_hat(&self, u: C64) -> Result<C64> {
        sprinkling_hat_modified(self, self, u)
    }

    /// Draws a waiting time as a sum of exponential stages.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.stage_rates()
            .iter()
            .map(|r| -(1.0 - rng.random::<f64>()).ln() / r)
            .sum()
    }
}

fn erlang_pdf(shape: u32, rate: f64, t: f64) -> f64 {
    if t == 0.0 {
        return if shape == 1 { rate } else { 0.0 };
    }
    let n = shape as f64;
    let log_fact: f64 = (1..shape).map(|j| (j as f64).ln()).sum();
    (n * rate.ln() + (n - 1.0) * t.ln() - rate * t - log_fact).exp()
}

/// `S_1(u) = f_1(u) / (1 - f(u))` for a delayed renewal process whose first
/// interval follows `first` and later ones `base`.
pub fn sprinkling_hat_modified(first: &WaitingTime, base: &WaitingTime, u: C64) -> Result<C64> {
    let denom = u * base.laplace_survival(u)?;
    if denom.norm() < 1e-300 {
        return Err(Error::RenewalPole { re: u.re, im: u.im });
    }
    Ok(first.laplace_pdf(u)? / denom)
}

/// Time-domain renewal density of a delayed renewal process: the probability
/// density of a jump at `t` irrespective of how many jumps preceded it.
pub fn renewal_density(first: &WaitingTime, base: &WaitingTime, t: f64) -> Result<f64> {
    check_time(t)?;
    let a = first.stage_rates();
    let b = base.stage_rates();
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let mut q = DMatrix::zeros(n, n);
    for (i, r) in a.iter().chain(b.iter()).enumerate() {
        q[(i, i)] = -r;
        let next = if i + 1 < n { i + 1 } else { na };
        q[(i, next)] += *r;
    }
    let e = (q * t).exp();
    Ok((e[(0, na - 1)] * a[na - 1] + e[(0, n - 1)] * b[nb - 1]).max(0.0))
}

/// Base waiting time plus an ordered list of modified ones for the first (or,
/// under inverse ordering, the last) `k` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedWtdSequence {
    pub base: WaitingTime,
    pub modified: Vec<WaitingTime>,
}

impl ModifiedWtdSequence {
    pub fn new(base: WaitingTime, modified: Vec<WaitingTime>) -> Self {
        Self { base, modified }
    }

    pub fn unmodified(base: WaitingTime) -> Self {
        Self { base, modified: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.modified.len()
    }

    /// Waiting time of the 1-based interval `j`.
    pub fn interval(&self, j: usize) -> &WaitingTime {
        assert!(j >= 1, "intervals are numbered from 1");
        self.modified.get(j - 1).unwrap_or(&self.base)
    }

    pub fn max_rate(&self) -> f64 {
        self.modified.iter().fold(self.base.max_rate(), |a, w| a.max(w.max_rate()))
    }

    /// Truncated sequence keeping only the first `k` modified intervals.
    pub fn truncated(&self, k: usize) -> Self {
        Self { base: self.base.clone(), modified: self.modified.iter().take(k).cloned().collect() }
    }
}

/// Jump-count distribution `p(n, t)` for `n = 0..=n_max` plus the mass of
/// more than `n_max` jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpCounts {
    pub probs: Vec<f64>,
    pub tail: f64,
}

/// Probabilities of exactly `n` jumps in `[0, t]`.
///
/// The stages of consecutive intervals form a pure-birth Markov chain which
/// is solved by uniformization, so every term is nonnegative and the tail
/// mass is obtained directly rather than as `1 - sum`.
pub fn jump_count_probs(seq: &ModifiedWtdSequence, t: f64, n_max: usize) -> Result<JumpCounts> {
    check_time(t)?;
    let mut rates = Vec::new();
    let mut owner = Vec::new();
    for j in 1..=(n_max + 1) {
        for r in seq.interval(j).stage_rates() {
            rates.push(r);
            owner.push(j - 1);
        }
    }
    let ns = rates.len();
    // index ns is the overflow state
    let mut v = vec![0.0; ns + 1];
    v[0] = 1.0;
    let mut acc = vec![0.0; ns + 1];
    if t == 0.0 {
        acc = v;
    } else {
        let lam = rates.iter().fold(0.0_f64, |a, r| a.max(*r));
        let lt = lam * t;
        let k_max = (lt + 12.0 * lt.sqrt() + 60.0).ceil() as usize;
        let mut logw = -lt;
        let mut cum = 0.0;
        for k in 0..=k_max {
            if k > 0 {
                logw += lt.ln() - (k as f64).ln();
                let mut next = vec![0.0; ns + 1];
                for s in 0..ns {
                    let p = rates[s] / lam;
                    next[s] += v[s] * (1.0 - p);
                    next[s + 1] += v[s] * p;
                }
                next[ns] += v[ns];
                v = next;
            }
            let w = logw.exp();
            cum += w;
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
            if k as f64 > lt && 1.0 - cum < 1e-17 {
                break;
            }
        }
        if 1.0 - cum > 1e-12 {
            return Err(Error::QuadratureFailure(format!(
                "uniformization lost {:.3e} of the Poisson mass",
                1.0 - cum
            )));
        }
    }
    let mut probs = vec![0.0; n_max + 1];
    for s in 0..ns {
        probs[owner[s]] += acc[s];
    }
    Ok(JumpCounts { probs, tail: acc[ns] })
}

/// Grows `n_max` until the tail mass drops below `tail_tol`.
pub fn jump_count_probs_adaptive(seq: &ModifiedWtdSequence, t: f64, tail_tol: f64) -> Result<JumpCounts> {
    let mut n_max = 8usize.max((seq.max_rate() * t * 2.0) as usize);
    loop {
        let counts = jump_count_probs(seq, t, n_max)?;
        if counts.tail <= tail_tol {
            return Ok(counts);
        }
        if n_max > 100_000 {
            return Err(Error::QuadratureFailure("jump-count tail does not converge".into()));
        }
        n_max *= 2;
    }
}

/// Classical semi-Markov process on `n` sites: jump matrix `pi` (columns sum
/// to one) and per-site waiting times.
#[derive(Debug, Clone)]
pub struct SemiMarkovSpec {
    pub pi: DMatrix<f64>,
    pub wtds: Vec<WaitingTime>,
}

impl SemiMarkovSpec {
    pub fn new(pi: DMatrix<f64>, wtds: Vec<WaitingTime>) -> Result<Self> {
        let n = wtds.len();
        if pi.shape() != (n, n) || n == 0 {
            return Err(Error::DimensionMismatch { expected: n, found: pi.nrows() });
        }
        for j in 0..n {
            let col = pi.column(j);
            if col.iter().any(|x| *x < 0.0) {
                return Err(Error::NotStochastic { column: j, sum: col.sum() });
            }
            let sum = col.sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::NotStochastic { column: j, sum });
            }
        }
        Ok(Self { pi, wtds })
    }

    pub fn sites(&self) -> usize {
        self.wtds.len()
    }

    /// `T(u) = g(u) (1 - pi f(u))^-1` with site-diagonal `f`, `g`: survive at
    /// the current site after the jumps, whose densities belong to the sites left.
    pub fn transition_hat(&self, u: C64) -> Result<CMat> {
        let n = self.sites();
        let mut a = CMat::identity(n, n);
        let mut g = CMat::zeros(n, n);
        for k in 0..n {
            let fk = self.wtds[k].laplace_pdf(u)?;
            g[(k, k)] = self.wtds[k].laplace_survival(u)?;
            for i in 0..n {
                a[(i, k)] -= C64::new(self.pi[(i, k)], 0.0) * fk;
            }
        }
        let inv = a
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::SingularResolvent(format!("1 - pi f(u) at u = {u}")))?;
        Ok(g * inv)
    }

    /// Transition probabilities `T_nm(t)` by Talbot inversion.
    pub fn transition(&self, t: f64, opts: &TalbotOptions) -> Result<DMatrix<f64>> {
        check_time(t)?;
        let n = self.sites();
        if t == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        let m = talbot::invert(|u| self.transition_hat(u), t, opts)?;
        Ok(m.map(|z| z.re))
    }
}
