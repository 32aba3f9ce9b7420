//! Time-domain propagation: Monte Carlo unraveling over jump times and a
//! truncated Dyson series.
//!
//! Trajectories are always drawn with the causal rule (first interval from
//! `f_1`, then `f_2`, ...). The order-reversed constructions (inverse
//! ordering, right side) are reflections of that process in time: a sampled
//! set of renewal epochs `e_1 < ... < e_n <= t` is realized at the physical
//! jump times `t - e_n < ... < t - e_1`, which carries exactly the weights of
//! the reversed map without any reweighting.

pub mod dyson;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laplace::{Ordering, RenewalSpec, Side};
use crate::linalg::{CMat, Flow};
use crate::superop::{DensityMatrix, OperatorBasis};
use crate::wtd::ModifiedWtdSequence;

pub use dyson::{dyson_series, dyson_series_grid, DysonOptions, DysonOutput, Representation};

/// How the factors of a sampled path are composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Causal order: `e^{M(t - t_n)} E e^{L(t_n - t_{n-1})} J ... E e^{L t_1} J`.
    Forward,
    /// Blocks `E e^{L tau} J` in reversed order, the survival interval first.
    Right,
    /// Every factor in reversed order.
    Inverse,
}

impl Variant {
    /// The variant realizing [`crate::laplace::map_hat`] for this spec.
    pub fn of(spec: &RenewalSpec) -> Self {
        match spec.ordering() {
            Ordering::Inverse => Variant::Inverse,
            Ordering::Forward if spec.wtds().k() > 0 => Variant::Forward,
            Ordering::Forward => match spec.side() {
                Side::Left => Variant::Forward,
                Side::Right => Variant::Right,
            },
        }
    }

    fn reflected(self) -> bool {
        self != Variant::Forward
    }
}

/// Physical jump times of one realization up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub jump_times: Vec<f64>,
    pub horizon: f64,
}

impl Trajectory {
    pub fn new(jump_times: Vec<f64>, horizon: f64) -> Result<Self> {
        if horizon < 0.0 || horizon.is_nan() {
            return Err(Error::NegativeTime(horizon));
        }
        let increasing = jump_times.windows(2).all(|w| w[0] < w[1]);
        let inside = jump_times.iter().all(|t| *t >= 0.0 && *t <= horizon);
        if !increasing || !inside {
            return Err(Error::InvalidParameter(
                "jump times must be strictly increasing and lie within [0, horizon]".into(),
            ));
        }
        Ok(Self { jump_times, horizon })
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }
}

/// Renewal epochs `<= horizon` drawn causally from the sequence.
pub fn sample_epochs<R: Rng + ?Sized>(seq: &ModifiedWtdSequence, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut epochs = Vec::new();
    let mut t = 0.0;
    for j in 1.. {
        t += seq.interval(j).sample(rng);
        if t > horizon {
            break;
        }
        epochs.push(t);
    }
    epochs
}

fn reflect(epochs: &[f64], horizon: f64) -> Vec<f64> {
    epochs.iter().rev().map(|e| horizon - e).collect()
}

/// Draws the physical jump times of the process described by `spec`.
pub fn sample_trajectory<R: Rng + ?Sized>(spec: &RenewalSpec, t: f64, rng: &mut R) -> Result<Trajectory> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let epochs = sample_epochs(spec.wtds(), t, rng);
    let times = if Variant::of(spec).reflected() { reflect(&epochs, t) } else { epochs };
    Ok(Trajectory { jump_times: times, horizon: t })
}

/// Precomputed flows and channels for composing paths.
struct Composer {
    l: Flow,
    m: Flow,
    e: CMat,
    j: Option<CMat>,
    variant: Variant,
}

impl Composer {
    fn new(spec: &RenewalSpec) -> Self {
        let j = if spec.j().is_identity(0.0) { None } else { Some(spec.j().matrix().clone()) };
        Self {
            l: Flow::new(spec.l().matrix()),
            m: Flow::new(spec.m().matrix()),
            e: spec.e().matrix().clone(),
            j,
            variant: Variant::of(spec),
        }
    }

    fn block(&self, tau: f64, v: &CMat) -> CMat {
        let v = match &self.j {
            Some(j) => j * v,
            None => v.clone(),
        };
        &self.e * self.l.apply(tau, &v)
    }

    /// Applies the path with physical jump times `times` over `[0, t]`.
    fn compose(&self, times: &[f64], t: f64, v: &CMat) -> CMat {
        match self.variant {
            Variant::Right => {
                let Some(first) = times.first() else {
                    return self.m.apply(t, v);
                };
                let mut v = self.m.apply(*first, v);
                for (k, s) in times.iter().enumerate() {
                    let next = times.get(k + 1).copied().unwrap_or(t);
                    v = self.block(next - s, &v);
                }
                v
            }
            Variant::Forward | Variant::Inverse => {
                let mut v = v.clone();
                let mut last = 0.0;
                for s in times {
                    v = self.block(s - last, &v);
                    last = *s;
                }
                self.m.apply(t - last, &v)
            }
        }
    }
}

/// Applies the piecewise dynamics of one trajectory to `rho0`.
pub fn propagate_trajectory(spec: &RenewalSpec, traj: &Trajectory, rho0: &DensityMatrix) -> Result<CMat> {
    if rho0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: rho0.dim() });
    }
    let basis = OperatorBasis::new(spec.dim());
    let v = CMat::from_column_slice(spec.dim() * spec.dim(), 1, basis.coords(rho0.matrix()).as_slice());
    let out = Composer::new(spec).compose(&traj.jump_times, traj.horizon, &v);
    Ok(basis.operator(&out.column(0).into_owned()))
}

/// Sample means and standard errors of a Monte Carlo ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub grid: Vec<f64>,
    /// Mean state at each grid time.
    pub mean_states: Vec<CMat>,
    /// Standard error of each basis coordinate.
    pub coord_std_err: Vec<Vec<f64>>,
    /// Standard error of each level population.
    pub population_std_err: Vec<Vec<f64>>,
    pub n_trajectories: usize,
    pub seed: u64,
}

impl EnsembleResult {
    pub fn population(&self, i: usize, level: usize) -> f64 {
        self.mean_states[i][(level, level)].re
    }

    /// Population of level 1, the excited state of a qubit.
    pub fn excited_population(&self, i: usize) -> f64 {
        self.population(i, 1)
    }

    pub fn excited_population_std_err(&self, i: usize) -> f64 {
        self.population_std_err[i][1]
    }

    pub fn trace_defect(&self, i: usize) -> f64 {
        let tr: crate::linalg::C64 = (0..self.mean_states[i].nrows()).map(|k| self.mean_states[i][(k, k)]).sum();
        (tr - 1.0).norm()
    }
}

#[derive(Clone)]
struct Accumulator {
    coord_sum: Vec<f64>,
    coord_sq: Vec<f64>,
    pop_sum: Vec<f64>,
    pop_sq: Vec<f64>,
}

impl Accumulator {
    fn new(n_grid: usize, n_coords: usize, dim: usize) -> Self {
        Self {
            coord_sum: vec![0.0; n_grid * n_coords],
            coord_sq: vec![0.0; n_grid * n_coords],
            pop_sum: vec![0.0; n_grid * dim],
            pop_sq: vec![0.0; n_grid * dim],
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for (a, b) in [
            (&mut self.coord_sum, &other.coord_sum),
            (&mut self.coord_sq, &other.coord_sq),
            (&mut self.pop_sum, &other.pop_sum),
            (&mut self.pop_sq, &other.pop_sq),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

const BLOCK: usize = 512;

/// Random stream of trajectory `index` for a given seed.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Ensemble average of `rho(t)` over `n` trajectories on a time grid.
///
/// Each trajectory uses its own stream derived from `(seed, index)` and block
/// partial sums are reduced in index order, so results do not depend on the
/// number of worker threads.
pub fn monte_carlo(
    spec: &RenewalSpec,
    rho0: &DensityMatrix,
    grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    if n == 0 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least one trajectory".into()));
    }
    if rho0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: rho0.dim() });
    }
    if let Some(t) = grid.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NegativeTime(*t));
    }
    let dim = spec.dim();
    let nc = dim * dim;
    let basis = OperatorBasis::new(dim);
    let v0 = CMat::from_column_slice(nc, 1, basis.coords(rho0.matrix()).as_slice());
    // populations are linear in the coordinates: p_k = sum_j c_j (s_j)_kk
    let pop_rows: Vec<Vec<f64>> = (0..dim)
        .map(|k| basis.elements().iter().map(|s| s[(k, k)].re).collect())
        .collect();
    let composer = Composer::new(spec);
    let horizon = grid.iter().fold(0.0_f64, |a, b| a.max(*b));
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|a, b| grid[*a].total_cmp(&grid[*b]));

    let run_block = |b: usize| -> Accumulator {
        let mut acc = Accumulator::new(grid.len(), nc, dim);
        let start = b * BLOCK;
        let end = (start + BLOCK).min(n);
        let mut record = |g: usize, v: &CMat| {
            for c in 0..nc {
                let x = v[(c, 0)].re;
                acc.coord_sum[g * nc + c] += x;
                acc.coord_sq[g * nc + c] += x * x;
            }
            for (k, row) in pop_rows.iter().enumerate() {
                let p: f64 = row.iter().enumerate().map(|(c, w)| w * v[(c, 0)].re).sum();
                acc.pop_sum[g * dim + k] += p;
                acc.pop_sq[g * dim + k] += p * p;
            }
        };
        for idx in start..end {
            let mut rng = trajectory_rng(seed, idx as u64);
            let epochs = sample_epochs(spec.wtds(), horizon, &mut rng);
            if composer.variant.reflected() {
                for &g in &order {
                    let t = grid[g];
                    let cut = epochs.partition_point(|e| *e <= t);
                    let v = composer.compose(&reflect(&epochs[..cut], t), t, &v0);
                    record(g, &v);
                }
            } else {
                // advance through the jumps once, branching off at grid times
                let mut v = v0.clone();
                let mut last = 0.0;
                let mut next = 0;
                for &g in &order {
                    let t = grid[g];
                    while next < epochs.len() && epochs[next] <= t {
                        v = composer.block(epochs[next] - last, &v);
                        last = epochs[next];
                        next += 1;
                    }
                    record(g, &composer.m.apply(t - last, &v));
                }
            }
        }
        acc
    };

    let n_blocks = n.div_ceil(BLOCK);
    let partials: Vec<Accumulator> = (0..n_blocks).into_par_iter().map(run_block).collect();
    let mut total = Accumulator::new(grid.len(), nc, dim);
    for p in &partials {
        total.merge(p);
    }

    let nf = n as f64;
    let std_err = |sum: f64, sq: f64| {
        if n < 2 {
            return 0.0;
        }
        let mean = sum / nf;
        let var = ((sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    };
    let mut mean_states = Vec::with_capacity(grid.len());
    let mut coord_std_err = Vec::with_capacity(grid.len());
    let mut population_std_err = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let coords: Vec<crate::linalg::C64> =
            (0..nc).map(|c| crate::linalg::re(total.coord_sum[g * nc + c] / nf)).collect();
        mean_states.push(basis.operator(&crate::linalg::CVec::from_vec(coords)));
        coord_std_err.push((0..nc).map(|c| std_err(total.coord_sum[g * nc + c], total.coord_sq[g * nc + c])).collect());
        population_std_err
            .push((0..dim).map(|k| std_err(total.pop_sum[g * dim + k], total.pop_sq[g * dim + k])).collect());
    }
    Ok(EnsembleResult {
        grid: grid.to_vec(),
        mean_states,
        coord_std_err,
        population_std_err,
        n_trajectories: n,
        seed,
    })
}
