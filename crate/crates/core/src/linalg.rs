//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenbases whose condition estimate exceeds this are rejected.
pub const MAX_EIGEN_CONDITION: f64 = 1e8;

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Induced 1-norm (max column sum).
pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU inverse with a crude reciprocal condition check.
pub fn inverse(m: &CMat, what: &str) -> Result<CMat> {
    let n = m.nrows();
    let inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularResolvent(format!("{what} is not invertible")))?;
    let cond = norm1(m) * norm1(&inv);
    if !cond.is_finite() || cond > 1e14 * (n as f64) {
        return Err(Error::SingularResolvent(format!(
            "{what} is numerically singular (condition {cond:.3e})"
        )));
    }
    Ok(inv)
}

/// Eigenvalues of the Hermitian part `(m + m^dag) / 2`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Right eigen-decomposition `m = V diag(values) V^-1`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: CMat,
    pub inverse: CMat,
    pub condition: f64,
}

impl EigenDecomposition {
    /// Reassembles `V diag(h(values)) V^-1`.
    pub fn reconstruct_with(&self, mut h: impl FnMut(C64) -> C64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let w = h(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        scaled * &self.inverse
    }
}

fn is_diagonal(m: &CMat) -> bool {
    let scale = max_abs(m).max(1.0);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j && m[(i, j)].norm() > 1e-15 * scale {
                return false;
            }
        }
    }
    true
}

/// Diagonalizes a general complex square matrix through its complex Schur
/// form. Diagonal input takes an exact fast path with `V = 1`.
pub fn eigen_decompose(m: &CMat) -> Result<EigenDecomposition> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigen_decompose needs a square matrix");
    if is_diagonal(m) {
        return Ok(EigenDecomposition {
            values: (0..n).map(|i| m[(i, i)]).collect(),
            vectors: eye(n),
            inverse: eye(n),
            condition: 1.0,
        });
    }

    let (q, t) = Schur::new(m.clone()).unpack();
    let tnorm = max_abs(&t).max(f64::MIN_POSITIVE);
    let smin = f64::EPSILON * tnorm;

    // Back substitution for the eigenvectors of the triangular factor.
    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < smin {
                denom = C64::new(smin, 0.0);
            }
            y[(i, k)] = -acc / denom;
        }
    }
    let mut vectors = q * y;
    for k in 0..n {
        let nrm = vectors.column(k).norm();
        if nrm > 0.0 && nrm.is_finite() {
            vectors.column_mut(k).unscale_mut(nrm);
        }
    }

    let Some(inverse) = vectors.clone().lu().try_inverse() else {
        return Err(Error::IllConditionedEigenbasis { condition: f64::INFINITY });
    };
    let condition = norm1(&vectors) * norm1(&inverse);
    if !condition.is_finite() || condition > MAX_EIGEN_CONDITION {
        return Err(Error::IllConditionedEigenbasis { condition });
    }
    let dec = EigenDecomposition {
        values: (0..n).map(|i| t[(i, i)]).collect(),
        vectors,
        inverse,
        condition,
    };
    let residual = max_abs_diff(&dec.reconstruct_with(|z| z), m);
    if residual > 1e-8 * max_abs(m).max(f64::MIN_POSITIVE) {
        return Err(Error::IllConditionedEigenbasis { condition });
    }
    Ok(dec)
}

/// Scaling-and-squaring Padé exponential.
pub fn expm_pade(m: &CMat) -> CMat {
    m.exp()
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `exp(G tau)` for a fixed generator `G`, spectral when the eigenbasis is
/// well conditioned and Padé otherwise.
#[derive(Debug, Clone)]
pub struct Flow {
    generator: CMat,
    spectral: Option<EigenDecomposition>,
    diagonal: bool,
}

impl Flow {
    pub fn new(generator: &CMat) -> Self {
        let spectral = eigen_decompose(generator).ok().filter(|d| d.condition <= 1e4);
        let diagonal = spectral.as_ref().is_some_and(|d| d.vectors == eye(generator.nrows()));
        Self { generator: generator.clone(), spectral, diagonal }
    }

    /// Largest real part of the spectrum, or the 1-norm if undiagonalized.
    pub fn growth_bound(&self) -> f64 {
        match &self.spectral {
            Some(d) => d.values.iter().fold(f64::NEG_INFINITY, |a, z| a.max(z.re)),
            None => norm1(&self.generator),
        }
    }

    /// Largest eigenvalue modulus, or the 1-norm if undiagonalized.
    pub fn rate_scale(&self) -> f64 {
        match &self.spectral {
            Some(d) => d.values.iter().fold(0.0, |a, z| a.max(z.norm())),
            None => norm1(&self.generator),
        }
    }

    /// Bound on `|exp(G tau)|_1` valid for all `tau >= 0` when the spectrum
    /// sits in the closed left half plane.
    pub fn norm_bound(&self) -> f64 {
        match &self.spectral {
            Some(d) => d.condition,
            None => f64::INFINITY,
        }
    }

    /// Eigenvalues when the generator is diagonal in the working basis.
    pub fn diagonal(&self) -> Option<&[C64]> {
        match &self.spectral {
            Some(d) if self.diagonal => Some(&d.values),
            _ => None,
        }
    }

    pub fn matrix(&self, tau: f64) -> CMat {
        match &self.spectral {
            Some(d) if self.diagonal => CMat::from_diagonal(&CVec::from_iterator(
                d.values.len(),
                d.values.iter().map(|z| (z * tau).exp()),
            )),
            Some(d) => d.reconstruct_with(|z| (z * tau).exp()),
            None => expm_pade(&self.generator.scale(tau)),
        }
    }

    /// `exp(G tau) x`.
    pub fn apply(&self, tau: f64, x: &CMat) -> CMat {
        match &self.spectral {
            Some(d) if self.diagonal => {
                let mut out = x.clone();
                for (i, z) in d.values.iter().enumerate() {
                    let w = (z * tau).exp();
                    out.row_mut(i).iter_mut().for_each(|v| *v *= w);
                }
                out
            }
            _ => self.matrix(tau) * x,
        }
    }
}
