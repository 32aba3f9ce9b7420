//! States, channels and generators as matrices in a Hermitian orthonormal
//! operator basis.
//!
//! The basis is `{1/sqrt(d), generalized Gell-Mann / sqrt(2)}`, so every
//! element satisfies `Tr(s_i s_j) = delta_ij`. For `d = 2` it is the
//! normalized Pauli basis `(1, X, Y, Z) / sqrt(2)` and a map `A` is stored as
//! `A_ij = Tr(s_i A[s_j]) = 1/2 Tr(P_i A[P_j])`. Composition of maps is the
//! matrix product of their representations, and the first row of a trace
//! preserving map is `(1, 0, ..., 0)`.
//!
//! Qubit levels follow the usual quantum-information convention: `|0>` is the
//! ground state and `|1>` the excited state, so amplitude damping drives the
//! Bloch `z` coordinate towards `+1`.

use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    self, dagger, eye, hermitian_eigenvalues, max_abs, max_abs_diff, re, CMat, CVec, EigenDecomposition, C64,
};

/// Default tolerance for complete positivity and trace preservation.
pub const DEFAULT_CPT_TOL: f64 = 1e-9;

const STATE_TOL: f64 = 1e-12;
const KRAUS_TOL: f64 = 1e-10;

pub mod pauli {
    use super::*;

    pub fn identity() -> CMat {
        eye(2)
    }
    pub fn x() -> CMat {
        CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
    }
    pub fn y() -> CMat {
        CMat::from_row_slice(2, 2, &[re(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), re(0.0)])
    }
    pub fn z() -> CMat {
        CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)])
    }
    /// `|0><1|`, lowers the excited state `|1>` to the ground state `|0>`.
    pub fn lowering() -> CMat {
        CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.0), re(0.0)])
    }
}

/// Orthonormal Hermitian operator basis of dimension `d^2`.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<CMat>,
}

impl OperatorBasis {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "operator basis needs a positive dimension");
        let d = dim;
        let unit = |i: usize, j: usize| {
            let mut m = CMat::zeros(d, d);
            m[(i, j)] = re(1.0);
            m
        };
        let mut elements = Vec::with_capacity(d * d);
        elements.push(eye(d).unscale((d as f64).sqrt()));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..d {
            for k in (j + 1)..d {
                elements.push((unit(j, k) + unit(k, j)).scale(s));
            }
        }
        for j in 0..d {
            for k in (j + 1)..d {
                let m = unit(j, k) * C64::new(0.0, -1.0) + unit(k, j) * C64::new(0.0, 1.0);
                elements.push(m.scale(s));
            }
        }
        for l in 1..d {
            let mut m = CMat::zeros(d, d);
            for i in 0..l {
                m[(i, i)] = re(1.0);
            }
            m[(l, l)] = re(-(l as f64));
            elements.push(m.unscale(((l * (l + 1)) as f64).sqrt()));
        }
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    /// `x_i = Tr(s_i X)`.
    pub fn coords(&self, op: &CMat) -> CVec {
        CVec::from_iterator(
            self.elements.len(),
            self.elements.iter().map(|s| hs_product(s, op)),
        )
    }

    /// Inverse of [`coords`](Self::coords).
    pub fn operator(&self, coords: &CVec) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (s, c) in self.elements.iter().zip(coords.iter()) {
            out += s * *c;
        }
        out
    }

    /// Largest operator norm and largest trace norm among the elements; their
    /// product bounds `|A_ij|` for any trace-norm contraction `A`.
    pub fn entry_bound(&self) -> f64 {
        let mut op_max: f64 = 0.0;
        let mut tr_max: f64 = 0.0;
        for s in &self.elements {
            let eig = hermitian_eigenvalues(s);
            op_max = op_max.max(eig.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
            tr_max = tr_max.max(eig.iter().map(|v| v.abs()).sum());
        }
        op_max * tr_max
    }
}

/// `Tr(a b)` for Hermitian `a`.
fn hs_product(a: &CMat, b: &CMat) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// A `d x d` Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::with_tolerance(matrix, STATE_TOL)
    }

    pub fn with_tolerance(matrix: CMat, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "expected a square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = max_abs_diff(&matrix, &dagger(&matrix));
        if herm > tol {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = linalg::trace(&matrix);
        if (tr - re(1.0)).norm() > tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from one")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)[0];
        if min_eig < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { matrix })
    }

    /// Qubit state `(1 + r . sigma) / 2`; `|r| <= 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if !norm.is_finite() || norm > 1.0 + 1e-12 {
            return Err(Error::InvalidState(format!("Bloch vector length {norm} exceeds one")));
        }
        let m = (pauli::identity() + pauli::x().scale(r[0]) + pauli::y().scale(r[1]) + pauli::z().scale(r[2]))
            .scale(0.5);
        Self::new(m)
    }

    /// `|level><level|`.
    pub fn pure_level(dim: usize, level: usize) -> Result<Self> {
        if level >= dim {
            return Err(Error::InvalidParameter(format!("level {level} outside dimension {dim}")));
        }
        let mut m = CMat::zeros(dim, dim);
        m[(level, level)] = re(1.0);
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: eye(dim).unscale(dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn population(&self, level: usize) -> f64 {
        self.matrix[(level, level)].re
    }

    pub fn bloch(&self) -> [f64; 3] {
        assert_eq!(self.dim(), 2, "Bloch vector is only defined for qubits");
        let m = &self.matrix;
        [
            2.0 * m[(0, 1)].re,
            -2.0 * m[(0, 1)].im,
            (m[(0, 0)] - m[(1, 1)]).re,
        ]
    }
}

/// Hamiltonian plus weighted jump operators.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    pub hamiltonian: CMat,
    pub jumps: Vec<(CMat, f64)>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: CMat, jumps: Vec<(CMat, f64)>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if hamiltonian.ncols() != d || d == 0 {
            return Err(Error::InvalidParameter("Hamiltonian must be square".into()));
        }
        let herm = max_abs_diff(&hamiltonian, &dagger(&hamiltonian));
        if herm > 1e-12 * max_abs(&hamiltonian).max(1.0) {
            return Err(Error::InvalidParameter(format!("Hamiltonian not Hermitian (defect {herm:.3e})")));
        }
        for (op, rate) in &jumps {
            if op.shape() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, found: op.nrows() });
            }
            if !(*rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidParameter(format!("jump rate {rate} must be nonnegative")));
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Qubit generator with `exp(Lt)[s_i] = exp(-lambda_i t) s_i`, realised by
    /// Pauli dephasing along x, y, z. Fails when the decay rates violate the
    /// triangle conditions required for complete positivity.
    pub fn pauli_decay(lambda: [f64; 3]) -> Result<Self> {
        let [l1, l2, l3] = lambda;
        let rates = [(l2 + l3 - l1) / 4.0, (l1 + l3 - l2) / 4.0, (l1 + l2 - l3) / 4.0];
        if rates.iter().any(|r| *r < -1e-15) {
            return Err(Error::InvalidParameter(format!(
                "decay rates {lambda:?} do not come from a Lindblad generator"
            )));
        }
        let ops = [pauli::x(), pauli::y(), pauli::z()];
        let jumps = ops
            .into_iter()
            .zip(rates)
            .filter(|(_, r)| *r > 0.0)
            .collect();
        Self::new(CMat::zeros(2, 2), jumps)
    }

    /// `L[X] = -i[H, X] + sum_k g_k (J X J^dag - 1/2 {J^dag J, X})`.
    pub fn act(&self, x: &CMat) -> CMat {
        let h = &self.hamiltonian;
        let mut out = (h * x - x * h) * C64::new(0.0, -1.0);
        for (j, rate) in &self.jumps {
            let jd = dagger(j);
            let jdj = &jd * j;
            out += (j * x * &jd - (&jdj * x + x * &jdj).scale(0.5)).scale(*rate);
        }
        out
    }
}

/// Linear map on `d x d` operators in the orthonormal basis above.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    dim: usize,
    matrix: CMat,
}

/// Result of a complete-positivity / trace-preservation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptReport {
    pub is_trace_preserving: bool,
    pub trace_defect: f64,
    pub min_choi_eigenvalue: f64,
    pub is_cpt: bool,
}

/// Eigen-decomposition of a generator with its condition estimate.
pub type SpectralData = EigenDecomposition;

impl SuperOp {
    pub fn from_matrix(dim: usize, matrix: CMat) -> Result<Self> {
        let n = dim * dim;
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: eye(dim * dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, matrix: CMat::zeros(dim * dim, dim * dim) }
    }

    /// Diagonal representation, e.g. `diag(0, -l1, -l2, -l3)` for a qubit.
    pub fn diagonal(dim: usize, diag: &[f64]) -> Result<Self> {
        if diag.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: diag.len() });
        }
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|x| re(*x)));
        Ok(Self { dim, matrix: CMat::from_diagonal(&v) })
    }

    /// Qubit generator `diag(0, -l1, -l2, -l3)` of exponential dephasing and damping.
    pub fn decay_generator(lambda: [f64; 3]) -> Self {
        Self::diagonal(2, &[0.0, -lambda[0], -lambda[1], -lambda[2]]).expect("qubit diagonal")
    }

    /// Builds the representation from the action of the map on operators.
    pub fn from_action(dim: usize, mut action: impl FnMut(&CMat) -> CMat) -> Self {
        let basis = OperatorBasis::new(dim);
        let n = dim * dim;
        let mut matrix = CMat::zeros(n, n);
        for (j, sj) in basis.elements().iter().enumerate() {
            let image = action(sj);
            let col = basis.coords(&image);
            matrix.set_column(j, &col);
        }
        Self { dim, matrix }
    }

    /// `rho -> sum_k K rho K^dag`.
    pub fn from_kraus(kraus: &[CMat]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus list".into()))?;
        let d = first.nrows();
        let mut completeness = CMat::zeros(d, d);
        for k in kraus {
            if k.shape() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows() });
            }
            completeness += dagger(k) * k;
        }
        let defect = max_abs_diff(&completeness, &eye(d));
        if defect > KRAUS_TOL {
            return Err(Error::KrausNotTracePreserving { defect });
        }
        Ok(Self::from_action(d, |x| {
            kraus.iter().fold(CMat::zeros(d, d), |acc, k| acc + k * x * dagger(k))
        }))
    }

    pub fn from_lindblad(gen: &LindbladGenerator) -> Result<Self> {
        let op = Self::from_action(gen.dim(), |x| gen.act(x));
        let defect = op.trace_row_defect();
        if defect > 1e-12 * max_abs(&op.matrix).max(1.0) {
            return Err(Error::NotTracePreservingGenerator { defect });
        }
        Ok(op)
    }

    /// Qubit amplitude damping `|1> -> |0>` with probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("damping parameter {gamma} outside [0, 1]")));
        }
        let k0 = CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re((1.0 - gamma).sqrt())]);
        let k1 = pauli::lowering().scale(gamma.sqrt());
        Self::from_kraus(&[k0, k1])
    }

    /// Unitary channel with the single Kraus operator `sigma_x`.
    pub fn pauli_x() -> Self {
        Self::from_kraus(&[pauli::x()]).expect("sigma_x is unitary")
    }

    /// Phase damping scaling the x and y Bloch coordinates by `1 - p`.
    pub fn dephasing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("dephasing parameter {p} outside [0, 1]")));
        }
        Self::from_kraus(&[eye(2).scale((1.0 - p / 2.0).sqrt()), pauli::z().scale((p / 2.0).sqrt())])
    }

    /// `X -> X^T`, positive but not completely positive.
    pub fn transpose(dim: usize) -> Self {
        Self::from_action(dim, |x| x.transpose())
    }

    /// `X -> Tr(X) 1/d`.
    pub fn completely_depolarizing(dim: usize) -> Self {
        Self::from_action(dim, |x| eye(dim) * (linalg::trace(x) / re(dim as f64)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other });
        }
        Ok(())
    }

    pub fn apply(&self, state: &DensityMatrix) -> Result<CMat> {
        self.apply_operator(state.matrix())
    }

    pub fn apply_operator(&self, op: &CMat) -> Result<CMat> {
        self.check_dim(op.nrows())?;
        let basis = OperatorBasis::new(self.dim);
        Ok(basis.operator(&(&self.matrix * basis.coords(op))))
    }

    /// `(self o other)[X] = self[other[X]]`.
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_dim(other.dim)?;
        Ok(SuperOp { dim: self.dim, matrix: &self.matrix * &other.matrix })
    }

    pub fn add(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_dim(other.dim)?;
        Ok(SuperOp { dim: self.dim, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_dim(other.dim)?;
        Ok(SuperOp { dim: self.dim, matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, factor: f64) -> SuperOp {
        SuperOp { dim: self.dim, matrix: self.matrix.scale(factor) }
    }

    /// `exp(self * t)`: spectral when the eigenbasis is well conditioned,
    /// Padé scaling and squaring otherwise.
    pub fn semigroup(&self, t: f64) -> Result<SuperOp> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(Self::identity(self.dim));
        }
        let matrix = match linalg::eigen_decompose(&self.matrix) {
            Ok(dec) if dec.condition <= 1e4 => dec.reconstruct_with(|z| (z * t).exp()),
            _ => linalg::expm_pade(&self.matrix.scale(t)),
        };
        Ok(SuperOp { dim: self.dim, matrix })
    }

    /// Choi matrix `sum_ab |a><b| (x) A[|a><b|]` (unnormalized).
    pub fn choi(&self) -> CMat {
        let d = self.dim;
        let basis = OperatorBasis::new(d);
        let mut choi = CMat::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let mut e = CMat::zeros(d, d);
                e[(a, b)] = re(1.0);
                let image = basis.operator(&(&self.matrix * basis.coords(&e)));
                choi.view_mut((a * d, b * d), (d, d)).copy_from(&image);
            }
        }
        choi
    }

    /// `max_j |Tr(A[s_j]) - Tr(s_j)|`, read off the first row.
    pub fn trace_defect(&self) -> f64 {
        let sd = (self.dim as f64).sqrt();
        (0..self.matrix.ncols())
            .map(|j| {
                let target = if j == 0 { sd } else { 0.0 };
                (self.matrix[(0, j)] * sd - re(target)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry of the first row; zero for a trace-annihilating generator.
    pub fn trace_row_defect(&self) -> f64 {
        let sd = (self.dim as f64).sqrt();
        self.matrix.row(0).iter().fold(0.0_f64, |a, z| a.max(z.norm() * sd))
    }

    pub fn certify_cpt(&self, tol: f64) -> CptReport {
        let trace_defect = self.trace_defect();
        let min_choi_eigenvalue = hermitian_eigenvalues(&self.choi())[0];
        let is_trace_preserving = trace_defect <= tol;
        CptReport {
            is_trace_preserving,
            trace_defect,
            min_choi_eigenvalue,
            is_cpt: is_trace_preserving && min_choi_eigenvalue >= -tol,
        }
    }

    pub fn spectral_decompose(&self) -> Result<SpectralData> {
        linalg::eigen_decompose(&self.matrix)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        max_abs_diff(&self.matrix, &eye(self.dim * self.dim)) <= tol
    }

    pub fn max_abs_diff(&self, other: &SuperOp) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }
}

impl fmt::Display for SuperOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols())
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    if z.im.abs() < 1e-14 {
                        format!("{:>10.6}", z.re)
                    } else {
                        format!("{:.4}{:+.4}i", z.re, z.im)
                    }
                })
                .collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_of(m: &SuperOp) -> Vec<f64> {
        (0..m.matrix().nrows()).map(|i| m.matrix()[(i, i)].re).collect()
    }

    #[test]
    fn identity_kraus_is_identity() {
        let id = SuperOp::from_kraus(&[eye(2)]).unwrap();
        assert!(id.is_identity(1e-15));
    }

    #[test]
    fn amplitude_damping_affine_block() {
        // oracle: 1/2 Tr(P_i A[P_j]) by explicit Kraus conjugation
        let g: f64 = 0.8;
        let k0 = CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re((1.0 - g).sqrt())]);
        let k1 = CMat::from_row_slice(2, 2, &[re(0.0), re(g.sqrt()), re(0.0), re(0.0)]);
        let paulis = [pauli::identity(), pauli::x(), pauli::y(), pauli::z()];
        let ad = SuperOp::amplitude_damping(g).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let img = &k0 * &paulis[j] * dagger(&k0) + &k1 * &paulis[j] * dagger(&k1);
                let want = linalg::trace(&(&paulis[i] * img)) * 0.5;
                assert!((ad.matrix()[(i, j)] - want).norm() < 1e-14, "entry {i}{j}");
            }
        }
        assert!((ad.matrix()[(3, 3)].re - 0.2).abs() < 1e-14);
        assert!((ad.matrix()[(3, 0)].re - 0.8).abs() < 1e-14);
    }

    #[test]
    fn sigma_x_channel_is_diagonal() {
        let x = SuperOp::pauli_x();
        let want = SuperOp::diagonal(2, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(x.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn kraus_completeness_is_checked() {
        let bad = pauli::x().scale(0.9);
        assert!(matches!(SuperOp::from_kraus(&[bad]), Err(Error::KrausNotTracePreserving { .. })));
        assert!(SuperOp::from_kraus(&[]).is_err());
    }

    #[test]
    fn dephasing_generator_is_diagonal() {
        let lambda = 0.7;
        let gen = LindbladGenerator::new(CMat::zeros(2, 2), vec![(pauli::z(), lambda)]).unwrap();
        let l = SuperOp::from_lindblad(&gen).unwrap();
        let want = SuperOp::diagonal(2, &[0.0, -2.0 * lambda, -2.0 * lambda, 0.0]).unwrap();
        assert!(l.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn empty_generator_is_zero() {
        let gen = LindbladGenerator::new(CMat::zeros(2, 2), vec![]).unwrap();
        assert_eq!(SuperOp::from_lindblad(&gen).unwrap(), SuperOp::zero(2));
    }

    #[test]
    fn pauli_decay_generator_matches_rates() {
        let lambda = [0.4, 0.9, 1.1];
        let l = SuperOp::from_lindblad(&LindbladGenerator::pauli_decay(lambda).unwrap()).unwrap();
        assert!(l.max_abs_diff(&SuperOp::decay_generator(lambda)) < 1e-14);
        assert!(LindbladGenerator::pauli_decay([0.1, 0.1, 5.0]).is_err());
    }

    #[test]
    fn apply_flips_basis_state() {
        let flip = SuperOp::diagonal(2, &[1.0, 1.0, 1.0, -1.0]).unwrap();
        let up = DensityMatrix::from_bloch([0.0, 0.0, 1.0]).unwrap();
        let down = DensityMatrix::from_bloch([0.0, 0.0, -1.0]).unwrap();
        assert!(max_abs_diff(&flip.apply(&up).unwrap(), down.matrix()) < 1e-15);
        let rho = DensityMatrix::from_bloch([0.3, -0.2, 0.5]).unwrap();
        assert!(max_abs_diff(&SuperOp::identity(2).apply(&rho).unwrap(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn amplitude_damping_fixes_ground_and_decays_excited() {
        let ad = SuperOp::amplitude_damping(0.8).unwrap();
        let ground = DensityMatrix::pure_level(2, 0).unwrap();
        assert!(max_abs_diff(&ad.apply(&ground).unwrap(), ground.matrix()) < 1e-15);
        let excited = DensityMatrix::pure_level(2, 1).unwrap();
        let out = ad.apply(&excited).unwrap();
        assert!((out[(1, 1)].re - 0.2).abs() < 1e-14);
    }

    #[test]
    fn apply_checks_dimension() {
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            SuperOp::identity(2).apply(&rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn compose_rules() {
        let x = SuperOp::amplitude_damping(0.3).unwrap();
        assert!(SuperOp::identity(2).compose(&x).unwrap().max_abs_diff(&x) < 1e-15);
        let a = SuperOp::diagonal(2, &[1.0, 0.5, -0.2, 0.3]).unwrap();
        let b = SuperOp::diagonal(2, &[1.0, 0.4, 0.5, -1.0]).unwrap();
        assert_eq!(diag_of(&a.compose(&b).unwrap()), vec![1.0, 0.2, -0.1, -0.3]);
        let (g1, g2) = (0.3, 0.55);
        let lhs = SuperOp::amplitude_damping(g1)
            .unwrap()
            .compose(&SuperOp::amplitude_damping(g2).unwrap())
            .unwrap();
        let rhs = SuperOp::amplitude_damping(g1 + g2 - g1 * g2).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        assert!(SuperOp::identity(2).compose(&SuperOp::identity(3)).is_err());
    }

    #[test]
    fn semigroup_of_diagonal_generator() {
        let lambda = [0.3, 0.7, 1.1];
        let gen = SuperOp::decay_generator(lambda);
        assert!(gen.semigroup(0.0).unwrap().is_identity(0.0));
        let t = 1.7;
        let e = gen.semigroup(t).unwrap();
        let want: Vec<f64> = std::iter::once(1.0).chain(lambda.iter().map(|l| (-l * t).exp())).collect();
        for (got, want) in diag_of(&e).iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(matches!(gen.semigroup(-1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn semigroup_property_for_non_normal_generator() {
        let gen = SuperOp::from_lindblad(
            &LindbladGenerator::new(pauli::z().scale(0.4), vec![(pauli::lowering(), 0.9), (pauli::z(), 0.2)])
                .unwrap(),
        )
        .unwrap();
        let (t1, t2) = (0.37, 1.21);
        let lhs = gen.semigroup(t1 + t2).unwrap();
        let rhs = gen.semigroup(t1).unwrap().compose(&gen.semigroup(t2).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn choi_spectra() {
        let eig = hermitian_eigenvalues(&SuperOp::identity(2).choi());
        assert!((eig[3] - 2.0).abs() < 1e-14 && eig[..3].iter().all(|v| v.abs() < 1e-14));
        let dep = hermitian_eigenvalues(&SuperOp::completely_depolarizing(2).choi());
        assert!(dep.iter().all(|v| (v - 0.5).abs() < 1e-14));
        assert!(hermitian_eigenvalues(&SuperOp::transpose(2).choi())[0] < -0.5);
    }

    #[test]
    fn certify_cpt_examples() {
        let id = SuperOp::identity(2).certify_cpt(DEFAULT_CPT_TOL);
        assert!(id.is_cpt && id.trace_defect == 0.0 && id.min_choi_eigenvalue.abs() < 1e-14);
        assert!(!SuperOp::transpose(2).certify_cpt(DEFAULT_CPT_TOL).is_cpt);
        assert!(SuperOp::amplitude_damping(0.43).unwrap().certify_cpt(DEFAULT_CPT_TOL).is_cpt);
        let not_tp = SuperOp::diagonal(2, &[0.9, 1.0, 1.0, 1.0]).unwrap().certify_cpt(DEFAULT_CPT_TOL);
        assert!(!not_tp.is_trace_preserving && !not_tp.is_cpt);
    }

    #[test]
    fn spectral_examples() {
        let lambda = [0.5, 0.8, 1.1];
        let dec = SuperOp::decay_generator(lambda).spectral_decompose().unwrap();
        assert_eq!(dec.vectors, eye(4));
        let mut vals: Vec<f64> = dec.values.iter().map(|z| z.re).collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(vals, vec![0.0, -0.5, -0.8, -1.1]);

        let mut jordan = CMat::zeros(4, 4);
        jordan[(1, 2)] = re(1.0);
        jordan[(3, 3)] = re(-1.0);
        let err = SuperOp::from_matrix(2, jordan).unwrap().spectral_decompose();
        assert!(matches!(err, Err(Error::IllConditionedEigenbasis { .. })));
    }

    #[test]
    fn qutrit_basis_is_orthonormal() {
        let basis = OperatorBasis::new(3);
        for (i, a) in basis.elements().iter().enumerate() {
            assert!(max_abs_diff(a, &dagger(a)) < 1e-15);
            for (j, b) in basis.elements().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((hs_product(a, b) - re(want)).norm() < 1e-14);
            }
        }
        let ad = SuperOp::completely_depolarizing(3);
        assert!(ad.certify_cpt(1e-12).is_cpt);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_bloch([0.0, 0.0, 1.1]).is_err());
        let mut m = eye(2).scale(0.5);
        m[(0, 1)] = re(0.2);
        assert!(DensityMatrix::new(m).is_err());
        let mut neg = CMat::zeros(2, 2);
        neg[(0, 0)] = re(1.5);
        neg[(1, 1)] = re(-0.5);
        assert!(DensityMatrix::new(neg).is_err());
        let rho = DensityMatrix::from_bloch([0.1, 0.2, -0.3]).unwrap();
        let b = rho.bloch();
        assert!((b[0] - 0.1).abs() < 1e-15 && (b[1] - 0.2).abs() < 1e-15 && (b[2] + 0.3).abs() < 1e-15);
    }
}
