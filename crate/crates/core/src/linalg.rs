//! Dense complex matrix algebra.
//!
//! Everything downstream works in terms of three validated wrappers around
//! [`ComplexMatrix`]: [`HermitianOperator`] for Hamiltonians and observables,
//! [`DensityMatrix`] for states and [`SpectralDecomposition`] for the
//! ascending eigen-decomposition of a Hermitian operator. All tolerances are
//! absolute.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Entrywise tolerance for Hermiticity at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on the unit trace of a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted in a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance for algebraic identities (reconstruction, unitarity).
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for results of composed pipelines.
pub const PIPELINE_TOL: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
#[cfg(test)]
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Access to the underlying dense matrix of the validated wrappers.
pub trait AsMatrix {
    fn as_matrix(&self) -> &ComplexMatrix;

    fn dim(&self) -> usize {
        self.as_matrix().nrows()
    }
}

impl AsMatrix for ComplexMatrix {
    fn as_matrix(&self) -> &ComplexMatrix {
        self
    }
}

/// Largest entrywise modulus of `m - m^dagger`.
pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn ensure_square(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn ensure_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn symmetrize(m: ComplexMatrix) -> ComplexMatrix {
    let adj = m.adjoint();
    (m + adj).unscale(2.0)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// A dense Hermitian operator. Construction checks Hermiticity and then
/// stores the exactly Hermitian part, so later products do not drift.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        ensure_square(&matrix)?;
        let deviation = hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput {
                deviation,
                tolerance: HERMITIAN_TOL,
            });
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    /// Wraps a matrix that is Hermitian by construction, up to rounding.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self {
            matrix: symmetrize(matrix),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut matrix = ComplexMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            matrix[(i, i)] = C64::new(d, 0.0);
        }
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        ensure_same_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        ensure_same_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// `self - (Tr[self]/dim) * 1`.
    pub fn traceless_part(&self) -> Self {
        let shift = self.trace() / self.dim() as f64;
        let mut matrix = self.matrix.clone();
        for i in 0..matrix.nrows() {
            matrix[(i, i)] -= C64::new(shift, 0.0);
        }
        Self { matrix }
    }

    /// Conjugation `W self W^dagger` by a unitary.
    pub fn conjugated(&self, unitary: &ComplexMatrix) -> Result<Self> {
        ensure_same_dim(self.dim(), unitary.nrows())?;
        Ok(Self::from_matrix_unchecked(
            unitary * &self.matrix * unitary.adjoint(),
        ))
    }
}

impl AsMatrix for HermitianOperator {
    fn as_matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// A positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (via a full
    /// eigendecomposition).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let op = HermitianOperator::new(matrix)?;
        let tr = trace(op.matrix());
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let sd = eigh(&op)?;
        let min = sd.eigenvalues()[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self {
            matrix: op.into_matrix(),
        })
    }

    /// Wraps the image of a valid state under a trace-preserving, completely
    /// positive map (unitary conjugation, partial trace, dephasing).
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self {
            matrix: symmetrize(matrix),
        }
    }

    /// The rank-one projector onto `psi / |psi|`.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if psi.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidDensityMatrix(
                "pure state vector has zero norm".into(),
            ));
        }
        let v = psi.unscale(norm);
        Ok(Self::from_matrix_unchecked(&v * v.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    /// A state diagonal in the computational basis.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|&p| p < -PSD_TOL || !p.is_finite()) {
            return Err(Error::InvalidDensityMatrix("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self {
            matrix: HermitianOperator::from_real_diagonal(probs).into_matrix(),
        })
    }

    /// `sum_j p_j |psi_j><psi_j|` for orthogonal or non-orthogonal components.
    pub fn mixture(components: &[(f64, ComplexVector)]) -> Result<Self> {
        let dim = components
            .first()
            .map(|(_, v)| v.len())
            .ok_or_else(|| Error::InvalidDensityMatrix("empty mixture".into()))?;
        let mut matrix = ComplexMatrix::zeros(dim, dim);
        for (p, v) in components {
            ensure_same_dim(dim, v.len())?;
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Error::InvalidDensityMatrix("zero component".into()));
            }
            let u = v.unscale(norm);
            matrix += (&u * u.adjoint()).scale(*p);
        }
        Self::new(matrix)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `Tr[rho^2]`, computed as the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Entry `<k|rho|l>` in the columns of `basis`.
    pub fn in_basis(&self, basis: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_same_dim(self.dim(), basis.nrows())?;
        Ok(basis.adjoint() * &self.matrix * basis)
    }

    /// State vector of a rank-one state, up to a global phase.
    pub fn pure_vector(&self) -> Result<ComplexVector> {
        let purity = self.purity();
        if (purity - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::NotPure { purity });
        }
        let n = self.dim();
        let (col, weight) = (0..n)
            .map(|i| (i, self.matrix[(i, i)].re))
            .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        let scale = weight.sqrt();
        Ok(self.matrix.column(col).unscale(scale))
    }

    pub fn to_operator(&self) -> HermitianOperator {
        HermitianOperator {
            matrix: self.matrix.clone(),
        }
    }
}

impl AsMatrix for DensityMatrix {
    fn as_matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Ascending eigenvalues and the unitary whose columns are the matching
/// eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// Builds a decomposition from given parts, checking orthonormality.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: ComplexMatrix) -> Result<Self> {
        ensure_square(&eigenvectors)?;
        ensure_same_dim(eigenvectors.nrows(), eigenvalues.len())?;
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "eigenvalues must be ascending".into(),
            ));
        }
        let n = eigenvalues.len();
        let gram = eigenvectors.adjoint() * &eigenvectors;
        let dev = max_abs_diff(&gram, &ComplexMatrix::identity(n, n));
        if dev > IDENTITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "eigenvectors are not orthonormal (deviation {dev:.3e})"
            )));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> ComplexVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// `V diag(f(lambda)) V^dagger`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = f(lambda);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= phase;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_eigenvalues(|l| C64::new(l, 0.0))
    }

    /// `max_k lambda_k - min_k lambda_k`.
    pub fn spectral_range(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Smallest spacing between consecutive eigenvalues.
    pub fn min_level_spacing(&self) -> Option<f64> {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Ascending eigendecomposition of a Hermitian operator.
pub fn eigh(op: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = op.dim();
    let eig =
        SymmetricEigen::try_new(op.matrix().clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Checks Hermiticity of a raw matrix before decomposing it.
pub fn eigh_matrix(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    eigh(&HermitianOperator::new(m.clone())?)
}

/// `Tr|A| = sum_i |lambda_i|`.
pub fn trace_norm(op: &HermitianOperator) -> Result<f64> {
    Ok(eigh(op)?.eigenvalues().iter().map(|l| l.abs()).sum())
}

/// Trace norm of an arbitrary square matrix as the sum of its singular values.
pub fn trace_norm_svd(m: &ComplexMatrix) -> Result<f64> {
    ensure_square(m)?;
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    Ok(svd.singular_values.iter().sum())
}

/// `D(a, b) = 1/2 |a - b|_1`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    ensure_same_dim(a.dim(), b.dim())?;
    let diff = HermitianOperator::from_matrix_unchecked(a.matrix() - b.matrix());
    Ok(0.5 * trace_norm(&diff)?)
}

/// Spectral norm `max_i |lambda_i|`.
pub fn op_norm(op: &HermitianOperator) -> Result<f64> {
    Ok(spectral_op_norm(&eigh(op)?))
}

pub fn spectral_op_norm(sd: &SpectralDecomposition) -> f64 {
    sd.eigenvalues().iter().fold(0.0, |m, l| m.max(l.abs()))
}

/// `exp(-i H t) = V diag(exp(-i lambda_k t)) V^dagger`.
pub fn matrix_exp_unitary(sd: &SpectralDecomposition, t: f64) -> ComplexMatrix {
    sd.map_eigenvalues(|l| C64::from_polar(1.0, -l * t))
}

/// `a b - b a`.
pub fn commutator<A: AsMatrix + ?Sized, B: AsMatrix + ?Sized>(
    a: &A,
    b: &B,
) -> Result<ComplexMatrix> {
    let (a, b) = (a.as_matrix(), b.as_matrix());
    ensure_same_dim(a.nrows(), b.nrows())?;
    Ok(a * b - b * a)
}

/// `i [a, b]`, Hermitian whenever both arguments are.
pub fn hermitian_commutator<A: AsMatrix + ?Sized, B: AsMatrix + ?Sized>(
    a: &A,
    b: &B,
) -> Result<HermitianOperator> {
    HermitianOperator::new(commutator(a, b)? * I)
}
