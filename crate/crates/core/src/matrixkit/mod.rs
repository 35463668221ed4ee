//! Dense real linear algebra: kernels, eigenvalues, singular values, matrix exponentials,
//! Kronecker products and Riccati solvers, all generic over [`Real`].

mod expm;
pub mod lu;
mod matrix;
pub mod riccati;
mod schur;
pub mod svd;
mod symeig;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

pub use expm::matrix_exponential;
pub use matrix::Matrix;
pub use riccati::{injection_gain, lyapunov_continuous, riccati_residual, solve_riccati};
pub use svd::{pseudo_inverse, singular_values, svd, Svd};
pub use symeig::{symmetric_eigen, symmetric_extremes, symmetric_sqrt, SymmetricEigen};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("{routine} did not converge")]
    NoConvergence { routine: &'static str },
    #[error("pair is not observable")]
    NotObservable,
    #[error("Riccati solver diverged (residual {residual:e})")]
    SolverDiverged { residual: f64 },
}

/// Continuous time (`ẋ = Ax`) or discrete event time (`x(τ+1) = Ax(τ)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeKind {
    Continuous,
    Discrete,
}

/// Eigenvalues of a real matrix with the spectral abscissa and radius.
///
/// For an empty matrix the abscissa is `-∞` and the radius is `0`.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    pub eigenvalues: Vec<Complex<T>>,
    pub abscissa: T,
    pub radius: T,
}

impl<T: Real> Spectrum<T> {
    pub fn from_eigenvalues(eigenvalues: Vec<Complex<T>>) -> Self {
        let abscissa = eigenvalues.iter().map(|z| z.re).fold(T::neg_infinity(), T::max);
        let radius = eigenvalues.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        Self { eigenvalues, abscissa, radius }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues sorted by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<Complex<T>> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        v
    }
}

pub fn eigenvalues<T: Real>(m: &Matrix<T>) -> Result<Spectrum<T>, LinalgError> {
    Ok(Spectrum::from_eigenvalues(schur::eigenvalues_raw(m)?))
}

pub fn spectral_abscissa<T: Real>(m: &Matrix<T>) -> Result<T, LinalgError> {
    Ok(eigenvalues(m)?.abscissa)
}

pub fn spectral_radius<T: Real>(m: &Matrix<T>) -> Result<T, LinalgError> {
    Ok(eigenvalues(m)?.radius)
}

/// Largest singular value; `0` for empty matrices.
pub fn induced_two_norm<T: Real>(m: &Matrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    singular_values(m).first().copied().unwrap_or(T::zero())
}

/// Default absolute rank threshold `1e-9 · max(rows, cols) · ‖M‖₂`.
pub fn default_tolerance<T: Real>(m: &Matrix<T>) -> T {
    T::tol(1e-9) * T::lit(m.rows().max(m.cols()) as f64) * induced_two_norm(m)
}

/// Numerical rank: number of singular values strictly above `tol` (default
/// [`default_tolerance`]).
pub fn rank<T: Real>(m: &Matrix<T>, tol: Option<T>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sigma = singular_values(m);
    let tol = tol.unwrap_or_else(|| T::tol(1e-9) * T::lit(m.rows().max(m.cols()) as f64) * sigma[0]);
    sigma.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis (as columns) of the kernel of `m`.
///
/// `tol` is an absolute singular-value threshold, defaulting to [`default_tolerance`]; singular
/// directions with `σ ≤ tol` are treated as null. The result has `cols − rank` columns and
/// satisfies `‖M·K‖₂ ≤ tol`.
pub fn kernel_basis<T: Real>(m: &Matrix<T>, tol: Option<T>) -> Matrix<T> {
    let n = m.cols();
    if m.rows() == 0 {
        return Matrix::identity(n);
    }
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let d = svd(m);
    let tol = tol.unwrap_or_else(|| {
        T::tol(1e-9) * T::lit(m.rows().max(n) as f64) * d.sigma.first().copied().unwrap_or(T::zero())
    });
    let null: Vec<usize> = (0..n).filter(|&k| d.sigma[k] <= tol).collect();
    d.v.select_columns(&null)
}

/// Orthonormal basis of the orthogonal complement of the column span of `basis` in `ℝⁿ`.
pub fn orthonormal_complement<T: Real>(basis: &Matrix<T>, n: usize) -> Matrix<T> {
    if basis.cols() == 0 {
        return Matrix::identity(n);
    }
    kernel_basis(&basis.transpose(), None)
}

/// Kronecker product; block `(i, j)` of the result is `a[i, j] · b`.
pub fn kron<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Matrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `[C; C·A; …; C·Aⁿ⁻¹]`.
pub fn observability_matrix<T: Real>(a: &Matrix<T>, c: &Matrix<T>) -> Matrix<T> {
    let n = a.rows();
    let mut blocks = Vec::with_capacity(n);
    let mut cur = c.clone();
    for _ in 0..n {
        let next = &cur * a;
        blocks.push(cur);
        cur = next;
    }
    let refs: Vec<&Matrix<T>> = blocks.iter().collect();
    if refs.is_empty() {
        return Matrix::zeros(0, n);
    }
    Matrix::vstack(&refs)
}
