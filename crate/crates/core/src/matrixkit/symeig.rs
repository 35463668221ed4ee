use super::{LinalgError, Matrix};
use crate::scalar::Real;

/// Eigen-decomposition of a symmetric matrix: ascending eigenvalues and orthonormal
/// eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigenvalue iteration. The input is symmetrized first, so tiny asymmetries from
/// round-off are harmless.
pub fn symmetric_eigen<T: Real>(m: &Matrix<T>) -> Result<SymmetricEigen<T>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let mut a = m.symmetric_part();
    let mut v = Matrix::identity(n);
    let eps = T::epsilon();

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let total = a.norm_fro();
        if off.sqrt() <= eps * total || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                if apq.abs() <= eps * eps * (a[(p, p)].abs() + a[(q, q)].abs()) {
                    a[(p, q)] = T::zero();
                    a[(q, p)] = T::zero();
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence { routine: "symmetric_eigen" });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| a[(i, i)]).collect(),
        vectors: v.select_columns(&order),
    })
}

/// Smallest and largest eigenvalue of a symmetric matrix. Empty input gives `None`.
pub fn symmetric_extremes<T: Real>(m: &Matrix<T>) -> Result<Option<(T, T)>, LinalgError> {
    if m.rows() == 0 {
        return Ok(None);
    }
    let e = symmetric_eigen(m)?;
    Ok(Some((e.values[0], e.values[e.values.len() - 1])))
}

/// Principal square root of a symmetric positive semi-definite matrix.
pub fn symmetric_sqrt<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    let e = symmetric_eigen(m)?;
    let d: Vec<T> = e.values.iter().map(|&x| x.max(T::zero()).sqrt()).collect();
    Ok(&(&e.vectors * &Matrix::from_diag(&d)) * &e.vectors.transpose())
}
