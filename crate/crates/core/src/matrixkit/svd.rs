use super::Matrix;
use crate::scalar::Real;

/// Thin singular value decomposition `M = U·diag(σ)·Vᵀ` with `σ` sorted in decreasing order.
///
/// `u` is `rows × cols` (columns for zero singular values are zero), `v` is a full
/// `cols × cols` orthogonal matrix, which is what the kernel computation relies on.
#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD. Works for any shape; accurate to a few ulps of `σ_max`.
pub fn svd<T: Real>(m: &Matrix<T>) -> Svd<T> {
    let (rows, cols) = m.shape();
    // Column-major working copy: a[j] is column j.
    let mut a: Vec<Vec<T>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&a[p], &a[q]);
                    let mut al = T::zero();
                    let mut be = T::zero();
                    let mut ga = T::zero();
                    for i in 0..rows {
                        al += cp[i] * cp[i];
                        be += cq[i] * cq[i];
                        ga += cp[i] * cq[i];
                    }
                    (al, be, ga)
                };
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, T)> =
        a.iter().enumerate().map(|(j, col)| (j, col.iter().map(|&x| x * x).sum::<T>().sqrt())).collect();
    order.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(std::cmp::Ordering::Equal));

    let sigma: Vec<T> = order.iter().map(|&(_, s)| s).collect();
    let smax = sigma.first().copied().unwrap_or(T::zero());
    let u = Matrix::from_fn(rows, cols, |i, k| {
        let (j, s) = order[k];
        if s > smax * eps * T::lit(rows.max(cols) as f64) && s > T::zero() {
            a[j][i] / s
        } else {
            T::zero()
        }
    });
    let vm = Matrix::from_fn(cols, cols, |i, k| v[order[k].0][i]);
    Svd { u, sigma, v: vm }
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

pub fn singular_values<T: Real>(m: &Matrix<T>) -> Vec<T> {
    if m.rows() < m.cols() {
        svd(&m.transpose()).sigma
    } else {
        svd(m).sigma
    }
}

/// Moore–Penrose pseudo-inverse with relative cutoff `rcond · σ_max`.
pub fn pseudo_inverse<T: Real>(m: &Matrix<T>, rcond: T) -> Matrix<T> {
    let d = svd(m);
    let smax = d.sigma.first().copied().unwrap_or(T::zero());
    let (rows, cols) = m.shape();
    let mut out = Matrix::zeros(cols, rows);
    for (k, &s) in d.sigma.iter().enumerate() {
        if s <= rcond * smax || s == T::zero() {
            continue;
        }
        for i in 0..cols {
            let vik = d.v[(i, k)] / s;
            if vik == T::zero() {
                continue;
            }
            for j in 0..rows {
                out[(i, j)] += vik * d.u[(j, k)];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_rectangular() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.5], [-1.0, 0.5, 2.0], [0.0, 1.0, 0.0]]);
        let d = svd(&m);
        let s = Matrix::from_diag(&d.sigma);
        let back = &(&d.u * &s) * &d.v.transpose();
        assert!(back.max_abs_diff(&m) < 1e-13);
        assert!((&d.v.transpose() * &d.v).max_abs_diff(&Matrix::identity(3)) < 1e-14);
        assert!(d.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn wide_matrix_keeps_full_v() {
        let m = Matrix::from_rows(&[[1.0, 0.0, 0.0, 2.0]]);
        let d = svd(&m);
        assert_eq!(d.v.shape(), (4, 4));
        assert!((d.sigma[0] - 5f64.sqrt()).abs() < 1e-14);
        assert!(d.sigma[1..].iter().all(|&s| s.abs() < 1e-14));
    }
}
