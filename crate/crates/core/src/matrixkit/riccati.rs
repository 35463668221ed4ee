//! Stabilizing solutions of the observer (filter-form) algebraic Riccati equations with identity
//! weights:
//!
//! * continuous: `A·P + P·Aᵀ − P·Cᵀ·C·P + I = 0`, injection gain `K = −P·Cᵀ`;
//! * discrete:   `P = A·P·Aᵀ − A·P·Cᵀ·(I + C·P·Cᵀ)⁻¹·C·P·Aᵀ + I`,
//!   injection gain `K = −A·P·Cᵀ·(I + C·P·Cᵀ)⁻¹`.
//!
//! Both are solved through the stable invariant subspace of the associated Hamiltonian matrix
//! (continuous, via the matrix sign function) or symplectic pencil (discrete, via structured
//! doubling), each followed by a residual check.

use super::{kron, lu, observability_matrix, rank, svd, LinalgError, Matrix, TimeKind};
use crate::scalar::Real;

const MAX_ITERATIONS: usize = 100;

/// Residual tolerance accepted from the solver, relative to the size of the terms of the equation.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Stabilizing solution `P` of the filter-form Riccati equation for the pair `(c, a)`.
pub fn solve_riccati<T: Real>(a: &Matrix<T>, c: &Matrix<T>, kind: TimeKind) -> Result<Matrix<T>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if c.cols() != n {
        return Err(LinalgError::DimensionMismatch { what: "output map columns", expected: n, found: c.cols() });
    }
    let obs = observability_matrix(a, c);
    if n > 0 && rank(&obs, None) < n {
        return Err(LinalgError::NotObservable);
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    // Control-form data: F = Aᵀ, G = Cᵀ·C, Q = I.
    let f = a.transpose();
    let g = &c.transpose() * c;
    let q = Matrix::identity(n);
    let p = match kind {
        TimeKind::Continuous => care_sign(&f, &g, &q)?,
        TimeKind::Discrete => dare_doubling(&f, &g, &q)?,
    };
    let res = riccati_residual(a, c, &p, kind);
    if !(res <= T::tol(RESIDUAL_TOL) * residual_scale(a, c, &p)) {
        return Err(LinalgError::SolverDiverged { residual: res.as_f64() });
    }
    let k = injection_gain(a, c, &p, kind)?;
    let closed = a + &(&k * c);
    let spec = super::eigenvalues(&closed)?;
    let stable = match kind {
        TimeKind::Continuous => spec.abscissa < T::zero(),
        TimeKind::Discrete => spec.radius < T::one(),
    };
    if !stable {
        return Err(LinalgError::SolverDiverged { residual: res.as_f64() });
    }
    Ok(p)
}

/// Output-injection gain induced by a Riccati solution `p` (see module docs).
pub fn injection_gain<T: Real>(
    a: &Matrix<T>,
    c: &Matrix<T>,
    p: &Matrix<T>,
    kind: TimeKind,
) -> Result<Matrix<T>, LinalgError> {
    let pct = p * &c.transpose();
    match kind {
        TimeKind::Continuous => Ok(-pct),
        TimeKind::Discrete => {
            let s = (c * &pct).add_diagonal(T::one());
            let apct = a * &pct;
            // K = −A·P·Cᵀ·S⁻¹  ⇔  Kᵀ = −S⁻ᵀ·(A·P·Cᵀ)ᵀ, S symmetric.
            let kt = lu::solve(&s, &apct.transpose())?;
            Ok(-kt.transpose())
        }
    }
}

/// `1 + 2‖A‖‖P‖ + ‖P·Cᵀ‖²`, bounding the Frobenius norms of the terms of either equation up to
/// the factor `‖A‖` in the discrete case.
fn residual_scale<T: Real>(a: &Matrix<T>, c: &Matrix<T>, p: &Matrix<T>) -> T {
    let an = a.norm_fro();
    let pct = (p * &c.transpose()).norm_fro();
    T::one() + T::lit(2.0) * an.max(an * an) * p.norm_fro() + pct * pct * T::one().max(an * an)
}

/// Frobenius norm of the filter-form Riccati residual.
pub fn riccati_residual<T: Real>(a: &Matrix<T>, c: &Matrix<T>, p: &Matrix<T>, kind: TimeKind) -> T {
    let n = a.rows();
    let id = Matrix::identity(n);
    match kind {
        TimeKind::Continuous => {
            let pct = p * &c.transpose();
            let r = &(&(a * p) + &(p * &a.transpose())) - &(&pct * &pct.transpose()) + id;
            r.norm_fro()
        }
        TimeKind::Discrete => {
            let pct = p * &c.transpose();
            let s = (c * &pct).add_diagonal(T::one());
            let apct = a * &pct;
            let Ok(sinv) = lu::inverse(&s) else {
                return T::infinity();
            };
            let r = &(&(&(a * p) * &a.transpose()) - &(&(&apct * &sinv) * &apct.transpose())) + &id;
            (&r - p).norm_fro()
        }
    }
}

fn control_residual_care<T: Real>(f: &Matrix<T>, g: &Matrix<T>, q: &Matrix<T>, x: &Matrix<T>) -> Matrix<T> {
    &(&(&f.transpose() * x) + &(x * f)) - &(&(x * g) * x) + q
}

fn care_sign<T: Real>(f: &Matrix<T>, g: &Matrix<T>, q: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    let n = f.rows();
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.set_block(0, 0, f);
    h.set_block(0, n, &-g);
    h.set_block(n, 0, &-q);
    h.set_block(n, n, &-f.transpose());

    let big_n = T::lit((2 * n) as f64);
    let half = T::lit(0.5);
    let mut z = h;
    for _ in 0..MAX_ITERATIONS {
        let lu = lu::Lu::new(&z).map_err(|_| LinalgError::SolverDiverged { residual: f64::INFINITY })?;
        let zinv = lu.inverse();
        let det = lu.determinant().abs();
        let change_scale = z.norm_one();
        // Determinant scaling speeds up the early iterations; drop it near convergence.
        let c = if det > T::zero() && det.is_finite() { det.powf(-T::one() / big_n) } else { T::one() };
        let mut znew = (&z.scale(c) + &zinv.scale(T::one() / c)).scale(half);
        let delta = (&znew - &z).norm_one();
        if delta <= T::lit(1e-2) * change_scale {
            znew = (&z + &zinv).scale(half);
            let delta = (&znew - &z).norm_one();
            z = znew;
            if delta <= T::lit(100.0) * T::epsilon() * z.norm_one() {
                break;
            }
            continue;
        }
        z = znew;
    }
    // A stalled iteration is still accurate to a few ulps; the Newton refinement and the residual
    // check in the caller decide.
    let w11 = z.block(0, 0, n, n);
    let w12 = z.block(0, n, n, n);
    let w21 = z.block(n, 0, n, n);
    let w22 = z.block(n, n, n, n);
    let lhs = Matrix::vstack(&[&w12, &w22.add_diagonal(T::one())]);
    let rhs = Matrix::vstack(&[&w11.add_diagonal(T::one()), &w21]);
    let pinv = svd::pseudo_inverse(&lhs, T::epsilon() * T::lit(1e3));
    let mut x = -(&pinv * &rhs);
    x = x.symmetric_part();

    // Newton–Kleinman refinement: Acᵀ·X⁺ + X⁺·Ac = −(Q + X·G·X), Ac = F − G·X.
    let mut best = control_residual_care(f, g, q, &x).norm_fro();
    for _ in 0..4 {
        if best <= T::epsilon() * T::lit(10.0) * T::one().max(x.norm_fro()) {
            break;
        }
        let ac = f - &(g * &x);
        let rhs = -(q + &(&(&x * g) * &x));
        let Ok(next) = lyapunov_continuous(&ac, &rhs) else { break };
        let next = next.symmetric_part();
        let r = control_residual_care(f, g, q, &next).norm_fro();
        if r < best {
            best = r;
            x = next;
        } else {
            break;
        }
    }
    if !x.is_finite() {
        return Err(LinalgError::SolverDiverged { residual: f64::INFINITY });
    }
    Ok(x)
}

fn dare_doubling<T: Real>(f: &Matrix<T>, g: &Matrix<T>, q: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    let mut ak = f.clone();
    let mut gk = g.clone();
    let mut hk = q.clone();
    for _ in 0..MAX_ITERATIONS {
        let w = (&gk * &hk).add_diagonal(T::one());
        let wlu = lu::Lu::new(&w).map_err(|_| LinalgError::SolverDiverged { residual: f64::INFINITY })?;
        let winv_a = wlu.solve(&ak);
        let winv_g = wlu.solve(&gk);
        let a_next = &ak * &winv_a;
        let g_next = &gk + &(&(&ak * &winv_g) * &ak.transpose());
        let h_next = &hk + &(&(&ak.transpose() * &hk) * &winv_a);
        let delta = (&h_next - &hk).norm_fro();
        ak = a_next;
        gk = g_next.symmetric_part();
        hk = h_next.symmetric_part();
        if !hk.is_finite() {
            return Err(LinalgError::SolverDiverged { residual: f64::INFINITY });
        }
        if delta <= T::lit(10.0) * T::epsilon() * T::one().max(hk.norm_fro()) {
            return Ok(hk);
        }
    }
    Ok(hk)
}

/// Solves the continuous Lyapunov equation `Aᵀ·X + X·A = Q` by Kronecker vectorization. Intended
/// for the small matrices met here.
pub fn lyapunov_continuous<T: Real>(a: &Matrix<T>, q: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    let n = a.rows();
    let id = Matrix::identity(n);
    let at = a.transpose();
    // Column-major vec: vec(Aᵀ·X) = (I ⊗ Aᵀ)·vec X, vec(X·A) = (Aᵀ ⊗ I)·vec X.
    let op = &kron(&id, &at) + &kron(&at, &id);
    let rhs = Matrix::column_vector(&(0..n * n).map(|k| q[(k % n, k / n)]).collect::<Vec<_>>());
    let x = lu::solve(&op, &rhs)?;
    Ok(Matrix::from_fn(n, n, |i, j| x[(j * n + i, 0)]))
}
