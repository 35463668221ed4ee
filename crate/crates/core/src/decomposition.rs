//! Per-agent observability decomposition.
//!
//! For agent `i` with output map `C_i`, the unobservable subspace `𝒱_i` is the kernel of the
//! observability matrix of `(C_i, A)`. A full-row-rank `Q_i` with kernel `𝒱_i` maps the state onto
//! the observable quotient, where `(C̄_i, Ā_i)` is observable and an output-injection gain `K̄_i` can
//! be designed. The lifted gain `K_i = Q_i⁻¹·K̄_i` leaves `𝒱_i` invariant under `A + K_i·C_i`.

use thiserror::Error;

use crate::matrixkit::{
    kernel_basis, lu, observability_matrix, orthonormal_complement, rank, LinalgError, Matrix, TimeKind,
};
use crate::scalar::Real;

/// Relative residual accepted for the identities checked after a gain is set.
pub const INTERTWINING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompositionError {
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
    #[error("agent index {index} out of range for {m} agents")]
    AgentOutOfRange { index: usize, m: usize },
    #[error("quotient basis rejected: {0}")]
    InvalidQuotientBasis(String),
    #[error("gain has shape {found:?}, expected {expected:?}")]
    GainShape { expected: (usize, usize), found: (usize, usize) },
    #[error("intertwining identity violated (relative residual {residual:e})")]
    IntertwiningViolated { residual: f64 },
    #[error("agents disagree on the state dimension")]
    MixedDimensions,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The multi-channel plant `ẋ = Ax` (or `x(τ+1) = Ax(τ)`), `y_i = C_i·x`.
///
/// Construction checks dimensions and that every `C_i` is nonzero. Joint observability is a
/// separate check ([`joint_observability`]) so that degenerate plants can still be inspected.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant<T: Real = f64> {
    a: Matrix<T>,
    c: Vec<Matrix<T>>,
    time_kind: TimeKind,
    sample_period: T,
}

impl<T: Real> Plant<T> {
    pub fn new(
        a: Matrix<T>,
        c: Vec<Matrix<T>>,
        time_kind: TimeKind,
        sample_period: T,
    ) -> Result<Self, DecompositionError> {
        let bad = |msg: String| Err(DecompositionError::InvalidPlant(msg));
        if !a.is_square() || a.rows() == 0 {
            return bad(format!("state map must be square and nonempty, got {}x{}", a.rows(), a.cols()));
        }
        if c.is_empty() {
            return bad("at least one output channel is required".into());
        }
        for (i, ci) in c.iter().enumerate() {
            if ci.cols() != a.rows() || ci.rows() == 0 {
                return bad(format!("output map {} is {}x{}, expected s x {}", i + 1, ci.rows(), ci.cols(), a.rows()));
            }
            if ci.max_abs() == T::zero() {
                return bad(format!("output map {} is zero", i + 1));
            }
        }
        if !a.is_finite() || c.iter().any(|ci| !ci.is_finite()) {
            return Err(LinalgError::NonFinite.into());
        }
        if time_kind == TimeKind::Discrete && !(sample_period > T::zero()) {
            return bad("sample period must be positive".into());
        }
        Ok(Self { a, c, time_kind, sample_period })
    }

    pub fn continuous(a: Matrix<T>, c: Vec<Matrix<T>>) -> Result<Self, DecompositionError> {
        Self::new(a, c, TimeKind::Continuous, T::one())
    }

    pub fn discrete(a: Matrix<T>, c: Vec<Matrix<T>>, sample_period: T) -> Result<Self, DecompositionError> {
        Self::new(a, c, TimeKind::Discrete, sample_period)
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn c(&self, i: usize) -> &Matrix<T> {
        &self.c[i]
    }

    pub fn outputs(&self) -> &[Matrix<T>] {
        &self.c
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Number of agents.
    pub fn m(&self) -> usize {
        self.c.len()
    }

    pub fn time_kind(&self) -> TimeKind {
        self.time_kind
    }

    pub fn sample_period(&self) -> T {
        self.sample_period
    }

    /// The plant seen by a subset of agents, in the given order.
    pub fn restrict_to(&self, agents: &[usize]) -> Result<Self, DecompositionError> {
        let c = agents
            .iter()
            .map(|&i| self.c.get(i).cloned().ok_or(DecompositionError::AgentOutOfRange { index: i, m: self.m() }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.a.clone(), c, self.time_kind, self.sample_period)
    }
}

/// Decomposition of one agent. Gains start at zero; see [`AgentDecomposition::with_quotient_gain`].
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDecomposition<T: Real = f64> {
    pub index: usize,
    /// `A` of the plant.
    pub a: Matrix<T>,
    /// `C_i` of the plant.
    pub c: Matrix<T>,
    /// Orthonormal basis of `𝒱_i`, `n × n_i`.
    pub v: Matrix<T>,
    /// `(n − n_i) × n`, kernel `𝒱_i`.
    pub q: Matrix<T>,
    /// Right inverse of `Q` with `Vᵀ·Q⁻¹ = 0`.
    pub q_right_inv: Matrix<T>,
    pub c_bar: Matrix<T>,
    pub a_bar: Matrix<T>,
    /// Orthogonal projection `V·Vᵀ` onto `𝒱_i`.
    pub p: Matrix<T>,
    /// `Vᵀ(A + K·C_i)V`.
    pub a_restricted: Matrix<T>,
    pub k_bar: Matrix<T>,
    pub k: Matrix<T>,
}

pub fn decompose_agent<T: Real>(plant: &Plant<T>, i: usize) -> Result<AgentDecomposition<T>, DecompositionError> {
    build_agent(plant, i, None)
}

/// As [`decompose_agent`], but with a caller-chosen `Q_i` (any full-row-rank matrix whose kernel is
/// the unobservable subspace).
pub fn decompose_agent_with_quotient_basis<T: Real>(
    plant: &Plant<T>,
    i: usize,
    q: &Matrix<T>,
) -> Result<AgentDecomposition<T>, DecompositionError> {
    build_agent(plant, i, Some(q))
}

fn build_agent<T: Real>(
    plant: &Plant<T>,
    i: usize,
    q_given: Option<&Matrix<T>>,
) -> Result<AgentDecomposition<T>, DecompositionError> {
    if i >= plant.m() {
        return Err(DecompositionError::AgentOutOfRange { index: i, m: plant.m() });
    }
    let n = plant.n();
    let a = plant.a().clone();
    let c = plant.c(i).clone();
    let v = kernel_basis(&observability_matrix(&a, &c), None);
    let ni = v.cols();
    let w = orthonormal_complement(&v, n);

    let (q, q_right_inv) = match q_given {
        None => (w.transpose(), w.clone()),
        Some(q) => {
            if q.shape() != (n - ni, n) {
                return Err(DecompositionError::InvalidQuotientBasis(format!(
                    "expected {}x{}, got {}x{}",
                    n - ni,
                    n,
                    q.rows(),
                    q.cols()
                )));
            }
            let scale = T::one().max(q.norm_fro());
            if (q * &v).max_abs() > T::tol(1e-9) * scale {
                return Err(DecompositionError::InvalidQuotientBasis("kernel does not contain the unobservable subspace".into()));
            }
            let qw = q * &w;
            let inv = lu::inverse(&qw)
                .map_err(|_| DecompositionError::InvalidQuotientBasis("matrix is not of full row rank".into()))?;
            (q.clone(), &w * &inv)
        }
    };

    let c_bar = &c * &q_right_inv;
    let a_bar = &(&q * &a) * &q_right_inv;
    let p = &v * &v.transpose();
    let a_restricted = &(&v.transpose() * &a) * &v;
    let dec = AgentDecomposition {
        index: i,
        k_bar: Matrix::zeros(n - ni, c.rows()),
        k: Matrix::zeros(n, c.rows()),
        a,
        c,
        v,
        q,
        q_right_inv,
        c_bar,
        a_bar,
        p,
        a_restricted,
    };
    let res = dec.invariant_residual();
    if !(res <= T::tol(INTERTWINING_TOL)) {
        return Err(DecompositionError::IntertwiningViolated { residual: res.as_f64() });
    }
    Ok(dec)
}

impl<T: Real> AgentDecomposition<T> {
    /// Dimension `n_i` of the unobservable subspace.
    pub fn unobservable_dim(&self) -> usize {
        self.v.cols()
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// `A + K·C_i`.
    pub fn closed_loop(&self) -> Matrix<T> {
        &self.a + &(&self.k * &self.c)
    }

    /// `Ā + K̄·C̄`.
    pub fn quotient_closed_loop(&self) -> Matrix<T> {
        &self.a_bar + &(&self.k_bar * &self.c_bar)
    }

    /// Sets the quotient gain `K̄`, lifts it to `K = Q⁻¹·K̄` and recomputes the restriction.
    pub fn with_quotient_gain(&self, k_bar: &Matrix<T>) -> Result<Self, DecompositionError> {
        let expected = (self.q.rows(), self.c.rows());
        if k_bar.shape() != expected {
            return Err(DecompositionError::GainShape { expected, found: k_bar.shape() });
        }
        let mut out = self.clone();
        out.k_bar = k_bar.clone();
        out.k = &self.q_right_inv * k_bar;
        out.a_restricted = &(&self.v.transpose() * &out.closed_loop()) * &self.v;
        let res = out.invariant_residual();
        if !(res <= T::tol(INTERTWINING_TOL)) {
            return Err(DecompositionError::IntertwiningViolated { residual: res.as_f64() });
        }
        Ok(out)
    }

    /// Sets an `n × s_i` gain `K` given in the original coordinates. `K` must be of the form
    /// `Q⁻¹·K̄`; the quotient gain is recovered as `K̄ = Q·K` and the lift is verified.
    pub fn with_lifted_gain(&self, k: &Matrix<T>) -> Result<Self, DecompositionError> {
        let expected = (self.n(), self.c.rows());
        if k.shape() != expected {
            return Err(DecompositionError::GainShape { expected, found: k.shape() });
        }
        let mut out = self.with_quotient_gain(&(&self.q * k))?;
        let lift_err = (&out.k - k).max_abs() / T::one().max(k.max_abs());
        if !(lift_err <= T::tol(INTERTWINING_TOL)) {
            return Err(DecompositionError::IntertwiningViolated { residual: lift_err.as_f64() });
        }
        out.k = k.clone();
        Ok(out)
    }

    /// Largest relative residual over the structural identities of the decomposition:
    /// `Q·V = 0`, `Q·Q⁻¹ = I`, `Vᵀ·Q⁻¹ = 0`, `VᵀV = I`, `C̄·Q = C_i`, `Q·A = Ā·Q`,
    /// `(A+KC_i)V = V·A_i` and `Q(A+KC_i) = (Ā+K̄C̄)Q`.
    pub fn invariant_residual(&self) -> T {
        let n = self.n();
        let ni = self.unobservable_dim();
        let rel = |r: Matrix<T>, scale: T| r.max_abs() / T::one().max(scale);
        let qs = self.q.max_abs() * self.q_right_inv.max_abs();
        let cl = self.closed_loop();
        let scale = self.a.max_abs() + self.k.max_abs() * self.c.max_abs();
        let mut worst = T::zero();
        let mut put = |x: T| {
            if !(x <= worst) {
                worst = x;
            }
        };
        put(rel(&self.q * &self.v, self.q.max_abs()));
        put(rel(&(&self.q * &self.q_right_inv) - &Matrix::identity(n - ni), qs));
        put(rel(&self.v.transpose() * &self.q_right_inv, self.q_right_inv.max_abs()));
        put(rel(&(&self.v.transpose() * &self.v) - &Matrix::identity(ni), T::one()));
        put(rel(&(&self.c_bar * &self.q) - &self.c, self.c.max_abs()));
        put(rel(&(&self.q * &self.a) - &(&self.a_bar * &self.q), self.a.max_abs() * qs));
        put(rel(&(&cl * &self.v) - &(&self.v * &self.a_restricted), scale));
        put(rel(&(&self.q * &cl) - &(&self.quotient_closed_loop() * &self.q), scale * qs));
        worst
    }
}

/// Block-diagonal stacks of all agent decompositions.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDecomposition<T: Real = f64> {
    pub n: usize,
    /// Per-agent `n_i`.
    pub dims: Vec<usize>,
    pub n_bar: usize,
    pub v: Matrix<T>,
    pub q: Matrix<T>,
    pub q_right_inv: Matrix<T>,
    pub p: Matrix<T>,
    /// `[Q⁻¹ V]`.
    pub t_mat: Matrix<T>,
    /// `[Q; Vᵀ]`.
    pub t_inv: Matrix<T>,
    /// `blockdiag{A + K_i·C_i}`.
    pub a_bar_big: Matrix<T>,
    /// `blockdiag{Ā_i + K̄_i·C̄_i}`.
    pub a_bar_v: Matrix<T>,
    /// `blockdiag{A_i}`.
    pub a_tilde: Matrix<T>,
}

pub fn stack<T: Real>(decs: &[AgentDecomposition<T>]) -> Result<StackedDecomposition<T>, DecompositionError> {
    let n = decs.first().map_or(0, |d| d.n());
    if decs.iter().any(|d| d.n() != n) {
        return Err(DecompositionError::MixedDimensions);
    }
    let collect = |f: &dyn Fn(&AgentDecomposition<T>) -> Matrix<T>| {
        Matrix::block_diag(&decs.iter().map(f).collect::<Vec<_>>())
    };
    let v = collect(&|d| d.v.clone());
    let q = collect(&|d| d.q.clone());
    let q_right_inv = collect(&|d| d.q_right_inv.clone());
    let p = collect(&|d| d.p.clone());
    let t_mat = Matrix::hstack(&[&q_right_inv, &v]);
    let t_inv = Matrix::vstack(&[&q, &v.transpose()]);
    let dims: Vec<usize> = decs.iter().map(|d| d.unobservable_dim()).collect();
    Ok(StackedDecomposition {
        n,
        n_bar: dims.iter().sum(),
        dims,
        a_bar_big: collect(&|d| d.closed_loop()),
        a_bar_v: collect(&|d| d.quotient_closed_loop()),
        a_tilde: collect(&|d| d.a_restricted.clone()),
        v,
        q,
        q_right_inv,
        p,
        t_mat,
        t_inv,
    })
}

impl<T: Real> StackedDecomposition<T> {
    pub fn m(&self) -> usize {
        self.dims.len()
    }

    /// Largest relative residual of `Q·Ā = Ā_V·Q`, `Ā·V = V·Ã`, `P = V·Vᵀ` and `T·T⁻¹ = I`.
    pub fn invariant_residual(&self) -> T {
        let scale = T::one().max(self.a_bar_big.max_abs());
        let qs = T::one().max(self.q.max_abs() * self.q_right_inv.max_abs());
        let r1 = (&(&self.q * &self.a_bar_big) - &(&self.a_bar_v * &self.q)).max_abs() / (scale * qs);
        let r2 = (&(&self.a_bar_big * &self.v) - &(&self.v * &self.a_tilde)).max_abs() / scale;
        let r3 = (&self.p - &(&self.v * &self.v.transpose())).max_abs();
        let r4 = (&(&self.t_mat * &self.t_inv) - &Matrix::identity(self.t_mat.rows())).max_abs() / qs;
        [r1, r2, r3, r4].into_iter().fold(T::zero(), T::max)
    }

    /// `S̄ = S ⊗ I_n` for an `m × m` mixing matrix.
    pub fn lift(&self, s: &Matrix<T>) -> Matrix<T> {
        crate::matrixkit::kron(s, &Matrix::identity(self.n))
    }

    /// `Vᵀ(I − S̄)V`.
    pub fn disagreement(&self, s: &Matrix<T>) -> Matrix<T> {
        let mn = self.v.rows();
        let i_minus = &Matrix::identity(mn) - &self.lift(s);
        &(&self.v.transpose() * &i_minus) * &self.v
    }

    /// Continuous error generator `Ā − g·P(I − S̄)`.
    pub fn error_generator(&self, s: &Matrix<T>, g: T) -> Matrix<T> {
        let mn = self.v.rows();
        let i_minus = &Matrix::identity(mn) - &self.lift(s);
        &self.a_bar_big - &(&self.p * &i_minus).scale(g)
    }

    /// Discrete error map `Ā(I − P(I − S̄))^q`.
    pub fn error_map(&self, s: &Matrix<T>, q: usize) -> Matrix<T> {
        let mn = self.v.rows();
        let i_minus = &Matrix::identity(mn) - &self.lift(s);
        let round = &Matrix::identity(mn) - &(&self.p * &i_minus);
        &self.a_bar_big * &round.pow(q)
    }

    /// `A_V = Ã − g·Vᵀ(I − S̄)V`.
    pub fn a_v_continuous(&self, s: &Matrix<T>, g: T) -> Matrix<T> {
        &self.a_tilde - &self.disagreement(s).scale(g)
    }

    /// `B = Vᵀ·S̄·V`, the consensus round restricted to the unobservable coordinates.
    pub fn consensus_block(&self, s: &Matrix<T>) -> Matrix<T> {
        &(&self.v.transpose() * &self.lift(s)) * &self.v
    }

    /// `A_V = Ã·B^q`.
    pub fn a_v_discrete(&self, s: &Matrix<T>, q: usize) -> Matrix<T> {
        &self.a_tilde * &self.consensus_block(s).pow(q)
    }

    /// `T⁻¹·M·T`, block lower-triangular for the error maps above.
    pub fn to_split_coordinates(&self, m: &Matrix<T>) -> Matrix<T> {
        &(&self.t_inv * m) * &self.t_mat
    }
}

/// Outcome of the joint-observability test, computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointObservability {
    pub observable: bool,
    /// Rank of the stacked observability matrix.
    pub rank: usize,
    pub n: usize,
    /// Dimension of `⋂ 𝒱_i`, from the kernel of `Σ(I − P_i)`.
    pub intersection_dim: usize,
}

impl JointObservability {
    /// Both routes agree.
    pub fn consistent(&self) -> bool {
        (self.n - self.rank == self.intersection_dim) && (self.observable == (self.rank == self.n))
    }
}

pub fn joint_observability<T: Real>(plant: &Plant<T>) -> JointObservability {
    let n = plant.n();
    let blocks: Vec<Matrix<T>> = plant.outputs().iter().map(|c| observability_matrix(plant.a(), c)).collect();
    let refs: Vec<&Matrix<T>> = blocks.iter().collect();
    let r = rank(&Matrix::vstack(&refs), None);
    // x ∈ ⋂𝒱_i  ⇔  Σ(I − P_i)x = 0, the sum being positive semidefinite.
    let mut sum = Matrix::zeros(n, n);
    for ob in &blocks {
        let v = kernel_basis(ob, None);
        sum = &sum + &(&Matrix::identity(n) - &(&v * &v.transpose()));
    }
    let intersection_dim = kernel_basis(&sum, None).cols();
    JointObservability { observable: r == n, rank: r, n, intersection_dim }
}
