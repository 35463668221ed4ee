//! Neighbor graphs, flow matrices and the generalized Laplacians.
//!
//! Vertices are `0..m`. An arc `(j, i)` means `j` is a neighbor of `i`: agent `i` listens to `j`.
//! Row `i` of the flow matrix averages uniformly over the neighbors of `i`, including `i` itself.

use std::collections::VecDeque;

use thiserror::Error;

use crate::matrixkit::{lu, LinalgError, Matrix};
use crate::scalar::Real;

const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITERS: usize = 100_000;
/// Default column-sum tolerance of [`doubly_stochastic`].
pub const DOUBLY_STOCHASTIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("vertex {vertex} has no self-loop")]
    MissingSelfLoop { vertex: usize },
    #[error("arc ({from}, {to}) leaves the vertex range 0..{m}")]
    VertexOutOfRange { from: usize, to: usize, m: usize },
    #[error("graph is not strongly connected")]
    NotIrreducible,
    #[error("arc set is not symmetric")]
    NotSymmetricGraph,
    #[error("matrix is not row-stochastic with nonnegative entries")]
    NotStochastic,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NeighborGraph {
    m: usize,
    /// `adj[i][j]`: `j` is a neighbor of `i`.
    adj: Vec<Vec<bool>>,
}

impl NeighborGraph {
    /// Graph with the given arcs plus a self-loop at every vertex.
    pub fn with_self_loops(m: usize, arcs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::from_arcs(m, arcs)?;
        for i in 0..m {
            g.adj[i][i] = true;
        }
        Ok(g)
    }

    /// Graph with exactly the given arcs.
    pub fn from_arcs(m: usize, arcs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![vec![false; m]; m];
        for &(from, to) in arcs {
            if from >= m || to >= m {
                return Err(GraphError::VertexOutOfRange { from, to, m });
            }
            adj[to][from] = true;
        }
        Ok(Self { m, adj })
    }

    /// Sparsity pattern of a nonnegative matrix: `w[i][j] > 0` makes `j` a neighbor of `i`.
    pub fn from_pattern<T: Real>(w: &Matrix<T>) -> Self {
        let m = w.rows();
        let adj = (0..m).map(|i| (0..m).map(|j| w[(i, j)] > T::zero()).collect()).collect();
        Self { m, adj }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.adj[to][from]
    }

    /// Neighbors of `i`, ascending, including `i` when it has a self-loop.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.m).filter(|&j| self.adj[i][j]).collect()
    }

    /// Arcs `(from, to)` without self-loops, sorted.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for to in 0..self.m {
            for from in 0..self.m {
                if from != to && self.adj[to][from] {
                    out.push((from, to));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn without_arc(&self, from: usize, to: usize) -> Self {
        let mut g = self.clone();
        if from != to && from < self.m && to < self.m {
            g.adj[to][from] = false;
        }
        g
    }

    /// Induced subgraph on `keep`, relabelled `0..keep.len()` in order.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let adj = keep.iter().map(|&i| keep.iter().map(|&j| self.adj[i][j]).collect()).collect();
        Self { m: keep.len(), adj }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|i| (0..self.m).all(|j| self.adj[i][j] == self.adj[j][i]))
    }

    fn reaches_all(&self, forward: bool) -> bool {
        if self.m == 0 {
            return true;
        }
        let mut seen = vec![false; self.m];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..self.m {
                // Forward: follow arcs u → v, i.e. u is a neighbor of v.
                let arc = if forward { self.adj[v][u] } else { self.adj[u][v] };
                if arc && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `S = D⁻¹𝒜ᵀ`: row `i` is `1/m_i` on every neighbor of `i`.
pub fn flow_matrix<T: Real>(g: &NeighborGraph) -> Result<Matrix<T>, GraphError> {
    if let Some(vertex) = (0..g.m).find(|&i| !g.adj[i][i]) {
        return Err(GraphError::MissingSelfLoop { vertex });
    }
    let mut s = Matrix::zeros(g.m, g.m);
    for i in 0..g.m {
        let nb = g.neighbors(i);
        let w = T::one() / T::from_usize_lossy(nb.len());
        for j in nb {
            s[(i, j)] = w;
        }
    }
    Ok(s)
}

/// Every vertex reaches every other along arcs.
pub fn strongly_connected(g: &NeighborGraph) -> bool {
    g.reaches_all(true) && g.reaches_all(false)
}

fn check_stochastic<T: Real>(s: &Matrix<T>) -> Result<(), GraphError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare { rows: s.rows(), cols: s.cols() }.into());
    }
    let tol = T::tol(1e-9);
    for i in 0..s.rows() {
        let row = s.row(i);
        if row.iter().any(|&x| x < T::zero() || !x.is_finite()) {
            return Err(GraphError::NotStochastic);
        }
        if (row.iter().copied().sum::<T>() - T::one()).abs() > tol {
            return Err(GraphError::NotStochastic);
        }
    }
    Ok(())
}

/// Positive probability vector `π` with `Sᵀπ = π`.
///
/// Power iteration on the lazy chain `(I + Sᵀ)/2`, which shares the fixed point and is aperiodic;
/// if that stalls, the fixed point is solved for directly.
pub fn perron_vector<T: Real>(s: &Matrix<T>) -> Result<Vec<T>, GraphError> {
    check_stochastic(s)?;
    let m = s.rows();
    if !strongly_connected(&NeighborGraph::from_pattern(s)) {
        return Err(GraphError::NotIrreducible);
    }
    let st = s.transpose();
    let half = T::lit(0.5);
    let mut pi = vec![T::one() / T::from_usize_lossy(m); m];
    let mut converged = false;
    for _ in 0..PERRON_MAX_ITERS {
        let spi = st.mul_vec(&pi);
        // Stop on the fixed-point residual ‖Sᵀπ − π‖∞.
        let residual = spi.iter().zip(&pi).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        if residual <= T::tol(PERRON_TOL) {
            converged = true;
            break;
        }
        let next: Vec<T> = pi.iter().zip(&spi).map(|(&a, &b)| half * (a + b)).collect();
        let total: T = next.iter().copied().sum();
        pi = next.into_iter().map(|x| x / total).collect();
    }
    if !converged {
        pi = perron_by_solve(s)?;
    }
    Ok(pi)
}

fn perron_by_solve<T: Real>(s: &Matrix<T>) -> Result<Vec<T>, GraphError> {
    // (Sᵀ − I)π = 0 with the last equation replaced by Σπ = 1.
    let m = s.rows();
    let mut sys = &s.transpose() - &Matrix::identity(m);
    for j in 0..m {
        sys[(m - 1, j)] = T::one();
    }
    let mut rhs = Matrix::zeros(m, 1);
    rhs[(m - 1, 0)] = T::one();
    let x = lu::solve(&sys, &rhs)?;
    Ok(x.column(0))
}

/// Graph, flow matrix and the quantities derived from its Perron vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSnapshot<T: Real = f64> {
    pub graph: NeighborGraph,
    pub s: Matrix<T>,
    pub pi: Vec<T>,
    pub pi_mat: Matrix<T>,
    pub l: Matrix<T>,
}

impl<T: Real> NetworkSnapshot<T> {
    /// Uniform-weight snapshot of a strongly connected graph with self-loops.
    pub fn new(graph: NeighborGraph) -> Result<Self, GraphError> {
        let s = flow_matrix(&graph)?;
        Self::with_weights(graph, s)
    }

    /// Snapshot with Metropolis weights on an undirected graph.
    pub fn metropolis(graph: NeighborGraph) -> Result<Self, GraphError> {
        let s = metropolis_weights(&graph)?;
        Self::with_weights(graph, s)
    }

    /// Snapshot of an arbitrary row-stochastic weight matrix; the graph is its support.
    pub fn from_weights(s: Matrix<T>) -> Result<Self, GraphError> {
        Self::with_weights(NeighborGraph::from_pattern(&s), s)
    }

    fn with_weights(graph: NeighborGraph, s: Matrix<T>) -> Result<Self, GraphError> {
        let pi = perron_vector(&s)?;
        let pi_mat = Matrix::from_diag(&pi);
        let l = laplacian_from(&s, &pi_mat);
        Ok(Self { graph, s, pi, pi_mat, l })
    }

    pub fn m(&self) -> usize {
        self.s.rows()
    }
}

fn laplacian_from<T: Real>(s: &Matrix<T>, pi_mat: &Matrix<T>) -> Matrix<T> {
    let ps = pi_mat * s;
    &(&pi_mat.scale(T::lit(2.0)) - &ps) - &ps.transpose()
}

/// `L = 2Π − ΠS − SᵀΠ`.
pub fn generalized_laplacian<T: Real>(snapshot: &NetworkSnapshot<T>) -> Matrix<T> {
    laplacian_from(&snapshot.s, &snapshot.pi_mat)
}

/// `(Π_M, L_M)` with `L_M = Π_M − MᵀΠ_M·M`.
pub fn discrete_laplacian<T: Real>(mm: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>), GraphError> {
    let pi = perron_vector(mm)?;
    let pi_mat = Matrix::from_diag(&pi);
    let l = &pi_mat - &(&(&mm.transpose() * &pi_mat) * mm);
    Ok((pi_mat, l))
}

/// Column sums within `tol` of one (rows are assumed stochastic).
pub fn doubly_stochastic<T: Real>(s: &Matrix<T>, tol: T) -> bool {
    s.is_square()
        && (0..s.cols()).all(|j| (s.column(j).into_iter().sum::<T>() - T::one()).abs() <= tol)
        && (0..s.rows()).all(|i| (s.row(i).iter().copied().sum::<T>() - T::one()).abs() <= tol)
}

/// Metropolis weights `w_ij = 1/(1 + max(d_i, d_j))` on the arcs of an undirected graph, with the
/// remainder on the diagonal. `d_i` counts neighbors other than `i` itself.
pub fn metropolis_weights<T: Real>(g: &NeighborGraph) -> Result<Matrix<T>, GraphError> {
    if !g.is_symmetric() {
        return Err(GraphError::NotSymmetricGraph);
    }
    let m = g.m;
    let deg: Vec<usize> = (0..m).map(|i| (0..m).filter(|&j| j != i && g.adj[i][j]).count()).collect();
    let mut w = Matrix::zeros(m, m);
    for i in 0..m {
        let mut off = T::zero();
        for j in 0..m {
            if j != i && g.adj[i][j] {
                let x = T::one() / T::from_usize_lossy(1 + deg[i].max(deg[j]));
                w[(i, j)] = x;
                off += x;
            }
        }
        w[(i, i)] = T::one() - off;
    }
    Ok(w)
}
