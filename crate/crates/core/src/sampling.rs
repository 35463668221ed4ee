//! Seeded generators of random plants, graphs and stochastic matrices for property checks.
//!
//! Plants are built block-diagonally from 1×1 and 2×2 modes with well separated spectra, each
//! agent measuring a random subset of modes, and then hidden behind a random orthogonal change of
//! basis. The unobservable subspace of every agent is therefore known in advance.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::decomposition::{joint_observability, Plant};
use crate::matrixkit::{observability_matrix, rank, svd, Matrix, TimeKind};
use crate::netgraph::NeighborGraph;
use crate::scalar::Real;

/// Smallest distance between eigenvalues of different modes.
const MODE_SEPARATION: f64 = 0.15;
const MAX_ATTEMPTS: usize = 1000;

/// A random plant with the unobservable dimension each agent should have.
#[derive(Debug, Clone)]
pub struct SampledPlant<T: Real = f64> {
    pub plant: Plant<T>,
    pub expected_unobservable: Vec<usize>,
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-like random orthogonal matrix from the left singular vectors of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    loop {
        let s = svd(&gaussian_matrix(rng, n, n));
        if s.sigma.last().map_or(true, |&x| x > 1e-6) {
            return s.u;
        }
    }
}

fn mode_eigenvalues(kind: TimeKind, size: usize, re: f64, im: f64) -> Vec<(f64, f64)> {
    match (kind, size) {
        (_, 1) => vec![(re, 0.0)],
        _ => vec![(re, im), (re, -im)],
    }
}

fn separated(existing: &[(f64, f64)], new: &[(f64, f64)]) -> bool {
    existing.iter().all(|a| new.iter().all(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() >= MODE_SEPARATION))
}

/// Random mode: continuous eigenvalues in `[−1, 1] ± i[0.5, 2]`, discrete ones with modulus in
/// `[0.5, 1.3]`.
fn random_mode<R: Rng + ?Sized>(rng: &mut R, kind: TimeKind, size: usize) -> (Matrix, Vec<(f64, f64)>) {
    let (re, im) = match kind {
        TimeKind::Continuous => (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)),
        TimeKind::Discrete => {
            let r: f64 = rng.gen_range(0.5..1.3);
            let phi: f64 = if size == 1 {
                if rng.gen_bool(0.5) { 0.0 } else { std::f64::consts::PI }
            } else {
                rng.gen_range(0.3..2.8)
            };
            (r * phi.cos(), r * phi.sin())
        }
    };
    let blk = if size == 1 {
        Matrix::from_rows(&[[re]])
    } else {
        // Similar to the rotation form, with a random shear so the block is non-normal.
        let shear: f64 = rng.gen_range(0.5..2.0);
        Matrix::from_rows(&[[re, im * shear], [-im / shear, re]])
    };
    (blk, mode_eigenvalues(kind, size, re, im))
}

/// Random jointly observable plant with `n` states and `m` agents, each agent with a single
/// output. At least one agent misses at least one mode whenever `m ≥ 2` and `n ≥ 2`.
pub fn random_plant<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, kind: TimeKind) -> SampledPlant<T> {
    assert!(n >= 1 && m >= 1, "need at least one state and one agent");
    for _ in 0..MAX_ATTEMPTS {
        if let Some(p) = try_plant(rng, n, m, kind) {
            return p;
        }
    }
    panic!("no jointly observable plant found for n = {n}, m = {m}");
}

fn try_plant<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, kind: TimeKind) -> Option<SampledPlant<T>> {
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = if left >= 2 && rng.gen_bool(0.5) { 2 } else { 1 };
        sizes.push(s);
        left -= s;
    }
    let mut blocks = Vec::new();
    let mut eigs: Vec<(f64, f64)> = Vec::new();
    for &s in &sizes {
        let (blk, ev) = (0..50).map(|_| random_mode(rng, kind, s)).find(|(_, ev)| separated(&eigs, ev))?;
        eigs.extend(ev);
        blocks.push(blk);
    }
    let modes = sizes.len();
    let mut seen: Vec<Vec<bool>> = (0..m).map(|_| (0..modes).map(|_| rng.gen_bool(0.5)).collect()).collect();
    for row in &mut seen {
        if !row.iter().any(|&b| b) {
            row[rng.gen_range(0..modes)] = true;
        }
    }
    for k in 0..modes {
        if !seen.iter().any(|r| r[k]) {
            seen[rng.gen_range(0..m)][k] = true;
        }
    }
    if m >= 2 && modes == 1 && n >= 2 {
        return None;
    }
    if m >= 2 && modes >= 2 && seen.iter().all(|r| r.iter().all(|&b| b)) {
        let i = rng.gen_range(0..m);
        let k = rng.gen_range(0..modes);
        seen[i][k] = false;
        if !seen[i].iter().any(|&b| b) || !seen.iter().any(|r| r[k]) {
            return None;
        }
    }
    let offsets: Vec<usize> = sizes.iter().scan(0, |acc, &s| {
        let o = *acc;
        *acc += s;
        Some(o)
    }).collect();
    let a0 = Matrix::block_diag(&blocks);
    let c0: Vec<Matrix> = seen
        .iter()
        .map(|row| {
            let mut c = Matrix::zeros(1, n);
            for (k, _) in row.iter().enumerate().filter(|(_, &b)| b) {
                for d in 0..sizes[k] {
                    c[(0, offsets[k] + d)] = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                }
            }
            c
        })
        .collect();
    let expected: Vec<usize> =
        seen.iter().map(|row| row.iter().zip(&sizes).filter(|(&b, _)| !b).map(|(_, &s)| s).sum()).collect();

    let u = random_orthogonal(rng, n);
    let a = &(&u * &a0) * &u.transpose();
    let c: Vec<Matrix> = c0.iter().map(|ci| ci * &u.transpose()).collect();
    for (ci, &e) in c.iter().zip(&expected) {
        if n - rank(&observability_matrix(&a, ci), None) != e {
            return None;
        }
    }
    let plant = Plant::new(a.cast::<T>(), c.iter().map(|ci| ci.cast::<T>()).collect(), kind, T::one()).ok()?;
    if !joint_observability(&plant).observable {
        return None;
    }
    Some(SampledPlant { plant, expected_unobservable: expected })
}

/// Random strongly connected digraph on `m` vertices: a Hamiltonian cycle through a random
/// permutation plus each remaining arc with probability `p`. Self-loops are added.
pub fn random_strongly_connected<R: Rng + ?Sized>(rng: &mut R, m: usize, p: f64) -> NeighborGraph {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    if m >= 2 {
        for k in 0..m {
            arcs.push((order[k], order[(k + 1) % m]));
        }
    }
    for from in 0..m {
        for to in 0..m {
            if from != to && !arcs.contains(&(from, to)) && rng.gen_bool(p) {
                arcs.push((from, to));
            }
        }
    }
    NeighborGraph::with_self_loops(m, &arcs).expect("arcs are in range")
}

/// Random Erdős–Rényi digraph with self-loops; not necessarily strongly connected.
pub fn random_digraph<R: Rng + ?Sized>(rng: &mut R, m: usize, p: f64) -> NeighborGraph {
    let arcs: Vec<(usize, usize)> =
        (0..m).flat_map(|f| (0..m).map(move |t| (f, t))).filter(|&(f, t)| f != t).filter(|_| rng.gen_bool(p)).collect();
    NeighborGraph::with_self_loops(m, &arcs).expect("arcs are in range")
}

/// Row-stochastic matrix with positive diagonal whose transpose graph is strongly connected.
/// Weights are drawn from `[0.1, 1]` on the pattern of a random strongly connected digraph.
pub fn random_stochastic<T: Real, R: Rng + ?Sized>(rng: &mut R, m: usize, p: f64) -> Matrix<T> {
    let g = random_strongly_connected(rng, m, p);
    let mut w = Matrix::zeros(m, m);
    for i in 0..m {
        for j in g.neighbors(i) {
            w[(i, j)] = rng.gen_range(0.1..1.0);
        }
        let sum: f64 = w.row(i).iter().sum();
        for j in 0..m {
            w[(i, j)] /= sum;
        }
    }
    w.cast()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose_agent;
    use crate::netgraph::strongly_connected;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plants_have_the_planted_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let kind = if trial % 2 == 0 { TimeKind::Continuous } else { TimeKind::Discrete };
            let n = 2 + trial % 5;
            let m = 2 + trial % 3;
            let s: SampledPlant = random_plant(&mut rng, n, m, kind);
            assert_eq!(s.plant.n(), n);
            for i in 0..m {
                assert_eq!(decompose_agent(&s.plant, i).unwrap().unobservable_dim(), s.expected_unobservable[i]);
            }
            assert!(s.expected_unobservable.iter().any(|&d| d > 0));
        }
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_orthogonal(&mut rng, 5);
        assert!((&(&u.transpose() * &u) - &Matrix::identity(5)).max_abs() < 1e-12);
    }

    #[test]
    fn graphs_and_stochastic_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 1..7 {
            assert!(strongly_connected(&random_strongly_connected(&mut rng, m, 0.2)));
            let w: Matrix = random_stochastic(&mut rng, m, 0.3);
            for i in 0..m {
                assert!(w[(i, i)] > 0.0);
                assert!((w.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
