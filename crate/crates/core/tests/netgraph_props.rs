mod common;

use rand::Rng;
use splitobs_core::designer::coupled_laplacian;
use splitobs_core::matrixkit::{eigenvalues, kron, symmetric_eigen};
use splitobs_core::netgraph::{discrete_laplacian, perron_vector, strongly_connected};
use splitobs_core::sampling::{random_digraph, random_stochastic, random_strongly_connected};
use splitobs_core::{Mat, NeighborGraph, NetworkSnapshot, TimeKind};

/// Reachability by repeated boolean squaring of `I + adjacency`.
fn closure_says_strong(g: &NeighborGraph) -> bool {
    let m = g.m();
    let mut r: Vec<Vec<bool>> = (0..m).map(|i| (0..m).map(|j| i == j || g.has_arc(i, j)).collect()).collect();
    for _ in 0..m {
        let prev = r.clone();
        for i in 0..m {
            for j in 0..m {
                r[i][j] = prev[i][j] || (0..m).any(|k| prev[i][k] && prev[k][j]);
            }
        }
    }
    r.iter().all(|row| row.iter().all(|&b| b))
}

fn sorted_symmetric_eigs(m: &Mat) -> Vec<f64> {
    let mut v = symmetric_eigen(m).unwrap().values;
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn strong_connectivity_matches_transitive_closure() {
    let mut rng = common::rng(21);
    let mut both = [0usize; 2];
    for _ in 0..200 {
        let m = rng.gen_range(1..=7);
        let p = rng.gen_range(0.1..0.6);
        let g = random_digraph(&mut rng, m, p);
        let s = strongly_connected(&g);
        assert_eq!(s, closure_says_strong(&g));
        both[s as usize] += 1;
    }
    assert!(both[0] > 10 && both[1] > 10, "{both:?}");
}

#[test]
fn perron_vectors_and_generalized_laplacians() {
    let mut rng = common::rng(22);
    for _ in 0..500 {
        let m = rng.gen_range(1..=7);
        let snap: NetworkSnapshot = NetworkSnapshot::new(random_strongly_connected(&mut rng, m, 0.3)).unwrap();
        let pi = &snap.pi;
        assert!(pi.iter().all(|&p| p > 0.0));
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let back = snap.s.transpose().mul_vec(pi);
        assert!(back.iter().zip(pi).all(|(a, b)| (a - b).abs() <= 1e-10));
        let l = &snap.l;
        assert!(l.max_abs_diff(&l.transpose()) <= 1e-12);
        assert!(l.mul_vec(&vec![1.0; m]).iter().all(|v| v.abs() <= 1e-12));
        let eig = sorted_symmetric_eigs(l);
        assert!(eig[0] >= -1e-10);
        if m > 1 {
            assert!(eig[1] > 1e-10, "{eig:?}");
        }
    }
}

#[test]
fn discrete_laplacians_have_one_dimensional_kernels() {
    let mut rng = common::rng(23);
    for _ in 0..500 {
        let m = rng.gen_range(1..=7);
        let w: Mat = random_stochastic(&mut rng, m, 0.3);
        let (_, lm) = discrete_laplacian(&w).unwrap();
        assert!(lm.mul_vec(&vec![1.0; m]).iter().all(|v| v.abs() <= 1e-12));
        let eig = sorted_symmetric_eigs(&lm.symmetric_part());
        assert!(eig[0] >= -1e-10, "{eig:?}");
        assert_eq!(eig.iter().filter(|&&e| e.abs() <= 1e-10).count(), 1, "{eig:?}");
    }
}

#[test]
fn perron_vector_of_doubly_stochastic_is_uniform() {
    let s = Mat::from_rows(&[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]);
    let pi = perron_vector(&s).unwrap();
    assert!(pi.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
}

#[test]
fn disagreement_is_stable_and_its_lyapunov_identity_holds() {
    let mut rng = common::rng(24);
    for trial in 0..200 {
        let inst = common::instance(&mut rng, TimeKind::Continuous);
        let st = &inst.stacked;
        let snap = &inst.snapshot;
        let d = st.disagreement(&snap.s);
        let abscissa = eigenvalues(&d.scale(-1.0)).unwrap().abscissa;
        assert!(abscissa < 0.0, "trial {trial}: {abscissa}");
        let h = &(&st.v.transpose() * &kron(&snap.pi_mat, &Mat::identity(st.n))) * &st.v;
        let hd = &h * &d;
        let lv = coupled_laplacian(st, &snap.l);
        assert!((&(&hd + &hd.transpose()) - &lv).norm_fro() <= 1e-9, "trial {trial}");
        assert!(sorted_symmetric_eigs(&lv)[0] > 0.0, "trial {trial}");
    }
}

#[test]
fn weighted_consensus_round_contracts() {
    let mut rng = common::rng(25);
    for trial in 0..200 {
        let inst = common::instance(&mut rng, TimeKind::Discrete);
        let st = &inst.stacked;
        let w: Mat = random_stochastic(&mut rng, st.m(), 0.3);
        let snap = NetworkSnapshot::from_weights(w).unwrap();
        let r = &(&st.v.transpose() * &kron(&snap.pi_mat, &Mat::identity(st.n))) * &st.v;
        let b = st.consensus_block(&snap.s);
        let c = &(&(&b.transpose() * &r) * &b) - &r;
        let top = *sorted_symmetric_eigs(&c.symmetric_part()).last().unwrap();
        assert!(top <= -1e-10, "trial {trial}: {top}");
    }
}
