mod common;

use rand::Rng;
use splitobs_core::analyzer::{cluster_distance, CLUSTER_RADIUS};
use splitobs_core::decomposition::{decompose_agent, joint_observability};
use splitobs_core::matrixkit::{eigenvalues, observability_matrix, rank};
use splitobs_core::sampling::random_plant;
use splitobs_core::{Plant, TimeKind};

#[test]
fn random_plants_satisfy_type_invariants() {
    let mut rng = common::rng(11);
    for trial in 0..500 {
        let kind = if trial % 2 == 0 { TimeKind::Continuous } else { TimeKind::Discrete };
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=4);
        let s = random_plant::<f64, _>(&mut rng, n, m, kind);
        let jo = joint_observability(&s.plant);
        assert!(jo.observable && jo.consistent(), "{jo:?}");
        for i in 0..m {
            let d = decompose_agent(&s.plant, i).unwrap();
            let oracle = n - rank(&observability_matrix(s.plant.a(), s.plant.c(i)), None);
            assert_eq!(d.unobservable_dim(), oracle);
            assert_eq!(d.unobservable_dim(), s.expected_unobservable[i]);
            assert!(d.invariant_residual() <= 1e-8, "trial {trial} agent {i}: {}", d.invariant_residual());
        }
    }
}

#[test]
fn error_dynamics_are_block_triangular_in_split_coordinates() {
    let mut rng = common::rng(12);
    for trial in 0..200 {
        let kind = if trial % 2 == 0 { TimeKind::Continuous } else { TimeKind::Discrete };
        let inst = common::instance(&mut rng, kind);
        let st = &inst.stacked;
        assert!(st.invariant_residual() <= 1e-8);
        let s = &inst.snapshot.s;
        let (full, a_v) = match kind {
            TimeKind::Continuous => {
                let g = rng.gen_range(0.0..20.0);
                (st.error_generator(s, g), st.a_v_continuous(s, g))
            }
            TimeKind::Discrete => {
                let q = rng.gen_range(1..8);
                (st.error_map(s, q), st.a_v_discrete(s, q))
            }
        };
        let split = st.to_split_coordinates(&full);
        let top = split.rows() - st.n_bar;
        let scale = 1.0f64.max(full.max_abs());
        let upper = split.block(0, top, top, st.n_bar);
        assert!(upper.max_abs() <= 1e-9 * scale, "trial {trial}: {}", upper.max_abs());
        assert!(split.block(0, 0, top, top).max_abs_diff(&st.a_bar_v) <= 1e-9 * scale);
        assert!(split.block(top, top, st.n_bar, st.n_bar).max_abs_diff(&a_v) <= 1e-9 * scale);

        let eig_full = eigenvalues(&full).unwrap().eigenvalues;
        let mut union = eigenvalues(&st.a_bar_v).unwrap().eigenvalues;
        union.extend(eigenvalues(&a_v).unwrap().eigenvalues);
        let spread = eig_full.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        let dist = cluster_distance(&eig_full, &union, CLUSTER_RADIUS * spread);
        assert!(dist <= 1e-7 * full.norm_fro().max(1.0), "trial {trial}: {dist:e}");
    }
}

#[test]
fn repeated_unobservable_outputs_are_not_jointly_observable() {
    let a = splitobs_core::Mat::from_rows(&[[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 2.0]]);
    let c = splitobs_core::Mat::from_rows(&[[1.0, 0.0, 0.0]]);
    let p = Plant::continuous(a, vec![c.clone(), c.clone(), c]).unwrap();
    let jo = joint_observability(&p);
    assert!(!jo.observable && jo.consistent());
    assert_eq!(jo.intersection_dim, 1);
}
