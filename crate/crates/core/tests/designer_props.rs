mod common;

use rand::Rng;
use splitobs_core::designer::{
    choose_q_mixed, choose_q_weighted, coupled_laplacian, gain_bound_arbitrary, gain_bound_fixed, round_weight,
    verify_rounds, RoundMethod,
};
use splitobs_core::matrixkit::lu::inverse;
use splitobs_core::matrixkit::{eigenvalues, kron, singular_values, symmetric_eigen};
use splitobs_core::netgraph::NeighborGraph;
use splitobs_core::{Mat, NetworkSnapshot, StackedDecomposition, TimeKind};

fn two_norm(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `‖M‖_R = sqrt(ρ(R⁻¹MᵀRM))`.
fn weighted(m: &Mat, r: &Mat) -> f64 {
    let g = &inverse(r).unwrap() * &(&(&m.transpose() * r) * m);
    eigenvalues(&g).unwrap().radius.sqrt()
}

fn mixed(m: &Mat, dims: &[usize]) -> f64 {
    let mut off = vec![0];
    for d in dims {
        off.push(off.last().unwrap() + d);
    }
    (0..dims.len())
        .map(|i| (0..dims.len()).map(|j| two_norm(&m.block(off[i], off[j], dims[i], dims[j]))).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_eig(m: &Mat) -> f64 {
    symmetric_eigen(m).unwrap().values.last().copied().unwrap_or(0.0)
}

#[test]
fn synthesized_gains_meet_their_rates() {
    let mut rng = common::rng(31);
    for trial in 0..200 {
        let kind = if trial % 2 == 0 { TimeKind::Continuous } else { TimeKind::Discrete };
        let inst = common::instance(&mut rng, kind);
        for d in &inst.decs {
            if d.a_bar.rows() == 0 {
                continue;
            }
            let spec = eigenvalues(&d.quotient_closed_loop()).unwrap();
            match kind {
                TimeKind::Continuous => assert!(spec.abscissa <= -inst.rate + 1e-9, "trial {trial}"),
                TimeKind::Discrete => assert!(spec.radius <= inst.rate + 1e-9, "trial {trial}"),
            }
        }
    }
}

#[test]
fn fixed_bound_certificate_and_monotonicity() {
    let mut rng = common::rng(32);
    for trial in 0..100 {
        let inst = common::instance(&mut rng, TimeKind::Continuous);
        let (st, snap) = (&inst.stacked, &inst.snapshot);
        let mut last = 0.0;
        for rate in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let b = gain_bound_fixed(st, snap, rate).unwrap();
            assert!(b.g >= last, "trial {trial}: {} < {last}", b.g);
            last = b.g;
            if st.n_bar == 0 {
                continue;
            }
            let h = &(&st.v.transpose() * &kron(&snap.pi_mat, &Mat::identity(st.n))) * &st.v;
            let shifted = st.a_tilde.add_diagonal(rate);
            let hs = &h * &shifted;
            let lv = coupled_laplacian(st, &snap.l);
            let lmi = &(&hs + &hs.transpose()) - &lv.scale(b.g);
            let scale = 1.0f64.max(b.g * lv.norm_fro());
            assert!(max_eig(&lmi) <= 1e-9 * scale, "trial {trial}: {}", max_eig(&lmi));
            assert!(b.certificate.holds());
        }
    }
}

#[test]
fn arbitrary_bound_matches_fixed_bound_for_symmetric_weights() {
    let mut rng = common::rng(33);
    for trial in 0..100 {
        let inst = common::instance(&mut rng, TimeKind::Continuous);
        let m = inst.stacked.m();
        let mut arcs = Vec::new();
        for k in 0..m {
            arcs.push((k, (k + 1) % m));
            arcs.push(((k + 1) % m, k));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if rng.gen_bool(0.4) {
                    arcs.push((i, j));
                    arcs.push((j, i));
                }
            }
        }
        let snap = NetworkSnapshot::metropolis(NeighborGraph::with_self_loops(m, &arcs).unwrap()).unwrap();
        let fixed = gain_bound_fixed(&inst.stacked, &snap, inst.rate).unwrap();
        let arb = gain_bound_arbitrary(&inst.stacked, std::slice::from_ref(&snap), inst.rate).unwrap();
        assert!((fixed.g - arb.g).abs() <= 1e-8 * 1.0f64.max(fixed.g), "trial {trial}: {} vs {}", fixed.g, arb.g);
        assert!(arb.holds());
    }
}

fn check_selection(st: &StackedDecomposition, family: &[NetworkSnapshot], rate: f64, method: RoundMethod) -> usize {
    let sel = match method {
        RoundMethod::MixedNorm => choose_q_mixed(st, family, rate).unwrap(),
        _ => choose_q_weighted(st, family, rate).unwrap(),
    };
    assert!(sel.q >= 1 && sel.q == sel.p * sel.p_bar);
    assert!(verify_rounds(st, family, rate, &sel).unwrap().holds);
    if st.n_bar == 0 {
        return sel.q;
    }
    let slack = 1.0 + 1e-9;
    match sel.method {
        RoundMethod::WeightedTwoNorm => {
            let r = round_weight(st, &family[0]);
            let nb = weighted(&st.consensus_block(&family[0].s), &r);
            let na = weighted(&st.a_tilde, &r);
            assert!(nb < 1.0);
            assert!(nb.powi(sel.q as i32) * na <= rate * slack);
            if sel.q > 1 {
                assert!(nb.powi(sel.q as i32 - 1) * na > rate / slack);
            }
        }
        RoundMethod::TwoNorm => {
            for snap in family {
                let bp = st.consensus_block(&snap.s).pow(sel.p);
                assert!(two_norm(&bp) < 1.0);
                assert!(two_norm(&(&st.a_tilde * &bp.pow(sel.p_bar))) <= rate * slack);
            }
        }
        RoundMethod::MixedNorm => {
            let na = mixed(&st.a_tilde, &st.dims);
            let worst = family
                .iter()
                .map(|s| mixed(&st.consensus_block(&s.s).pow(sel.p), &st.dims))
                .fold(0.0, f64::max);
            assert!(worst < 1.0);
            assert!(worst.powi(sel.p_bar as i32) * na <= rate * slack);
        }
    }
    sel.q
}

#[test]
fn round_selections_pass_independent_norms() {
    let mut rng = common::rng(34);
    for _ in 0..100 {
        let inst = common::instance(&mut rng, TimeKind::Discrete);
        let fam = vec![inst.snapshot.clone()];
        check_selection(&inst.stacked, &fam, inst.rate, RoundMethod::WeightedTwoNorm);
        check_selection(&inst.stacked, &fam, inst.rate, RoundMethod::MixedNorm);
        let other = NetworkSnapshot::new(splitobs_core::sampling::random_strongly_connected(
            &mut rng,
            inst.stacked.m(),
            0.3,
        ))
        .unwrap();
        let fam2 = vec![inst.snapshot.clone(), other];
        check_selection(&inst.stacked, &fam2, inst.rate, RoundMethod::TwoNorm);
        check_selection(&inst.stacked, &fam2, inst.rate, RoundMethod::MixedNorm);
    }
}

#[test]
fn smaller_rates_never_need_fewer_rounds() {
    let mut rng = common::rng(35);
    for _ in 0..50 {
        let inst = common::instance(&mut rng, TimeKind::Discrete);
        let fam = vec![inst.snapshot.clone()];
        let mut last = (0, 0);
        for rate in [0.9, 0.7, 0.5, 0.3, 0.1, 0.01] {
            let w = choose_q_weighted(&inst.stacked, &fam, rate).unwrap().q;
            let x = choose_q_mixed(&inst.stacked, &fam, rate).unwrap().q;
            assert!(w >= last.0 && x >= last.1);
            last = (w, x);
        }
    }
}
