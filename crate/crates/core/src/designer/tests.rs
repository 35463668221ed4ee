use super::*;
use crate::decomposition::decompose_agent_with_quotient_basis;
use crate::matrixkit::{eigenvalues, induced_two_norm, symmetric_extremes};
use crate::netgraph::NeighborGraph;

fn a_mat() -> Matrix {
    Matrix::from_rows(&[[0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, -2.0, 0.0]])
}

fn outputs() -> Vec<Matrix> {
    (0..3).map(|i| Matrix::from_fn(1, 4, |_, j| if i == j { 1.0 } else { 0.0 })).collect()
}

fn bases() -> Vec<Matrix> {
    vec![
        Matrix::from_rows(&[[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]]),
        Matrix::from_rows(&[[-1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]),
        Matrix::from_rows(&[[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]]),
    ]
}

fn continuous_gains() -> Vec<Matrix> {
    vec![
        Matrix::column_vector(&[-5.0, -5.0, 0.0, 0.0]),
        Matrix::column_vector(&[5.0, -5.0, 0.0, 0.0]),
        Matrix::column_vector(&[0.0, 0.0, -5.0, -4.0]),
    ]
}

fn discrete_gains() -> Vec<Matrix> {
    vec![
        Matrix::column_vector(&[0.7, 0.88, 0.0, 0.0]),
        Matrix::column_vector(&[-0.8, 0.7, 0.0, 0.0]),
        Matrix::column_vector(&[0.0, 0.0, 0.7, 1.88]),
    ]
}

fn graph_a() -> NetworkSnapshot {
    NetworkSnapshot::new(NeighborGraph::with_self_loops(3, &[(0, 1), (1, 2), (2, 0), (0, 2)]).unwrap()).unwrap()
}

fn graph_b() -> NetworkSnapshot {
    NetworkSnapshot::new(NeighborGraph::with_self_loops(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()).unwrap()
}

fn stacked(plant: &Plant, gains: &[Matrix]) -> StackedDecomposition {
    let decs: Vec<_> = bases()
        .iter()
        .enumerate()
        .map(|(i, q)| decompose_agent_with_quotient_basis(plant, i, q).unwrap())
        .collect();
    stack(&assign_gains(&decs, gains).unwrap()).unwrap()
}

#[test]
fn listed_coupling_gain_certifies_on_graph_a() {
    let plant = Plant::continuous(a_mat(), outputs()).unwrap();
    let st = stacked(&plant, &continuous_gains());
    let snap = graph_a();
    let bound = gain_bound_fixed(&st, &snap, 1.0).unwrap();
    assert!(bound.g.is_finite() && bound.g >= 0.0);
    assert!(bound.certificate.holds(), "{bound:?}");
    let cert = certify_fixed(&st, &snap, 1.0, 10.0).unwrap();
    assert!(cert.abscissa <= 0.0, "{cert:?}");
    // Lyapunov form of the bound: H(λI+Ã)+sym − g·Vᵀ(L⊗I)V ⪯ 0.
    let h = coupling_weights(&st, &snap.pi);
    let shifted = st.a_tilde.add_diagonal(1.0);
    let hs = &h * &shifted;
    let lmi = &(&hs + &hs.transpose()) - &coupled_laplacian(&st, &snap.l).scale(bound.g);
    assert!(symmetric_extremes(&lmi).unwrap().unwrap().1 <= 1e-9);
}

#[test]
fn all_observable_plant_needs_no_coupling() {
    let plant = Plant::continuous(
        Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]),
        vec![Matrix::from_rows(&[[1.0, 0.0]]), Matrix::from_rows(&[[0.0, 1.0]])],
    )
    .unwrap();
    let snap = NetworkSnapshot::new(NeighborGraph::with_self_loops(2, &[(0, 1), (1, 0)]).unwrap()).unwrap();
    let d = design_continuous(&plant, &[snap.clone()], 1.0, Regime::Fixed, &GainSource::Synthesize, CouplingSource::Bound, None)
        .unwrap();
    assert_eq!(d.g, 0.0);
    assert_eq!(d.stacked.n_bar, 0);
    let arb = gain_bound_arbitrary(&d.stacked, &[NetworkSnapshot::metropolis(snap.graph).unwrap()], 1.0).unwrap();
    assert_eq!(arb.g, 0.0);
}

#[test]
fn dwell_bound_on_stand_in_graphs() {
    let plant = Plant::continuous(a_mat(), outputs()).unwrap();
    let st = stacked(&plant, &continuous_gains());
    let fam = [graph_a(), graph_b()];
    let b = gain_bound_dwell(&st, &fam, 0.0369, 1.0).unwrap();
    assert!(b.transient.c >= 1.0);
    assert!(b.g.is_finite() && b.g > 0.0, "{b:?}");
    // Each member's transient constant bounds the sampled envelope.
    for (snap, &c) in fam.iter().zip(&b.transient.member_c) {
        let m = -st.disagreement(&snap.s);
        for k in 0..200 {
            let t = 0.02 * k as f64;
            let e = crate::matrixkit::matrix_exponential(&m.scale(t)).unwrap();
            assert!(induced_two_norm(&e) <= c * (-b.transient.lambda_star * t).exp() * (1.0 + 1e-9));
        }
    }
    // λ = 0 keeps the bound positive; long dwell approaches (λ + ‖Ã‖c)/λ*.
    let zero = gain_bound_dwell(&st, &fam, 0.0369, 0.0).unwrap();
    assert!(zero.g > 0.0);
    let long = gain_bound_dwell(&st, &fam[..1], 1e9, 1.0).unwrap();
    let lim = (1.0 + long.norm_a_tilde * long.transient.c) / long.transient.lambda_star;
    assert!((long.g - lim).abs() < 1e-6 * lim);
}

#[test]
fn semigroup_sup_of_normal_matrix_is_one() {
    let n = Matrix::from_rows(&[[-1.0, 2.0], [-2.0, -1.0]]);
    let c = semigroup_sup(&n).unwrap();
    assert!((1.0..1.0 + 1e-12).contains(&c), "{c}");
    let jordan = Matrix::from_rows(&[[-1.0, 10.0], [0.0, -1.0]]);
    let c = semigroup_sup(&jordan).unwrap();
    // ‖exp(Jt)‖ peaks near 10·t·e^{-t} at t ≈ 1.
    assert!(c > 3.6 && c < 4.5, "{c}");
}

#[test]
fn arbitrary_bound_on_metropolis_complete_graph() {
    let plant = Plant::continuous(a_mat(), outputs()).unwrap();
    let st = stacked(&plant, &continuous_gains());
    let g = NeighborGraph::with_self_loops(3, &[(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)]).unwrap();
    let snap = NetworkSnapshot::metropolis(g).unwrap();
    let b = gain_bound_arbitrary(&st, &[snap], 1.0).unwrap();
    assert!(b.g.is_finite() && b.holds(), "{b:?}");
    assert!(matches!(gain_bound_arbitrary(&st, &[graph_a()], 1.0), Err(DesignError::NotDoublyStochastic { member: 0 })));
    assert!(gain_bound_arbitrary(&st, &[graph_b()], 1.0).unwrap().holds());
}

#[test]
fn listed_rounds_and_selected_rounds_on_graph_a() {
    let plant = Plant::discrete(a_mat(), outputs(), 1.0).unwrap();
    let st = stacked(&plant, &discrete_gains());
    let snap = graph_a();
    let sel = choose_q_weighted(&st, &[snap.clone()], 0.5).unwrap();
    assert_eq!(sel.method, RoundMethod::WeightedTwoNorm);
    let check = verify_rounds(&st, &[snap.clone()], 0.5, &sel).unwrap();
    assert!(check.holds, "{sel:?} {check:?}");
    assert!((check.value - sel.certificate).abs() < 1e-9);
    if sel.q > 1 {
        let mut prev = sel.clone();
        prev.q -= 1;
        assert!(!verify_rounds(&st, &[snap.clone()], 0.5, &prev).unwrap().holds);
    }
    // The listed q = 6 contracts the unobservable block.
    let rho = crate::matrixkit::spectral_radius(&st.a_v_discrete(&snap.s, 6)).unwrap();
    assert!(rho < 1.0, "{rho}");
}

#[test]
fn two_norm_and_mixed_rounds_on_switching_family() {
    let plant = Plant::discrete(a_mat(), outputs(), 1.0).unwrap();
    let st = stacked(&plant, &discrete_gains());
    let fam = [graph_a(), graph_b()];
    let tn = choose_q_weighted(&st, &fam, 0.5).unwrap();
    assert_eq!(tn.method, RoundMethod::TwoNorm);
    assert!(verify_rounds(&st, &fam, 0.5, &tn).unwrap().holds);
    let mx = choose_q_mixed(&st, &fam, 0.5).unwrap();
    assert_eq!(mx.p, 4);
    assert!(verify_rounds(&st, &fam, 0.5, &mx).unwrap().holds, "{mx:?}");
}

#[test]
fn mixed_norm_of_orthonormal_stack_is_one() {
    let plant = Plant::discrete(a_mat(), outputs(), 1.0).unwrap();
    let st = stacked(&plant, &discrete_gains());
    let rows = vec![4; 3];
    assert!((mixed_norm(&st.v, &rows, &st.dims) - 1.0).abs() < 1e-12);
    assert!((mixed_norm(&st.v.transpose(), &st.dims, &rows) - 1.0).abs() < 1e-12);
}

#[test]
fn two_agent_mixed_rounds_use_single_power() {
    let plant = Plant::discrete(
        Matrix::from_rows(&[[0.9, 0.2], [0.0, 0.8]]),
        vec![Matrix::from_rows(&[[1.0, 0.0]]), Matrix::from_rows(&[[0.0, 1.0]])],
        1.0,
    )
    .unwrap();
    let snap = NetworkSnapshot::new(NeighborGraph::with_self_loops(2, &[(0, 1), (1, 0)]).unwrap()).unwrap();
    let d = design_discrete(&plant, &[snap], 0.5, RoundMethod::MixedNorm, &GainSource::Synthesize, None, None).unwrap();
    assert_eq!(d.selection.p, 1);
    assert!(d.check.holds && d.rates_hold());
}

#[test]
fn full_designs_on_listed_values() {
    let cp = Plant::continuous(a_mat(), outputs()).unwrap();
    let d = design_continuous(
        &cp,
        &[graph_a()],
        1.0,
        Regime::Fixed,
        &GainSource::Given(continuous_gains()),
        CouplingSource::Given(10.0),
        Some(&bases()),
    )
    .unwrap();
    assert!(d.rates_hold());
    assert!(d.member_certificates[0].abscissa <= 0.0);
    let spec = eigenvalues(&d.stacked.error_generator(&graph_a().s, 10.0)).unwrap();
    assert!(spec.abscissa < -1.0 + 1e-9, "{spec:?}");

    let dp = Plant::discrete(a_mat(), outputs(), 1.0).unwrap();
    let d = design_discrete(
        &dp,
        &[graph_a()],
        0.5,
        RoundMethod::WeightedTwoNorm,
        &GainSource::Given(discrete_gains()),
        Some(6),
        Some(&bases()),
    )
    .unwrap();
    assert_eq!(d.q, 6);
    assert!(d.rates_hold() && d.member_radii[0] < 1.0);
}

#[test]
fn time_kind_mismatch_is_rejected() {
    let cp = Plant::continuous(a_mat(), outputs()).unwrap();
    let r = design_discrete(&cp, &[graph_a()], 0.5, RoundMethod::MixedNorm, &GainSource::Synthesize, None, None);
    assert!(matches!(r, Err(DesignError::TimeKindMismatch { .. })));
}

#[test]
fn given_rounds_are_certified_as_given() {
    let plant = Plant::discrete(a_mat(), outputs(), 1.0).unwrap();
    let st = stacked(&plant, &discrete_gains());
    let one = [graph_a()];
    let sel = rounds_at(&st, &one, 0.5, RoundMethod::WeightedTwoNorm, 6).unwrap();
    assert_eq!((sel.q, sel.p, sel.p_bar), (6, 1, 6));
    assert!(verify_rounds(&st, &one, 0.5, &sel).unwrap().holds);
    let fam = [graph_a(), graph_b()];
    for method in [RoundMethod::TwoNorm, RoundMethod::MixedNorm] {
        let chosen = match method {
            RoundMethod::MixedNorm => choose_q_mixed(&st, &fam, 0.5).unwrap(),
            _ => choose_q_weighted(&st, &fam, 0.5).unwrap(),
        };
        let again = rounds_at(&st, &fam, 0.5, method, chosen.q).unwrap();
        assert_eq!(again.q, chosen.q);
        assert!(again.certificate <= chosen.certificate * (1.0 + 1e-12), "{again:?} {chosen:?}");
        assert!(verify_rounds(&st, &fam, 0.5, &again).unwrap().holds);
    }
    let bad = rounds_at(&st, &one, 0.5, RoundMethod::WeightedTwoNorm, 1).unwrap();
    assert!(!verify_rounds(&st, &one, 0.5, &bad).unwrap().holds);
}
