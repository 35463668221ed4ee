#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitobs_core::decomposition::{decompose_agent, stack};
use splitobs_core::designer::synth_gain;
use splitobs_core::sampling::{random_plant, random_strongly_connected};
use splitobs_core::{AgentDecomposition, NetworkSnapshot, Plant, StackedDecomposition, TimeKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Instance {
    pub plant: Plant,
    pub expected_unobservable: Vec<usize>,
    pub decs: Vec<AgentDecomposition>,
    pub stacked: StackedDecomposition,
    pub snapshot: NetworkSnapshot,
    pub rate: f64,
}

/// Random plant (`n ≤ 6`, `2 ≤ m ≤ 4`), synthesized gains and a strongly connected graph.
pub fn instance(rng: &mut ChaCha8Rng, kind: TimeKind) -> Instance {
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(2..=4);
    let sampled = random_plant(rng, n, m, kind);
    let rate = match kind {
        TimeKind::Continuous => rng.gen_range(0.5..2.0),
        TimeKind::Discrete => rng.gen_range(0.3..0.7),
    };
    let decs: Vec<AgentDecomposition> =
        (0..m).map(|i| synth_gain(&decompose_agent(&sampled.plant, i).unwrap(), rate, kind).unwrap()).collect();
    let stacked = stack(&decs).unwrap();
    let p = rng.gen_range(0.0..0.5);
    let snapshot = NetworkSnapshot::new(random_strongly_connected(rng, m, p)).unwrap();
    Instance { plant: sampled.plant, expected_unobservable: sampled.expected_unobservable, decs, stacked, snapshot, rate }
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Fixed-graph scenario on the instance: the certified gain for continuous plants and the
/// weighted-norm round count for discrete ones.
pub fn scenario(rng: &mut ChaCha8Rng, inst: &Instance, horizon: f64) -> splitobs_core::simulator::Scenario {
    use splitobs_core::designer::{choose_q_weighted, gain_bound_fixed};
    use splitobs_core::simulator::{Coupling, Scenario};
    let n = inst.plant.n();
    let m = inst.plant.m();
    let coupling = match inst.plant.time_kind() {
        TimeKind::Continuous => {
            Coupling::Gain(gain_bound_fixed(&inst.stacked, &inst.snapshot, inst.rate).unwrap().g.max(0.5))
        }
        TimeKind::Discrete => {
            Coupling::Rounds(choose_q_weighted(&inst.stacked, std::slice::from_ref(&inst.snapshot), inst.rate).unwrap().q)
        }
    };
    let x0 = random_vec(rng, n);
    let xi0 = (0..m).map(|_| random_vec(rng, n)).collect();
    let mut sc = Scenario::new(inst.plant.clone(), inst.decs.clone(), coupling, inst.snapshot.clone(), x0, xi0, horizon);
    if inst.plant.time_kind() == TimeKind::Discrete {
        sc.h = 1.0;
    }
    sc
}
