//! Turns a validated scenario file into library objects. Indices move from 1-based to 0-based.

use splitobs_core::decomposition::DecompositionError;
use splitobs_core::designer::{
    design_continuous, design_discrete, ContinuousDesign, CouplingSource, DesignError, DiscreteDesign, GainSource,
    Regime, RoundMethod,
};
use splitobs_core::netgraph::GraphError;
use splitobs_core::simulator::{Coupling, FaultEvent, Scenario, SimError};
use splitobs_core::switching::{generate, SignalKind, SwitchingError, SwitchingSignal};
use splitobs_core::{Matrix, NeighborGraph, NetworkSnapshot, Plant, TimeKind};
use thiserror::Error;

use crate::schema::{
    ConstraintSpec, GainSpec, MethodSpec, RegimeSpec, ScenarioFile, SignalBlock, TimeSpec, WeightSpec,
};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("plant: {0}")]
    Plant(#[from] DecompositionError),
    #[error("graph {member}: {source}")]
    Graph { member: usize, source: GraphError },
    #[error("signal: {0}")]
    Signal(#[from] SwitchingError),
    #[error("design: {0}")]
    Design(#[from] DesignError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
}

/// Flags that override or extend a scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    /// Replaces the seed of a generated switching signal.
    pub seed: Option<u64>,
    pub experimental_adaptive_switching: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Continuous(ContinuousDesign),
    Discrete(DiscreteDesign),
}

impl Design {
    pub fn rate(&self) -> f64 {
        match self {
            Design::Continuous(d) => d.rate,
            Design::Discrete(d) => d.rate,
        }
    }

    pub fn decs(&self) -> &[splitobs_core::AgentDecomposition] {
        match self {
            Design::Continuous(d) => &d.decs,
            Design::Discrete(d) => &d.decs,
        }
    }

    pub fn stacked(&self) -> &splitobs_core::StackedDecomposition {
        match self {
            Design::Continuous(d) => &d.stacked,
            Design::Discrete(d) => &d.stacked,
        }
    }
}

/// Everything a pipeline needs, built once per invocation.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub file: ScenarioFile,
    pub plant: Plant,
    pub family: Vec<NetworkSnapshot>,
    pub signal: SwitchingSignal,
    pub design: Design,
}

impl Prepared {
    pub fn kind(&self) -> TimeKind {
        self.plant.time_kind()
    }
}

fn matrix(rows: &[Vec<f64>], cols: usize) -> Matrix {
    if rows.is_empty() {
        Matrix::zeros(0, cols)
    } else {
        Matrix::from_rows(rows)
    }
}

pub fn build_plant(file: &ScenarioFile) -> Result<Plant, BuildError> {
    let n = file.plant.a.len();
    let a = matrix(&file.plant.a, n);
    let c = file.plant.c.iter().map(|c| matrix(c, n)).collect();
    let plant = match file.plant.time {
        TimeSpec::Continuous => Plant::continuous(a, c)?,
        TimeSpec::Discrete => Plant::discrete(a, c, file.plant.sample_period.unwrap_or(1.0))?,
    };
    Ok(plant)
}

pub fn build_family(file: &ScenarioFile) -> Result<Vec<NetworkSnapshot>, BuildError> {
    let m = file.plant.c.len();
    file.graphs
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let arcs: Vec<(usize, usize)> = g.arcs.iter().map(|&[f, t]| (f - 1, t - 1)).collect();
            let wrap = |source| BuildError::Graph { member: k + 1, source };
            let graph = NeighborGraph::with_self_loops(m, &arcs).map_err(wrap)?;
            match g.weights {
                WeightSpec::Uniform => NetworkSnapshot::new(graph),
                WeightSpec::Metropolis => NetworkSnapshot::metropolis(graph),
            }
            .map_err(wrap)
        })
        .collect()
}

fn constraint_kind(c: &ConstraintSpec) -> SignalKind {
    match *c {
        ConstraintSpec::Dwell { tau_d } => SignalKind::Dwell { tau_d },
        ConstraintSpec::AvgDwell { tau_d, delta0 } => SignalKind::AvgDwell { tau_d, delta0 },
        ConstraintSpec::Arbitrary { min_step } => SignalKind::Arbitrary { min_step },
    }
}

pub fn build_signal(file: &ScenarioFile, overrides: &Overrides) -> Result<SwitchingSignal, BuildError> {
    let horizon = file.sim.horizon;
    let family = file.graphs.len();
    let integer = file.plant.time == TimeSpec::Discrete;
    let mut block = file.signal.clone();
    if let Some(seed) = overrides.seed {
        block.set_seed(seed);
    }
    let signal = match &block {
        SignalBlock::Constant { graph } => SwitchingSignal::constant(graph - 1, horizon),
        SignalBlock::Dwell { tau_d, seed } => generate(SignalKind::Dwell { tau_d: *tau_d }, family, horizon, *seed, integer)?,
        SignalBlock::AvgDwell { tau_d, delta0, seed } => {
            generate(SignalKind::AvgDwell { tau_d: *tau_d, delta0: *delta0 }, family, horizon, *seed, integer)?
        }
        SignalBlock::Arbitrary { min_step, seed } => {
            generate(SignalKind::Arbitrary { min_step: *min_step }, family, horizon, *seed, integer)?
        }
        SignalBlock::Pairs { pairs, constraint } => {
            let pairs: Vec<(f64, usize)> = pairs.iter().map(|&(t, g)| (t, g - 1)).collect();
            SwitchingSignal::from_pairs(&pairs, horizon, constraint.as_ref().map(constraint_kind))?
        }
    };
    Ok(signal)
}

fn regime(file: &ScenarioFile) -> (Regime, CouplingSource) {
    let spec = file.design.coupling.clone().unwrap_or(crate::schema::CouplingSpec { regime: RegimeSpec::Fixed, g: None });
    let regime = match spec.regime {
        RegimeSpec::Fixed => Regime::Fixed,
        RegimeSpec::Dwell => Regime::Dwell {
            tau_d: file.signal.tau_d().unwrap_or(f64::NAN),
            delta0: file.signal.delta0().unwrap_or(1.0),
        },
        RegimeSpec::Arbitrary => Regime::Arbitrary,
    };
    let source = spec.g.map_or(CouplingSource::Bound, CouplingSource::Given);
    (regime, source)
}

pub fn build_design(file: &ScenarioFile, plant: &Plant, family: &[NetworkSnapshot]) -> Result<Design, BuildError> {
    let n = plant.n();
    let gains = match &file.design.gains {
        GainSpec::Synthesize => GainSource::Synthesize,
        GainSpec::Given(ks) => GainSource::Given(ks.iter().map(|k| matrix(k, 0)).collect()),
    };
    let bases: Option<Vec<Matrix>> =
        file.design.quotient_bases.as_ref().map(|bs| bs.iter().map(|b| matrix(b, n)).collect());
    let rate = file.design.rate;
    let design = match plant.time_kind() {
        TimeKind::Continuous => {
            let (regime, source) = regime(file);
            Design::Continuous(design_continuous(plant, family, rate, regime, &gains, source, bases.as_deref())?)
        }
        TimeKind::Discrete => {
            let spec = file.design.rounds.clone().unwrap_or(crate::schema::RoundsSpec { method: MethodSpec::Weighted, q: None });
            let method = match spec.method {
                MethodSpec::Weighted => RoundMethod::WeightedTwoNorm,
                MethodSpec::Mixed => RoundMethod::MixedNorm,
            };
            Design::Discrete(design_discrete(plant, family, rate, method, &gains, spec.q, bases.as_deref())?)
        }
    };
    Ok(design)
}

pub fn prepare(file: &ScenarioFile, overrides: &Overrides) -> Result<Prepared, BuildError> {
    let plant = build_plant(file)?;
    let family = build_family(file)?;
    let signal = build_signal(file, overrides)?;
    let design = build_design(file, &plant, &family)?;
    log::info!(
        "prepared {:?}-time scenario: n = {}, m = {}, {} graph(s), {} switch(es)",
        plant.time_kind(),
        plant.n(),
        plant.m(),
        family.len(),
        signal.switch_count()
    );
    Ok(Prepared { file: file.clone(), plant, family, signal, design })
}

/// Simulation scenario with every fault applied; a fault that breaks an assumption fails here.
pub fn build_scenario(p: &Prepared, overrides: &Overrides) -> Result<Scenario, BuildError> {
    let sim = &p.file.sim;
    let mut sc = match &p.design {
        Design::Continuous(d) => Scenario::from_continuous(
            p.plant.clone(),
            d,
            p.family.clone(),
            p.signal.clone(),
            sim.x0.clone(),
            sim.xi0.clone(),
        ),
        Design::Discrete(d) => Scenario::from_discrete(
            p.plant.clone(),
            d,
            p.family.clone(),
            p.signal.clone(),
            sim.x0.clone(),
            sim.xi0.clone(),
        ),
    };
    sc.horizon = sim.horizon;
    if let Some(h) = sim.h {
        sc.h = h;
    }
    if let Some(g0) = &sim.g0 {
        sc.coupling = Coupling::Adaptive(g0.clone());
    }
    sc.experimental = overrides.experimental_adaptive_switching;
    sc.validate()?;
    for f in &sim.faults {
        let event = match (f.remove_arc, f.remove_agent) {
            (Some([from, to]), _) => FaultEvent::RemoveArc { from: from - 1, to: to - 1 },
            (None, Some(agent)) => FaultEvent::RemoveAgent { agent: agent - 1 },
            (None, None) => unreachable!("validated by the schema"),
        };
        sc = sc.apply_fault(f.time, event)?;
    }
    Ok(sc)
}
