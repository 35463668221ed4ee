//! Trajectories of the plant together with all agent estimators.
//!
//! Every estimator runs `ẋ_i = (A + K_iC_i)x_i − K_iy_i − g·P_i(x_i − Σ_j s_ij x_j)` (continuous),
//! its adaptive-gain variant, or the discrete scheme with `q` inner consensus rounds. Continuous
//! traces are sampled on a grid of step `h` with switch and fault instants inserted. Discrete
//! scenarios count the horizon, switches and faults in event indices; trace times are `τ·T`.

mod adaptive;
mod continuous;
mod discrete;
mod network;
mod trace;

pub use adaptive::{simulate_adaptive, ADAPTIVE_RTOL};
pub use continuous::{rk4_continuous, simulate_continuous};
pub use discrete::{simulate_discrete, DUAL_PATH_TOL};
pub use trace::SimulationTrace;

use thiserror::Error;

use crate::decomposition::{AgentDecomposition, Plant};
use crate::designer::{ContinuousDesign, DiscreteDesign};
use crate::matrixkit::{LinalgError, TimeKind};
use crate::netgraph::{GraphError, NetworkSnapshot};
use crate::scalar::Real;
use crate::switching::{SwitchingError, SwitchingSignal};

/// Default output grid step.
pub const DEFAULT_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultEvent {
    /// Drops arc `from → to` (`from` stops being a neighbor of `to`) in every family member.
    RemoveArc { from: usize, to: usize },
    /// Drops the agent, its arcs and its estimator.
    RemoveAgent { agent: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fault<T: Real = f64> {
    pub time: T,
    pub event: FaultEvent,
}

/// Assumption a fault would break.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    JointObservability,
    /// Survivors not strongly connected in this family member.
    StrongConnectivity { member: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("fault at t = {time} breaks {assumption:?}")]
    FaultBreaksAssumptions { time: f64, assumption: Assumption },
    #[error("invalid fault: {0}")]
    InvalidFault(String),
    #[error("invalid switching signal: {0}")]
    InvalidSignal(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("step size control failed at t = {t}")]
    ToleranceNotMet { t: f64 },
    #[error("inner-round and closed-form errors differ by {residual:e} at event {tau}")]
    DualPathMismatch { tau: usize, residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Switching(#[from] SwitchingError),
}

/// How the consensus term is scaled.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling<T: Real = f64> {
    /// Constant coupling gain `g` (continuous).
    Gain(T),
    /// Per-agent initial gains `g_i(0) ≥ 0`, updated online (continuous).
    Adaptive(Vec<T>),
    /// `q` inner rounds per event (discrete).
    Rounds(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Real = f64> {
    pub plant: Plant<T>,
    /// Agent decompositions with gains set.
    pub decs: Vec<AgentDecomposition<T>>,
    pub coupling: Coupling<T>,
    pub family: Vec<NetworkSnapshot<T>>,
    pub signal: SwitchingSignal<T>,
    pub x0: Vec<T>,
    /// Per-agent initial estimates.
    pub xi0: Vec<Vec<T>>,
    pub horizon: T,
    /// Output grid step (continuous only).
    pub h: T,
    pub faults: Vec<Fault<T>>,
    /// Allows the adaptive mode on switching graphs.
    pub experimental: bool,
}

impl<T: Real> Scenario<T> {
    /// Fixed-graph scenario with no faults.
    pub fn new(
        plant: Plant<T>,
        decs: Vec<AgentDecomposition<T>>,
        coupling: Coupling<T>,
        snapshot: NetworkSnapshot<T>,
        x0: Vec<T>,
        xi0: Vec<Vec<T>>,
        horizon: T,
    ) -> Self {
        Self {
            plant,
            decs,
            coupling,
            family: vec![snapshot],
            signal: SwitchingSignal::constant(0, horizon),
            x0,
            xi0,
            horizon,
            h: T::lit(DEFAULT_STEP),
            faults: Vec::new(),
            experimental: false,
        }
    }

    pub fn from_continuous(
        plant: Plant<T>,
        design: &ContinuousDesign<T>,
        family: Vec<NetworkSnapshot<T>>,
        signal: SwitchingSignal<T>,
        x0: Vec<T>,
        xi0: Vec<Vec<T>>,
    ) -> Self {
        let horizon = signal.horizon();
        Self {
            plant,
            decs: design.decs.clone(),
            coupling: Coupling::Gain(design.g),
            family,
            signal,
            x0,
            xi0,
            horizon,
            h: T::lit(DEFAULT_STEP),
            faults: Vec::new(),
            experimental: false,
        }
    }

    pub fn from_discrete(
        plant: Plant<T>,
        design: &DiscreteDesign<T>,
        family: Vec<NetworkSnapshot<T>>,
        signal: SwitchingSignal<T>,
        x0: Vec<T>,
        xi0: Vec<Vec<T>>,
    ) -> Self {
        let horizon = signal.horizon();
        Self {
            plant,
            decs: design.decs.clone(),
            coupling: Coupling::Rounds(design.q),
            family,
            signal,
            x0,
            xi0,
            horizon,
            h: T::one(),
            faults: Vec::new(),
            experimental: false,
        }
    }

    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn m(&self) -> usize {
        self.plant.m()
    }

    /// Checks dimensions, parameters and the signal; fault assumptions are checked separately.
    pub fn validate(&self) -> Result<(), SimError> {
        let (n, m) = (self.n(), self.m());
        let dim = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(SimError::DimensionMismatch { what, expected, found })
            }
        };
        dim("agent decompositions", m, self.decs.len())?;
        dim("plant state", n, self.x0.len())?;
        dim("estimator initial states", m, self.xi0.len())?;
        for xi in &self.xi0 {
            dim("estimator state", n, xi.len())?;
        }
        for d in &self.decs {
            dim("decomposition state", n, d.n())?;
        }
        if self.family.is_empty() {
            return Err(SimError::Unsupported("empty graph family".into()));
        }
        for s in &self.family {
            dim("graph vertices", m, s.m())?;
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(SimError::Unsupported(format!("horizon {}", self.horizon)));
        }
        if !(self.h > T::zero()) {
            return Err(SimError::Unsupported(format!("output step {}", self.h)));
        }
        let kind = self.plant.time_kind();
        match (&self.coupling, kind) {
            (Coupling::Gain(g), TimeKind::Continuous) if *g >= T::zero() => {}
            (Coupling::Adaptive(g0), TimeKind::Continuous) => {
                dim("initial adaptive gains", m, g0.len())?;
                if g0.iter().any(|&g| !(g >= T::zero())) {
                    return Err(SimError::Unsupported("initial adaptive gains must be nonnegative".into()));
                }
                if self.family.len() > 1 && self.signal.switch_count() > 0 && !self.experimental {
                    return Err(SimError::Unsupported(
                        "adaptive gains on switching graphs need the experimental flag".into(),
                    ));
                }
            }
            (Coupling::Rounds(q), TimeKind::Discrete) if *q >= 1 => {}
            (c, k) => return Err(SimError::Unsupported(format!("coupling {c:?} with {k:?}-time plant"))),
        }
        if self.signal.family_size_used() > self.family.len() {
            return Err(SimError::InvalidSignal(format!(
                "signal uses graph {} of a family of {}",
                self.signal.family_size_used(),
                self.family.len()
            )));
        }
        if self.signal.horizon() < self.horizon {
            return Err(SimError::InvalidSignal("signal horizon shorter than the simulation".into()));
        }
        if let Some(kind) = self.signal.kind() {
            let v = self.signal.validate(&kind);
            if let Some(viol) = v.violation {
                return Err(SimError::InvalidSignal(format!(
                    "switch {} at t = {}: {}",
                    viol.index, viol.time, viol.reason
                )));
            }
        }
        let mut last = T::neg_infinity();
        for f in &self.faults {
            if f.time < last || !(f.time >= T::zero()) {
                return Err(SimError::InvalidFault("fault times must be nonnegative and sorted".into()));
            }
            last = f.time;
            match f.event {
                FaultEvent::RemoveArc { from, to } if from >= m || to >= m || from == to => {
                    return Err(SimError::InvalidFault(format!("arc ({from}, {to})")));
                }
                FaultEvent::RemoveAgent { agent } if agent >= m => {
                    return Err(SimError::InvalidFault(format!("agent {agent}")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Scenario with the fault events applied at `t` (appended to the fault list).
    pub fn apply_fault(&self, t: T, event: FaultEvent) -> Result<Self, SimError> {
        let mut sc = self.clone();
        sc.faults.push(Fault { time: t, event });
        sc.faults.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap_or(std::cmp::Ordering::Equal));
        sc.validate()?;
        network::NetworkTable::build(&sc)?;
        Ok(sc)
    }
}

/// Runs the simulation matching the scenario's coupling.
pub fn simulate<T: Real>(sc: &Scenario<T>) -> Result<SimulationTrace<T>, SimError> {
    match sc.coupling {
        Coupling::Gain(_) => simulate_continuous(sc),
        Coupling::Adaptive(_) => simulate_adaptive(sc),
        Coupling::Rounds(_) => simulate_discrete(sc),
    }
}
