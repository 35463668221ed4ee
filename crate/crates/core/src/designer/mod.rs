//! Observer synthesis: injection gains, coupling gain `g` and consensus-round count `q`.

mod coupling;
mod gains;
mod rounds;

pub use coupling::{
    certify_fixed, coupled_laplacian, coupling_weights, dwell_formula, gain_bound_arbitrary, gain_bound_dwell,
    gain_bound_fixed, semigroup_sup, transient_bound, ArbitraryGainBound, DwellGainBound, FixedCertificate,
    FixedGainBound, TransientBound, LAMBDA_STAR_FACTOR,
};
pub use gains::{assign_gains, rate_certificate, synth_gain, RateCertificate};
pub use rounds::{
    choose_q_mixed, choose_q_weighted, mixed_norm, round_weight, rounds_at, verify_rounds, weighted_norm, RoundCheck,
    RoundMethod, RoundSelection, MAX_ROUNDS,
};

use thiserror::Error;

use crate::decomposition::{decompose_agent, stack, AgentDecomposition, DecompositionError, Plant, StackedDecomposition};
use crate::matrixkit::{LinalgError, Matrix, TimeKind};
use crate::netgraph::{GraphError, NetworkSnapshot};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("rate {0} is outside the admissible range")]
    InvalidRate(f64),
    #[error("quotient pair is not observable")]
    NotObservable,
    #[error("expected {expected} agents, found {found}")]
    AgentCount { expected: usize, found: usize },
    #[error("coupling cannot stabilize the unobservable part (smallest eigenvalue {lambda_min:e})")]
    CouplingDegenerate { lambda_min: f64 },
    #[error("graph family is empty")]
    EmptyFamily,
    #[error("dwell time {0} must be positive")]
    InvalidDwell(f64),
    #[error("family member {member} is not doubly stochastic")]
    NotDoublyStochastic { member: usize },
    #[error("consensus block of member {member} does not contract (norm {norm})")]
    NoContraction { member: usize, norm: f64 },
    #[error("no admissible round count up to {limit}")]
    RoundsNotFound { limit: usize },
    #[error("{routine} did not converge")]
    NoConvergence { routine: &'static str },
    #[error("plant is {found:?}-time, design requested {expected:?}-time")]
    TimeKindMismatch { expected: TimeKind, found: TimeKind },
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Connectivity regime a continuous design is certified for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime<T: Real = f64> {
    Fixed,
    /// Average dwell time `τ_D` with chatter bound `δ₀`.
    Dwell { tau_d: T, delta0: T },
    /// Arbitrary switching among doubly stochastic flow matrices.
    Arbitrary,
}

/// Where the injection gains come from.
#[derive(Debug, Clone, PartialEq)]
pub enum GainSource<T: Real = f64> {
    Synthesize,
    /// User-supplied `K_i` in original coordinates, one per agent.
    Given(Vec<Matrix<T>>),
}

/// Where the coupling gain comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSource<T: Real = f64> {
    Bound,
    Given(T),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingReport<T: Real = f64> {
    Fixed(FixedGainBound<T>),
    Dwell(DwellGainBound<T>),
    Arbitrary(ArbitraryGainBound<T>),
}

impl<T: Real> CouplingReport<T> {
    /// The computed sufficient bound.
    pub fn bound(&self) -> T {
        match self {
            CouplingReport::Fixed(b) => b.g,
            CouplingReport::Dwell(b) => b.g,
            CouplingReport::Arbitrary(b) => b.g,
        }
    }

    pub fn clamped(&self) -> bool {
        match self {
            CouplingReport::Fixed(b) => b.clamped,
            CouplingReport::Dwell(_) => false,
            CouplingReport::Arbitrary(b) => b.clamped,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDesign<T: Real = f64> {
    pub rate: T,
    pub decs: Vec<AgentDecomposition<T>>,
    pub stacked: StackedDecomposition<T>,
    /// Coupling gain used by the estimator.
    pub g: T,
    pub regime: Regime<T>,
    /// `blockdiag{π_i I_{n_i}}` of the first family member.
    pub h: Matrix<T>,
    pub rate_certificates: Vec<RateCertificate<T>>,
    pub coupling: CouplingReport<T>,
    /// Certificate of `g` on each family member (fixed-graph test).
    pub member_certificates: Vec<FixedCertificate<T>>,
}

impl<T: Real> ContinuousDesign<T> {
    pub fn rates_hold(&self) -> bool {
        self.rate_certificates.iter().all(RateCertificate::holds)
    }

    /// `g` is at least the regime's sufficient bound.
    pub fn gain_sufficient(&self) -> bool {
        self.g >= self.coupling.bound() * (T::one() - T::tol(1e-12))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDesign<T: Real = f64> {
    pub rate: T,
    pub decs: Vec<AgentDecomposition<T>>,
    pub stacked: StackedDecomposition<T>,
    /// Rounds used by the estimator.
    pub q: usize,
    pub method: RoundMethod,
    pub selection: RoundSelection<T>,
    pub check: RoundCheck<T>,
    pub rate_certificates: Vec<RateCertificate<T>>,
    /// Spectral radius of `A_V = Ã·B^q` per family member.
    pub member_radii: Vec<T>,
}

impl<T: Real> DiscreteDesign<T> {
    pub fn rates_hold(&self) -> bool {
        self.rate_certificates.iter().all(RateCertificate::holds)
    }
}

fn prepare<T: Real>(
    plant: &Plant<T>,
    rate: T,
    kind: TimeKind,
    gains: &GainSource<T>,
    bases: Option<&[Matrix<T>]>,
) -> Result<(Vec<AgentDecomposition<T>>, Vec<RateCertificate<T>>), DesignError> {
    if plant.time_kind() != kind {
        return Err(DesignError::TimeKindMismatch { expected: kind, found: plant.time_kind() });
    }
    gains::check_rate(rate, kind)?;
    let raw: Vec<AgentDecomposition<T>> = match bases {
        Some(qs) => {
            if qs.len() != plant.m() {
                return Err(DesignError::AgentCount { expected: plant.m(), found: qs.len() });
            }
            qs.iter()
                .enumerate()
                .map(|(i, q)| crate::decomposition::decompose_agent_with_quotient_basis(plant, i, q))
                .collect::<Result<_, _>>()?
        }
        None => (0..plant.m()).map(|i| decompose_agent(plant, i)).collect::<Result<_, _>>()?,
    };
    let decs = match gains {
        GainSource::Synthesize => raw.iter().map(|d| synth_gain(d, rate, kind)).collect::<Result<Vec<_>, _>>()?,
        GainSource::Given(ks) => assign_gains(&raw, ks)?,
    };
    let certs = decs.iter().map(|d| rate_certificate(d, rate, kind)).collect::<Result<Vec<_>, _>>()?;
    Ok((decs, certs))
}

/// Full continuous-time design over a graph family (one member for a fixed graph).
pub fn design_continuous<T: Real>(
    plant: &Plant<T>,
    family: &[NetworkSnapshot<T>],
    rate: T,
    regime: Regime<T>,
    gains: &GainSource<T>,
    coupling: CouplingSource<T>,
    bases: Option<&[Matrix<T>]>,
) -> Result<ContinuousDesign<T>, DesignError> {
    let first = family.first().ok_or(DesignError::EmptyFamily)?;
    let (decs, rate_certificates) = prepare(plant, rate, TimeKind::Continuous, gains, bases)?;
    let stacked = stack(&decs)?;
    let report = match regime {
        Regime::Fixed => CouplingReport::Fixed(gain_bound_fixed(&stacked, first, rate)?),
        Regime::Dwell { tau_d, .. } => CouplingReport::Dwell(gain_bound_dwell(&stacked, family, tau_d, rate)?),
        Regime::Arbitrary => CouplingReport::Arbitrary(gain_bound_arbitrary(&stacked, family, rate)?),
    };
    let g = match coupling {
        CouplingSource::Bound => report.bound(),
        CouplingSource::Given(g) => g,
    };
    let member_certificates =
        family.iter().map(|s| certify_fixed(&stacked, s, rate, g)).collect::<Result<Vec<_>, _>>()?;
    Ok(ContinuousDesign {
        rate,
        h: coupling_weights(&stacked, &first.pi),
        decs,
        stacked,
        g,
        regime,
        rate_certificates,
        coupling: report,
        member_certificates,
    })
}

/// Full discrete-time design. Without an explicit `q` the method selects one; with it, the
/// certificate of that `q` is computed instead. Either way the check is recomputed independently.
pub fn design_discrete<T: Real>(
    plant: &Plant<T>,
    family: &[NetworkSnapshot<T>],
    rate: T,
    method: RoundMethod,
    gains: &GainSource<T>,
    q: Option<usize>,
    bases: Option<&[Matrix<T>]>,
) -> Result<DiscreteDesign<T>, DesignError> {
    if family.is_empty() {
        return Err(DesignError::EmptyFamily);
    }
    let (decs, rate_certificates) = prepare(plant, rate, TimeKind::Discrete, gains, bases)?;
    let stacked = stack(&decs)?;
    let selection = match (q, method) {
        (Some(q), _) => rounds_at(&stacked, family, rate, method, q)?,
        (None, RoundMethod::MixedNorm) => choose_q_mixed(&stacked, family, rate)?,
        (None, _) => choose_q_weighted(&stacked, family, rate)?,
    };
    let check = verify_rounds(&stacked, family, rate, &selection)?;
    let q = selection.q;
    let member_radii = family
        .iter()
        .map(|s| {
            if stacked.n_bar == 0 {
                Ok(T::zero())
            } else {
                Ok(crate::matrixkit::spectral_radius(&stacked.a_v_discrete(&s.s, q))?)
            }
        })
        .collect::<Result<Vec<_>, DesignError>>()?;
    Ok(DiscreteDesign {
        rate,
        decs,
        stacked,
        q,
        method: selection.method,
        selection,
        check,
        rate_certificates,
        member_radii,
    })
}

#[cfg(test)]
mod tests;
