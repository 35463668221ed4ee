use super::DesignError;
use crate::decomposition::AgentDecomposition;
use crate::matrixkit::{eigenvalues, injection_gain, solve_riccati, LinalgError, Matrix, TimeKind};
use crate::scalar::Real;

/// Designs the quotient gain `K̄` so that `Ā + K̄C̄` decays at least at `rate`, and lifts it.
///
/// Continuous time solves the Riccati equation for the shifted pair `(Ā + λI, C̄)`; discrete time
/// solves it for `(Ā/λ, C̄)` and rescales the gain by `λ`.
pub fn synth_gain<T: Real>(
    dec: &AgentDecomposition<T>,
    rate: T,
    kind: TimeKind,
) -> Result<AgentDecomposition<T>, DesignError> {
    check_rate(rate, kind)?;
    let a_bar = &dec.a_bar;
    let c_bar = &dec.c_bar;
    let k_bar = match kind {
        TimeKind::Continuous => {
            let shifted = a_bar.add_diagonal(rate);
            let p = solve_riccati(&shifted, c_bar, kind).map_err(riccati_error)?;
            injection_gain(&shifted, c_bar, &p, kind)?
        }
        TimeKind::Discrete => {
            let scaled = a_bar.scale(T::one() / rate);
            let p = solve_riccati(&scaled, c_bar, kind).map_err(riccati_error)?;
            injection_gain(&scaled, c_bar, &p, kind)?.scale(rate)
        }
    };
    Ok(dec.with_quotient_gain(&k_bar)?)
}

fn riccati_error(e: LinalgError) -> DesignError {
    match e {
        LinalgError::NotObservable => DesignError::NotObservable,
        other => DesignError::Linalg(other),
    }
}

pub(crate) fn check_rate<T: Real>(rate: T, kind: TimeKind) -> Result<(), DesignError> {
    let ok = match kind {
        TimeKind::Continuous => rate >= T::zero() && rate.is_finite(),
        TimeKind::Discrete => rate > T::zero() && rate < T::one(),
    };
    if ok {
        Ok(())
    } else {
        Err(DesignError::InvalidRate(rate.as_f64()))
    }
}

/// How the quotient closed loop of one agent compares with the prescribed rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCertificate<T: Real = f64> {
    pub agent: usize,
    /// Spectral abscissa (continuous) or spectral radius (discrete) of `Ā + K̄C̄`.
    pub value: T,
    /// `−λ` (continuous) or `λ` (discrete).
    pub bound: T,
    /// `bound − value`; nonnegative when the rate is met.
    pub margin: T,
}

impl<T: Real> RateCertificate<T> {
    pub fn holds(&self) -> bool {
        self.margin >= -T::tol(1e-9)
    }
}

pub fn rate_certificate<T: Real>(
    dec: &AgentDecomposition<T>,
    rate: T,
    kind: TimeKind,
) -> Result<RateCertificate<T>, DesignError> {
    let spec = eigenvalues(&dec.quotient_closed_loop())?;
    let (value, bound) = match kind {
        TimeKind::Continuous => (spec.abscissa, -rate),
        TimeKind::Discrete => (spec.radius, rate),
    };
    Ok(RateCertificate { agent: dec.index, value, bound, margin: bound - value })
}

/// Lifts user-supplied gains `K_i` (original coordinates) onto the decompositions.
pub fn assign_gains<T: Real>(
    decs: &[AgentDecomposition<T>],
    gains: &[Matrix<T>],
) -> Result<Vec<AgentDecomposition<T>>, DesignError> {
    if decs.len() != gains.len() {
        return Err(DesignError::AgentCount { expected: decs.len(), found: gains.len() });
    }
    decs.iter().zip(gains).map(|(d, k)| Ok(d.with_lifted_gain(k)?)).collect()
}
