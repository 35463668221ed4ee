//! Lower bounds on the coupling gain `g` for fixed, dwell-time and arbitrarily switching graphs.

use super::DesignError;
use crate::decomposition::StackedDecomposition;
use crate::matrixkit::{
    eigenvalues, induced_two_norm, kron, matrix_exponential, symmetric_extremes, Matrix,
};
use crate::netgraph::{doubly_stochastic, NetworkSnapshot, DOUBLY_STOCHASTIC_TOL};
use crate::scalar::Real;

/// Denominators at or below this value mean the coupling cannot stabilize the unobservable part.
const DEGENERATE_TOL: f64 = 1e-12;
/// Safety factor applied to the smallest decay margin of the family.
pub const LAMBDA_STAR_FACTOR: f64 = 0.99;
const MAX_GRID_STEPS: usize = 2_000_000;

/// `H = blockdiag{π_i I_{n_i}}`.
pub fn coupling_weights<T: Real>(stacked: &StackedDecomposition<T>, pi: &[T]) -> Matrix<T> {
    let diag: Vec<T> = stacked.dims.iter().zip(pi).flat_map(|(&ni, &p)| std::iter::repeat(p).take(ni)).collect();
    Matrix::from_diag(&diag)
}

/// `Vᵀ(L ⊗ I_n)V`.
pub fn coupled_laplacian<T: Real>(stacked: &StackedDecomposition<T>, l: &Matrix<T>) -> Matrix<T> {
    let big = kron(l, &Matrix::identity(stacked.n));
    &(&stacked.v.transpose() * &big) * &stacked.v
}

fn sym<T: Real>(m: &Matrix<T>) -> Matrix<T> {
    m + &m.transpose()
}

fn lambda_max<T: Real>(m: &Matrix<T>) -> Result<T, DesignError> {
    Ok(symmetric_extremes(m)?.map_or(T::neg_infinity(), |(_, hi)| hi))
}

fn lambda_min<T: Real>(m: &Matrix<T>) -> Result<T, DesignError> {
    Ok(symmetric_extremes(m)?.map_or(T::infinity(), |(lo, _)| lo))
}

/// Bound for a fixed graph together with its a-posteriori certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedGainBound<T: Real = f64> {
    pub g: T,
    /// `λ_max(H(λI+Ã) + (λI+Ã)ᵀH)`.
    pub numerator: T,
    /// `λ_min(Vᵀ(L⊗I)V)`.
    pub denominator: T,
    /// The numerator was negative and `g` was clamped to zero.
    pub clamped: bool,
    pub certificate: FixedCertificate<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedCertificate<T: Real = f64> {
    pub g: T,
    /// Spectral abscissa of `λI + Ã − g·Vᵀ(I−S̄)V`.
    pub abscissa: T,
    /// Largest eigenvalue of `H(λI+A_V) + (λI+A_V)ᵀH`.
    pub lmi_max: T,
}

impl<T: Real> FixedCertificate<T> {
    pub fn holds(&self) -> bool {
        self.abscissa <= T::tol(1e-9) && self.lmi_max <= T::tol(1e-9)
    }
}

/// Checks a given coupling gain against rate `λ` on one graph.
pub fn certify_fixed<T: Real>(
    stacked: &StackedDecomposition<T>,
    snapshot: &NetworkSnapshot<T>,
    rate: T,
    g: T,
) -> Result<FixedCertificate<T>, DesignError> {
    if stacked.n_bar == 0 {
        return Ok(FixedCertificate { g, abscissa: T::neg_infinity(), lmi_max: T::neg_infinity() });
    }
    let a_v = stacked.a_v_continuous(&snapshot.s, g).add_diagonal(rate);
    let h = coupling_weights(stacked, &snapshot.pi);
    let abscissa = eigenvalues(&a_v)?.abscissa;
    let lmi_max = lambda_max(&sym(&(&h * &a_v)))?;
    Ok(FixedCertificate { g, abscissa, lmi_max })
}

pub fn gain_bound_fixed<T: Real>(
    stacked: &StackedDecomposition<T>,
    snapshot: &NetworkSnapshot<T>,
    rate: T,
) -> Result<FixedGainBound<T>, DesignError> {
    if stacked.n_bar == 0 {
        return Ok(FixedGainBound {
            g: T::zero(),
            numerator: T::zero(),
            denominator: T::zero(),
            clamped: false,
            certificate: certify_fixed(stacked, snapshot, rate, T::zero())?,
        });
    }
    let h = coupling_weights(stacked, &snapshot.pi);
    let shifted = stacked.a_tilde.add_diagonal(rate);
    let numerator = lambda_max(&sym(&(&h * &shifted)))?;
    let denominator = lambda_min(&coupled_laplacian(stacked, &snapshot.l))?;
    if !(denominator > T::lit(DEGENERATE_TOL)) {
        return Err(DesignError::CouplingDegenerate { lambda_min: denominator.as_f64() });
    }
    let raw = numerator / denominator;
    let clamped = raw < T::zero();
    let g = raw.max(T::zero());
    Ok(FixedGainBound { g, numerator, denominator, clamped, certificate: certify_fixed(stacked, snapshot, rate, g)? })
}

/// Transient constants of the switched family `{−Vᵀ(I−S̄_k)V}`:
/// `‖exp(−Vᵀ(I−S̄_k)V·t)‖ ≤ c·exp(−λ*·t)` for every member and `t ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientBound<T: Real = f64> {
    pub c: T,
    pub lambda_star: T,
    /// Per-member decay margin `−abscissa(−Vᵀ(I−S̄_k)V)`.
    pub margins: Vec<T>,
    /// Per-member transient constant at the common `λ*`.
    pub member_c: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwellGainBound<T: Real = f64> {
    pub g: T,
    pub tau_d: T,
    pub norm_a_tilde: T,
    pub transient: TransientBound<T>,
}

/// `sup_{t≥0} ‖exp(N·t)‖` for a stable `N`.
///
/// The norm is sampled on a grid of step `h` until it first drops to at most one; after such a
/// time `t*` the semigroup property bounds the norm by its supremum over `[0, t*]`. Between grid
/// points the norm can exceed the sampled value by at most `exp(μ(N)·h)`, `μ` the logarithmic norm.
pub fn semigroup_sup<T: Real>(n: &Matrix<T>) -> Result<T, DesignError> {
    if n.rows() == 0 {
        return Ok(T::one());
    }
    let spec = eigenvalues(n)?;
    if !(spec.abscissa < T::zero()) {
        return Err(DesignError::CouplingDegenerate { lambda_min: (-spec.abscissa).as_f64() });
    }
    let norm = induced_two_norm(n);
    let h = T::lit(0.05) / T::one().max(norm);
    let mu = lambda_max(&sym(n))? * T::lit(0.5);
    let step = matrix_exponential(&n.scale(h))?;
    let mut e = step.clone();
    let mut sup = T::one();
    for _ in 0..MAX_GRID_STEPS {
        let v = induced_two_norm(&e);
        sup = sup.max(v);
        if v <= T::one() {
            return Ok(sup * (mu.max(T::zero()) * h).exp());
        }
        e = &e * &step;
    }
    Err(DesignError::NoConvergence { routine: "transient bound" })
}

pub fn transient_bound<T: Real>(
    stacked: &StackedDecomposition<T>,
    family: &[NetworkSnapshot<T>],
) -> Result<TransientBound<T>, DesignError> {
    if family.is_empty() {
        return Err(DesignError::EmptyFamily);
    }
    let ms: Vec<Matrix<T>> = family.iter().map(|s| -stacked.disagreement(&s.s)).collect();
    let mut margins = Vec::with_capacity(ms.len());
    for m in &ms {
        let a = if m.rows() == 0 { T::neg_infinity() } else { eigenvalues(m)?.abscissa };
        if m.rows() > 0 && !(a < T::zero()) {
            return Err(DesignError::CouplingDegenerate { lambda_min: (-a).as_f64() });
        }
        margins.push(-a);
    }
    if stacked.n_bar == 0 {
        return Ok(TransientBound { c: T::one(), lambda_star: T::infinity(), member_c: vec![T::one(); ms.len()], margins });
    }
    let lambda_star = T::lit(LAMBDA_STAR_FACTOR) * margins.iter().copied().fold(T::infinity(), T::min);
    let member_c = ms.iter().map(|m| semigroup_sup(&m.add_diagonal(lambda_star))).collect::<Result<Vec<_>, _>>()?;
    let c = member_c.iter().copied().fold(T::one(), T::max);
    Ok(TransientBound { c, lambda_star, margins, member_c })
}

/// `g ≥ (ln c + (λ + ‖Ã‖·c)·τ_D) / (λ*·τ_D)` for (average) dwell-time switching.
pub fn gain_bound_dwell<T: Real>(
    stacked: &StackedDecomposition<T>,
    family: &[NetworkSnapshot<T>],
    tau_d: T,
    rate: T,
) -> Result<DwellGainBound<T>, DesignError> {
    if !(tau_d > T::zero()) {
        return Err(DesignError::InvalidDwell(tau_d.as_f64()));
    }
    let transient = transient_bound(stacked, family)?;
    let norm_a_tilde = induced_two_norm(&stacked.a_tilde);
    let g = if stacked.n_bar == 0 {
        T::zero()
    } else {
        dwell_formula(transient.c, transient.lambda_star, norm_a_tilde, tau_d, rate)
    };
    Ok(DwellGainBound { g, tau_d, norm_a_tilde, transient })
}

pub fn dwell_formula<T: Real>(c: T, lambda_star: T, norm_a_tilde: T, tau_d: T, rate: T) -> T {
    (c.ln() + (rate + norm_a_tilde * c) * tau_d) / (lambda_star * tau_d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbitraryGainBound<T: Real = f64> {
    pub g: T,
    /// `λ_max((λI+Ã) + (λI+Ã)ᵀ)`.
    pub numerator: T,
    /// Per-member `λ_min(Vᵀ((2I − S − Sᵀ)⊗I)V)`.
    pub denominators: Vec<T>,
    pub clamped: bool,
    /// Per-member largest eigenvalue of the symmetric part of `λI + A_V`.
    pub certificates: Vec<T>,
}

impl<T: Real> ArbitraryGainBound<T> {
    pub fn holds(&self) -> bool {
        self.certificates.iter().all(|&c| c <= T::tol(1e-9))
    }
}

/// Bound for arbitrary switching among doubly stochastic graphs: `(λI + A_V)` then has a negative
/// semidefinite symmetric part for every member, so `‖z‖₂` decays at rate `λ` under any switching.
pub fn gain_bound_arbitrary<T: Real>(
    stacked: &StackedDecomposition<T>,
    family: &[NetworkSnapshot<T>],
    rate: T,
) -> Result<ArbitraryGainBound<T>, DesignError> {
    if family.is_empty() {
        return Err(DesignError::EmptyFamily);
    }
    if let Some(member) = family.iter().position(|s| !doubly_stochastic(&s.s, T::lit(DOUBLY_STOCHASTIC_TOL))) {
        return Err(DesignError::NotDoublyStochastic { member });
    }
    let shifted = stacked.a_tilde.add_diagonal(rate);
    let numerator = if stacked.n_bar == 0 { T::zero() } else { lambda_max(&sym(&shifted))? };
    let mut denominators = Vec::with_capacity(family.len());
    let mut g = T::zero();
    for snap in family {
        let d = sym(&stacked.disagreement(&snap.s));
        let den = if stacked.n_bar == 0 { T::infinity() } else { lambda_min(&d)? };
        if stacked.n_bar > 0 && !(den > T::lit(DEGENERATE_TOL)) {
            return Err(DesignError::CouplingDegenerate { lambda_min: den.as_f64() });
        }
        g = g.max(numerator / den);
        denominators.push(den);
    }
    let clamped = numerator < T::zero();
    let certificates = family
        .iter()
        .map(|snap| {
            if stacked.n_bar == 0 {
                return Ok(T::neg_infinity());
            }
            let a_v = stacked.a_v_continuous(&snap.s, g).add_diagonal(rate);
            lambda_max(&a_v.symmetric_part())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ArbitraryGainBound { g, numerator, denominators, clamped, certificates })
}
