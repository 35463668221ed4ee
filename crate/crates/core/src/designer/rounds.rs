//! Choice of the number `q` of consensus rounds per event time.
//!
//! The selection loops compute norms through singular values; [`verify_rounds`] recomputes every
//! certificate through symmetric eigenvalues instead, so the two paths share no norm code.

use super::DesignError;
use crate::decomposition::StackedDecomposition;
use crate::matrixkit::{induced_two_norm, symmetric_eigen, symmetric_sqrt, lu, Matrix};
use crate::netgraph::NetworkSnapshot;
use crate::scalar::Real;

/// Upper limit for `q`, `p` and `p̄` searches.
pub const MAX_ROUNDS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundMethod {
    /// `‖·‖_R` on a fixed graph.
    WeightedTwoNorm,
    /// Plain two-norm, used by the weighted method when the graph switches.
    TwoNorm,
    /// Block-wise mixed norm `‖⟨M⟩‖_∞`.
    MixedNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundSelection<T: Real = f64> {
    pub q: usize,
    pub method: RoundMethod,
    pub p: usize,
    pub p_bar: usize,
    /// `‖B‖_R` (weighted) or the largest `‖B^p‖` over the family.
    pub contraction: T,
    /// Norm of `Ã` in the method's norm.
    pub a_norm: T,
    /// Left-hand side of the certificate inequality `… ≤ λ`.
    pub certificate: T,
}

/// `R = Vᵀ(Π ⊗ I_n)V` for one snapshot.
pub fn round_weight<T: Real>(stacked: &StackedDecomposition<T>, snapshot: &NetworkSnapshot<T>) -> Matrix<T> {
    let big = crate::matrixkit::kron(&snapshot.pi_mat, &Matrix::identity(stacked.n));
    &(&stacked.v.transpose() * &big) * &stacked.v
}

/// `‖M‖_R = σ_max(R^{1/2}·M·R^{-1/2})`.
pub fn weighted_norm<T: Real>(m: &Matrix<T>, r: &Matrix<T>) -> Result<T, DesignError> {
    if m.is_empty() {
        return Ok(T::zero());
    }
    let half = symmetric_sqrt(r)?;
    let inv_half = lu::inverse(&half)?;
    Ok(induced_two_norm(&(&(&half * m) * &inv_half)))
}

/// Mixed norm with row blocks `rows` and column blocks `cols`.
pub fn mixed_norm<T: Real>(m: &Matrix<T>, rows: &[usize], cols: &[usize]) -> T {
    let mut worst = T::zero();
    let mut r0 = 0;
    for &nr in rows {
        let mut c0 = 0;
        let mut sum = T::zero();
        for &nc in cols {
            if nr > 0 && nc > 0 {
                sum += induced_two_norm(&m.block(r0, c0, nr, nc));
            }
            c0 += nc;
        }
        worst = worst.max(sum);
        r0 += nr;
    }
    worst
}

fn first_power(mut pred: impl FnMut(usize) -> Result<bool, DesignError>) -> Result<usize, DesignError> {
    for k in 1..=MAX_ROUNDS {
        if pred(k)? {
            return Ok(k);
        }
    }
    Err(DesignError::RoundsNotFound { limit: MAX_ROUNDS })
}

fn trivial<T: Real>(method: RoundMethod) -> RoundSelection<T> {
    RoundSelection { q: 1, method, p: 1, p_bar: 1, contraction: T::zero(), a_norm: T::zero(), certificate: T::zero() }
}

/// Weighted two-norm selection. A single snapshot gives the smallest `q` with
/// `‖B‖_R^q·‖Ã‖_R ≤ λ`; a switching family falls back to the two-norm: the smallest `p` with
/// `‖B_k^p‖₂ < 1` for all members, then the smallest `p̄` with `‖Ã(B_k^p)^p̄‖₂ ≤ λ`, `q = p·p̄`.
pub fn choose_q_weighted<T: Real>(
    stacked: &StackedDecomposition<T>,
    family: &[NetworkSnapshot<T>],
    rate: T,
) -> Result<RoundSelection<T>, DesignError> {
    super::gains::check_rate(rate, crate::TimeKind::Discrete)?;
    if family.is_empty() {
        return Err(DesignError::EmptyFamily);
    }
    if family.len() == 1 {
        if stacked.n_bar == 0 {
            return Ok(trivial(RoundMethod::WeightedTwoNorm));
        }
        let snap = &family[0];
        let r = round_weight(stacked, snap);
        let b = stacked.consensus_block(&snap.s);
        let nb = weighted_norm(&b, &r)?;
        let na = weighted_norm(&stacked.a_tilde, &r)?;
        if !(nb < T::one()) && na > T::zero() {
            return Err(DesignError::NoContraction { member: 0, norm: nb.as_f64() });
        }
        let q = first_power(|k| Ok(nb.powi(k as i32) * na <= rate))?;
        return Ok(RoundSelection {
            q,
            method: RoundMethod::WeightedTwoNorm,
            p: 1,
            p_bar: q,
            contraction: nb,
            a_norm: na,
            certificate: nb.powi(q as i32) * na,
        });
    }
    if stacked.n_bar == 0 {
        return Ok(trivial(RoundMethod::TwoNorm));
    }
    let bs: Vec<Matrix<T>> = family.iter().map(|s| stacked.consensus_block(&s.s)).collect();
    let p = first_power(|k| Ok(bs.iter().all(|b| induced_two_norm(&b.pow(k)) < T::one())))?;
    let bps: Vec<Matrix<T>> = bs.iter().map(|b| b.pow(p)).collect();
    let contraction = bps.iter().map(induced_two_norm).fold(T::zero(), T::max);
    let lhs = |pb: usize| bps.iter().map(|bp| induced_two_norm(&(&stacked.a_tilde * &bp.pow(pb)))).fold(T::zero(), T::max);
    let p_bar = first_power(|k| Ok(lhs(k) <= rate))?;
    Ok(RoundSelection {
        q: p * p_bar,
        method: RoundMethod::TwoNorm,
        p,
        p_bar,
        contraction,
        a_norm: induced_two_norm(&stacked.a_tilde),
        certificate: lhs(p_bar),
    })
}

/// Mixed-norm selection: `p = (m−1)²`, then the smallest `p̄` with `‖B_k^p‖^p̄ ≤ λ/‖Ã‖` for every
/// member, `q = p·p̄`.
pub fn choose_q_mixed<T: Real>(
    stacked: &StackedDecomposition<T>,
    family: &[NetworkSnapshot<T>],
    rate: T,
) -> Result<RoundSelection<T>, DesignError> {
    super::gains::check_rate(rate, crate::TimeKind::Discrete)?;
    if family.is_empty() {
        return Err(DesignError::EmptyFamily);
    }
    if stacked.n_bar == 0 {
        return Ok(trivial(RoundMethod::MixedNorm));
    }
    let m = stacked.m();
    let p = ((m - 1) * (m - 1)).max(1);
    let dims = &stacked.dims;
    let na = mixed_norm(&stacked.a_tilde, dims, dims);
    let mut contraction = T::zero();
    for (k, snap) in family.iter().enumerate() {
        let nb = mixed_norm(&stacked.consensus_block(&snap.s).pow(p), dims, dims);
        if !(nb < T::one()) {
            return Err(DesignError::NoContraction { member: k, norm: nb.as_f64() });
        }
        contraction = contraction.max(nb);
    }
    let p_bar = if na == T::zero() { 1 } else { first_power(|k| Ok(contraction.powi(k as i32) * na <= rate))? };
    Ok(RoundSelection {
        q: p * p_bar,
        method: RoundMethod::MixedNorm,
        p,
        p_bar,
        contraction,
        a_norm: na,
        certificate: contraction.powi(p_bar as i32) * na,
    })
}

/// Certificate of a given round count `q` under `method`. Switching families and the mixed norm
/// split `q = p·p̄` over the divisors `p` of `q`, keeping the split with the smallest left-hand
/// side among those whose consensus blocks contract.
pub fn rounds_at<T: Real>(
    stacked: &StackedDecomposition<T>,
    family: &[NetworkSnapshot<T>],
    rate: T,
    method: RoundMethod,
    q: usize,
) -> Result<RoundSelection<T>, DesignError> {
    super::gains::check_rate(rate, crate::TimeKind::Discrete)?;
    if family.is_empty() {
        return Err(DesignError::EmptyFamily);
    }
    if q == 0 {
        return Err(DesignError::RoundsNotFound { limit: 0 });
    }
    let method = match method {
        RoundMethod::MixedNorm => RoundMethod::MixedNorm,
        _ if family.len() == 1 => RoundMethod::WeightedTwoNorm,
        _ => RoundMethod::TwoNorm,
    };
    if stacked.n_bar == 0 {
        return Ok(RoundSelection { q, p_bar: q, ..trivial(method) });
    }
    if method == RoundMethod::WeightedTwoNorm {
        let snap = &family[0];
        let r = round_weight(stacked, snap);
        let nb = weighted_norm(&stacked.consensus_block(&snap.s), &r)?;
        let na = weighted_norm(&stacked.a_tilde, &r)?;
        return Ok(RoundSelection {
            q,
            method,
            p: 1,
            p_bar: q,
            contraction: nb,
            a_norm: na,
            certificate: nb.powi(q as i32) * na,
        });
    }
    let bs: Vec<Matrix<T>> = family.iter().map(|s| stacked.consensus_block(&s.s)).collect();
    let dims = &stacked.dims;
    let mut best: Option<RoundSelection<T>> = None;
    for p in (1..=q).filter(|p| q % p == 0) {
        let p_bar = q / p;
        let bps: Vec<Matrix<T>> = bs.iter().map(|b| b.pow(p)).collect();
        let (contraction, a_norm, certificate) = if method == RoundMethod::TwoNorm {
            let c = bps.iter().map(induced_two_norm).fold(T::zero(), T::max);
            let lhs =
                bps.iter().map(|bp| induced_two_norm(&(&stacked.a_tilde * &bp.pow(p_bar)))).fold(T::zero(), T::max);
            (c, induced_two_norm(&stacked.a_tilde), lhs)
        } else {
            let c = bps.iter().map(|bp| mixed_norm(bp, dims, dims)).fold(T::zero(), T::max);
            let na = mixed_norm(&stacked.a_tilde, dims, dims);
            (c, na, c.powi(p_bar as i32) * na)
        };
        let sel = RoundSelection { q, method, p, p_bar, contraction, a_norm, certificate };
        let better = match &best {
            None => true,
            Some(b) => {
                let (ok, b_ok) = (contraction < T::one(), b.contraction < T::one());
                (ok && !b_ok) || (ok == b_ok && certificate < b.certificate)
            }
        };
        if better {
            best = Some(sel);
        }
    }
    Ok(best.expect("q has at least one divisor"))
}

/// Independent recomputation of a selection's certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundCheck<T: Real = f64> {
    /// Certificate left-hand side recomputed.
    pub value: T,
    /// Every contraction premise (`‖B‖ < 1` in the method's norm) holds.
    pub contracts: bool,
    pub holds: bool,
}

fn two_norm_by_gram<T: Real>(m: &Matrix<T>) -> Result<T, DesignError> {
    if m.is_empty() {
        return Ok(T::zero());
    }
    let g = &m.transpose() * m;
    Ok(symmetric_eigen(&g)?.values.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt())
}

/// `‖M‖_R² = λ_max(R^{-1/2}·MᵀRM·R^{-1/2})`, with `R` diagonal-free square roots via eigenvectors.
fn weighted_norm_by_gram<T: Real>(m: &Matrix<T>, r: &Matrix<T>) -> Result<T, DesignError> {
    if m.is_empty() {
        return Ok(T::zero());
    }
    let e = symmetric_eigen(r)?;
    let inv_sqrt: Vec<T> = e.values.iter().map(|&x| T::one() / x.sqrt()).collect();
    let r_inv_half = &(&e.vectors * &Matrix::from_diag(&inv_sqrt)) * &e.vectors.transpose();
    let inner = &(&(&m.transpose() * r) * m);
    let g = &(&r_inv_half * inner) * &r_inv_half;
    Ok(symmetric_eigen(&g)?.values.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt())
}

fn mixed_norm_by_gram<T: Real>(m: &Matrix<T>, dims: &[usize]) -> Result<T, DesignError> {
    let offsets: Vec<usize> = dims.iter().scan(0, |acc, &d| {
        let o = *acc;
        *acc += d;
        Some(o)
    }).collect();
    let mut worst = T::zero();
    for (i, &ri) in dims.iter().enumerate() {
        let mut sum = T::zero();
        for (j, &cj) in dims.iter().enumerate() {
            if ri > 0 && cj > 0 {
                sum += two_norm_by_gram(&m.block(offsets[i], offsets[j], ri, cj))?;
            }
        }
        worst = worst.max(sum);
    }
    Ok(worst)
}

pub fn verify_rounds<T: Real>(
    stacked: &StackedDecomposition<T>,
    family: &[NetworkSnapshot<T>],
    rate: T,
    sel: &RoundSelection<T>,
) -> Result<RoundCheck<T>, DesignError> {
    if stacked.n_bar == 0 {
        return Ok(RoundCheck { value: T::zero(), contracts: true, holds: true });
    }
    let slack = T::one() + T::tol(1e-9);
    let (value, contracts) = match sel.method {
        RoundMethod::WeightedTwoNorm => {
            let snap = family.first().ok_or(DesignError::EmptyFamily)?;
            let r = round_weight(stacked, snap);
            let b = stacked.consensus_block(&snap.s);
            let nb = weighted_norm_by_gram(&b, &r)?;
            let na = weighted_norm_by_gram(&stacked.a_tilde, &r)?;
            (nb.powi(sel.q as i32) * na, nb < T::one())
        }
        RoundMethod::TwoNorm => {
            let mut value = T::zero();
            let mut contracts = true;
            for snap in family {
                let bp = stacked.consensus_block(&snap.s).pow(sel.p);
                contracts &= two_norm_by_gram(&bp)? < T::one();
                value = value.max(two_norm_by_gram(&(&stacked.a_tilde * &bp.pow(sel.p_bar)))?);
            }
            (value, contracts)
        }
        RoundMethod::MixedNorm => {
            let dims = &stacked.dims;
            let na = mixed_norm_by_gram(&stacked.a_tilde, dims)?;
            let mut worst = T::zero();
            for snap in family {
                worst = worst.max(mixed_norm_by_gram(&stacked.consensus_block(&snap.s).pow(sel.p), dims)?);
            }
            (worst.powi(sel.p_bar as i32) * na, worst < T::one())
        }
    };
    Ok(RoundCheck { value, contracts, holds: contracts && value <= rate * slack })
}
