//! Post-hoc checks of simulated and designed objects: decay-rate fits, spectra and Lyapunov
//! residuals.

use std::fmt::Write as _;

use num_complex::Complex;
use thiserror::Error;

use crate::decomposition::StackedDecomposition;
use crate::designer::coupled_laplacian;
use crate::matrixkit::{eigenvalues, kron, symmetric_extremes, LinalgError, Matrix, TimeKind};
use crate::netgraph::NetworkSnapshot;
use crate::scalar::Real;
use crate::simulator::SimulationTrace;

/// Minimum number of samples a fit needs.
pub const MIN_FIT_SAMPLES: usize = 10;
/// Default noise floor relative to `‖e(0)‖`.
pub const DEFAULT_FLOOR: f64 = 1e-12;
/// Default share of the horizon dropped as transient.
pub const DEFAULT_SKIP: f64 = 0.1;
/// Tolerance of the spectrum-union identity.
pub const UNION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("only {found} usable samples in the fit window, need {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("time and norm series differ in length")]
    LengthMismatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit<T: Real = f64> {
    /// Fitted rate `−slope` of `ln‖e‖` against time.
    pub lambda_est: T,
    pub intercept: T,
    pub window: (T, T),
    /// Largest deviation of `ln‖e‖` from the fitted line.
    pub residual: T,
    pub floor: T,
    pub samples: usize,
    /// Per-event contraction `exp(−λ·T)` for discrete traces.
    pub step_ratio: Option<T>,
}

/// Least-squares line through `(t, ln y)` for samples with `t ∈ [t_a, t_b]` and `y > floor`.
pub fn fit_decay<T: Real>(times: &[T], norms: &[T], window: (T, T), floor: T) -> Result<DecayFit<T>, AnalysisError> {
    if times.len() != norms.len() {
        return Err(AnalysisError::LengthMismatch);
    }
    let pts: Vec<(T, T)> = times
        .iter()
        .zip(norms)
        .filter(|(&t, &y)| t >= window.0 && t <= window.1 && y > floor && y.is_finite())
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(AnalysisError::InsufficientData { found: pts.len(), needed: MIN_FIT_SAMPLES });
    }
    let k = T::from_usize_lossy(pts.len());
    let mt = pts.iter().map(|p| p.0).sum::<T>() / k;
    let my = pts.iter().map(|p| p.1).sum::<T>() / k;
    let sxx: T = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let residual = pts.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(T::zero(), T::max);
    Ok(DecayFit {
        lambda_est: -slope,
        intercept,
        window,
        residual,
        floor,
        samples: pts.len(),
        step_ratio: None,
    })
}

/// Fits `‖e(t)‖` of a trace. `window` defaults to the horizon minus its first 10%, `floor` to
/// `1e-12·‖e(0)‖`. Discrete traces also report the per-event ratio.
pub fn fit_decay_rate<T: Real>(
    trace: &SimulationTrace<T>,
    window: Option<(T, T)>,
    floor: Option<T>,
) -> Result<DecayFit<T>, AnalysisError> {
    let end = trace.times.last().copied().unwrap_or(T::zero());
    let start = trace.times.first().copied().unwrap_or(T::zero());
    let window = window.unwrap_or((start + (end - start) * T::lit(DEFAULT_SKIP), end));
    let e0 = trace.e_norm.first().copied().unwrap_or(T::zero());
    let floor = floor.unwrap_or(T::lit(DEFAULT_FLOOR) * e0);
    let mut fit = fit_decay(&trace.times, &trace.e_norm, window, floor)?;
    if trace.kind == TimeKind::Discrete && trace.times.len() > 1 {
        let period = trace.times[1] - trace.times[0];
        fit.step_ratio = Some((-fit.lambda_est * period).exp());
    }
    Ok(fit)
}

/// Spectra of the error dynamics and of its two diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport<T: Real = f64> {
    pub kind: TimeKind,
    pub full: Vec<Complex<T>>,
    /// `blockdiag{Ā_i + K̄_iC̄_i}`.
    pub observable: Vec<Complex<T>>,
    /// `A_V`.
    pub unobservable: Vec<Complex<T>>,
    /// [`cluster_distance`] between the full spectrum and the union of the blocks, relative to
    /// `max(1, ‖M‖_F)` of the full error matrix `M`.
    pub union_residual: T,
    /// Spectral abscissa (continuous) or radius (discrete) of the full error dynamics.
    pub value: T,
    /// `−λ` or `λ`.
    pub bound: T,
    /// `bound − value`.
    pub margin: T,
}

impl<T: Real> SpectrumReport<T> {
    pub fn union_holds(&self) -> bool {
        self.union_residual <= T::tol(UNION_TOL)
    }

    pub fn rate_holds(&self, tol: T) -> bool {
        self.margin >= -tol
    }
}

/// Greedy nearest matching; returns the largest matched distance (infinite on a size mismatch).
pub fn multiset_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    if a.len() != b.len() {
        return T::infinity();
    }
    let mut used = vec![false; b.len()];
    let mut worst = T::zero();
    for x in a {
        let mut best = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            used[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest linkage radius, relative to the spectral scale, for [`cluster_distance`].
pub const CLUSTER_RADIUS: f64 = 1e-2;

/// Separation ratio, against the linkage distance reached, that ends a cluster.
pub const CLUSTER_GAP: f64 = 100.0;

/// Multiset comparison that is robust to defective eigenvalues.
///
/// Both sets are pooled and grouped by single linkage at the smallest distance (at most
/// `radius`) for which every group holds as many members of `a` as of `b`. Linkage then continues
/// while the next merge is within [`CLUSTER_GAP`] times the distance reached. The result is the
/// largest distance between the two group means, or infinity if no such grouping exists. Means of
/// a cluster are well conditioned even where the members of a `k`-fold eigenvalue are only
/// accurate to the `k`-th root of the rounding error.
pub fn cluster_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>], radius: T) -> T {
    if a.len() != b.len() {
        return T::infinity();
    }
    let pts: Vec<Complex<T>> = a.iter().chain(b).copied().collect();
    let np = pts.len();
    let mut edges: Vec<(T, usize, usize)> = (0..np)
        .flat_map(|i| ((i + 1)..np).map(move |j| (i, j)))
        .map(|(i, j)| ((pts[i] - pts[j]).norm(), i, j))
        .filter(|e| e.0 <= radius)
        .collect();
    edges.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut parent: Vec<usize> = (0..np).collect();
    // Members of `a` minus members of `b` per root.
    let mut excess: Vec<isize> = (0..np).map(|k| if k < a.len() { 1 } else { -1 }).collect();
    let mut unbalanced = np;
    fn root(parent: &mut [usize], mut k: usize) -> usize {
        while parent[k] != k {
            parent[k] = parent[parent[k]];
            k = parent[k];
        }
        k
    }
    let mut k = 0;
    let mut reach = T::zero();
    while unbalanced > 0 {
        let Some(&(d, _, _)) = edges.get(k) else { return T::infinity() };
        while let Some(&(_, i, j)) = edges.get(k).filter(|e| e.0 == d) {
            k += 1;
            let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
            if ri == rj {
                continue;
            }
            unbalanced -= usize::from(excess[ri] != 0) + usize::from(excess[rj] != 0);
            parent[rj] = ri;
            excess[ri] += excess[rj];
            unbalanced += usize::from(excess[ri] != 0);
            reach = d;
        }
    }
    // Balanced groups may still split a cluster; extend them until the next merge is well apart.
    for &(d, i, j) in &edges[k..] {
        let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
        if ri == rj {
            continue;
        }
        if d > reach * T::lit(CLUSTER_GAP) {
            break;
        }
        parent[rj] = ri;
        reach = d;
    }

    let zero = Complex::new(T::zero(), T::zero());
    let mut sums = vec![(zero, zero, 0usize); np];
    for (k, &z) in pts.iter().enumerate() {
        let r = root(&mut parent, k);
        if k < a.len() {
            sums[r].0 = sums[r].0 + z;
            sums[r].2 += 1;
        } else {
            sums[r].1 = sums[r].1 + z;
        }
    }
    sums.iter()
        .filter(|s| s.2 > 0)
        .map(|s| {
            let k = T::from_usize_lossy(s.2);
            (s.0 / k - s.1 / k).norm()
        })
        .fold(T::zero(), T::max)
}

/// Coupling parameter of the error dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorCoupling<T: Real = f64> {
    Gain(T),
    Rounds(usize),
}

pub fn spectrum_report<T: Real>(
    stacked: &StackedDecomposition<T>,
    snapshot: &NetworkSnapshot<T>,
    coupling: ErrorCoupling<T>,
    rate: T,
) -> Result<SpectrumReport<T>, AnalysisError> {
    let (kind, full, a_v) = match coupling {
        ErrorCoupling::Gain(g) => {
            (TimeKind::Continuous, stacked.error_generator(&snapshot.s, g), stacked.a_v_continuous(&snapshot.s, g))
        }
        ErrorCoupling::Rounds(q) => {
            (TimeKind::Discrete, stacked.error_map(&snapshot.s, q), stacked.a_v_discrete(&snapshot.s, q))
        }
    };
    let matrix_scale = T::one().max(full.norm_fro());
    let full = eigenvalues(&full)?;
    let obs = eigenvalues(&stacked.a_bar_v)?;
    let unobs = eigenvalues(&a_v)?;
    let mut union: Vec<Complex<T>> = obs.eigenvalues.clone();
    union.extend(unobs.eigenvalues.iter().copied());
    let scale = T::one().max(full.eigenvalues.iter().map(|z| z.norm()).fold(T::zero(), T::max));
    let union_residual = cluster_distance(&full.eigenvalues, &union, T::lit(CLUSTER_RADIUS) * scale) / matrix_scale;
    let (value, bound) = match kind {
        TimeKind::Continuous => (full.abscissa, -rate),
        TimeKind::Discrete => (full.radius, rate),
    };
    Ok(SpectrumReport {
        kind,
        full: full.eigenvalues,
        observable: obs.eigenvalues,
        unobservable: unobs.eigenvalues,
        union_residual,
        value,
        bound,
        margin: bound - value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovResidual<T: Real = f64> {
    /// `‖H·D + Dᵀ·H − Vᵀ(L⊗I)V‖_F` with `D = Vᵀ(I − S̄)V`.
    pub identity_residual: T,
    /// `λ_min(Vᵀ(L⊗I)V)`.
    pub laplacian_min: T,
    /// `λ_max(BᵀHB − H)` with `B = VᵀS̄V`.
    pub contraction_max: T,
}

pub fn lyapunov_residual<T: Real>(
    snapshot: &NetworkSnapshot<T>,
    stacked: &StackedDecomposition<T>,
) -> Result<LyapunovResidual<T>, AnalysisError> {
    if stacked.n_bar == 0 {
        return Ok(LyapunovResidual { identity_residual: T::zero(), laplacian_min: T::zero(), contraction_max: T::zero() });
    }
    let h = &(&stacked.v.transpose() * &kron(&snapshot.pi_mat, &Matrix::identity(stacked.n))) * &stacked.v;
    let d = stacked.disagreement(&snapshot.s);
    let hd = &h * &d;
    let lv = coupled_laplacian(stacked, &snapshot.l);
    let identity_residual = (&(&hd + &hd.transpose()) - &lv).norm_fro();
    let b = stacked.consensus_block(&snapshot.s);
    let c = &(&(&b.transpose() * &h) * &b) - &h;
    let lo = symmetric_extremes(&lv)?.map_or(T::zero(), |p| p.0);
    let hi = symmetric_extremes(&c)?.map_or(T::zero(), |p| p.1);
    Ok(LyapunovResidual { identity_residual, laplacian_min: lo, contraction_max: hi })
}

/// Fixed-width summary table of a fit and a spectrum report.
pub fn summary_table<T: Real>(fit: Option<&DecayFit<T>>, spec: Option<&SpectrumReport<T>>) -> String {
    let mut out = String::new();
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "{k:<28} {v}");
    };
    if let Some(f) = fit {
        row("lambda_est", format!("{:.6}", f.lambda_est.as_f64()));
        row("fit window", format!("[{:.4}, {:.4}]", f.window.0.as_f64(), f.window.1.as_f64()));
        row("fit samples", f.samples.to_string());
        row("fit residual (log)", format!("{:.3e}", f.residual.as_f64()));
        if let Some(r) = f.step_ratio {
            row("per-event ratio", format!("{:.6}", r.as_f64()));
        }
    }
    if let Some(s) = spec {
        let what = match s.kind {
            TimeKind::Continuous => "spectral abscissa",
            TimeKind::Discrete => "spectral radius",
        };
        row(what, format!("{:.6}", s.value.as_f64()));
        row("bound", format!("{:.6}", s.bound.as_f64()));
        row("margin", format!("{:.3e}", s.margin.as_f64()));
        row("spectrum union residual", format!("{:.3e}", s.union_residual.as_f64()));
    }
    out
}
