use std::collections::HashMap;

use super::network::NetworkTable;
use super::{Coupling, Scenario, SimError, SimulationTrace};
use crate::decomposition::stack;
use crate::matrixkit::{Matrix, TimeKind};
use crate::scalar::Real;

/// Largest accepted gap between the inner-round error and the closed-form error map, relative to
/// `max(1, ‖e‖_∞)`.
pub const DUAL_PATH_TOL: f64 = 1e-9;

/// Event-by-event simulation: `q` rounds `z_i ← (I − P_i)z_i + P_i Σ_j s_ij z_j` starting from
/// `z_i = x_i(τ)`, then `x_i(τ+1) = (A + K_iC_i)z_i − K_i·y_i(τ)`. The stacked error is also
/// propagated by `Ā(I − P(I − S̄))^q` and compared at every event.
pub fn simulate_discrete<T: Real>(sc: &Scenario<T>) -> Result<SimulationTrace<T>, SimError> {
    sc.validate()?;
    let q = match sc.coupling {
        Coupling::Rounds(q) => q,
        _ => return Err(SimError::Unsupported("discrete simulation needs a round count".into())),
    };
    let table = NetworkTable::build(sc)?;
    let stacked = stack(&sc.decs).map_err(|e| SimError::Unsupported(e.to_string()))?;
    let (n, m) = (sc.n(), sc.m());
    let events = sc.horizon.floor().to_usize().unwrap_or(0);
    let period = sc.plant.sample_period();
    let closed: Vec<Matrix<T>> = sc.decs.iter().map(|d| d.closed_loop()).collect();
    let eye = Matrix::identity(n);
    let keep: Vec<Matrix<T>> = sc.decs.iter().map(|d| &eye - &d.p).collect();
    let a = sc.plant.a();

    let mut x = sc.x0.clone();
    let mut xi = sc.xi0.clone();
    let mut err: Vec<T> = sc.xi0.iter().flat_map(|v| v.iter().zip(&x).map(|(&a, &b)| a - b)).collect();
    let mut maps: HashMap<(usize, usize), Matrix<T>> = HashMap::new();
    let mut trace = SimulationTrace::new(TimeKind::Discrete, n, m, false);
    let graph0 = sc.signal.sample(T::zero())?;
    trace.push(T::zero(), &x, &xi.concat(), Some(&err), None, graph0, &table.stages[0].active);
    for tau in 0..events {
        let t = T::from_usize_lossy(tau);
        let graph = sc.signal.sample(t)?;
        let stage = table.stage_at(t);
        let st = &table.stages[stage];
        let s = &st.s[graph];

        let mut z = xi.clone();
        for _ in 0..q {
            let next: Vec<Vec<T>> = (0..m)
                .map(|i| {
                    if !st.active[i] {
                        return z[i].clone();
                    }
                    let mut avg = vec![T::zero(); n];
                    for j in (0..m).filter(|&j| st.active[j] && s[(i, j)] != T::zero()) {
                        for k in 0..n {
                            avg[k] += s[(i, j)] * z[j][k];
                        }
                    }
                    let own = keep[i].mul_vec(&z[i]);
                    let mixed = sc.decs[i].p.mul_vec(&avg);
                    own.iter().zip(&mixed).map(|(&u, &v)| u + v).collect()
                })
                .collect();
            z = next;
        }
        for i in (0..m).filter(|&i| st.active[i]) {
            let y = sc.decs[i].c.mul_vec(&x);
            let ky = sc.decs[i].k.mul_vec(&y);
            xi[i] = closed[i].mul_vec(&z[i]).iter().zip(&ky).map(|(&u, &v)| u - v).collect();
        }
        x = a.mul_vec(&x);

        let map = maps.entry((graph, stage)).or_insert_with(|| stacked.error_map(s, q));
        err = map.mul_vec(&err);
        let mut resid = T::zero();
        let mut scale = T::one();
        for i in (0..m).filter(|&i| st.active[i]) {
            for k in 0..n {
                let e = xi[i][k] - x[k];
                resid = resid.max((e - err[i * n + k]).abs());
                scale = scale.max(e.abs());
            }
        }
        if resid > T::tol(DUAL_PATH_TOL) * scale {
            return Err(SimError::DualPathMismatch { tau: tau + 1, residual: resid.as_f64() });
        }
        let t_next = T::from_usize_lossy(tau + 1);
        let graph_next = sc.signal.sample(t_next.min(sc.signal.horizon()))?;
        let active_next = &table.stages[table.stage_at(t_next)].active;
        trace.push(t_next * period, &x, &xi.concat(), Some(&err), None, graph_next, active_next);
    }
    Ok(trace)
}
