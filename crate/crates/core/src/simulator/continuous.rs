use std::collections::HashMap;

use super::network::NetworkTable;
use super::{Coupling, Scenario, SimError, SimulationTrace};
use crate::decomposition::{stack, AgentDecomposition};
use crate::matrixkit::{matrix_exponential, Matrix, TimeKind};
use crate::scalar::Real;

/// Sample instants: the grid `k·h`, the horizon, switches and faults. A grid point within
/// round-off of an event is replaced by the event. The index marks grid points.
pub(crate) fn schedule<T: Real>(sc: &Scenario<T>) -> Vec<(T, Option<usize>)> {
    let tol = T::tol(1e-12) * T::one().max(sc.horizon);
    let steps = (sc.horizon / sc.h + T::tol(1e-9)).floor().to_usize().unwrap_or(0);
    let mut events: Vec<T> = sc.signal.switch_times().iter().copied().filter(|&t| t < sc.horizon).collect();
    events.extend(sc.faults.iter().map(|f| f.time).filter(|&t| t < sc.horizon));
    let mut pts: Vec<(T, Option<usize>)> = (0..=steps)
        .map(|k| (sc.h * T::from_usize_lossy(k), Some(k)))
        .filter(|&(t, _)| t <= sc.horizon && !events.iter().any(|&e| (e - t).abs() <= tol && e != T::zero()))
        .collect();
    if pts.last().map_or(true, |&(t, _)| (sc.horizon - t).abs() > tol) {
        pts.push((sc.horizon, None));
    }
    pts.extend(events.into_iter().map(|t| (t, None)));
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup_by(|a, b| a.0 == b.0);
    pts
}

/// Generator of `[x; x_1; …; x_m]` with per-agent coupling gains. Removed agents are frozen.
pub(crate) fn joint_generator<T: Real>(
    decs: &[AgentDecomposition<T>],
    s: &Matrix<T>,
    active: &[bool],
    gains: &[T],
) -> Matrix<T> {
    let m = decs.len();
    let n = decs.first().map_or(0, |d| d.n());
    let mut j = Matrix::zeros(n * (m + 1), n * (m + 1));
    if m == 0 {
        return j;
    }
    j.set_block(0, 0, &decs[0].a);
    for (i, d) in decs.iter().enumerate() {
        if !active[i] {
            continue;
        }
        let r = n * (i + 1);
        let kc = &d.k * &d.c;
        j.set_block(r, 0, &-kc.clone());
        for jj in 0..m {
            if !active[jj] {
                continue;
            }
            let mut blk = d.p.scale(gains[i] * s[(i, jj)]);
            if jj == i {
                blk = &(&(&d.a + &kc) - &d.p.scale(gains[i])) + &blk;
            }
            j.set_block(r, n * (jj + 1), &blk);
        }
    }
    j
}

fn pack<T: Real>(x: &[T], xi: &[Vec<T>]) -> Vec<T> {
    let mut v = x.to_vec();
    for e in xi {
        v.extend_from_slice(e);
    }
    v
}

fn initial_error<T: Real>(sc: &Scenario<T>) -> Vec<T> {
    sc.xi0.iter().flat_map(|xi| xi.iter().zip(&sc.x0).map(|(&a, &b)| a - b)).collect()
}

/// Piecewise-exact propagation: one matrix exponential of the joint generator per segment.
/// The error `e` is propagated alongside with `Ā − g·P(I − S̄)` as a cross-check.
pub fn simulate_continuous<T: Real>(sc: &Scenario<T>) -> Result<SimulationTrace<T>, SimError> {
    sc.validate()?;
    let g = match sc.coupling {
        Coupling::Gain(g) => g,
        _ => return Err(SimError::Unsupported("continuous simulation needs a fixed coupling gain".into())),
    };
    let table = NetworkTable::build(sc)?;
    let stacked = stack(&sc.decs).map_err(|e| SimError::Unsupported(e.to_string()))?;
    let (n, m) = (sc.n(), sc.m());
    let gains = vec![g; m];
    let pts = schedule(sc);
    let mut trace = SimulationTrace::new(TimeKind::Continuous, n, m, true);
    let mut state = pack(&sc.x0, &sc.xi0);
    let mut err = initial_error(sc);
    let mut cache: HashMap<(usize, usize, u64), (Matrix<T>, Matrix<T>)> = HashMap::new();
    let mut generators: HashMap<(usize, usize), (Matrix<T>, Matrix<T>)> = HashMap::new();
    let record = |trace: &mut SimulationTrace<T>, t: T, state: &[T], err: &[T], graph: usize, stage: usize| {
        trace.push(t, &state[..n], &state[n..], Some(err), Some(vec![g; m]), graph, &table.stages[stage].active);
    };
    let (t0, _) = pts[0];
    record(&mut trace, t0, &state, &err, sc.signal.sample(t0)?, table.stage_at(t0));
    for w in pts.windows(2) {
        let ((ta, ka), (tb, kb)) = (w[0], w[1]);
        let graph = sc.signal.sample(ta)?;
        let stage = table.stage_at(ta);
        let dt = match (ka, kb) {
            (Some(a), Some(b)) if b == a + 1 => sc.h,
            _ => tb - ta,
        };
        let key = (graph, stage, dt.as_f64().to_bits());
        if !cache.contains_key(&key) {
            let (jg, eg) = generators.entry((graph, stage)).or_insert_with(|| {
                let st = &table.stages[stage];
                (joint_generator(&sc.decs, &st.s[graph], &st.active, &gains), stacked.error_generator(&st.s[graph], g))
            });
            let pair = (matrix_exponential(&jg.scale(dt))?, matrix_exponential(&eg.scale(dt))?);
            cache.insert(key, pair);
        }
        let (phi, psi) = &cache[&key];
        state = phi.mul_vec(&state);
        err = psi.mul_vec(&err);
        record(&mut trace, tb, &state, &err, sc.signal.sample(tb)?, table.stage_at(tb));
    }
    Ok(trace)
}

/// Fixed-step classical RK4 in per-agent form, stepping exactly onto every sample instant with
/// steps no longer than `step`. Used as an independent check of [`simulate_continuous`].
pub fn rk4_continuous<T: Real>(sc: &Scenario<T>, step: T) -> Result<SimulationTrace<T>, SimError> {
    sc.validate()?;
    let g = match sc.coupling {
        Coupling::Gain(g) => g,
        _ => return Err(SimError::Unsupported("RK4 oracle needs a fixed coupling gain".into())),
    };
    let table = NetworkTable::build(sc)?;
    let (n, m) = (sc.n(), sc.m());
    let kc: Vec<Matrix<T>> = sc.decs.iter().map(|d| &d.k * &d.c).collect();
    let a = sc.plant.a();
    let rhs = |s: &Matrix<T>, active: &[bool], x: &[T], xi: &[Vec<T>]| -> (Vec<T>, Vec<Vec<T>>) {
        let dx = a.mul_vec(x);
        let dxi = (0..m)
            .map(|i| {
                if !active[i] {
                    return vec![T::zero(); n];
                }
                let d = &sc.decs[i];
                let mut avg = vec![T::zero(); n];
                for j in (0..m).filter(|&j| active[j] && s[(i, j)] != T::zero()) {
                    for k in 0..n {
                        avg[k] += s[(i, j)] * xi[j][k];
                    }
                }
                let diff: Vec<T> = (0..n).map(|k| xi[i][k] - avg[k]).collect();
                let ax = a.mul_vec(&xi[i]);
                let kcxi = kc[i].mul_vec(&xi[i]);
                let kcx = kc[i].mul_vec(x);
                let pd = d.p.mul_vec(&diff);
                (0..n).map(|k| ax[k] + kcxi[k] - kcx[k] - g * pd[k]).collect()
            })
            .collect();
        (dx, dxi)
    };
    let axpy = |x: &[T], xi: &[Vec<T>], h: T, d: &(Vec<T>, Vec<Vec<T>>)| -> (Vec<T>, Vec<Vec<T>>) {
        let nx = x.iter().zip(&d.0).map(|(&a, &b)| a + h * b).collect();
        let nxi = xi.iter().zip(&d.1).map(|(v, dv)| v.iter().zip(dv).map(|(&a, &b)| a + h * b).collect()).collect();
        (nx, nxi)
    };
    let pts = schedule(sc);
    let mut trace = SimulationTrace::new(TimeKind::Continuous, n, m, true);
    let mut x = sc.x0.clone();
    let mut xi = sc.xi0.clone();
    let flat = |xi: &[Vec<T>]| xi.concat();
    let (t0, _) = pts[0];
    trace.push(t0, &x, &flat(&xi), None, Some(vec![g; m]), sc.signal.sample(t0)?, &table.stages[table.stage_at(t0)].active);
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    for w in pts.windows(2) {
        let (ta, tb) = (w[0].0, w[1].0);
        let st = &table.stages[table.stage_at(ta)];
        let s = &st.s[sc.signal.sample(ta)?];
        let steps = ((tb - ta) / step).ceil().to_usize().unwrap_or(1).max(1);
        let h = (tb - ta) / T::from_usize_lossy(steps);
        for _ in 0..steps {
            let k1 = rhs(s, &st.active, &x, &xi);
            let (x2, xi2) = axpy(&x, &xi, h / two, &k1);
            let k2 = rhs(s, &st.active, &x2, &xi2);
            let (x3, xi3) = axpy(&x, &xi, h / two, &k2);
            let k3 = rhs(s, &st.active, &x3, &xi3);
            let (x4, xi4) = axpy(&x, &xi, h, &k3);
            let k4 = rhs(s, &st.active, &x4, &xi4);
            for k in 0..n {
                x[k] += h / six * (k1.0[k] + two * k2.0[k] + two * k3.0[k] + k4.0[k]);
            }
            for i in 0..m {
                for k in 0..n {
                    xi[i][k] += h / six * (k1.1[i][k] + two * k2.1[i][k] + two * k3.1[i][k] + k4.1[i][k]);
                }
            }
        }
        trace.push(tb, &x, &flat(&xi), None, Some(vec![g; m]), sc.signal.sample(tb)?, &table.stages[table.stage_at(tb)].active);
    }
    Ok(trace)
}
