use super::continuous::schedule;
use super::network::NetworkTable;
use super::{Coupling, Scenario, SimError, SimulationTrace};
use crate::matrixkit::{Matrix, TimeKind};
use crate::scalar::Real;

/// Relative tolerance of the embedded Runge–Kutta pair.
pub const ADAPTIVE_RTOL: f64 = 1e-8;
const ADAPTIVE_ATOL: f64 = 1e-12;
const MAX_STEPS: usize = 5_000_000;

// Dormand–Prince 5(4) tableau; the right-hand side is autonomous on each segment.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Rhs<'a, T: Real> {
    sc: &'a Scenario<T>,
    kc: Vec<Matrix<T>>,
    vt: Vec<Matrix<T>>,
}

impl<T: Real> Rhs<'_, T> {
    /// `y = [x; x_1; …; x_m; g_1; …; g_m]`.
    fn eval(&self, s: &Matrix<T>, active: &[bool], y: &[T]) -> Vec<T> {
        let (n, m) = (self.sc.n(), self.sc.m());
        let x = &y[..n];
        let xi = |i: usize| &y[n * (i + 1)..n * (i + 2)];
        let a = self.sc.plant.a();
        let mut out = a.mul_vec(x);
        out.resize(n * (m + 1) + m, T::zero());
        for i in (0..m).filter(|&i| active[i]) {
            let mut avg = vec![T::zero(); n];
            for j in (0..m).filter(|&j| active[j] && s[(i, j)] != T::zero()) {
                for (k, v) in xi(j).iter().enumerate() {
                    avg[k] += s[(i, j)] * *v;
                }
            }
            let own = xi(i);
            let gap: Vec<T> = avg.iter().zip(own).map(|(&u, &v)| u - v).collect();
            let pgap = self.sc.decs[i].p.mul_vec(&gap);
            let ax = a.mul_vec(own);
            let kcxi = self.kc[i].mul_vec(own);
            let kcx = self.kc[i].mul_vec(x);
            let g = y[n * (m + 1) + i];
            for k in 0..n {
                out[n * (i + 1) + k] = ax[k] + kcxi[k] - kcx[k] + g * pgap[k];
            }
            out[n * (m + 1) + i] = self.vt[i].mul_vec(&gap).iter().map(|&v| v * v).sum();
        }
        out
    }
}

/// Adaptive-gain estimator `ġ_i = |V_iᵀ Σ_j s_ij (x_j − x_i)|²` integrated with the
/// Dormand–Prince pair at relative tolerance [`ADAPTIVE_RTOL`].
pub fn simulate_adaptive<T: Real>(sc: &Scenario<T>) -> Result<SimulationTrace<T>, SimError> {
    sc.validate()?;
    let g0 = match &sc.coupling {
        Coupling::Adaptive(g0) => g0.clone(),
        _ => return Err(SimError::Unsupported("adaptive simulation needs initial gains".into())),
    };
    let table = NetworkTable::build(sc)?;
    let (n, m) = (sc.n(), sc.m());
    let rhs = Rhs {
        sc,
        kc: sc.decs.iter().map(|d| &d.k * &d.c).collect(),
        vt: sc.decs.iter().map(|d| d.v.transpose()).collect(),
    };
    let mut y: Vec<T> = sc.x0.clone();
    for xi in &sc.xi0 {
        y.extend_from_slice(xi);
    }
    y.extend_from_slice(&g0);
    let dim = y.len();
    let split = n * (m + 1);

    let pts = schedule(sc);
    let mut trace = SimulationTrace::new(TimeKind::Continuous, n, m, true);
    let push = |trace: &mut SimulationTrace<T>, t: T, y: &[T]| -> Result<(), SimError> {
        let active = &table.stages[table.stage_at(t)].active;
        trace.push(t, &y[..n], &y[n..split], None, Some(y[split..].to_vec()), sc.signal.sample(t)?, active);
        Ok(())
    };
    push(&mut trace, pts[0].0, &y)?;
    let rtol = T::tol(ADAPTIVE_RTOL);
    let atol = T::tol(ADAPTIVE_ATOL);
    let mut h = sc.h.min(T::lit(1e-3));
    let mut steps = 0usize;
    for w in pts.windows(2) {
        let (ta, tb) = (w[0].0, w[1].0);
        let st = &table.stages[table.stage_at(ta)];
        let s = &st.s[sc.signal.sample(ta)?];
        let mut t = ta;
        while t < tb {
            let last = t + h >= tb;
            let hh = if last { tb - t } else { h };
            let mut k: Vec<Vec<T>> = Vec::with_capacity(7);
            k.push(rhs.eval(s, &st.active, &y));
            for stage in 1..7 {
                let yi: Vec<T> = (0..dim)
                    .map(|d| {
                        let mut acc = y[d];
                        for (p, kp) in k.iter().enumerate() {
                            acc += hh * T::lit(A[stage][p]) * kp[d];
                        }
                        acc
                    })
                    .collect();
                k.push(rhs.eval(s, &st.active, &yi));
            }
            let mut ynew = y.clone();
            let mut err = T::zero();
            for d in 0..dim {
                let mut hi = T::zero();
                let mut lo = T::zero();
                for p in 0..7 {
                    hi += T::lit(B5[p]) * k[p][d];
                    lo += T::lit(B4[p]) * k[p][d];
                }
                ynew[d] = y[d] + hh * hi;
                let sc_d = atol + rtol * y[d].abs().max(ynew[d].abs());
                err = err.max((hh * (hi - lo)).abs() / sc_d);
            }
            steps += 1;
            if steps > MAX_STEPS || !err.is_finite() {
                return Err(SimError::ToleranceNotMet { t: t.as_f64() });
            }
            if err <= T::one() {
                t = if last { tb } else { t + hh };
                y = ynew;
            }
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
            };
            if !(last && err <= T::one()) {
                h = hh * factor;
            }
            if h < T::lit(1e-14) * T::one().max(t.abs()) {
                return Err(SimError::ToleranceNotMet { t: t.as_f64() });
            }
        }
        push(&mut trace, tb, &y)?;
    }
    Ok(trace)
}
