use std::fmt::Write as _;

use crate::matrixkit::TimeKind;
use crate::scalar::Real;

/// Sampled trajectory. `xi[k]` and `e[k]` stack the agents (`m·n` entries); `e` is propagated
/// separately where possible and `consistency` records its largest deviation from `xi − x`,
/// relative to `max(1, ‖x‖_∞, ‖xi‖_∞)` at that sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace<T: Real = f64> {
    pub kind: TimeKind,
    pub n: usize,
    pub m: usize,
    pub times: Vec<T>,
    pub x: Vec<Vec<T>>,
    pub xi: Vec<Vec<T>>,
    pub e: Vec<Vec<T>>,
    /// `‖e‖₂` over the agents active at that sample.
    pub e_norm: Vec<T>,
    /// Coupling gains per sample (constant for fixed-gain runs, absent for discrete runs).
    pub g: Option<Vec<Vec<T>>>,
    /// Active family member per sample, 0-based.
    pub graph_id: Vec<usize>,
    pub active: Vec<Vec<bool>>,
    pub consistency: T,
}

impl<T: Real> SimulationTrace<T> {
    pub(crate) fn new(kind: TimeKind, n: usize, m: usize, with_gains: bool) -> Self {
        Self {
            kind,
            n,
            m,
            times: Vec::new(),
            x: Vec::new(),
            xi: Vec::new(),
            e: Vec::new(),
            e_norm: Vec::new(),
            g: with_gains.then(Vec::new),
            graph_id: Vec::new(),
            active: Vec::new(),
            consistency: T::zero(),
        }
    }

    /// Records a sample; `e_path` is the independently propagated error, if any.
    pub(crate) fn push(
        &mut self,
        t: T,
        x: &[T],
        xi: &[T],
        e_path: Option<&[T]>,
        g: Option<Vec<T>>,
        graph: usize,
        active: &[bool],
    ) {
        let n = self.n;
        let e: Vec<T> = (0..self.m * n).map(|k| xi[k] - x[k % n]).collect();
        let mut sq = T::zero();
        let scale = x.iter().chain(xi).fold(T::one(), |s, v| s.max(v.abs()));
        for (i, &on) in active.iter().enumerate() {
            if on {
                for k in i * n..(i + 1) * n {
                    sq += e[k] * e[k];
                    if let Some(ep) = e_path {
                        self.consistency = self.consistency.max((ep[k] - e[k]).abs() / scale);
                    }
                }
            }
        }
        self.times.push(t);
        self.x.push(x.to_vec());
        self.xi.push(xi.to_vec());
        self.e.push(e);
        self.e_norm.push(sq.sqrt());
        if let (Some(gs), Some(g)) = (self.g.as_mut(), g) {
            gs.push(g);
        }
        self.graph_id.push(graph);
        self.active.push(active.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Per-agent error `e_i` at sample `k`.
    pub fn agent_error(&self, k: usize, i: usize) -> &[T] {
        &self.e[k][i * self.n..(i + 1) * self.n]
    }

    /// `g_i` over time.
    pub fn gain_series(&self, i: usize) -> Option<Vec<T>> {
        self.g.as_ref().map(|gs| gs.iter().map(|g| g[i]).collect())
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("t");
        for k in 0..self.n {
            let _ = write!(h, ",x_{}", k + 1);
        }
        for i in 0..self.m {
            for k in 0..self.n {
                let _ = write!(h, ",xi_{}_{}", i + 1, k + 1);
            }
        }
        h.push_str(",e_norm");
        for i in 0..self.m {
            let _ = write!(h, ",g_{}", i + 1);
        }
        h.push_str(",graph_id");
        h
    }

    /// CSV with columns `t, x_k, xi_i_k, e_norm, g_i, graph_id`; reals with 17 significant digits,
    /// `NaN` gains for discrete runs, 1-based graph ids.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        let num = |out: &mut String, v: T| {
            let _ = write!(out, ",{:.16e}", v.as_f64());
        };
        for k in 0..self.len() {
            let _ = write!(out, "{:.16e}", self.times[k].as_f64());
            for &v in &self.x[k] {
                num(&mut out, v);
            }
            for &v in &self.xi[k] {
                num(&mut out, v);
            }
            num(&mut out, self.e_norm[k]);
            match &self.g {
                Some(gs) => gs[k].iter().for_each(|&v| num(&mut out, v)),
                None => (0..self.m).for_each(|_| out.push_str(",NaN")),
            }
            let _ = writeln!(out, ",{}", self.graph_id[k] + 1);
        }
        out
    }
}
