//! Effective mixing matrices per (fault stage, family member).

use super::{Assumption, FaultEvent, Scenario, SimError};
use crate::decomposition::joint_observability;
use crate::matrixkit::Matrix;
use crate::netgraph::{flow_matrix, metropolis_weights, strongly_connected, NeighborGraph};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub(crate) struct Stage<T: Real> {
    pub active: Vec<bool>,
    /// Per family member, `m × m`. Rows of removed agents are unit rows; removed columns are zero
    /// in active rows.
    pub s: Vec<Matrix<T>>,
}

#[derive(Debug, Clone)]
pub(crate) struct NetworkTable<T: Real> {
    pub stages: Vec<Stage<T>>,
    pub times: Vec<T>,
}

impl<T: Real> NetworkTable<T> {
    /// Builds every post-fault network up front; a fault that breaks joint observability or
    /// strong connectivity is rejected here, before any propagation.
    pub fn build(sc: &Scenario<T>) -> Result<Self, SimError> {
        let m = sc.m();
        let mut stages = vec![Stage { active: vec![true; m], s: sc.family.iter().map(|f| f.s.clone()).collect() }];
        let mut times = Vec::new();
        let mut graphs: Vec<NeighborGraph> = sc.family.iter().map(|f| f.graph.clone()).collect();
        let mut active = vec![true; m];
        for fault in &sc.faults {
            match fault.event {
                FaultEvent::RemoveArc { from, to } => {
                    if !graphs.iter().any(|g| g.has_arc(from, to)) {
                        return Err(SimError::InvalidFault(format!("arc ({from}, {to}) not present")));
                    }
                    for g in &mut graphs {
                        *g = g.without_arc(from, to);
                    }
                }
                FaultEvent::RemoveAgent { agent } => {
                    if !active[agent] {
                        return Err(SimError::InvalidFault(format!("agent {agent} already removed")));
                    }
                    active[agent] = false;
                }
            }
            let survivors: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
            let time = fault.time.as_f64();
            let sub = sc.plant.restrict_to(&survivors).map_err(|e| SimError::InvalidFault(e.to_string()))?;
            if survivors.is_empty() || !joint_observability(&sub).observable {
                return Err(SimError::FaultBreaksAssumptions { time, assumption: Assumption::JointObservability });
            }
            let mut s = Vec::with_capacity(graphs.len());
            for (member, g) in graphs.iter().enumerate() {
                let induced = g.induced(&survivors);
                if !strongly_connected(&induced) {
                    return Err(SimError::FaultBreaksAssumptions {
                        time,
                        assumption: Assumption::StrongConnectivity { member },
                    });
                }
                let original = &sc.family[member];
                let uniform = flow_matrix::<T>(&original.graph).map_or(false, |f| f == original.s);
                let local = if uniform { flow_matrix(&induced)? } else { metropolis_weights(&induced)? };
                let mut full = Matrix::identity(m);
                for i in 0..m {
                    if active[i] {
                        full[(i, i)] = T::zero();
                    }
                }
                for (a, &i) in survivors.iter().enumerate() {
                    for (b, &j) in survivors.iter().enumerate() {
                        full[(i, j)] = local[(a, b)];
                    }
                }
                s.push(full);
            }
            stages.push(Stage { active: active.clone(), s });
            times.push(fault.time);
        }
        Ok(Self { stages, times })
    }

    /// Stage in force at `t` (faults act from their own instant on).
    pub fn stage_at(&self, t: T) -> usize {
        self.times.iter().take_while(|&&f| f <= t).count()
    }
}
