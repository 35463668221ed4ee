//! Piecewise-constant switching signals over a finite graph family.
//!
//! A signal is right-continuous: on `[t_k, t_{k+1})` it takes `values[k]`. `breakpoints[0]` is
//! always `0`; the remaining breakpoints are the switches. Discrete-time signals use the same type
//! with integer breakpoints (event indices).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwitchingError {
    #[error("time {t} outside the signal horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("invalid signal parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed signal: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind<T: Real = f64> {
    /// Consecutive switches at least `tau_d` apart.
    Dwell { tau_d: T },
    /// At most `delta0 + (t − t₀)/tau_d` switches on any interval `[t₀, t]`.
    AvgDwell { tau_d: T, delta0: T },
    /// No separation guarantee; `min_step` only floors the generated gaps.
    Arbitrary { min_step: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal<T: Real = f64> {
    breakpoints: Vec<T>,
    values: Vec<usize>,
    horizon: T,
    kind: Option<SignalKind<T>>,
}

/// First failed condition found by [`SwitchingSignal::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Index into the breakpoints of the offending switch.
    pub index: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub valid: bool,
    pub violation: Option<Violation>,
}

impl Validation {
    fn ok() -> Self {
        Self { valid: true, violation: None }
    }

    fn fail(index: usize, time: f64, reason: String) -> Self {
        Self { valid: false, violation: Some(Violation { index, time, reason }) }
    }
}

impl<T: Real> SwitchingSignal<T> {
    pub fn constant(value: usize, horizon: T) -> Self {
        Self { breakpoints: vec![T::zero()], values: vec![value], horizon, kind: None }
    }

    /// Builds a signal from `(breakpoint, value)` pairs, checking the structural invariants.
    pub fn from_pairs(pairs: &[(T, usize)], horizon: T, kind: Option<SignalKind<T>>) -> Result<Self, SwitchingError> {
        let (breakpoints, values): (Vec<T>, Vec<usize>) = pairs.iter().copied().unzip();
        let s = Self { breakpoints, values, horizon, kind };
        s.check_structure()?;
        Ok(s)
    }

    fn check_structure(&self) -> Result<(), SwitchingError> {
        let bad = |msg: String| Err(SwitchingError::Malformed(msg));
        if self.breakpoints.first() != Some(&T::zero()) {
            return bad("first breakpoint must be 0".into());
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return bad(format!("horizon {} must be positive and finite", self.horizon));
        }
        for k in 1..self.breakpoints.len() {
            if !(self.breakpoints[k] > self.breakpoints[k - 1]) {
                return bad(format!("breakpoint {k} does not increase"));
            }
            if self.values[k] == self.values[k - 1] {
                return bad(format!("breakpoint {k} switches to the same graph"));
            }
        }
        if let Some(&last) = self.breakpoints.last() {
            if last > self.horizon {
                return bad("breakpoint beyond horizon".into());
            }
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// Declared kind, if any.
    pub fn kind(&self) -> Option<SignalKind<T>> {
        self.kind
    }

    pub fn pairs(&self) -> Vec<(T, usize)> {
        self.breakpoints.iter().copied().zip(self.values.iter().copied()).collect()
    }

    /// Switch instants (breakpoints after the initial one).
    pub fn switch_times(&self) -> &[T] {
        &self.breakpoints[1..]
    }

    pub fn switch_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Largest graph id used, plus one.
    pub fn family_size_used(&self) -> usize {
        self.values.iter().max().map_or(0, |&v| v + 1)
    }

    /// Value on the interval containing `t`; at a breakpoint, the value after the switch.
    pub fn sample(&self, t: T) -> Result<usize, SwitchingError> {
        if !(t >= T::zero() && t <= self.horizon) {
            return Err(SwitchingError::OutOfHorizon { t: t.as_f64(), horizon: self.horizon.as_f64() });
        }
        let k = self.breakpoints.partition_point(|&b| b <= t);
        Ok(self.values[k - 1])
    }

    /// Constant segments `(start, end, value)` clipped to the horizon.
    pub fn segments(&self) -> Vec<(T, T, usize)> {
        (0..self.values.len())
            .map(|k| {
                let end = self.breakpoints.get(k + 1).copied().unwrap_or(self.horizon);
                (self.breakpoints[k], end, self.values[k])
            })
            .collect()
    }

    /// Checks the signal against `kind`, reporting the first violation.
    pub fn validate(&self, kind: &SignalKind<T>) -> Validation {
        if let Err(e) = self.check_structure() {
            return Validation::fail(0, 0.0, e.to_string());
        }
        let sw = self.switch_times();
        match *kind {
            SignalKind::Dwell { tau_d } => {
                for k in 1..sw.len() {
                    let gap = sw[k] - sw[k - 1];
                    if gap < tau_d {
                        return Validation::fail(
                            k + 1,
                            sw[k].as_f64(),
                            format!("gap {} shorter than dwell time {}", gap, tau_d),
                        );
                    }
                }
                Validation::ok()
            }
            SignalKind::AvgDwell { tau_d, delta0 } => {
                // With a_k = k − t_k/τ_D, the switches k..=j fit in [t_k, t_j] iff
                // a_j − a_k + 1 ≤ δ₀; the worst k for each j is the running minimum.
                let mut min_a = T::infinity();
                for (j, &t) in sw.iter().enumerate() {
                    let a = T::from_usize_lossy(j) - t / tau_d;
                    min_a = min_a.min(a);
                    if a - min_a + T::one() > delta0 + T::tol(1e-12) {
                        return Validation::fail(
                            j + 1,
                            t.as_f64(),
                            format!("more than {} + (t − t₀)/{} switches up to t = {}", delta0, tau_d, t),
                        );
                    }
                }
                Validation::ok()
            }
            SignalKind::Arbitrary { .. } => Validation::ok(),
        }
    }

    /// `δ_σ(t₀, t)`: switches in `[t₀, t]`.
    pub fn switches_between(&self, t0: T, t: T) -> usize {
        self.switch_times().iter().filter(|&&s| s >= t0 && s <= t).count()
    }

    /// Indicator-function table: one row per grid point (step `h`) and per breakpoint, one
    /// column per family member.
    pub fn indicator_csv(&self, family_size: usize, h: T) -> String {
        let mut times: Vec<T> = Vec::new();
        let steps = (self.horizon / h).floor().to_usize().unwrap_or(0);
        for k in 0..=steps {
            times.push(h * T::from_usize_lossy(k));
        }
        times.extend(self.breakpoints.iter().copied());
        times.push(self.horizon);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        times.dedup();
        let mut out = String::from("t");
        for g in 0..family_size {
            let _ = write!(out, ",graph_{}", g + 1);
        }
        out.push('\n');
        for t in times.into_iter().filter(|&t| t <= self.horizon) {
            let active = self.sample(t).unwrap_or(usize::MAX);
            let _ = write!(out, "{:.16e}", t.as_f64());
            for g in 0..family_size {
                out.push_str(if g == active { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}

fn next_value(rng: &mut ChaCha8Rng, current: usize, family_size: usize) -> usize {
    let v = rng.gen_range(0..family_size - 1);
    if v >= current {
        v + 1
    } else {
        v
    }
}

/// Seeded signal generation. With `integer` set, breakpoints are whole numbers (event indices).
pub fn generate<T: Real>(
    kind: SignalKind<T>,
    family_size: usize,
    horizon: T,
    seed: u64,
    integer: bool,
) -> Result<SwitchingSignal<T>, SwitchingError> {
    if family_size == 0 {
        return Err(SwitchingError::InvalidParameter("empty graph family".into()));
    }
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(SwitchingError::InvalidParameter(format!("horizon {horizon}")));
    }
    let scale = match kind {
        SignalKind::Dwell { tau_d } | SignalKind::AvgDwell { tau_d, .. } => tau_d,
        SignalKind::Arbitrary { min_step } => min_step,
    };
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(SwitchingError::InvalidParameter(format!("time scale {scale} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut value = rng.gen_range(0..family_size);
    let mut sig = SwitchingSignal { breakpoints: vec![T::zero()], values: vec![value], horizon, kind: Some(kind) };
    if family_size == 1 {
        return Ok(sig);
    }
    let tau = scale.as_f64();
    let round = |t: f64| if integer { t.ceil() } else { t };
    let mut last = 0.0f64;
    let mut min_a = f64::INFINITY;
    loop {
        let t = match kind {
            SignalKind::Dwell { .. } => round(last + tau * (1.0 + exp1(&mut rng))),
            SignalKind::Arbitrary { .. } => round(last + tau * (1.0 + 2.0 * exp1(&mut rng))),
            SignalKind::AvgDwell { delta0, .. } => {
                let d0 = delta0.as_f64();
                if d0 < 1.0 {
                    break;
                }
                // Bursts of short gaps alternate with long quiet stretches; the earliest time the
                // running inequality allows is enforced directly.
                let j = sig.switch_count() as f64;
                let cand = if rng.gen_bool(0.6) {
                    last + tau * 0.05 * (1.0 + rng.gen::<f64>())
                } else {
                    last + tau * (1.0 + 2.0 * exp1(&mut rng))
                };
                let earliest = if min_a.is_finite() { tau * (j - d0 + 1.0 - min_a) * (1.0 + 1e-9) } else { 0.0 };
                let mut t = round(cand.max(earliest));
                if t <= last {
                    t = round(last + tau * 1e-3);
                }
                min_a = min_a.min(j - t / tau);
                t
            }
        };
        if !(t < horizon.as_f64()) {
            break;
        }
        value = next_value(&mut rng, value, family_size);
        sig.breakpoints.push(T::lit(t));
        sig.values.push(value);
        last = t;
    }
    Ok(sig)
}
