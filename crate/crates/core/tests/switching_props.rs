mod common;

use proptest::prelude::*;
use rand::Rng;
use splitobs_core::switching::{generate, SignalKind, SwitchingSignal};

/// Every closed interval between two switches, checked directly.
fn brute_force_avg_dwell(sig: &SwitchingSignal, tau_d: f64, delta0: f64) -> bool {
    let sw = sig.switch_times();
    (0..sw.len()).all(|k| (k..sw.len()).all(|j| ((j - k + 1) as f64) <= delta0 + (sw[j] - sw[k]) / tau_d + 1e-12))
}

fn scan_sample(sig: &SwitchingSignal, t: f64) -> usize {
    let mut v = sig.values()[0];
    for (b, &val) in sig.breakpoints().iter().zip(sig.values()) {
        if *b <= t {
            v = val;
        }
    }
    v
}

#[test]
fn generated_signals_validate_for_their_own_kind() {
    for seed in 0..1000u64 {
        let fam = 2 + (seed % 3) as usize;
        let dwell = SignalKind::Dwell { tau_d: 0.2 };
        let avg = SignalKind::AvgDwell { tau_d: 0.0369, delta0: 1.0 + (seed % 5) as f64 };
        let arb = SignalKind::Arbitrary { min_step: 0.01 };
        for kind in [dwell, avg, arb] {
            let s = generate(kind, fam, 5.0, seed, false).unwrap();
            assert!(s.validate(&kind).valid, "seed {seed} {kind:?}");
            assert_eq!(s.kind(), Some(kind));
        }
        let s = generate(avg, fam, 40.0, seed, true).unwrap();
        assert!(s.breakpoints().iter().all(|t| t.fract() == 0.0));
        assert!(s.validate(&avg).valid);
    }
}

#[test]
fn dwell_signals_are_average_dwell_signals() {
    for seed in 0..300u64 {
        let tau_d = 0.05 + (seed % 7) as f64 * 0.05;
        let s = generate(SignalKind::Dwell { tau_d }, 3, 4.0, seed, false).unwrap();
        for delta0 in [1.0, 1.5, 3.0] {
            assert!(s.validate(&SignalKind::AvgDwell { tau_d, delta0 }).valid, "seed {seed}");
        }
    }
}

#[test]
fn avg_dwell_validation_matches_pairwise_check() {
    let mut rng = common::rng(41);
    let mut verdicts = [0usize; 2];
    for _ in 0..500 {
        let mut t = 0.0;
        let mut pairs = vec![(0.0, 0)];
        let mut v = 0;
        for _ in 0..rng.gen_range(0..12) {
            t += if rng.gen_bool(0.5) { rng.gen_range(0.001..0.02) } else { rng.gen_range(0.05..0.5) };
            v = 1 - v;
            pairs.push((t, v));
        }
        let sig = SwitchingSignal::from_pairs(&pairs, t + 1.0, None).unwrap();
        let tau_d = rng.gen_range(0.02..0.2);
        let delta0 = rng.gen_range(0.5..4.0);
        let fast = sig.validate(&SignalKind::AvgDwell { tau_d, delta0 }).valid;
        assert_eq!(fast, brute_force_avg_dwell(&sig, tau_d, delta0), "{pairs:?} {tau_d} {delta0}");
        verdicts[fast as usize] += 1;
    }
    assert!(verdicts[0] > 20 && verdicts[1] > 20, "{verdicts:?}");
}

#[test]
fn close_switches_violate_dwell_at_the_second() {
    let sig = SwitchingSignal::from_pairs(&[(0.0, 0), (1.0, 1), (1.01, 0)], 2.0, None).unwrap();
    let v = sig.validate(&SignalKind::Dwell { tau_d: 0.1 });
    assert!(!v.valid);
    assert_eq!(v.violation.unwrap().time, 1.01);
}

proptest! {
    #[test]
    fn sampling_matches_linear_scan(seed in 0u64..10_000, t in 0.0f64..3.0) {
        let s = generate(SignalKind::Arbitrary { min_step: 0.05 }, 3, 3.0, seed, false).unwrap();
        prop_assert_eq!(s.sample(t).unwrap(), scan_sample(&s, t));
        for &b in s.breakpoints() {
            prop_assert_eq!(s.sample(b).unwrap(), scan_sample(&s, b));
        }
    }

    #[test]
    fn avg_dwell_bound_holds_at_every_instant(seed in 0u64..10_000, t0 in 0.0f64..10.0, len in 0.0f64..10.0) {
        let (tau_d, delta0) = (0.0369, 5.0);
        let s = generate(SignalKind::AvgDwell { tau_d, delta0 }, 2, 10.0, seed, false).unwrap();
        let t = (t0 + len).min(10.0);
        prop_assert!(s.switches_between(t0, t) as f64 <= delta0 + (t - t0) / tau_d + 1e-9);
    }
}
