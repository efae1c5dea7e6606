//! Expected delay cost (C1) and expected congestion cost (C2) of a schedule.

use serde::{Deserialize, Serialize};

use crate::congestion::{congestion_profile, CongestionProfile};
use crate::error::Result;
use crate::model::{Instance, Schedule};
use crate::propagate::{propagate_marginals_with, MarginalSet, PropagationConfig};

/// Objective pair, both to be minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Expected super-linear arrival delay, minutes².
    pub c1: f64,
    /// Expected squared over-capacity integrated over time, aircraft²·minutes.
    pub c2: f64,
}

impl ObjectiveVector {
    pub fn new(c1: f64, c2: f64) -> Self {
        Self { c1, c2 }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.c1, self.c2]
    }
}

/// Strict Pareto dominance for minimization.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.c1 <= b.c1 && a.c2 <= b.c2 && (a.c1 < b.c1 || a.c2 < b.c2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    /// Exponent of the positive-part delay penalty.
    pub delay_exponent: f64,
    pub propagation: PropagationConfig,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { delay_exponent: 2.0, propagation: PropagationConfig::default() }
    }
}

/// `Σ_f E[(T_last − A_f)₊^β]` over arrival marginals.
pub fn delay_cost(inst: &Instance, marginals: &MarginalSet, exponent: f64) -> f64 {
    inst.flights()
        .iter()
        .zip(marginals.iter())
        .map(|(plan, m)| {
            let arrival = plan.scheduled_arrival;
            m.last()
                .expect("flight with no marginals")
                .expectation_of(|t| (t - arrival).max(0.0).powf(exponent))
        })
        .sum()
}

/// `Σ_t step · Σ_s Σ_{n > C_s} (n − C_s)² · Pr(K_s^t = n)`.
pub fn congestion_cost(inst: &Instance, profile: &CongestionProfile) -> f64 {
    let step = inst.grid().step;
    profile
        .sectors
        .iter()
        .flat_map(|sector| sector.bins.iter())
        .map(|bin| {
            bin.tail
                .tail
                .iter()
                .enumerate()
                .map(|(j, p)| ((j + 1) * (j + 1)) as f64 * p)
                .sum::<f64>()
        })
        .sum::<f64>()
        * step
}

/// Full pipeline: marginals, congestion profile and both costs.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub marginals: MarginalSet,
    pub profile: CongestionProfile,
    pub objectives: ObjectiveVector,
}

pub fn evaluate_detailed(inst: &Instance, schedule: &Schedule, config: &ObjectiveConfig) -> Result<Evaluation> {
    let marginals = propagate_marginals_with(inst, schedule, &config.propagation)?;
    let profile = congestion_profile(inst, &marginals)?;
    let objectives = ObjectiveVector {
        c1: delay_cost(inst, &marginals, config.delay_exponent),
        c2: congestion_cost(inst, &profile),
    };
    Ok(Evaluation { marginals, profile, objectives })
}

pub fn evaluate_with(inst: &Instance, schedule: &Schedule, config: &ObjectiveConfig) -> Result<ObjectiveVector> {
    evaluate_detailed(inst, schedule, config).map(|e| e.objectives)
}

/// Objectives of `schedule` under the default configuration.
pub fn evaluate(inst: &Instance, schedule: &Schedule) -> Result<ObjectiveVector> {
    evaluate_with(inst, schedule, &ObjectiveConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congestion::{BinCongestion, CongestionTail, SectorProfile};
    use crate::model::{
        feasible_box, generate_benchmark, horizon_for, BenchmarkParams, FlightPlan, Sector, SectorCrossing,
        Window,
    };
    use proptest::prelude::*;

    fn flight(id: &str, entry: f64, durations: Vec<f64>, entry_len: f64, enroute_len: f64) -> FlightPlan {
        FlightPlan {
            id: id.into(),
            waypoint_count: durations.len() + 1,
            scheduled_arrival: entry + durations.iter().sum::<f64>(),
            nominal_durations: durations,
            entry_window: Window::new(entry - 5.0, entry + 10.0),
            entry_support_len: entry_len,
            enroute_support_len: enroute_len,
        }
    }

    #[test]
    fn dominance_examples() {
        let v = ObjectiveVector::new;
        assert!(dominates(&v(1.0, 1.0), &v(2.0, 2.0)));
        assert!(!dominates(&v(1.0, 2.0), &v(2.0, 1.0)));
        assert!(!dominates(&v(2.0, 1.0), &v(1.0, 2.0)));
        assert!(!dominates(&v(1.0, 1.0), &v(1.0, 1.0)));
        assert!(dominates(&v(1.0, 1.0), &v(1.0, 1.5)));
    }

    #[test]
    fn delay_cost_of_point_arrivals() {
        let plans = vec![flight("a", 10.0, vec![10.0], 0.0, 0.0)];
        let grid = horizon_for(&plans, 1.0).unwrap();
        let inst = Instance::new(grid, plans, vec![]).unwrap();
        let on_time = Schedule::new(vec![10.0, 20.0]);
        assert_eq!(evaluate(&inst, &on_time).unwrap().c1, 0.0);
        let early = Schedule::new(vec![6.0, 16.0]);
        assert_eq!(evaluate(&inst, &early).unwrap().c1, 0.0);
        // deterministic legs follow the nominal duration, so the entry shift carries through
        let late = Schedule::new(vec![13.0, 23.0]);
        assert_eq!(evaluate(&inst, &late).unwrap().c1, 9.0);
    }

    #[test]
    fn delay_cost_of_symmetric_arrival_matches_half_moment() {
        // Arrival triangular on [A − 4, A + 4]: ∫_0^4 u² (4 − u)/16 du = 4/3.
        let analytic = 4.0 / 3.0;
        for (step, tol) in [(1.0, 0.05), (0.05, 1e-3)] {
            let plans = vec![flight("a", 10.0, vec![10.0], 0.0, 8.0)];
            let grid = horizon_for(&plans, step).unwrap();
            let inst = Instance::new(grid, plans, vec![]).unwrap();
            let marginals = crate::propagate::propagate_marginals(&inst, &Schedule::new(vec![10.0, 20.0])).unwrap();
            let c1 = delay_cost(&inst, &marginals, 2.0);
            assert!((c1 - analytic).abs() < tol, "step {step}: {c1}");
        }
    }

    #[test]
    fn congestion_cost_formula() {
        let plans = vec![flight("a", 10.0, vec![10.0], 15.0, 8.0)];
        let inst = Instance::new(horizon_for(&plans, 1.0).unwrap(), plans, vec![]).unwrap();
        let bins = |tails: Vec<Vec<f64>>| {
            tails
                .into_iter()
                .map(|tail| BinCongestion {
                    active: 3,
                    tail: CongestionTail { prob_over: tail.iter().sum(), tail },
                })
                .collect()
        };
        let zero = CongestionProfile {
            sectors: vec![SectorProfile { capacity: 1, bins: bins(vec![vec![], vec![0.0, 0.0]]) }],
        };
        assert_eq!(congestion_cost(&inst, &zero), 0.0);
        let one = CongestionProfile {
            sectors: vec![SectorProfile { capacity: 1, bins: bins(vec![vec![0.0, 0.5], vec![], vec![]]) }],
        };
        assert_eq!(congestion_cost(&inst, &one), 2.0);
    }

    #[test]
    fn evaluation_is_bitwise_deterministic() {
        let inst = generate_benchmark(3, &BenchmarkParams::default()).unwrap();
        let s = inst.nominal_schedule();
        let a = evaluate(&inst, &s).unwrap();
        let b = evaluate(&inst, &s).unwrap();
        assert_eq!(a.c1.to_bits(), b.c1.to_bits());
        assert_eq!(a.c2.to_bits(), b.c2.to_bits());
        assert!(a.c1 > 0.0 && a.c2 > 0.0);
    }

    #[test]
    fn uniform_delay_increases_delay_cost() {
        let inst = generate_benchmark(3, &BenchmarkParams::default()).unwrap();
        let bx = feasible_box(&inst);
        let nominal = inst.nominal_schedule();
        let mut previous = f64::NEG_INFINITY;
        for delta in 0..=5 {
            let s = nominal.shifted(delta as f64);
            assert!(bx.contains(&s, 0.0), "shift {delta} leaves the box");
            let c1 = evaluate(&inst, &s).unwrap().c1;
            assert!(c1 >= previous, "shift {delta}: {c1} < {previous}");
            previous = c1;
        }
    }

    #[test]
    fn spreading_a_pair_reduces_congestion() {
        let plans = vec![flight("a", 10.0, vec![10.0], 15.0, 8.0), flight("b", 10.0, vec![10.0], 15.0, 8.0)];
        let sectors = vec![Sector {
            id: "s".into(),
            capacity: 1,
            crossings: plans
                .iter()
                .map(|p| SectorCrossing { flight: p.id.clone(), entry_waypoint: 1, exit_waypoint: 2 })
                .collect(),
        }];
        let inst = Instance::new(horizon_for(&plans, 1.0).unwrap(), plans, sectors).unwrap();
        let together = evaluate(&inst, &Schedule::new(vec![10.0, 20.0, 10.0, 20.0])).unwrap();
        let apart = evaluate(&inst, &Schedule::new(vec![5.0, 14.0, 20.0, 30.5])).unwrap();
        assert!(apart.c2 <= together.c2, "{apart:?} vs {together:?}");
        assert!(together.c2 > 0.0);
    }

    proptest! {
        #[test]
        fn dominance_is_a_strict_partial_order(
            a in (0.0f64..3.0, 0.0f64..3.0),
            b in (0.0f64..3.0, 0.0f64..3.0),
            c in (0.0f64..3.0, 0.0f64..3.0),
        ) {
            let round = |(x, y): (f64, f64)| ObjectiveVector::new(x.round(), y.round());
            let (a, b, c) = (round(a), round(b), round(c));
            prop_assert!(!dominates(&a, &a));
            prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
            if dominates(&a, &b) && dominates(&b, &c) {
                prop_assert!(dominates(&a, &c));
            }
        }

        #[test]
        fn objectives_are_non_negative(seed in 0u64..200, fraction in prop::collection::vec(0.0f64..=1.0, 88)) {
            let inst = generate_benchmark(seed, &BenchmarkParams::default()).unwrap();
            let bx = feasible_box(&inst);
            let s = Schedule::new(
                bx.bounds().iter().zip(&fraction).map(|(w, u)| w.lo + u * w.width()).collect(),
            );
            let v = evaluate(&inst, &s).unwrap();
            prop_assert!(v.c1 >= 0.0 && v.c2 >= 0.0 && v.c1.is_finite() && v.c2.is_finite());
        }
    }
}
