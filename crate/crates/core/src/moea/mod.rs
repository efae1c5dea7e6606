//! NSGA-II over target-time schedules with box constraints.
//!
//! Randomness comes from one ChaCha stream per (generation, operator) pair,
//! derived from the configured seed, so results do not depend on how
//! population evaluation is scheduled across threads.

mod hypervolume;
mod operators;
mod sort;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{feasible_box, FeasibleBox, Instance, Schedule};
use crate::objectives::{evaluate_with, ObjectiveConfig, ObjectiveVector};

pub use hypervolume::hypervolume_2d;
pub use operators::{polynomial_mutation, sbx_crossover, sbx_pair_unbounded};
pub use sort::{crowding_distance, fast_nondominated_sort};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoeaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    /// Per-gene mutation probability; `None` means `1 / dimension`.
    pub mutation_probability: Option<f64>,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
    pub rng_seed: u64,
    /// Include the pure nominal schedule in the initial population.
    pub seed_nominal: bool,
}

impl Default for MoeaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 100,
            crossover_probability: 0.9,
            mutation_probability: None,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
            rng_seed: 0,
            seed_nominal: true,
        }
    }
}

impl MoeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return Err(Error::Invalid(format!(
                "population size must be even and >= 4, got {}",
                self.population_size
            )));
        }
        let p_m = self.mutation_probability.unwrap_or(0.0);
        for (name, p) in [("crossover", self.crossover_probability), ("mutation", p_m)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        if !(self.sbx_eta > 0.0) || !(self.mutation_eta > 0.0) {
            return Err(Error::Invalid("distribution indices must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub schedule: Schedule,
    pub objectives: ObjectiveVector,
    pub rank: usize,
    pub crowding: f64,
}

/// Final non-dominated set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    pub members: Vec<Individual>,
}

impl ParetoArchive {
    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.members.iter().map(|m| m.objectives).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub rank0_size: usize,
    pub hypervolume: f64,
    pub best_c1: f64,
    pub best_c2: f64,
}

#[derive(Debug, Clone)]
pub struct NsgaOutcome {
    pub archive: ParetoArchive,
    pub stats: Vec<GenerationStats>,
    pub population: Vec<Individual>,
    /// Hypervolume reference point: 1.1 × objectives of the nominal schedule.
    pub reference: ObjectiveVector,
}

#[derive(Clone, Copy)]
enum Operator {
    Init = 0,
    Tournament = 1,
    Crossover = 2,
    Mutation = 3,
}

fn stream(seed: u64, generation: usize, op: Operator) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 8) | op as u64);
    rng
}

/// Evaluates schedules in parallel, preserving order.
fn evaluate_all(
    inst: &Instance,
    bx: &FeasibleBox,
    schedules: Vec<Schedule>,
    config: &ObjectiveConfig,
    generation: usize,
) -> Result<Vec<Individual>> {
    schedules
        .into_par_iter()
        .enumerate()
        .map(|(i, schedule)| {
            assert!(bx.contains(&schedule, 0.0), "infeasible schedule reached evaluation");
            let objectives = evaluate_with(inst, &schedule, config).map_err(|e| {
                Error::Invalid(format!("generation {generation}, individual {i}: {e}"))
            })?;
            Ok(Individual { schedule, objectives, rank: 0, crowding: 0.0 })
        })
        .collect()
}

/// Assigns rank and crowding in place; returns the fronts.
fn rank_population(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let points: Vec<_> = pop.iter().map(|i| i.objectives).collect();
    let fronts = fast_nondominated_sort(&points);
    for (rank, front) in fronts.iter().enumerate() {
        let crowd = crowding_distance(&points, front);
        for (&i, d) in front.iter().zip(crowd) {
            pop[i].rank = rank;
            pop[i].crowding = d;
        }
    }
    fronts
}

/// Binary tournament on (rank, crowding); exact ties are broken at random.
fn tournament<'a, R: Rng>(pop: &'a [Individual], rng: &mut R) -> &'a Individual {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    let tie_pick = rng.gen_bool(0.5);
    match a.rank.cmp(&b.rank) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal if a.crowding > b.crowding => a,
        std::cmp::Ordering::Equal if b.crowding > a.crowding => b,
        _ if tie_pick => a,
        _ => b,
    }
}

/// Keeps the best `size` individuals by front, then by crowding within the last front.
fn truncate(mut merged: Vec<Individual>, size: usize) -> Vec<Individual> {
    let fronts = rank_population(&mut merged);
    let mut keep = Vec::with_capacity(size);
    for front in fronts {
        if keep.len() + front.len() <= size {
            keep.extend(front);
            continue;
        }
        let mut rest = front;
        rest.sort_by(|&a, &b| {
            merged[b]
                .crowding
                .partial_cmp(&merged[a].crowding)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        keep.extend(rest.into_iter().take(size - keep.len()));
        break;
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().unwrap()).collect()
}

fn generation_stats(generation: usize, pop: &[Individual], reference: ObjectiveVector) -> GenerationStats {
    let front: Vec<ObjectiveVector> = pop.iter().filter(|i| i.rank == 0).map(|i| i.objectives).collect();
    GenerationStats {
        generation,
        rank0_size: front.len(),
        hypervolume: hypervolume_2d(&front, reference),
        best_c1: pop.iter().map(|i| i.objectives.c1).fold(f64::INFINITY, f64::min),
        best_c2: pop.iter().map(|i| i.objectives.c2).fold(f64::INFINITY, f64::min),
    }
}

/// Runs NSGA-II with the default objective configuration.
pub fn run_nsga2(inst: &Instance, cfg: &MoeaConfig) -> Result<NsgaOutcome> {
    run_nsga2_with(inst, cfg, &ObjectiveConfig::default(), |_| {})
}

/// Runs NSGA-II, calling `on_generation` after every generation (including the initial one).
pub fn run_nsga2_with<F: FnMut(&GenerationStats)>(
    inst: &Instance,
    cfg: &MoeaConfig,
    objectives: &ObjectiveConfig,
    mut on_generation: F,
) -> Result<NsgaOutcome> {
    cfg.validate()?;
    let bx = feasible_box(inst);
    let dim = inst.dimension();
    let p_m = cfg.mutation_probability.unwrap_or(1.0 / dim as f64);
    let nominal = inst.nominal_schedule();
    let nominal_value = evaluate_with(inst, &nominal, objectives)?;
    let reference = ObjectiveVector::new(1.1 * nominal_value.c1, 1.1 * nominal_value.c2);

    let mut init_rng = stream(cfg.rng_seed, 0, Operator::Init);
    let mut initial = Vec::with_capacity(cfg.population_size);
    if cfg.seed_nominal {
        initial.push(nominal);
    }
    while initial.len() < cfg.population_size {
        let s = bx.bounds().iter().map(|w| w.lo + init_rng.gen::<f64>() * w.width()).collect();
        initial.push(Schedule::new(s));
    }
    let mut population = evaluate_all(inst, &bx, initial, objectives, 0)?;
    rank_population(&mut population);

    let mut stats = vec![generation_stats(0, &population, reference)];
    on_generation(&stats[0]);

    for generation in 1..=cfg.generations {
        let mut pick_rng = stream(cfg.rng_seed, generation, Operator::Tournament);
        let mut cross_rng = stream(cfg.rng_seed, generation, Operator::Crossover);
        let mut mutate_rng = stream(cfg.rng_seed, generation, Operator::Mutation);

        let mut offspring = Vec::with_capacity(cfg.population_size);
        while offspring.len() < cfg.population_size {
            let a = tournament(&population, &mut pick_rng);
            let b = tournament(&population, &mut pick_rng);
            let (c1, c2) = if cross_rng.gen_bool(cfg.crossover_probability) {
                sbx_crossover(&a.schedule, &b.schedule, &bx, cfg.sbx_eta, &mut cross_rng)
            } else {
                (a.schedule.clone(), b.schedule.clone())
            };
            offspring.push(polynomial_mutation(&c1, &bx, cfg.mutation_eta, p_m, &mut mutate_rng));
            offspring.push(polynomial_mutation(&c2, &bx, cfg.mutation_eta, p_m, &mut mutate_rng));
        }
        let offspring = evaluate_all(inst, &bx, offspring, objectives, generation)?;

        let mut merged = population;
        merged.extend(offspring);
        population = truncate(merged, cfg.population_size);
        rank_population(&mut population);

        let s = generation_stats(generation, &population, reference);
        on_generation(&s);
        stats.push(s);
    }

    let mut members: Vec<Individual> = population.iter().filter(|i| i.rank == 0).cloned().collect();
    members.sort_by(|a, b| {
        a.objectives
            .c1
            .partial_cmp(&b.objectives.c1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.objectives.c2.partial_cmp(&b.objectives.c2).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(NsgaOutcome { archive: ParetoArchive { members }, stats, population, reference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_benchmark, BenchmarkParams};
    use crate::objectives::dominates;

    fn individual(c1: f64, c2: f64) -> Individual {
        Individual {
            schedule: Schedule::new(vec![c1, c2]),
            objectives: ObjectiveVector::new(c1, c2),
            rank: 0,
            crowding: 0.0,
        }
    }

    #[test]
    fn config_validation() {
        let ok = MoeaConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            MoeaConfig { population_size: 7, ..ok.clone() },
            MoeaConfig { population_size: 2, ..ok.clone() },
            MoeaConfig { crossover_probability: 1.5, ..ok.clone() },
            MoeaConfig { mutation_probability: Some(-0.1), ..ok.clone() },
            MoeaConfig { sbx_eta: 0.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn truncation_prefers_rank_then_spread() {
        let merged = vec![
            individual(0.0, 4.0),
            individual(1.0, 3.0),
            individual(1.1, 2.9),
            individual(4.0, 0.0),
            individual(5.0, 5.0),
            individual(2.0, 2.0),
        ];
        let kept = truncate(merged, 4);
        let objs: Vec<_> = kept.iter().map(|i| (i.objectives.c1, i.objectives.c2)).collect();
        assert_eq!(objs.len(), 4);
        assert!(objs.contains(&(0.0, 4.0)) && objs.contains(&(4.0, 0.0)) && objs.contains(&(2.0, 2.0)));
        assert!(!objs.contains(&(5.0, 5.0)));
    }

    #[test]
    fn tournament_prefers_lower_rank() {
        let mut pop = vec![individual(0.0, 0.0), individual(1.0, 1.0)];
        pop[1].rank = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut wins = 0;
        for _ in 0..1000 {
            if tournament(&pop, &mut rng).rank == 0 {
                wins += 1;
            }
        }
        // rank 1 only wins when both draws pick it
        assert!((650..850).contains(&wins), "{wins}");
    }

    #[test]
    fn short_run_is_deterministic_and_non_dominated() {
        let inst = generate_benchmark(1, &BenchmarkParams::default()).unwrap();
        let cfg = MoeaConfig { population_size: 12, generations: 4, rng_seed: 42, ..Default::default() };
        let a = run_nsga2(&inst, &cfg).unwrap();
        let b = run_nsga2(&inst, &cfg).unwrap();
        assert_eq!(a.archive, b.archive);
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.stats.len(), 5);
        let objs = a.archive.objectives();
        for x in &objs {
            for y in &objs {
                assert!(!dominates(x, y));
            }
        }
        for w in a.stats.windows(2) {
            assert!(w[1].hypervolume >= w[0].hypervolume);
        }
    }
}
