//! Monte-Carlo simulation of the trajectory chain.
//!
//! Trajectories are drawn bin by bin with inverse-CDF sampling from the same
//! discretized entry marginals and kernel rows the closed form uses, so the
//! two routes differ only in how they combine them. A flight occupies a
//! sector in every bin from its entry-waypoint bin through its exit-waypoint
//! bin, the sampled counterpart of `F_entry(t_max) − F_exit(t_min)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlightPlan, Instance, Schedule};
use crate::objectives::ObjectiveVector;
use crate::propagate::{build_kernel, check_feasible, entry_marginal, ConditionalKernel, PropagationConfig};
use crate::timeprob::TimeGrid;

/// Samples per independently seeded chunk.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub rng_seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 100_000, rng_seed: 0 }
    }
}

/// Cumulative masses for inverse-CDF draws.
#[derive(Debug, Clone)]
struct Cumulative {
    first: usize,
    cum: Vec<f64>,
}

impl Cumulative {
    fn new(first: usize, mass: &[f64]) -> Self {
        let mut acc = 0.0;
        let cum = mass
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Self { first, cum }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.gen::<f64>() * self.cum.last().copied().unwrap_or(1.0);
        let idx = self.cum.partition_point(|c| *c <= u).min(self.cum.len() - 1);
        self.first + idx
    }
}

/// Sampler for one flight: entry distribution plus lazily tabulated kernel rows.
#[derive(Debug, Clone)]
pub struct FlightSampler {
    grid: TimeGrid,
    entry: Cumulative,
    legs: Vec<(ConditionalKernel, Vec<Option<Cumulative>>)>,
}

impl FlightSampler {
    pub fn new(plan: &FlightPlan, targets: &[f64], grid: &TimeGrid, config: &PropagationConfig) -> Result<Self> {
        if targets.len() != plan.waypoint_count {
            return Err(Error::Invalid(format!(
                "flight {} needs {} targets, got {}",
                plan.id,
                plan.waypoint_count,
                targets.len()
            )));
        }
        let entry = entry_marginal(plan, targets[0], grid)?;
        let legs = (0..plan.waypoint_count - 1)
            .map(|leg| {
                build_kernel(plan, leg, targets[leg + 1], grid, config).map(|k| (k, vec![None; grid.bins]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: *grid, entry: Cumulative::new(0, entry.mass()), legs })
    }

    /// Draws the waypoint bins of one trajectory into `out`.
    fn sample_bins<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut Vec<usize>) -> Result<()> {
        out.clear();
        let mut bin = self.entry.draw(rng);
        out.push(bin);
        for (kernel, rows) in &mut self.legs {
            if rows[bin].is_none() {
                let row = kernel.row(bin)?;
                rows[bin] = Some(Cumulative::new(row.first, &row.mass));
            }
            bin = rows[bin].as_ref().unwrap().draw(rng);
            out.push(bin);
        }
        Ok(())
    }

    /// One trajectory as waypoint overflight times (bin midpoints).
    pub fn sample_trajectory<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let mut bins = Vec::with_capacity(self.legs.len() + 1);
        self.sample_bins(rng, &mut bins)?;
        Ok(bins.into_iter().map(|k| self.grid.midpoint(k)).collect())
    }
}

/// One sampled trajectory of flight `f` under `schedule`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    inst: &Instance,
    schedule: &Schedule,
    f: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let plan = &inst.flights()[f];
    FlightSampler::new(plan, schedule.flight(inst, f), inst.grid(), &PropagationConfig::default())?
        .sample_trajectory(rng)
}

/// Empirical estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub samples: usize,
    /// Empirical `Pr(K_s^t > C_s)` per sector per bin.
    pub prob_over: Vec<Vec<f64>>,
    pub c1: Estimate,
    pub c2: Estimate,
    /// Trajectories whose waypoint times were not strictly increasing.
    pub order_violations: usize,
}

impl McEstimate {
    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.c1.mean, self.c2.mean)
    }
}

#[derive(Clone)]
struct Accumulator {
    over: Vec<Vec<u64>>,
    c1: (f64, f64),
    c2: (f64, f64),
    violations: usize,
}

impl Accumulator {
    fn new(sectors: usize, bins: usize) -> Self {
        Self { over: vec![vec![0; bins]; sectors], c1: (0.0, 0.0), c2: (0.0, 0.0), violations: 0 }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.over.iter_mut().zip(other.over) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.c1 = (self.c1.0 + other.c1.0, self.c1.1 + other.c1.1);
        self.c2 = (self.c2.0 + other.c2.0, self.c2.1 + other.c2.1);
        self.violations += other.violations;
        self
    }
}

fn estimate(sum: f64, sum_sq: f64, n: usize) -> Estimate {
    let n = n as f64;
    let mean = sum / n;
    let var = if n > 1.0 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Estimate { mean, std_error: (var / n).sqrt() }
}

/// Simulates `cfg.samples` joint trajectories and tallies occupancy and costs.
pub fn estimate_congestion(inst: &Instance, schedule: &Schedule, cfg: &McConfig) -> Result<McEstimate> {
    if cfg.samples == 0 {
        return Err(Error::Invalid("Monte-Carlo needs at least one sample".into()));
    }
    check_feasible(inst, schedule)?;
    let grid = *inst.grid();
    let samplers = inst
        .flights()
        .iter()
        .enumerate()
        .map(|(f, plan)| FlightSampler::new(plan, schedule.flight(inst, f), &grid, &PropagationConfig::default()))
        .collect::<Result<Vec<_>>>()?;

    let chunks = cfg.samples.div_ceil(CHUNK);
    let partials = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let count = CHUNK.min(cfg.samples - chunk * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(chunk as u64);
            simulate_chunk(inst, samplers.clone(), count, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = partials
        .into_iter()
        .reduce(Accumulator::merge)
        .expect("at least one chunk");

    let n = cfg.samples as f64;
    Ok(McEstimate {
        samples: cfg.samples,
        prob_over: total
            .over
            .iter()
            .map(|row| row.iter().map(|c| *c as f64 / n).collect())
            .collect(),
        c1: estimate(total.c1.0, total.c1.1, cfg.samples),
        c2: estimate(total.c2.0, total.c2.1, cfg.samples),
        order_violations: total.violations,
    })
}

fn simulate_chunk(
    inst: &Instance,
    mut samplers: Vec<FlightSampler>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Accumulator> {
    let grid = inst.grid();
    let mut acc = Accumulator::new(inst.sectors().len(), grid.bins);
    let mut paths: Vec<Vec<usize>> = vec![Vec::new(); samplers.len()];
    let mut occupancy = vec![0usize; grid.bins];
    for _ in 0..count {
        for (sampler, path) in samplers.iter_mut().zip(paths.iter_mut()) {
            sampler.sample_bins(rng, path)?;
            if path.windows(2).any(|w| w[1] <= w[0]) {
                acc.violations += 1;
            }
        }

        let c1: f64 = inst
            .flights()
            .iter()
            .zip(&paths)
            .map(|(plan, path)| {
                let late = grid.midpoint(*path.last().unwrap()) - plan.scheduled_arrival;
                late.max(0.0).powi(2)
            })
            .sum();

        let mut c2 = 0.0;
        for (s, sector) in inst.sectors().iter().enumerate() {
            occupancy.iter_mut().for_each(|o| *o = 0);
            for c in inst.crossings(s) {
                let path = &paths[c.flight];
                for slot in &mut occupancy[path[c.entry]..=path[c.exit]] {
                    *slot += 1;
                }
            }
            for (k, &n) in occupancy.iter().enumerate() {
                if n > sector.capacity {
                    acc.over[s][k] += 1;
                    let excess = (n - sector.capacity) as f64;
                    c2 += excess * excess;
                }
            }
        }
        c2 *= grid.step;

        acc.c1 = (acc.c1.0 + c1, acc.c1.1 + c1 * c1);
        acc.c2 = (acc.c2.0 + c2, acc.c2.1 + c2 * c2);
    }
    Ok(acc)
}

/// Closed form against simulation, cell by cell and for both objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub samples: usize,
    pub cells: usize,
    /// Cells with `|closed − empirical| ≤ 3·se`, `se = √(p(1−p)/n)` at the closed-form `p`.
    pub cells_within: usize,
    /// Largest `|closed − empirical| / se` over cells with positive `se`.
    pub max_cell_z: f64,
    /// Cells where `se = 0` yet the simulation disagrees.
    pub impossible_cells: usize,
    pub c1_closed: f64,
    pub c1_empirical: f64,
    pub c1_z: f64,
    pub c2_closed: f64,
    pub c2_empirical: f64,
    pub c2_z: f64,
    /// Two-sided sign test over cells in the normal regime (`np`, `n(1−p)` ≥ 5).
    pub sign_test_cells: usize,
    pub sign_test_p: f64,
    pub order_violations: usize,
}

impl McComparison {
    pub fn cell_fraction(&self) -> f64 {
        if self.cells == 0 {
            1.0
        } else {
            self.cells_within as f64 / self.cells as f64
        }
    }

    pub fn c1_relative(&self) -> f64 {
        relative(self.c1_empirical, self.c1_closed)
    }

    pub fn c2_relative(&self) -> f64 {
        relative(self.c2_empirical, self.c2_closed)
    }

    /// ≥ 99 % of cells within 3 se, both objectives within 5 %, no ordering
    /// violations and no one-sided bias at the 1 % level.
    pub fn passes(&self) -> bool {
        self.cell_fraction() >= 0.99
            && self.c1_relative() <= 0.05
            && self.c2_relative() <= 0.05
            && self.order_violations == 0
            && self.sign_test_p >= 0.01
    }
}

fn relative(empirical: f64, closed: f64) -> f64 {
    if closed == 0.0 {
        if empirical == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (empirical - closed).abs() / closed.abs()
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff.abs() / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Two-sided exact sign test: `k` successes out of `n` fair coin flips.
fn sign_test(k: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let tail = k.min(n - k);
    // binomial(n, 1/2) pmf by the ratio recurrence, in log space
    let mut log_pmf = -(n as f64) * std::f64::consts::LN_2;
    let mut acc = 0.0;
    for i in 0..=tail {
        acc += log_pmf.exp();
        log_pmf += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    (2.0 * acc).min(1.0)
}

/// Runs the simulation and compares it with the closed-form evaluation.
pub fn compare(
    inst: &Instance,
    schedule: &Schedule,
    closed: &crate::objectives::Evaluation,
    cfg: &McConfig,
) -> Result<McComparison> {
    let mc = estimate_congestion(inst, schedule, cfg)?;
    let n = cfg.samples as f64;
    let (mut cells, mut within, mut impossible, mut max_z) = (0, 0, 0, 0.0f64);
    let (mut above, mut decided) = (0, 0);
    for (sector, empirical) in closed.profile.sectors.iter().zip(&mc.prob_over) {
        for (bin, &e) in sector.bins.iter().zip(empirical) {
            let p = bin.tail.prob_over.clamp(0.0, 1.0);
            let se = (p * (1.0 - p) / n).sqrt();
            let z = z_score(p - e, se);
            cells += 1;
            if z <= 3.0 {
                within += 1;
            }
            if z.is_finite() {
                max_z = max_z.max(z);
            } else {
                impossible += 1;
            }
            if n * p >= 5.0 && n * (1.0 - p) >= 5.0 && e != p {
                decided += 1;
                above += (e > p) as usize;
            }
        }
    }
    let c1_closed = closed.objectives.c1;
    let c2_closed = closed.objectives.c2;
    Ok(McComparison {
        samples: cfg.samples,
        cells,
        cells_within: within,
        max_cell_z: max_z,
        impossible_cells: impossible,
        c1_closed,
        c1_empirical: mc.c1.mean,
        c1_z: z_score(mc.c1.mean - c1_closed, mc.c1.std_error),
        c2_closed,
        c2_empirical: mc.c2.mean,
        c2_z: z_score(mc.c2.mean - c2_closed, mc.c2.std_error),
        sign_test_cells: decided,
        sign_test_p: sign_test(above, decided),
        order_violations: mc.order_violations,
    })
}
