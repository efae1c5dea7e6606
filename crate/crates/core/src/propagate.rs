//! Forward propagation of overflight-time uncertainty along flight plans.
//!
//! The entry marginal is a triangular density whose mode is the entry target.
//! Each subsequent waypoint follows a conditional kernel: given the previous
//! overflight at `t`, the next overflight is triangular on a support anchored
//! at `t + D` (nominal leg duration) with its mode at the target time,
//! clamped into the support. Kernel rows are evaluated at bin midpoints and
//! are never materialized as a dense matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{feasible_box, FlightPlan, Instance, Schedule};
use crate::timeprob::{discretize_triangular_within, point_mass, Pmf, TimeGrid, TriangularSpec};

/// Slack when checking targets against their feasible interval.
const FEASIBILITY_SLACK: f64 = 1e-9;

/// Placement of the en-route support relative to `t + D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// Fraction of the support length placed before `t + D`; 0.5 centers it.
    pub support_anchor: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { support_anchor: 0.5 }
    }
}

/// One row of a conditional kernel: normalized mass starting at bin `first`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub first: usize,
    pub mass: Vec<f64>,
}

impl KernelRow {
    pub fn last(&self) -> usize {
        self.first + self.mass.len() - 1
    }

    /// The row as a full pmf over `grid`.
    pub fn to_pmf(&self, grid: &TimeGrid) -> Result<Pmf> {
        let mut mass = vec![0.0; grid.bins];
        mass[self.first..=self.last()].copy_from_slice(&self.mass);
        Pmf::from_mass(*grid, mass)
    }
}

/// `p(t_{i+1} | t_i; γ_{i+1})` for one leg of one flight.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalKernel {
    grid: TimeGrid,
    nominal: f64,
    support_len: f64,
    anchor: f64,
    target: f64,
}

impl ConditionalKernel {
    /// Support `[lo, hi]` of the row conditioned on the previous overflight at `t`.
    pub fn support_at(&self, t: f64) -> (f64, f64) {
        let lo = t + self.nominal - self.anchor * self.support_len;
        let hi = t + self.nominal + (1.0 - self.anchor) * self.support_len;
        (lo.max(t + self.grid.step), hi)
    }

    /// Mode of the row at `t`: the target clamped into the row's support.
    pub fn mode_at(&self, t: f64) -> f64 {
        let (lo, hi) = self.support_at(t);
        self.target.clamp(lo, hi)
    }

    pub fn is_deterministic(&self) -> bool {
        self.support_len == 0.0
    }

    /// Row conditioned on an overflight at time `t`.
    pub fn row_at(&self, t: f64) -> Result<KernelRow> {
        if self.is_deterministic() {
            let next = t + self.nominal;
            let k = self.grid.bin_of(next).ok_or_else(|| {
                Error::Horizon(format!("deterministic arrival {next} beyond grid end {}", self.grid.end()))
            })?;
            return Ok(KernelRow { first: k, mass: vec![1.0] });
        }
        let (lo, hi) = self.support_at(t);
        if hi > self.grid.end() + 1e-9 {
            return Err(Error::Horizon(format!(
                "kernel support [{lo}, {hi}] passes grid end {}",
                self.grid.end()
            )));
        }
        let spec = TriangularSpec::new(lo, self.target.clamp(lo, hi), hi)?;
        let (first, mut mass) = spec.bin_masses(lo, hi, &self.grid);
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= total);
        // trim zero-mass edge bins produced by boundary rounding
        let lead = mass.iter().position(|m| *m > 0.0).unwrap_or(0);
        let tail = mass.iter().rposition(|m| *m > 0.0).unwrap_or(mass.len() - 1);
        Ok(KernelRow { first: first + lead, mass: mass[lead..=tail].to_vec() })
    }

    /// Row for a previous overflight in bin `k` (evaluated at the bin midpoint).
    pub fn row(&self, k: usize) -> Result<KernelRow> {
        self.row_at(self.grid.midpoint(k))
    }
}

/// Kernel for leg `leg` (0-based: waypoint `leg` to `leg + 1`) of `plan`.
pub fn build_kernel(
    plan: &FlightPlan,
    leg: usize,
    target: f64,
    grid: &TimeGrid,
    config: &PropagationConfig,
) -> Result<ConditionalKernel> {
    let nominal = *plan.nominal_durations.get(leg).ok_or_else(|| {
        Error::Model(format!("flight {} has no leg {}", plan.id, leg))
    })?;
    if !(0.0..=1.0).contains(&config.support_anchor) {
        return Err(Error::Invalid(format!(
            "support anchor must lie in [0, 1], got {}",
            config.support_anchor
        )));
    }
    let kernel = ConditionalKernel {
        grid: *grid,
        nominal,
        support_len: plan.enroute_support_len,
        anchor: config.support_anchor,
        target,
    };
    let (lo, hi) = kernel.support_at(0.0);
    let collapsed = if kernel.is_deterministic() { nominal < grid.step } else { hi - lo < grid.step };
    if collapsed {
        return Err(Error::Degenerate(format!(
            "flight {} leg {}: kernel support [{lo}, {hi}] after t is narrower than one bin",
            plan.id,
            leg + 1
        )));
    }
    Ok(kernel)
}

/// Triangular entry marginal with mode at `target`, truncated to the entry window.
pub fn entry_marginal(plan: &FlightPlan, target: f64, grid: &TimeGrid) -> Result<Pmf> {
    let window = plan.entry_window;
    if !window.contains(target, FEASIBILITY_SLACK) {
        return Err(Error::Constraint(format!(
            "flight {}: entry target {target} outside window [{}, {}]",
            plan.id, window.lo, window.hi
        )));
    }
    let target = window.clamp(target);
    if plan.entry_support_len == 0.0 {
        return point_mass(target, grid);
    }
    let half = 0.5 * plan.entry_support_len;
    let spec = TriangularSpec::new(target - half, target, target + half)?;
    if spec.lower < window.lo || spec.upper > window.hi {
        log::debug!(
            "flight {}: entry support [{}, {}] clipped to window [{}, {}] and renormalized",
            plan.id,
            spec.lower,
            spec.upper,
            window.lo,
            window.hi
        );
    }
    discretize_triangular_within(spec, window.lo, window.hi, grid)
}

/// Per-flight, per-waypoint overflight-time marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    flights: Vec<Vec<Pmf>>,
}

impl MarginalSet {
    pub fn flight(&self, f: usize) -> &[Pmf] {
        &self.flights[f]
    }

    pub fn get(&self, f: usize, waypoint: usize) -> &Pmf {
        &self.flights[f][waypoint]
    }

    pub fn flight_count(&self) -> usize {
        self.flights.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Pmf]> {
        self.flights.iter().map(Vec::as_slice)
    }
}

/// One propagation step: `p_next(t') = Σ_t kernel(t' | t) · p(t)`.
pub fn propagate_step(previous: &Pmf, kernel: &ConditionalKernel) -> Result<Pmf> {
    let grid = *previous.grid();
    let mut next = vec![0.0; grid.bins];
    for (k, &p) in previous.mass().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row = kernel.row(k)?;
        for (slot, m) in next[row.first..=row.last()].iter_mut().zip(&row.mass) {
            *slot += p * m;
        }
    }
    let total: f64 = next.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Horizon(format!("propagated mass {total} is not normalized")));
    }
    Pmf::from_mass(grid, next)
}

/// Marginals of one flight given its targets.
pub fn propagate_flight(
    plan: &FlightPlan,
    targets: &[f64],
    grid: &TimeGrid,
    config: &PropagationConfig,
) -> Result<Vec<Pmf>> {
    if targets.len() != plan.waypoint_count {
        return Err(Error::Invalid(format!(
            "flight {} has {} waypoints but {} targets",
            plan.id,
            plan.waypoint_count,
            targets.len()
        )));
    }
    let mut marginals = Vec::with_capacity(plan.waypoint_count);
    marginals.push(entry_marginal(plan, targets[0], grid)?);
    for leg in 0..plan.waypoint_count - 1 {
        let kernel = build_kernel(plan, leg, targets[leg + 1], grid, config)?;
        let next = propagate_step(marginals.last().unwrap(), &kernel).map_err(|e| match e {
            Error::Horizon(msg) => Error::Horizon(format!("flight {} waypoint {}: {msg}", plan.id, leg + 2)),
            other => other,
        })?;
        marginals.push(next);
    }
    Ok(marginals)
}

/// Marginals of every flight under the default kernel placement.
pub fn propagate_marginals(inst: &Instance, schedule: &Schedule) -> Result<MarginalSet> {
    propagate_marginals_with(inst, schedule, &PropagationConfig::default())
}

pub fn propagate_marginals_with(
    inst: &Instance,
    schedule: &Schedule,
    config: &PropagationConfig,
) -> Result<MarginalSet> {
    check_feasible(inst, schedule)?;
    let flights = inst
        .flights()
        .iter()
        .enumerate()
        .map(|(f, plan)| propagate_flight(plan, schedule.flight(inst, f), inst.grid(), config))
        .collect::<Result<Vec<_>>>()?;
    Ok(MarginalSet { flights })
}

/// Rejects schedules of the wrong length or outside the feasible box.
pub fn check_feasible(inst: &Instance, schedule: &Schedule) -> Result<()> {
    if schedule.len() != inst.dimension() {
        return Err(Error::Invalid(format!(
            "schedule has {} targets, instance needs {}",
            schedule.len(),
            inst.dimension()
        )));
    }
    let bx = feasible_box(inst);
    for (idx, (g, w)) in schedule.values().iter().zip(bx.bounds()).enumerate() {
        if !w.contains(*g, FEASIBILITY_SLACK) {
            return Err(Error::Constraint(format!(
                "target #{idx} = {g} outside feasible interval [{}, {}]",
                w.lo, w.hi
            )));
        }
    }
    Ok(())
}
