//! Airspace instance data: flight plans, sectors, feasible boxes and schedules.
//!
//! Waypoint indices in [`SectorCrossing`] are 1-based, matching the document
//! format. Schedules are flattened flight by flight, waypoints in order, so a
//! schedule for flight `f` occupies `offsets[f]..offsets[f + 1]`.

mod benchmark;
mod document;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeprob::TimeGrid;

pub use benchmark::{generate_benchmark, BenchmarkParams};
pub use document::{instance_checksum, ScheduleDocument, FORMAT_VERSION};

/// Lower speed-envelope coefficient of the box recursion.
pub const BOX_ALPHA: f64 = 0.9;
/// Upper speed-envelope coefficient of the box recursion.
pub const BOX_BETA: f64 = 1.05;

/// Closed interval in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64, slack: f64) -> bool {
        t >= self.lo - slack && t <= self.hi + slack
    }

    pub fn clamp(&self, t: f64) -> f64 {
        t.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub id: String,
    pub waypoint_count: usize,
    /// `nominal_durations[i]` is the nominal travel time from waypoint `i+1` to `i+2`.
    pub nominal_durations: Vec<f64>,
    pub entry_window: Window,
    pub entry_support_len: f64,
    pub enroute_support_len: f64,
    pub scheduled_arrival: f64,
}

impl FlightPlan {
    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Model(format!("flight {}: {msg}", self.id)));
        if self.waypoint_count < 2 {
            return fail(format!("needs at least 2 waypoints, has {}", self.waypoint_count));
        }
        if self.nominal_durations.len() != self.waypoint_count - 1 {
            return fail(format!(
                "{} waypoints need {} durations, got {}",
                self.waypoint_count,
                self.waypoint_count - 1,
                self.nominal_durations.len()
            ));
        }
        if let Some(d) = self.nominal_durations.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return fail(format!("nominal duration {d} must be positive"));
        }
        if !(self.entry_window.lo < self.entry_window.hi) {
            return fail(format!(
                "entry window [{}, {}] is empty",
                self.entry_window.lo, self.entry_window.hi
            ));
        }
        // A zero support length is the deterministic limit (point masses).
        for (name, len) in [
            ("entry_support_len", self.entry_support_len),
            ("enroute_support_len", self.enroute_support_len),
        ] {
            if !(len >= 0.0) || !len.is_finite() {
                return fail(format!("{name} must be non-negative, got {len}"));
            }
        }
        if self.entry_support_len > self.entry_window.width() + 1e-9 {
            return fail(format!(
                "entry support {} exceeds entry window width {}",
                self.entry_support_len,
                self.entry_window.width()
            ));
        }
        if !self.scheduled_arrival.is_finite() {
            return fail("scheduled arrival must be finite".into());
        }
        Ok(())
    }

    /// Latest time any propagated marginal of this flight can reach on a grid with `step`.
    pub fn reach_end(&self, step: f64) -> f64 {
        let legs: f64 = self
            .nominal_durations
            .iter()
            .map(|d| d + 0.5 * self.enroute_support_len + step)
            .sum();
        self.entry_window.hi + step + legs
    }

    /// Total nominal flight time.
    pub fn nominal_duration(&self) -> f64 {
        self.nominal_durations.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorCrossing {
    pub flight: String,
    /// 1-based waypoint at which the flight enters the sector.
    pub entry_waypoint: usize,
    /// 1-based waypoint at which the flight leaves the sector.
    pub exit_waypoint: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub id: String,
    pub capacity: usize,
    pub crossings: Vec<SectorCrossing>,
}

impl Sector {
    /// A sector whose capacity reaches its crossing count can never be congested.
    pub fn is_never_congested(&self) -> bool {
        self.capacity >= self.crossings.len()
    }
}

/// A crossing resolved against the instance: flight index and 0-based waypoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedCrossing {
    pub flight: usize,
    pub entry: usize,
    pub exit: usize,
}

/// Validated airspace instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    grid: TimeGrid,
    flights: Vec<FlightPlan>,
    sectors: Vec<Sector>,
    offsets: Vec<usize>,
    resolved: Vec<Vec<ResolvedCrossing>>,
}

impl Instance {
    pub fn new(grid: TimeGrid, flights: Vec<FlightPlan>, sectors: Vec<Sector>) -> Result<Self> {
        grid.validate()?;
        let mut index = HashMap::with_capacity(flights.len());
        for (f, plan) in flights.iter().enumerate() {
            plan.validate()?;
            if index.insert(plan.id.clone(), f).is_some() {
                return Err(Error::Model(format!("duplicate flight id {}", plan.id)));
            }
            let reach = plan.reach_end(grid.step);
            if plan.entry_window.lo < grid.origin || reach > grid.end() + 1e-9 {
                return Err(Error::Horizon(format!(
                    "flight {} needs [{}, {}] but grid spans [{}, {}]",
                    plan.id,
                    plan.entry_window.lo,
                    reach,
                    grid.origin,
                    grid.end()
                )));
            }
        }

        let mut resolved = Vec::with_capacity(sectors.len());
        let mut sector_ids = HashMap::new();
        for sector in &sectors {
            if sector_ids.insert(sector.id.clone(), ()).is_some() {
                return Err(Error::Model(format!("duplicate sector id {}", sector.id)));
            }
            let mut list = Vec::with_capacity(sector.crossings.len());
            for c in &sector.crossings {
                let f = *index.get(&c.flight).ok_or_else(|| {
                    Error::Model(format!("sector {} references unknown flight {}", sector.id, c.flight))
                })?;
                let n = flights[f].waypoint_count;
                if !(1 <= c.entry_waypoint && c.entry_waypoint < c.exit_waypoint && c.exit_waypoint <= n) {
                    return Err(Error::Model(format!(
                        "sector {} crossing of {} needs 1 <= entry < exit <= {n}, got ({}, {})",
                        sector.id, c.flight, c.entry_waypoint, c.exit_waypoint
                    )));
                }
                list.push(ResolvedCrossing {
                    flight: f,
                    entry: c.entry_waypoint - 1,
                    exit: c.exit_waypoint - 1,
                });
            }
            if sector.is_never_congested() {
                log::warn!(
                    "sector {} has capacity {} >= {} crossings; its congestion cost is identically 0",
                    sector.id,
                    sector.capacity,
                    sector.crossings.len()
                );
            }
            resolved.push(list);
        }

        let mut offsets = Vec::with_capacity(flights.len() + 1);
        offsets.push(0);
        for plan in &flights {
            offsets.push(offsets.last().unwrap() + plan.waypoint_count);
        }

        Ok(Self { grid, flights, sectors, offsets, resolved })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn flights(&self) -> &[FlightPlan] {
        &self.flights
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Crossings of sector `s` with flight indices and 0-based waypoints.
    pub fn crossings(&self, s: usize) -> &[ResolvedCrossing] {
        &self.resolved[s]
    }

    /// Number of decision variables (one per flight waypoint).
    pub fn dimension(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Flattened index range of flight `f` inside a schedule.
    pub fn span_of(&self, f: usize) -> std::ops::Range<usize> {
        self.offsets[f]..self.offsets[f + 1]
    }

    pub fn flight_index(&self, id: &str) -> Option<usize> {
        self.flights.iter().position(|p| p.id == id)
    }

    /// Same flights and sectors on a regridded horizon with a new step.
    pub fn with_step(&self, step: f64) -> Result<Self> {
        let grid = horizon_for(&self.flights, step)?;
        Self::new(grid, self.flights.clone(), self.sectors.clone())
    }

    /// Pure nominal targets: entry at `A_f − Σ D`, then nominal durations.
    pub fn nominal_schedule(&self) -> Schedule {
        let bx = feasible_box(self);
        let mut gamma = Vec::with_capacity(self.dimension());
        for plan in &self.flights {
            let mut t = plan.scheduled_arrival - plan.nominal_duration();
            gamma.push(t);
            for d in &plan.nominal_durations {
                t += d;
                gamma.push(t);
            }
        }
        clamp_to_box(&Schedule::new(gamma), &bx)
    }
}

/// Grid with the given step covering every flight's entry window and reach,
/// with bin midpoints on whole multiples of `step` from the earliest window start.
pub fn horizon_for(flights: &[FlightPlan], step: f64) -> Result<TimeGrid> {
    if flights.is_empty() {
        return Err(Error::Model("instance has no flights".into()));
    }
    let start = flights.iter().map(|f| f.entry_window.lo).fold(f64::INFINITY, f64::min);
    let end = flights.iter().map(|f| f.reach_end(step)).fold(f64::NEG_INFINITY, f64::max);
    let origin = start.floor() - 0.5 * step;
    TimeGrid::covering(origin, end + step, step)
}

/// Per-(flight, waypoint) feasible intervals, flattened like a [`Schedule`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleBox {
    bounds: Vec<Window>,
}

impl FeasibleBox {
    pub fn bounds(&self) -> &[Window] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn contains(&self, schedule: &Schedule, slack: f64) -> bool {
        schedule.len() == self.len()
            && self.bounds.iter().zip(schedule.values()).all(|(w, g)| w.contains(*g, slack))
    }
}

/// Applies the speed-envelope recursion to every flight.
pub fn feasible_box(inst: &Instance) -> FeasibleBox {
    let mut bounds = Vec::with_capacity(inst.dimension());
    for plan in inst.flights() {
        let mut w = plan.entry_window;
        bounds.push(w);
        for d in &plan.nominal_durations {
            w = Window::new(w.lo + BOX_ALPHA * d, w.hi + BOX_BETA * d);
            bounds.push(w);
        }
    }
    FeasibleBox { bounds }
}

/// Decision vector: one target time per (flight, waypoint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Targets of flight `f`.
    pub fn flight<'a>(&'a self, inst: &Instance, f: usize) -> &'a [f64] {
        &self.0[inst.span_of(f)]
    }

    /// Schedule with every component shifted by `delta` minutes.
    pub fn shifted(&self, delta: f64) -> Self {
        Self(self.0.iter().map(|g| g + delta).collect())
    }
}

/// Projects every component into its feasible interval.
pub fn clamp_to_box(schedule: &Schedule, bx: &FeasibleBox) -> Schedule {
    Schedule(
        schedule
            .values()
            .iter()
            .zip(bx.bounds())
            .map(|(g, w)| w.clamp(*g))
            .collect(),
    )
}
