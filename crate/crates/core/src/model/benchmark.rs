//! Converging-tree benchmark: 12 leaves feeding one merge point.
//!
//! The tree has a root with two subtrees: a complete 8-leaf subtree (three
//! levels of merges) and a complete 4-leaf subtree (two levels). Two flights
//! enter at every leaf. Waypoints are the leaf followed by every merge node up
//! to the subtree root, so the 16 flights from the large subtree have 4
//! waypoints and the 8 from the small one have 3. Each merge node below the
//! root owns a sector spanning its two incoming branches; the root sector is
//! the final merge area, covering the last leg of every flight.
//!
//! Sector order: the six lowest merges (4 + 2), then the three middle ones
//! (2 + 1), then the large-subtree root and finally the root sector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{horizon_for, FlightPlan, Instance, Sector, SectorCrossing, Window};
use crate::error::{Error, Result};

const LARGE_LEAVES: usize = 8;
const SMALL_LEAVES: usize = 4;
const FLIGHTS_PER_LEAF: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkParams {
    /// Minutes between the two entry targets of a leaf.
    pub leaf_gap: f64,
    /// First entry targets are drawn uniformly from `[0, leaf_spread]`, rounded to whole minutes.
    pub leaf_spread: f64,
    /// Entry window is `[target − window_before, target + window_after]`.
    pub window_before: f64,
    pub window_after: f64,
    /// Nominal traversal time of every sector leg.
    pub leg_duration: f64,
    pub entry_support_len: f64,
    pub enroute_support_len: f64,
    pub step: f64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            leaf_gap: 2.0,
            leaf_spread: 10.0,
            window_before: 5.0,
            window_after: 10.0,
            leg_duration: 10.0,
            entry_support_len: 15.0,
            enroute_support_len: 8.0,
            step: 1.0,
        }
    }
}

impl BenchmarkParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("leaf_gap", self.leaf_gap),
            ("window_before", self.window_before),
            ("window_after", self.window_after),
            ("leg_duration", self.leg_duration),
            ("step", self.step),
        ];
        for (name, v) in positive {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.leaf_spread >= 0.0) || !(self.leg_duration > 0.0) || !(self.step > 0.0) {
            return Err(Error::Invalid("leaf_spread >= 0, leg_duration > 0 and step > 0 required".into()));
        }
        Ok(())
    }
}

fn crossing(flight: usize, entry: usize, exit: usize) -> SectorCrossing {
    SectorCrossing { flight: flight_id(flight), entry_waypoint: entry, exit_waypoint: exit }
}

fn flight_id(f: usize) -> String {
    format!("F{:02}", f + 1)
}

/// Flights entering at leaves `leaves`.
fn flights_of(leaves: std::ops::Range<usize>) -> impl Iterator<Item = usize> {
    leaves.flat_map(|leaf| (0..FLIGHTS_PER_LEAF).map(move |k| leaf * FLIGHTS_PER_LEAF + k))
}

/// Builds the 24-flight, 11-sector benchmark. Deterministic in `seed`.
pub fn generate_benchmark(seed: u64, params: &BenchmarkParams) -> Result<Instance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total_leaves = LARGE_LEAVES + SMALL_LEAVES;

    let mut flights = Vec::with_capacity(total_leaves * FLIGHTS_PER_LEAF);
    for leaf in 0..total_leaves {
        let first = (rng.gen::<f64>() * params.leaf_spread).round();
        let legs = if leaf < LARGE_LEAVES { 3 } else { 2 };
        for k in 0..FLIGHTS_PER_LEAF {
            let target = first + k as f64 * params.leaf_gap;
            let durations = vec![params.leg_duration; legs];
            flights.push(FlightPlan {
                id: flight_id(flights.len()),
                waypoint_count: legs + 1,
                scheduled_arrival: target + params.leg_duration * legs as f64,
                nominal_durations: durations,
                entry_window: Window::new(target - params.window_before, target + params.window_after),
                entry_support_len: params.entry_support_len,
                enroute_support_len: params.enroute_support_len,
            });
        }
    }

    // (leaf range, entry waypoint) for each merge sector below the root
    let mut groups: Vec<(std::ops::Range<usize>, usize)> = Vec::new();
    for pair in 0..LARGE_LEAVES / 2 {
        groups.push((2 * pair..2 * pair + 2, 1));
    }
    for pair in 0..SMALL_LEAVES / 2 {
        let base = LARGE_LEAVES + 2 * pair;
        groups.push((base..base + 2, 1));
    }
    for quad in 0..LARGE_LEAVES / 4 {
        groups.push((4 * quad..4 * quad + 4, 2));
    }
    groups.push((LARGE_LEAVES..total_leaves, 2));
    groups.push((0..LARGE_LEAVES, 3));

    let mut sectors: Vec<Sector> = groups
        .into_iter()
        .map(|(leaves, entry)| flights_of(leaves).map(|f| crossing(f, entry, entry + 1)).collect())
        .map(|crossings: Vec<SectorCrossing>| Sector {
            id: String::new(),
            capacity: crossings.len() - 1,
            crossings,
        })
        .collect();
    let last_legs: Vec<SectorCrossing> = flights
        .iter()
        .enumerate()
        .map(|(f, plan)| crossing(f, plan.waypoint_count - 1, plan.waypoint_count))
        .collect();
    sectors.push(Sector { id: String::new(), capacity: last_legs.len() - 1, crossings: last_legs });
    for (s, sector) in sectors.iter_mut().enumerate() {
        sector.id = format!("S{s:02}");
    }

    let grid = horizon_for(&flights, params.step)?;
    Instance::new(grid, flights, sectors)
}
