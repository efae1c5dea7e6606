//! Sector presence probabilities and Poisson-Binomial occupancy.
//!
//! A flight is in sector `s` during bin `[t_min, t_max)` unless it enters
//! after `t_max` or has already left before `t_min`. Under the time-ordering
//! of waypoints those events are disjoint, giving
//! `Pr(present) = F_entry(t_max) − F_exit(t_min)`. The occupancy count is the
//! sum of independent Bernoulli presences; its distribution is computed with
//! the standard O(N²) convolution recurrence.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::model::{Instance, ResolvedCrossing};
use crate::propagate::MarginalSet;

/// Presence probabilities below this are treated as exactly zero.
pub const PRESENCE_FLOOR: f64 = 1e-15;
/// Largest negative rounding residue tolerated in a presence probability.
const NEGATIVE_RESIDUE: f64 = 1e-12;

fn check_order(crossing: &ResolvedCrossing) -> Result<()> {
    if crossing.entry >= crossing.exit {
        return Err(Error::Model(format!(
            "crossing of flight #{} enters at waypoint {} but exits at {}",
            crossing.flight,
            crossing.entry + 1,
            crossing.exit + 1
        )));
    }
    Ok(())
}

fn clean_presence(raw: f64, crossing: &ResolvedCrossing, bin: usize) -> Result<f64> {
    if raw < -NEGATIVE_RESIDUE {
        return Err(Error::Model(format!(
            "negative presence {raw} for flight #{} in bin {bin}: exit marginal precedes entry",
            crossing.flight
        )));
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// `Pr(S_{s,f}^t)` for one crossing in bin `bin`.
pub fn presence_probability(
    marginals: &MarginalSet,
    crossing: &ResolvedCrossing,
    bin: usize,
) -> Result<f64> {
    check_order(crossing)?;
    let entry = marginals.get(crossing.flight, crossing.entry);
    let exit = marginals.get(crossing.flight, crossing.exit);
    let grid = entry.grid();
    let raw = entry.cdf(grid.bin_end(bin)) - exit.cdf(grid.bin_start(bin));
    clean_presence(raw, crossing, bin)
}

/// Presence probability of one crossing in every bin.
pub fn presence_series(marginals: &MarginalSet, crossing: &ResolvedCrossing) -> Result<Vec<f64>> {
    check_order(crossing)?;
    let entry = marginals.get(crossing.flight, crossing.entry).cdf_edges();
    let exit = marginals.get(crossing.flight, crossing.exit).cdf_edges();
    (0..entry.len() - 1)
        .map(|k| clean_presence(entry[k + 1] - exit[k], crossing, k))
        .collect()
}

/// Distribution of the number of successes among independent Bernoulli trials.
///
/// Entry `n` is `Pr(K = n)` for `n = 0..=q.len()`.
pub fn poisson_binomial_pmf(q: &[f64]) -> Vec<f64> {
    let mut dist = vec![0.0; q.len() + 1];
    dist[0] = 1.0;
    for (m, &p) in q.iter().enumerate() {
        // after m trials, dist[0..=m] is populated; walk downwards in place
        for n in (1..=m + 1).rev() {
            dist[n] = p * dist[n - 1] + (1.0 - p) * dist[n];
        }
        dist[0] *= 1.0 - p;
    }
    dist
}

/// Upper tail of the occupancy distribution above a capacity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CongestionTail {
    /// `Pr(K = n)` for `n = capacity + 1 ..= N`.
    pub tail: Vec<f64>,
    /// `Pr(K > capacity)`.
    pub prob_over: f64,
}

/// Tail of `K = Σ Bernoulli(q_f)` strictly above `capacity`.
pub fn congestion_tail(q: &[f64], capacity: usize) -> CongestionTail {
    if capacity >= q.len() {
        return CongestionTail::default();
    }
    let dist = poisson_binomial_pmf(q);
    let tail = dist[capacity + 1..].to_vec();
    let prob_over = tail.iter().sum::<f64>().min(1.0);
    CongestionTail { tail, prob_over }
}

/// `C(N, n)`, the number of terms in the multi-index sum for `Pr(K = n)`.
pub fn enumeration_count(total: u64, n: u64) -> BigUint {
    assert!(n <= total, "enumeration_count requires n <= N");
    let n = n.min(total - n);
    let mut acc = BigUint::from(1u32);
    for k in 0..n {
        acc *= total - k;
        acc /= k + 1;
    }
    acc
}

/// Occupancy summary for one sector in one bin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinCongestion {
    /// Number of flights with non-zero presence (`N_s^t`).
    pub active: usize,
    pub tail: CongestionTail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorProfile {
    pub capacity: usize,
    pub bins: Vec<BinCongestion>,
}

impl SectorProfile {
    /// Bin index and value of the largest `Pr(K > C)`.
    pub fn peak(&self) -> (usize, f64) {
        self.bins
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (k, b)| if b.tail.prob_over > best.1 { (k, b.tail.prob_over) } else { best })
    }

    pub fn prob_over(&self) -> impl Iterator<Item = f64> + '_ {
        self.bins.iter().map(|b| b.tail.prob_over)
    }
}

/// Per sector, per bin congestion tails.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionProfile {
    pub sectors: Vec<SectorProfile>,
}

/// Computes the congestion tail of every sector in every bin.
pub fn congestion_profile(inst: &Instance, marginals: &MarginalSet) -> Result<CongestionProfile> {
    let bins = inst.grid().bins;
    let mut sectors = Vec::with_capacity(inst.sectors().len());
    let mut q = Vec::new();
    for (s, sector) in inst.sectors().iter().enumerate() {
        let series = inst
            .crossings(s)
            .iter()
            .map(|c| presence_series(marginals, c))
            .collect::<Result<Vec<_>>>()?;
        let profile = (0..bins)
            .map(|k| {
                q.clear();
                q.extend(series.iter().map(|row| row[k]).filter(|p| *p >= PRESENCE_FLOOR));
                BinCongestion { active: q.len(), tail: congestion_tail(&q, sector.capacity) }
            })
            .collect();
        sectors.push(SectorProfile { capacity: sector.capacity, bins: profile });
    }
    Ok(CongestionProfile { sectors })
}
