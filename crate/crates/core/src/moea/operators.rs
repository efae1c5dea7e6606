//! Bounded real-coded variation operators: SBX crossover and polynomial mutation.

use rand::Rng;

use crate::model::{clamp_to_box, FeasibleBox, Schedule, Window};

/// Parent genes closer than this are copied unchanged.
const SAME_GENE: f64 = 1e-14;

/// Spread factor of unbounded SBX for a uniform draw `u`.
fn unbounded_spread(u: f64, eta: f64) -> f64 {
    if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    }
}

/// Unbounded symmetric SBX on one gene pair with a given uniform draw.
pub fn sbx_pair_unbounded(y1: f64, y2: f64, u: f64, eta: f64) -> (f64, f64) {
    let beta = unbounded_spread(u, eta);
    let mean = 0.5 * (y1 + y2);
    let half = 0.5 * (y2 - y1);
    (mean - beta * half, mean + beta * half)
}

/// Spread factor of bounded SBX; `beta` is `1 + 2·(distance to bound)/(parent gap)`.
fn bounded_spread(u: f64, eta: f64, beta: f64) -> f64 {
    let alpha = 2.0 - beta.powf(-(eta + 1.0));
    if u <= 1.0 / alpha {
        (u * alpha).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
    }
}

/// Bounded SBX on one gene pair; returns children in `(low, high)` order.
fn sbx_pair_bounded<R: Rng + ?Sized>(y1: f64, y2: f64, bounds: Window, eta: f64, rng: &mut R) -> (f64, f64) {
    let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
    let gap = hi - lo;
    let u: f64 = rng.gen();
    let beta_low = 1.0 + 2.0 * (lo - bounds.lo) / gap;
    let c1 = 0.5 * ((lo + hi) - bounded_spread(u, eta, beta_low) * gap);
    let beta_high = 1.0 + 2.0 * (bounds.hi - hi) / gap;
    let c2 = 0.5 * ((lo + hi) + bounded_spread(u, eta, beta_high) * gap);
    (bounds.clamp(c1), bounds.clamp(c2))
}

/// Simulated binary crossover with per-gene probability 1/2, respecting the box.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &Schedule,
    p2: &Schedule,
    bx: &FeasibleBox,
    eta: f64,
    rng: &mut R,
) -> (Schedule, Schedule) {
    let mut a = p1.clone();
    let mut b = p2.clone();
    for (i, bounds) in bx.bounds().iter().enumerate() {
        let (y1, y2) = (p1.values()[i], p2.values()[i]);
        if !rng.gen_bool(0.5) || (y1 - y2).abs() <= SAME_GENE {
            continue;
        }
        let (low, high) = sbx_pair_bounded(y1, y2, *bounds, eta, rng);
        let (first, second) = if rng.gen_bool(0.5) { (high, low) } else { (low, high) };
        a.values_mut()[i] = first;
        b.values_mut()[i] = second;
    }
    (clamp_to_box(&a, bx), clamp_to_box(&b, bx))
}

/// Bounded polynomial mutation, each gene mutated with probability `p_m`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    schedule: &Schedule,
    bx: &FeasibleBox,
    eta: f64,
    p_m: f64,
    rng: &mut R,
) -> Schedule {
    let mut out = schedule.clone();
    let power = 1.0 / (eta + 1.0);
    for (y, bounds) in out.values_mut().iter_mut().zip(bx.bounds()) {
        if !rng.gen_bool(p_m) {
            continue;
        }
        let width = bounds.width();
        let below = (*y - bounds.lo) / width;
        let above = (bounds.hi - *y) / width;
        let u: f64 = rng.gen();
        let delta = if u <= 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - below).powf(eta + 1.0);
            val.powf(power) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - above).powf(eta + 1.0);
            1.0 - val.powf(power)
        };
        *y = bounds.clamp(*y + delta * width);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{feasible_box, generate_benchmark, BenchmarkParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (FeasibleBox, Schedule, Schedule) {
        let inst = generate_benchmark(1, &BenchmarkParams::default()).unwrap();
        let bx = feasible_box(&inst);
        let a = Schedule::new(bx.bounds().iter().map(|w| w.lo + 0.2 * w.width()).collect());
        let b = Schedule::new(bx.bounds().iter().map(|w| w.lo + 0.9 * w.width()).collect());
        (bx, a, b)
    }

    #[test]
    fn identical_parents_are_a_fixed_point() {
        let (bx, a, _) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (c1, c2) = sbx_crossover(&a, &a, &bx, 15.0, &mut rng);
        assert_eq!(c1, a);
        assert_eq!(c2, a);
    }

    #[test]
    fn unbounded_sbx_preserves_the_mean() {
        for &(y1, y2) in &[(0.0, 1.0), (-3.5, 12.25), (7.0, 2.0)] {
            for k in 1..50 {
                let u = k as f64 / 50.0;
                let (c1, c2) = sbx_pair_unbounded(y1, y2, u, 15.0);
                assert!((c1 + c2 - (y1 + y2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn crossover_children_stay_in_box() {
        let (bx, a, b) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let (c1, c2) = sbx_crossover(&a, &b, &bx, 2.0, &mut rng);
            assert!(bx.contains(&c1, 0.0) && bx.contains(&c2, 0.0));
        }
    }

    #[test]
    fn zero_mutation_probability_is_identity() {
        let (bx, a, _) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(polynomial_mutation(&a, &bx, 20.0, 0.0, &mut rng), a);
    }

    #[test]
    fn mutation_at_lower_bound_never_moves_down() {
        let (bx, _, _) = setup();
        let low = Schedule::new(bx.bounds().iter().map(|w| w.lo).collect());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2_000 {
            let m = polynomial_mutation(&low, &bx, 20.0, 1.0, &mut rng);
            for (y, w) in m.values().iter().zip(bx.bounds()) {
                assert!(*y >= w.lo);
            }
        }
    }

    #[test]
    fn larger_index_means_smaller_steps() {
        let (bx, a, _) = setup();
        let mean_shift = |eta: f64| {
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            let mut total = 0.0;
            for _ in 0..10_000 {
                let m = polynomial_mutation(&a, &bx, eta, 1.0, &mut rng);
                total += (m.values()[0] - a.values()[0]).abs();
            }
            total / 10_000.0
        };
        let loose = mean_shift(20.0);
        let tight = mean_shift(100.0);
        assert!(tight < loose, "{tight} vs {loose}");
    }
}
