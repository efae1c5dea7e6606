//! Non-dominated sorting and crowding distance.

use std::cmp::Ordering;

use crate::objectives::{dominates, ObjectiveVector};

/// Partitions `points` into Pareto fronts (indices), best front first.
///
/// Standard O(M·N²) bookkeeping: for each point count how many others
/// dominate it and remember which ones it dominates.
pub fn fast_nondominated_sort(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in 0..n {
        for q in (p + 1)..n {
            if dominates(&points[p], &points[q]) {
                dominates_list[p].push(q);
                dominated_by_count[q] += 1;
            } else if dominates(&points[q], &points[p]) {
                dominates_list[q].push(p);
                dominated_by_count[p] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominates_list[p] {
                dominated_by_count[q] -= 1;
                if dominated_by_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of every member of `front`, in the order of `front`.
///
/// Boundary points get `+∞`; interior points sum the normalized gap between
/// their neighbours along each objective. Objectives with zero range add 0.
pub fn crowding_distance(points: &[ObjectiveVector], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    let mut distance = vec![0.0; len];
    if len <= 2 {
        distance.iter_mut().for_each(|d| *d = f64::INFINITY);
        return distance;
    }
    let mut order: Vec<usize> = (0..len).collect();
    for objective in 0..2 {
        let value = |slot: usize| points[front[slot]].as_array()[objective];
        order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap_or(Ordering::Equal));
        let (min, max) = (value(order[0]), value(order[len - 1]));
        distance[order[0]] = f64::INFINITY;
        distance[order[len - 1]] = f64::INFINITY;
        let range = max - min;
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            distance[w[1]] += (value(w[2]) - value(w[0])) / range;
        }
    }
    distance
}
