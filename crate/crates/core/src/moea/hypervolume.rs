use crate::objectives::ObjectiveVector;

/// Area dominated by `points` and bounded by `reference` (minimization).
///
/// Points that do not strictly dominate the reference in both objectives
/// contribute nothing.
pub fn hypervolume_2d(points: &[ObjectiveVector], reference: ObjectiveVector) -> f64 {
    let mut inside: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.c1 < reference.c1 && p.c2 < reference.c2)
        .map(|p| (p.c1, p.c2))
        .collect();
    inside.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut ceiling = reference.c2;
    let mut area = 0.0;
    for (c1, c2) in inside {
        if c2 < ceiling {
            area += (reference.c1 - c1) * (ceiling - c2);
            ceiling = c2;
        }
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Union area of the boxes [p, ref] by coordinate compression.
    fn union_area(points: &[ObjectiveVector], r: ObjectiveVector) -> f64 {
        let pts: Vec<_> = points.iter().filter(|p| p.c1 < r.c1 && p.c2 < r.c2).collect();
        let mut xs: Vec<f64> = pts.iter().map(|p| p.c1).chain([r.c1]).collect();
        let mut ys: Vec<f64> = pts.iter().map(|p| p.c2).chain([r.c2]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut area = 0.0;
        for wx in xs.windows(2) {
            for wy in ys.windows(2) {
                let covered = pts.iter().any(|p| p.c1 <= wx[0] && p.c2 <= wy[0]);
                if covered {
                    area += (wx[1] - wx[0]) * (wy[1] - wy[0]);
                }
            }
        }
        area
    }

    #[test]
    fn simple_staircase() {
        let pts = [ObjectiveVector::new(1.0, 3.0), ObjectiveVector::new(2.0, 1.0)];
        let r = ObjectiveVector::new(4.0, 4.0);
        // [1,4]x[3,4] ∪ [2,4]x[1,4] = 3 + 6
        assert!((hypervolume_2d(&pts, r) - 7.0).abs() < 1e-12);
        assert_eq!(hypervolume_2d(&[ObjectiveVector::new(5.0, 0.0)], r), 0.0);
        assert_eq!(hypervolume_2d(&[], r), 0.0);
    }

    proptest! {
        #[test]
        fn sweep_matches_union_area(raw in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 0..30)) {
            let pts: Vec<_> = raw.iter().map(|(a, b)| ObjectiveVector::new(*a, *b)).collect();
            let r = ObjectiveVector::new(9.0, 9.5);
            let hv = hypervolume_2d(&pts, r);
            let oracle = union_area(&pts, r);
            prop_assert!((hv - oracle).abs() <= 1e-9 * (1.0 + oracle));
        }
    }
}
