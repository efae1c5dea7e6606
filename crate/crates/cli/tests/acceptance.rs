//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails afterwards if any criterion failed.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sectorflow::congestion::{enumeration_count, poisson_binomial_pmf};
use sectorflow::mcoracle::compare;
use sectorflow::moea::fast_nondominated_sort;
use sectorflow::{
    estimate_congestion, evaluate_detailed, generate_benchmark, propagate_marginals, run_nsga2,
    BenchmarkParams, Instance, McConfig, MoeaConfig, ObjectiveConfig, ObjectiveVector,
};

fn benchmark() -> Instance {
    generate_benchmark(0, &BenchmarkParams::default()).unwrap()
}

struct Report {
    failures: Vec<usize>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        println!("criterion {id:>2}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(id);
        }
    }
}

fn criterion_1(r: &mut Report) {
    let start = Instant::now();
    let c = enumeration_count(60, 30).to_string();
    let s = (55..=60).map(|n| enumeration_count(60, n)).reduce(|a, b| a + b).unwrap().to_string();
    let elapsed = start.elapsed();
    let pass = c == "118264581564861424" && s == "5985198" && elapsed < Duration::from_millis(1);
    r.record(1, pass, format!("C(60,30) = {c}, sum C(60,55..60) = {s}, {elapsed:?}"));
}

/// `Pr(K = n)` by summing over all 2^N outcomes.
fn enumerate_pmf(q: &[f64]) -> Vec<f64> {
    let mut pmf = vec![0.0; q.len() + 1];
    for mask in 0u32..(1 << q.len()) {
        let mut p = 1.0;
        for (i, qi) in q.iter().enumerate() {
            p *= if mask & (1 << i) != 0 { *qi } else { 1.0 - qi };
        }
        pmf[mask.count_ones() as usize] += p;
    }
    pmf
}

fn criterion_2(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let start = Instant::now();
    for _ in 0..1000 {
        let n = rng.gen_range(0..=12);
        let q: Vec<f64> = (0..n)
            .map(|_| match rng.gen_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen(),
            })
            .collect();
        let dp = poisson_binomial_pmf(&q);
        for (a, b) in dp.iter().zip(enumerate_pmf(&q)) {
            worst = worst.max((a - b).abs());
        }
    }
    r.record(2, worst <= 1e-12, format!("max |dp − enumeration| = {worst:.2e} over 1000 vectors in {:?}", start.elapsed()));
}

fn criterion_3(r: &mut Report) {
    let p1 = poisson_binomial_pmf(&[0.5, 0.5, 0.5])[1];
    r.record(3, (p1 - 0.375).abs() <= 1e-15, format!("Pr(K = 1) = {p1}"));
}

fn criterion_4(r: &mut Report, inst: &Instance) {
    let s = inst.nominal_schedule();
    let marginals = propagate_marginals(inst, &s).unwrap();
    let worst = marginals
        .iter()
        .flatten()
        .map(|p| (p.total() - 1.0).abs())
        .fold(0.0f64, f64::max);
    let mc = estimate_congestion(inst, &s, &McConfig { samples: 100_000, rng_seed: 4 }).unwrap();
    let pass = worst <= 1e-9 && mc.order_violations == 0;
    r.record(
        4,
        pass,
        format!("max |Σ mass − 1| = {worst:.2e}, order violations {} in 10^5 joint samples", mc.order_violations),
    );
}

fn criterion_5(r: &mut Report, inst: &Instance) {
    let s = inst.nominal_schedule();
    let start = Instant::now();
    let closed = evaluate_detailed(inst, &s, &ObjectiveConfig::default()).unwrap();
    let cmp = compare(inst, &s, &closed, &McConfig { samples: 100_000, rng_seed: 5 }).unwrap();
    let elapsed = start.elapsed();
    let pass = cmp.cell_fraction() >= 0.99
        && cmp.c1_relative() <= 0.05
        && cmp.c2_relative() <= 0.05
        && elapsed < Duration::from_secs(120);
    r.record(
        5,
        pass,
        format!(
            "{}/{} cells within 3 se, c1 rel {:.4}, c2 rel {:.4}, sign test p {:.3}, {elapsed:?}",
            cmp.cells_within,
            cmp.cells,
            cmp.c1_relative(),
            cmp.c2_relative(),
            cmp.sign_test_p
        ),
    );
}

fn criterion_6(r: &mut Report, inst: &Instance) {
    let flights = inst.flights();
    let waypoints_ok = flights.len() == 24
        && flights[..16].iter().all(|f| f.waypoint_count == 4)
        && flights[16..].iter().all(|f| f.waypoint_count == 3);
    let capacity_ok = inst.sectors().iter().all(|s| s.capacity + 1 == s.crossings.len());
    let pass = waypoints_ok && capacity_ok && inst.sectors().len() == 11;
    r.record(
        6,
        pass,
        format!("{} flights, {} sectors, waypoint split ok {waypoints_ok}, capacities ok {capacity_ok}", flights.len(), inst.sectors().len()),
    );
}

fn criterion_7(r: &mut Report, inst: &Instance) {
    let eval = evaluate_detailed(inst, &inst.nominal_schedule(), &ObjectiveConfig::default()).unwrap();
    // root: the sector every flight crosses last; bottom: sectors entered at the first waypoint
    let root = (0..inst.sectors().len()).max_by_key(|&s| inst.crossings(s).len()).unwrap();
    let bottom: Vec<usize> = (0..inst.sectors().len())
        .filter(|&s| inst.crossings(s).iter().all(|c| c.entry == 0))
        .collect();
    let grid = inst.grid();
    let (root_bin, root_p) = eval.profile.sectors[root].peak();
    let mut pass = !bottom.is_empty();
    let mut latest_bottom = f64::NEG_INFINITY;
    let mut lowest_bottom = f64::INFINITY;
    for &s in &bottom {
        let (bin, p) = eval.profile.sectors[s].peak();
        pass &= root_bin > bin && root_p < p;
        latest_bottom = latest_bottom.max(grid.midpoint(bin));
        lowest_bottom = lowest_bottom.min(p);
    }
    r.record(
        7,
        pass,
        format!(
            "root {} peaks at t = {} with {root_p:.3e}; {} bottom sectors peak by t = {} with at least {lowest_bottom:.3}",
            inst.sectors()[root].id,
            grid.midpoint(root_bin),
            bottom.len(),
            latest_bottom
        ),
    );
}

fn criterion_8(r: &mut Report, inst: &Instance) {
    let start = Instant::now();
    let out = run_nsga2(inst, &MoeaConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let pts = out.archive.objectives();
    let mutual = pts.iter().all(|a| !pts.iter().any(|b| sectorflow::objectives::dominates(b, a)));
    let by = |key: fn(&ObjectiveVector) -> (f64, f64)| {
        *pts.iter().min_by(|a, b| key(a).partial_cmp(&key(b)).unwrap()).unwrap()
    };
    let best_c1 = by(|v| (v.c1, v.c2));
    let best_c2 = by(|v| (v.c2, v.c1));
    let trade_off = best_c1 != best_c2 && best_c1.c2 > best_c2.c2 && best_c2.c1 > best_c1.c1;
    let hv: Vec<f64> = out.stats.iter().map(|s| s.hypervolume).collect();
    let monotone = hv.windows(2).all(|w| w[1] >= w[0]);
    let pass = mutual && trade_off && monotone && elapsed < Duration::from_secs(600);
    r.record(
        8,
        pass,
        format!(
            "{} archive members, non-dominated {mutual}, extremes ({:.3}, {:.3}) / ({:.3}, {:.3}), hypervolume {:.3} → {:.3} monotone {monotone}, {elapsed:?}",
            pts.len(),
            best_c1.c1,
            best_c1.c2,
            best_c2.c1,
            best_c2.c2,
            hv[0],
            hv[hv.len() - 1]
        ),
    );
}

fn run_optimize(instance: &Path, out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_sectorflow"))
        .args(["optimize", "--seed", "9", "--instance"])
        .arg(instance)
        .arg("--out")
        .arg(out)
        .status()
        .unwrap();
    assert!(status.success());
}

fn criterion_9(r: &mut Report, inst: &Instance) {
    let dir = tempfile::tempdir().unwrap();
    let instance = dir.path().join("instance.json");
    std::fs::write(&instance, inst.to_json()).unwrap();
    run_optimize(&instance, &dir.path().join("a"));
    run_optimize(&instance, &dir.path().join("b"));
    let a = std::fs::read(dir.path().join("a/archive.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/archive.csv")).unwrap();
    r.record(9, a == b && !a.is_empty(), format!("two archives of {} bytes, identical {}", a.len(), a == b));
}

/// Fronts by the definition: repeatedly collect members no remaining member dominates.
fn naive_fronts(points: &[ObjectiveVector]) -> Vec<BTreeSet<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: BTreeSet<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                !remaining.iter().any(|&j| {
                    let (a, b) = (points[j], points[i]);
                    a.c1 <= b.c1 && a.c2 <= b.c2 && (a.c1 < b.c1 || a.c2 < b.c2)
                })
            })
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn criterion_10(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    for trial in 0..1000 {
        let n = rng.gen_range(0..=50);
        // coarse values half the time so ties and duplicates occur
        let coarse = trial % 2 == 0;
        let pts: Vec<ObjectiveVector> = (0..n)
            .map(|_| {
                if coarse {
                    ObjectiveVector::new(rng.gen_range(0..6) as f64, rng.gen_range(0..6) as f64)
                } else {
                    ObjectiveVector::new(rng.gen(), rng.gen())
                }
            })
            .collect();
        let fast: Vec<BTreeSet<usize>> =
            fast_nondominated_sort(&pts).into_iter().map(|f| f.into_iter().collect()).collect();
        if fast != naive_fronts(&pts) {
            mismatches += 1;
        }
    }
    r.record(10, mismatches == 0, format!("{mismatches} mismatching populations out of 1000"));
}

fn main() {
    let inst = benchmark();
    let mut report = Report { failures: Vec::new() };
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report, &inst);
    criterion_5(&mut report, &inst);
    criterion_6(&mut report, &inst);
    criterion_7(&mut report, &inst);
    criterion_8(&mut report, &inst);
    criterion_9(&mut report, &inst);
    criterion_10(&mut report);
    if !report.failures.is_empty() {
        eprintln!("failed criteria: {:?}", report.failures);
        std::process::exit(1);
    }
}
