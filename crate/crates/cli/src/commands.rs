use std::path::{Path, PathBuf};

use serde::Serialize;
use sectorflow::congestion::presence_series;
use sectorflow::mcoracle::compare;
use sectorflow::{
    evaluate_detailed, generate_benchmark, run_nsga2, BenchmarkParams, Instance, McConfig, MoeaConfig,
    ObjectiveConfig, Schedule, ScheduleDocument,
};

use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, read_instance, read_schedule, write_json, write_text, RunManifest, Table};
use crate::{Command, GenArgs, McCheckArgs, OptimizeArgs, PipelineArgs};

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(args) => gen(args),
        Command::Propagate(args) => propagate(args),
        Command::Congestion(args) => congestion(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Optimize(args) => optimize(args),
        Command::McCheck(args) => mc_check(args),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn gen(args: GenArgs) -> CliResult<()> {
    let params = BenchmarkParams {
        leaf_gap: args.leaf_gap,
        leaf_spread: args.leaf_spread,
        window_before: args.window_before,
        window_after: args.window_after,
        leg_duration: args.leg_duration,
        entry_support_len: args.entry_support,
        enroute_support_len: args.enroute_support,
        step: args.step,
    };
    let inst = generate_benchmark(args.seed, &params)?;
    ensure_dir(&args.out)?;
    write_text(&args.out.join("instance.json"), &(inst.to_json() + "\n"))?;
    let nominal = ScheduleDocument::new(&inst, inst.nominal_schedule());
    write_text(&args.out.join("schedule.json"), &(nominal.to_json() + "\n"))?;
    RunManifest::new("gen", None, &params, args.seed).write(&args.out)?;
    println!("wrote {}", args.out.join("instance.json").display());
    Ok(())
}

/// Loaded inputs shared by the pipeline subcommands.
struct Inputs {
    inst: Instance,
    schedule: Schedule,
}

fn load(args: &PipelineArgs, schedule_required: bool) -> CliResult<Inputs> {
    let inst = read_instance(&args.instance)?;
    let schedule = match &args.schedule {
        Some(path) => read_schedule(path, &inst)?,
        None if schedule_required => return Err(CliError::Usage("--schedule is required".into())),
        None => inst.nominal_schedule(),
    };
    // the schedule is bound to the instance as written; regrid afterwards
    let inst = match args.step {
        Some(step) => inst.with_step(step)?,
        None => inst,
    };
    Ok(Inputs { inst, schedule })
}

fn out_dir(args: &PipelineArgs) -> CliResult<&Path> {
    let dir = args.out.as_deref().ok_or_else(|| CliError::Usage("--out is required".into()))?;
    ensure_dir(dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct PipelineEcho<'a> {
    schedule: Option<&'a PathBuf>,
    step: f64,
}

fn manifest_for(command: &str, args: &PipelineArgs, inst: &Instance, dir: &Path) -> CliResult<()> {
    let echo = PipelineEcho { schedule: args.schedule.as_ref(), step: inst.grid().step };
    RunManifest::new(command, Some(&args.instance), echo, args.seed).write(dir)
}

fn propagate(args: PipelineArgs) -> CliResult<()> {
    let Inputs { inst, schedule } = load(&args, false)?;
    let dir = out_dir(&args)?;
    let marginals = sectorflow::propagate_marginals(&inst, &schedule)?;
    let grid = inst.grid();
    let mut table = Table::create(dir.join("marginals.csv"), &["flight_id", "waypoint_index", "bin_start_minutes", "mass"])?;
    for (plan, pmfs) in inst.flights().iter().zip(marginals.iter()) {
        for (w, pmf) in pmfs.iter().enumerate() {
            for (k, &m) in pmf.mass().iter().enumerate() {
                if m > 0.0 {
                    table.row([plan.id.clone(), (w + 1).to_string(), num(grid.bin_start(k)), num(m)])?;
                }
            }
        }
    }
    table.finish()?;
    manifest_for("propagate", &args, &inst, dir)
}

fn congestion(args: PipelineArgs) -> CliResult<()> {
    let Inputs { inst, schedule } = load(&args, false)?;
    let dir = out_dir(&args)?;
    let eval = evaluate_detailed(&inst, &schedule, &ObjectiveConfig::default())?;
    let grid = inst.grid();

    let mut presence =
        Table::create(dir.join("presence.csv"), &["sector_id", "flight_id", "bin_start_minutes", "presence"])?;
    for (s, sector) in inst.sectors().iter().enumerate() {
        for crossing in inst.crossings(s) {
            let flight = &inst.flights()[crossing.flight].id;
            for (k, p) in presence_series(&eval.marginals, crossing)?.into_iter().enumerate() {
                if p > 0.0 {
                    presence.row([sector.id.clone(), flight.clone(), num(grid.bin_start(k)), num(p)])?;
                }
            }
        }
    }
    presence.finish()?;

    let mut tails = Table::create(
        dir.join("congestion.csv"),
        &["sector_id", "bin_start_minutes", "active_flights", "capacity", "prob_over_capacity", "expected_squared_excess"],
    )?;
    for (sector, profile) in inst.sectors().iter().zip(&eval.profile.sectors) {
        for (k, bin) in profile.bins.iter().enumerate() {
            let excess =
                bin.tail.tail.iter().enumerate().fold(0.0, |acc, (j, p)| acc + ((j + 1) * (j + 1)) as f64 * p);
            tails.row([
                sector.id.clone(),
                num(grid.bin_start(k)),
                bin.active.to_string(),
                sector.capacity.to_string(),
                num(bin.tail.prob_over),
                num(excess),
            ])?;
        }
    }
    tails.finish()?;
    manifest_for("congestion", &args, &inst, dir)
}

#[derive(Serialize)]
struct Objectives {
    c1: f64,
    c2: f64,
}

fn evaluate(args: PipelineArgs) -> CliResult<()> {
    let Inputs { inst, schedule } = load(&args, true)?;
    let v = sectorflow::evaluate(&inst, &schedule)?;
    println!("c1 {}", num(v.c1));
    println!("c2 {}", num(v.c2));
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_json(&dir.join("objectives.json"), &Objectives { c1: v.c1, c2: v.c2 })?;
        manifest_for("evaluate", &args, &inst, dir)?;
    }
    Ok(())
}

fn optimize(args: OptimizeArgs) -> CliResult<()> {
    let Inputs { inst, schedule: _ } = load(&args.common, false)?;
    let cfg = MoeaConfig {
        population_size: args.population,
        generations: args.generations,
        crossover_probability: args.crossover_probability,
        mutation_probability: args.mutation_probability,
        sbx_eta: args.sbx_eta,
        mutation_eta: args.mutation_eta,
        rng_seed: args.common.seed,
        seed_nominal: !args.no_seed_nominal,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let dir = out_dir(&args.common)?;
    let outcome = run_nsga2(&inst, &cfg)?;

    let mut header = vec!["c1".to_string(), "c2".to_string()];
    for plan in inst.flights() {
        header.extend((1..=plan.waypoint_count).map(|w| format!("{}_{}", plan.id, w)));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut archive = Table::create(dir.join("archive.csv"), &header)?;
    for member in &outcome.archive.members {
        let mut row = vec![num(member.objectives.c1), num(member.objectives.c2)];
        row.extend(member.schedule.values().iter().map(|g| num(*g)));
        archive.row(row)?;
    }
    archive.finish()?;

    let mut stats =
        Table::create(dir.join("stats.csv"), &["generation", "rank0_size", "hypervolume", "best_c1", "best_c2"])?;
    for s in &outcome.stats {
        stats.row([s.generation.to_string(), s.rank0_size.to_string(), num(s.hypervolume), num(s.best_c1), num(s.best_c2)])?;
    }
    stats.finish()?;

    RunManifest::new("optimize", Some(&args.common.instance), &cfg, cfg.rng_seed).write(dir)?;
    println!("archive of {} schedules written to {}", outcome.archive.members.len(), dir.display());
    Ok(())
}

fn mc_check(args: McCheckArgs) -> CliResult<()> {
    let Inputs { inst, schedule } = load(&args.common, false)?;
    let closed = evaluate_detailed(&inst, &schedule, &ObjectiveConfig::default())?;
    let cfg = McConfig { samples: args.samples, rng_seed: args.common.seed };
    let cmp = compare(&inst, &schedule, &closed, &cfg)?;

    println!("samples              {}", cmp.samples);
    println!("cells within 3 se    {}/{} ({:.2}%)", cmp.cells_within, cmp.cells, 100.0 * cmp.cell_fraction());
    println!("max cell |diff|/se   {:.3}", cmp.max_cell_z);
    println!("zero-se mismatches   {}", cmp.impossible_cells);
    println!("c1 closed/empirical  {:.6} / {:.6}  |diff|/se {:.3}  rel {:.4}", cmp.c1_closed, cmp.c1_empirical, cmp.c1_z, cmp.c1_relative());
    println!("c2 closed/empirical  {:.6} / {:.6}  |diff|/se {:.3}  rel {:.4}", cmp.c2_closed, cmp.c2_empirical, cmp.c2_z, cmp.c2_relative());
    println!("sign test            p = {:.4} over {} cells", cmp.sign_test_p, cmp.sign_test_cells);
    println!("order violations     {}", cmp.order_violations);
    let verdict = if cmp.passes() { "PASS" } else { "FAIL" };
    println!("verdict              {verdict}");

    if let Some(dir) = &args.common.out {
        ensure_dir(dir)?;
        write_json(&dir.join("mc_report.json"), &cmp)?;
        RunManifest::new("mc-check", Some(&args.common.instance), &cfg, cfg.rng_seed).write(dir)?;
    }
    if cmp.passes() {
        Ok(())
    } else {
        Err(CliError::CheckFailed("closed form and simulation disagree".into()))
    }
}
