//! The four reproduction experiments on the embedded samples.

use std::path::Path;
use std::time::Instant;

use platoon_sort::portfolio::{
    aggregate_stats, derive_seeds, histogram_to_csv, probability_to_csv, run_portfolio, PortfolioConfig,
    PortfolioResult,
};
use platoon_sort::{fixtures, solve_sorting, CostParams, GoalSpec, HeuristicKind, PlatoonState, SchedulingMode, SearchOptions};

use crate::inputs::{CliError, CliResult, EXIT_FAILURE, EXIT_PARSE};
use crate::BenchArgs;

const SAMPLE_27: usize = 27;

struct Table {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

fn secs(v: f64) -> String {
    format!("{v:.6}")
}

fn deterministic(initial: &PlatoonState, goals: &GoalSpec) -> CliResult<(f64, usize, usize, f64)> {
    let started = Instant::now();
    let (path, stats) = solve_sorting(
        initial,
        goals,
        &CostParams::default(),
        HeuristicKind::default(),
        &SearchOptions::default(),
        None,
    )?;
    Ok((path.total_cost, stats.explored, stats.generated, started.elapsed().as_secs_f64()))
}

fn experiment1(timing: bool) -> CliResult<Vec<Table>> {
    let mut header = vec!["sample", "f_value", "explored", "generated"];
    if timing {
        header.push("runtime_s");
    }
    let mut rows = Vec::new();
    for (id, initial) in fixtures::samples() {
        let (cost, explored, generated, t) = deterministic(&initial, &fixtures::goal_1_spec(&initial))?;
        let mut row = vec![id.to_string(), cost.to_string(), explored.to_string(), generated.to_string()];
        if timing {
            row.push(secs(t));
        }
        rows.push(row);
    }
    Ok(vec![Table {
        name: "experiment1",
        header,
        rows,
    }])
}

fn portfolio(initial: &PlatoonState, goals: GoalSpec, seeds: Vec<u64>) -> CliResult<(PortfolioResult, f64)> {
    let started = Instant::now();
    let result = run_portfolio(initial, &PortfolioConfig::new(goals, seeds))?;
    Ok((result, started.elapsed().as_secs_f64()))
}

fn portfolio_row(id: usize, result: &PortfolioResult) -> Vec<String> {
    let costs: Vec<f64> = result.runs.iter().filter_map(|r| r.cost).collect();
    let span = |m| result.best_makespan(m).map(|s| s.to_string()).unwrap_or_default();
    vec![
        id.to_string(),
        costs.iter().copied().fold(f64::INFINITY, f64::min).to_string(),
        costs.iter().copied().fold(f64::NEG_INFINITY, f64::max).to_string(),
        span(SchedulingMode::Conservative),
        span(SchedulingMode::Aggressive),
        result.distinct_paths.to_string(),
        result.best.path.chosen_goal.to_string(),
    ]
}

/// Experiments 2 and 3: portfolio on the representative samples, against
/// Goal-1 alone or against both goals.
fn experiment23(both_goals: bool, seed: u64, workers: usize, timing: bool) -> CliResult<Vec<Table>> {
    let mut header = vec![
        "sample",
        "min_cost",
        "max_cost",
        "best_conservative",
        "best_aggressive",
        "distinct_paths",
        "chosen_goal",
    ];
    if both_goals {
        header.push("goal1_cost");
    }
    if timing {
        header.extend(["deterministic_s", "portfolio_mean_s", "portfolio_wall_s"]);
    }
    let seeds = derive_seeds(seed, workers);
    let mut rows = Vec::new();
    for (id, _) in fixtures::TABLE3_F_VALUES {
        let initial = fixtures::sample(id);
        let goals = if both_goals {
            fixtures::both_goals_spec(&initial)
        } else {
            fixtures::goal_1_spec(&initial)
        };
        let (goal1_cost, _, _, _) = deterministic(&initial, &fixtures::goal_1_spec(&initial))?;
        let (_, _, _, det_t) = deterministic(&initial, &goals)?;
        let (result, wall) = portfolio(&initial, goals, seeds.clone())?;
        let mut row = portfolio_row(id, &result);
        if both_goals {
            row.push(goal1_cost.to_string());
        }
        if timing {
            let summary = aggregate_stats(&result.runs, &result.modes);
            row.extend([secs(det_t), secs(summary.runtime_mean_s), secs(wall)]);
        }
        rows.push(row);
    }
    Ok(vec![Table {
        name: if both_goals { "experiment3" } else { "experiment2" },
        header,
        rows,
    }])
}

fn experiment4(seed: u64, workers: usize) -> CliResult<Vec<(&'static str, String)>> {
    let initial = fixtures::sample(SAMPLE_27);
    let (result, _) = portfolio(&initial, fixtures::goal_1_spec(&initial), derive_seeds(seed, workers))?;
    let summary = aggregate_stats(&result.runs, &result.modes);
    let mut kstar = String::from("mode,best_makespan,best_runs,k_star\n");
    for m in &summary.modes {
        kstar.push_str(&format!(
            "{},{},{},{}\n",
            m.mode,
            m.best_makespan,
            m.best_count,
            m.k_star.map(|k| k.to_string()).unwrap_or_default()
        ));
    }
    Ok(vec![
        ("experiment4_histogram", histogram_to_csv(&summary)),
        ("experiment4_probability", probability_to_csv(&summary)),
        ("experiment4_best", kstar),
    ])
}

pub fn run(args: BenchArgs) -> CliResult<()> {
    let timing = !args.omit_timing;
    let outputs: Vec<(&'static str, String)> = match args.experiment {
        1 => experiment1(timing)?.into_iter().map(|t| (t.name, t.to_csv())).collect(),
        2 | 3 => experiment23(args.experiment == 3, args.seed, args.workers.unwrap_or(30), timing)?
            .into_iter()
            .map(|t| (t.name, t.to_csv()))
            .collect(),
        4 => experiment4(args.seed, args.workers.unwrap_or(100))?,
        other => return Err(CliError::new(EXIT_PARSE, format!("unknown experiment {other} (expected 1 to 4)"))),
    };
    match &args.out {
        Some(dir) => write_all(dir, &outputs),
        None => {
            let texts: Vec<&str> = outputs.iter().map(|(_, t)| t.as_str()).collect();
            print!("{}", texts.join("\n"));
            Ok(())
        }
    }
}

fn write_all(dir: &Path, outputs: &[(&str, String)]) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot create {}: {e}", dir.display())))?;
    for (name, text) in outputs {
        let path = dir.join(format!("{name}.csv"));
        std::fs::write(&path, text).map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
