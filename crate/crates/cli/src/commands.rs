use std::time::Duration;

use platoon_sort::format::{parse_goal, parse_path_file, parse_state, serialize_path, PathFile};
use platoon_sort::portfolio::{aggregate_stats, derive_seeds, run_portfolio, runs_to_csv, PortfolioConfig, PortfolioSummary};
use platoon_sort::schedule::{render_frames, replay_schedule, schedule_path, schedule_to_csv, Schedule};
use platoon_sort::{
    solve_sorting, BaseHeuristic, CostParams, GoalSpec, HeuristicKind, PlatoonState, SchedulingMode, SearchOptions,
    SortingPath,
};
use serde::Serialize;

use crate::inputs::{emit, load_params, load_text, CliError, CliResult, EXIT_FAILURE};
use crate::{OutputFormat, PortfolioArgs, ProblemArgs, RenderArgs, ScheduleArgs, SolveArgs};

pub struct Problem {
    pub initial: PlatoonState,
    pub goals: GoalSpec,
    pub params: CostParams,
    pub heuristic: BaseHeuristic,
    pub time_limit: Option<Duration>,
}

pub fn load_problem(args: &ProblemArgs) -> CliResult<Problem> {
    let params = load_params(args.cost.config.as_deref(), args.cost.overrides())?;
    let initial = parse_state(&load_text(&args.initial)?)?;
    if let Some(w) = initial.vacancy_warning() {
        eprintln!("warning: {w}");
    }
    let mut goals: Option<GoalSpec> = None;
    for file in args.goal.iter().chain(&args.goal2) {
        let spec = parse_goal(&load_text(file)?, &initial)?;
        goals = Some(match goals {
            Some(g) => g.union(spec)?,
            None => spec,
        });
    }
    let goals = goals.ok_or_else(|| CliError::parse("at least one --goal is required"))?;
    let heuristic = args.heuristic.map(Into::into).unwrap_or_else(|| goals.default_base());
    Ok(Problem {
        initial,
        goals,
        params,
        heuristic,
        time_limit: args.time_limit_ms.map(Duration::from_millis),
    })
}

fn moves_csv(path: &SortingPath) -> String {
    let mut out = String::from("move,vehicle,from,to\n");
    for (i, m) in path.moves.iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", i + 1, m.vehicle, m.from, m.to));
    }
    out
}

pub fn solve(args: SolveArgs) -> CliResult<()> {
    let p = load_problem(&args.problem)?;
    let kind = HeuristicKind {
        base: p.heuristic,
        stochastic: args.stochastic,
    };
    let opts = SearchOptions {
        time_limit: p.time_limit,
        ..Default::default()
    };
    let (path, stats) = solve_sorting(&p.initial, &p.goals, &p.params, kind, &opts, Some(args.seed))?;
    eprintln!(
        "cost {} moves {} goal {} explored {} generated {} elapsed {:.6}s",
        path.total_cost,
        path.moves.len(),
        path.chosen_goal,
        stats.explored,
        stats.generated,
        stats.elapsed_s
    );
    let text = match args.format {
        OutputFormat::Object => serialize_path(&path, Some(&stats)),
        OutputFormat::Csv => moves_csv(&path),
    };
    emit(args.out.as_deref(), &text)
}

fn load_path(arg: &str, params: &CostParams) -> CliResult<SortingPath> {
    Ok(parse_path_file(&load_text(arg)?)?.to_path(params)?)
}

fn frames_for(path: &SortingPath, schedule: &Schedule) -> CliResult<String> {
    let frames = replay_schedule(path.initial(), schedule).map_err(|v| {
        let lines: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        CliError::new(EXIT_FAILURE, format!("schedule does not replay:\n{}", lines.join("\n")))
    })?;
    Ok(render_frames(&frames))
}

#[derive(Serialize)]
struct ScheduleDoc<'a> {
    schedule: &'a Schedule,
    frames: String,
}

pub fn schedule(args: ScheduleArgs) -> CliResult<()> {
    let params = load_params(args.cost.config.as_deref(), args.cost.overrides())?;
    let path = load_path(&args.path, &params)?;
    let s = schedule_path(&path, args.mode.into())?;
    let frames = frames_for(&path, &s)?;
    eprintln!("mode {} makespan {} objective {} moves {}", s.mode, s.makespan, s.objective, s.moves.len());
    let text = match args.format {
        OutputFormat::Csv => schedule_to_csv(&s),
        OutputFormat::Object => serde_json::to_string_pretty(&ScheduleDoc { schedule: &s, frames }).expect("schedule serializes"),
    };
    emit(args.out.as_deref(), &text)
}

pub fn render(args: RenderArgs) -> CliResult<()> {
    let params = load_params(args.cost.config.as_deref(), args.cost.overrides())?;
    let path = load_path(&args.path, &params)?;
    let s = schedule_path(&path, args.mode.into())?;
    emit(args.out.as_deref(), &frames_for(&path, &s)?)
}

#[derive(Serialize)]
struct BestDoc {
    seed: u64,
    mode: SchedulingMode,
    makespan: u32,
    objective: u64,
    cost: f64,
    path: PathFile,
    schedule: Schedule,
}

#[derive(Serialize)]
struct PortfolioDoc {
    best: BestDoc,
    distinct_paths: usize,
    summary: PortfolioSummary,
}

pub fn portfolio(args: PortfolioArgs) -> CliResult<()> {
    if args.workers == 0 {
        return Err(CliError::parse("--workers must be positive"));
    }
    let p = load_problem(&args.problem)?;
    let mut modes: Vec<SchedulingMode> = args.modes.iter().map(|&m| m.into()).collect();
    modes.sort();
    modes.dedup();
    let config = PortfolioConfig {
        seeds: derive_seeds(args.seed, args.workers),
        time_limit: p.time_limit,
        modes,
        goals: p.goals,
        params: p.params,
        heuristic: p.heuristic,
        stochastic: !args.deterministic,
        threads: args.threads,
    };
    let result = run_portfolio(&p.initial, &config)?;
    let summary = aggregate_stats(&result.runs, &result.modes);
    eprintln!(
        "best {} makespan {} objective {} cost {} distinct paths {} timeouts {}",
        result.best.mode,
        result.best.schedule.makespan,
        result.best.schedule.objective,
        result.best.path.total_cost,
        result.distinct_paths,
        summary.timeouts
    );
    let text = match args.format {
        OutputFormat::Csv => runs_to_csv(&result),
        OutputFormat::Object => {
            let doc = PortfolioDoc {
                best: BestDoc {
                    seed: result.best.seed,
                    mode: result.best.mode,
                    makespan: result.best.schedule.makespan,
                    objective: result.best.schedule.objective,
                    cost: result.best.path.total_cost,
                    path: PathFile::from_path(&result.best.path, None),
                    schedule: result.best.schedule.clone(),
                },
                distinct_paths: result.distinct_paths,
                summary,
            };
            serde_json::to_string_pretty(&doc).expect("portfolio summary serializes")
        }
    };
    emit(args.out.as_deref(), &text)
}
