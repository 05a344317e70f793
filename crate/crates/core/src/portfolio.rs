//! Seeded portfolio of stochastic searches.
//!
//! Each seed runs an independent stochastic A* on its own thread of the
//! rayon pool. The perturbation only reorders ties, so every successful run
//! returns an optimal path, but different seeds tend to land on different
//! equal-cost paths. Those paths are compressed in each requested mode and
//! the plan with the fewest movement steps wins.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cost::CostParams;
use crate::error::{Error, Result, SearchError};
use crate::grid::PlatoonState;
use crate::heuristics::{BaseHeuristic, GoalSpec, HeuristicKind};
use crate::schedule::{schedule_path, Schedule, SchedulingMode};
use crate::search::{SearchOptions, SearchStats};
use crate::sorting::{solve_sorting, SortingPath};

#[derive(Clone, Debug)]
pub struct PortfolioConfig {
    /// One worker per seed.
    pub seeds: Vec<u64>,
    pub time_limit: Option<Duration>,
    pub modes: Vec<SchedulingMode>,
    pub goals: GoalSpec,
    pub params: CostParams,
    pub heuristic: BaseHeuristic,
    pub stochastic: bool,
    /// Thread count; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl PortfolioConfig {
    pub fn new(goals: GoalSpec, seeds: Vec<u64>) -> Self {
        PortfolioConfig {
            seeds,
            time_limit: None,
            modes: SchedulingMode::ALL.to_vec(),
            goals,
            params: CostParams::default(),
            heuristic: BaseHeuristic::Manhattan,
            stochastic: true,
            threads: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.seeds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParams("portfolio needs at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams("portfolio seeds must be distinct".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidParams("portfolio needs at least one scheduling mode".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParams("thread count must be positive".into()));
        }
        self.params.validate()
    }
}

/// `count` distinct seeds drawn from a master seed.
pub fn derive_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let mut seen = std::collections::HashSet::with_capacity(count);
    let mut seeds = Vec::with_capacity(count);
    while seeds.len() < count {
        let s: u64 = rng.random();
        if seen.insert(s) {
            seeds.push(s);
        }
    }
    seeds
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub seed: u64,
    /// `None` when the run hit its time limit.
    pub path: Option<SortingPath>,
    pub cost: Option<f64>,
    pub elapsed_s: f64,
    pub stats: SearchStats,
    /// Aligned with the configured modes; empty for timed-out runs.
    pub schedules: Vec<Schedule>,
}

impl RunRecord {
    pub fn timed_out(&self) -> bool {
        self.path.is_none()
    }

    pub fn schedule(&self, mode: SchedulingMode) -> Option<&Schedule> {
        self.schedules.iter().find(|s| s.mode == mode)
    }
}

#[derive(Clone, Debug)]
pub struct BestPlan {
    pub path: SortingPath,
    pub mode: SchedulingMode,
    pub schedule: Schedule,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct PortfolioResult {
    pub best: BestPlan,
    pub distinct_paths: usize,
    pub modes: Vec<SchedulingMode>,
    pub runs: Vec<RunRecord>,
}

impl PortfolioResult {
    /// Smallest makespan reached in `mode` by any run.
    pub fn best_makespan(&self, mode: SchedulingMode) -> Option<u32> {
        self.runs.iter().filter_map(|r| r.schedule(mode)).map(|s| s.makespan).min()
    }

    pub fn min_cost(&self) -> Option<f64> {
        self.runs.iter().filter_map(|r| r.cost).reduce(f64::min)
    }

    /// Text covering every field except wall-clock timings; equal for two
    /// runs of the same configuration.
    pub fn fingerprint(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "best seed={} mode={} makespan={} objective={} cost={} moves={}",
            self.best.seed,
            self.best.mode,
            self.best.schedule.makespan,
            self.best.schedule.objective,
            self.best.path.total_cost,
            self.best.path.move_signature()
        );
        let _ = writeln!(out, "distinct={}", self.distinct_paths);
        for r in &self.runs {
            let steps: Vec<String> = r.schedules.iter().map(|s| format!("{}:{:?}", s.mode, s.steps)).collect();
            let _ = writeln!(
                out,
                "seed={} cost={:?} explored={} generated={} reopened={} moves={} schedules={}",
                r.seed,
                r.cost,
                r.stats.explored,
                r.stats.generated,
                r.stats.reopened,
                r.path.as_ref().map(|p| p.move_signature()).unwrap_or_default(),
                steps.join(";")
            );
        }
        out
    }
}

fn solve_one(initial: &PlatoonState, config: &PortfolioConfig, seed: u64) -> Result<RunRecord> {
    let opts = SearchOptions {
        time_limit: config.time_limit,
        ..Default::default()
    };
    let kind = HeuristicKind {
        base: config.heuristic,
        stochastic: config.stochastic,
    };
    match solve_sorting(initial, &config.goals, &config.params, kind, &opts, Some(seed)) {
        Ok((path, stats)) => Ok(RunRecord {
            seed,
            cost: Some(path.total_cost),
            elapsed_s: stats.elapsed_s,
            path: Some(path),
            stats,
            schedules: Vec::new(),
        }),
        Err(Error::Search(SearchError::TimedOut(stats))) => Ok(RunRecord {
            seed,
            path: None,
            cost: None,
            elapsed_s: stats.elapsed_s,
            stats,
            schedules: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

pub fn run_portfolio(initial: &PlatoonState, config: &PortfolioConfig) -> Result<PortfolioResult> {
    config.validate()?;
    let work = || -> Vec<Result<RunRecord>> {
        config
            .seeds
            .par_iter()
            .map(|&seed| solve_one(initial, config, seed))
            .collect()
    };
    let results = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    // schedule each distinct path once per mode
    let mut cache: HashMap<String, Vec<Schedule>> = HashMap::new();
    for run in &mut runs {
        let Some(path) = &run.path else { continue };
        let key = path.move_signature();
        if !cache.contains_key(&key) {
            let schedules = config
                .modes
                .iter()
                .map(|&m| schedule_path(path, m))
                .collect::<Result<Vec<_>>>()?;
            cache.insert(key.clone(), schedules);
        }
        run.schedules = cache[&key].clone();
    }

    let mut best: Option<(u32, u64, String, usize, usize)> = None;
    for (ri, run) in runs.iter().enumerate() {
        let Some(path) = &run.path else { continue };
        let signature = path.move_signature();
        for (si, s) in run.schedules.iter().enumerate() {
            let candidate = (s.makespan, s.objective, signature.clone(), ri, si);
            let better = match &best {
                None => true,
                Some(b) => (candidate.0, candidate.1, &candidate.2) < (b.0, b.1, &b.2),
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    let Some((_, _, _, ri, si)) = best else {
        return Err(Error::AllRunsTimedOut(runs.len()));
    };
    let winner = &runs[ri];
    let best = BestPlan {
        path: winner.path.clone().expect("winner has a path"),
        mode: winner.schedules[si].mode,
        schedule: winner.schedules[si].clone(),
        seed: winner.seed,
    };
    Ok(PortfolioResult {
        best,
        distinct_paths: cache.len(),
        modes: config.modes.clone(),
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: SchedulingMode,
    /// makespan -> number of runs
    pub histogram: BTreeMap<u32, usize>,
    pub best_makespan: u32,
    pub best_count: usize,
    /// `probability[k - 1]`: chance that a uniformly random k-subset of the
    /// runs contains a run reaching `best_makespan`.
    pub probability: Vec<f64>,
    /// Smallest k whose probability exceeds 0.9999.
    pub k_star: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortfolioSummary {
    pub runs: usize,
    pub successes: usize,
    pub timeouts: usize,
    pub distinct_paths: usize,
    pub min_cost: Option<f64>,
    pub runtime_min_s: f64,
    pub runtime_max_s: f64,
    pub runtime_mean_s: f64,
    pub modes: Vec<ModeSummary>,
}

pub const CONFIDENCE: f64 = 0.9999;

/// `1 - C(n - b, k) / C(n, k)` for k = 1..=n.
pub fn subset_hit_probability(n: usize, b: usize) -> Vec<f64> {
    let mut miss = 1.0;
    (0..n)
        .map(|i| {
            miss *= (n - b).saturating_sub(i) as f64 / (n - i) as f64;
            1.0 - miss
        })
        .collect()
}

pub fn aggregate_stats(runs: &[RunRecord], modes: &[SchedulingMode]) -> PortfolioSummary {
    let n = runs.len();
    let times: Vec<f64> = runs.iter().map(|r| r.elapsed_s).collect();
    let successes = runs.iter().filter(|r| !r.timed_out()).count();
    let distinct: std::collections::HashSet<String> =
        runs.iter().filter_map(|r| r.path.as_ref().map(|p| p.move_signature())).collect();

    let modes = modes
        .iter()
        .filter_map(|&mode| {
            let spans: Vec<u32> = runs.iter().filter_map(|r| r.schedule(mode)).map(|s| s.makespan).collect();
            let best = *spans.iter().min()?;
            let mut histogram = BTreeMap::new();
            for &s in &spans {
                *histogram.entry(s).or_insert(0) += 1;
            }
            let best_count = histogram[&best];
            let probability = subset_hit_probability(n, best_count);
            let k_star = probability.iter().position(|&p| p > CONFIDENCE).map(|i| i + 1);
            Some(ModeSummary {
                mode,
                histogram,
                best_makespan: best,
                best_count,
                probability,
                k_star,
            })
        })
        .collect();

    PortfolioSummary {
        runs: n,
        successes,
        timeouts: n - successes,
        distinct_paths: distinct.len(),
        min_cost: runs.iter().filter_map(|r| r.cost).reduce(f64::min),
        runtime_min_s: times.iter().copied().reduce(f64::min).unwrap_or(0.0),
        runtime_max_s: times.iter().copied().reduce(f64::max).unwrap_or(0.0),
        runtime_mean_s: if n == 0 { 0.0 } else { times.iter().sum::<f64>() / n as f64 },
        modes,
    }
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

/// One row per run: seed, status, cost, search counters and per-mode steps.
pub fn runs_to_csv(result: &PortfolioResult) -> String {
    csv_string(|w| {
        let mut header = vec![
            "seed".to_owned(),
            "status".into(),
            "cost".into(),
            "explored".into(),
            "generated".into(),
            "elapsed_s".into(),
        ];
        for m in &result.modes {
            header.push(format!("{m}_makespan"));
            header.push(format!("{m}_objective"));
        }
        w.write_record(&header)?;
        for r in &result.runs {
            let mut row = vec![
                r.seed.to_string(),
                if r.timed_out() { "timeout" } else { "ok" }.to_owned(),
                r.cost.map(|c| c.to_string()).unwrap_or_default(),
                r.stats.explored.to_string(),
                r.stats.generated.to_string(),
                format!("{:.6}", r.elapsed_s),
            ];
            for &m in &result.modes {
                match r.schedule(m) {
                    Some(s) => {
                        row.push(s.makespan.to_string());
                        row.push(s.objective.to_string());
                    }
                    None => row.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn histogram_to_csv(summary: &PortfolioSummary) -> String {
    csv_string(|w| {
        w.write_record(["mode", "makespan", "runs"])?;
        for m in &summary.modes {
            for (span, count) in &m.histogram {
                w.write_record([m.mode.to_string(), span.to_string(), count.to_string()])?;
            }
        }
        Ok(())
    })
}

pub fn probability_to_csv(summary: &PortfolioSummary) -> String {
    csv_string(|w| {
        w.write_record(["mode", "k", "probability"])?;
        for m in &summary.modes {
            for (i, p) in m.probability.iter().enumerate() {
                w.write_record([m.mode.to_string(), (i + 1).to_string(), format!("{p:.12}")])?;
            }
        }
        Ok(())
    })
}
