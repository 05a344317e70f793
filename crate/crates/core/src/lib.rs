//! Cooperative sorting of vehicle platoons on a lane-by-cell grid.
//!
//! A stepwise A* search finds a minimum-cost sequence of single-vehicle
//! moves into a goal arrangement; the sequence is then compressed into
//! parallel movement steps. A portfolio of seeded stochastic searches
//! collects several equal-cost paths and keeps the one that compresses best.

pub mod cost;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod grid;
pub mod heuristics;
pub mod portfolio;
pub mod schedule;
pub mod search;
pub mod sorting;

pub use cost::{edge_cost, speed_update, vehicle_cost, CostParams};
pub use error::{Error, Result, SearchError};
pub use grid::{Direction, GoalTemplate, GridSpec, Move, MoveKind, PlatoonState, RowSet, StateKey, Vehicle, VehicleId};
pub use heuristics::{BaseHeuristic, GoalMode, GoalSpec, HeuristicKind};
pub use portfolio::{aggregate_stats, run_portfolio, PortfolioConfig, PortfolioResult, RunRecord};
pub use schedule::{
    brute_force_schedule, build_precedence, earliest_schedule, extract_moves, validate_schedule, MoveRecord, Schedule,
    SchedulingMode,
};
pub use search::{astar, SearchOptions, SearchStats};
pub use sorting::{solve_sorting, SortingPath};
