//! Distance estimates toward a goal set, and the stochastic perturbation
//! used by the portfolio search.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::grid::{GoalTemplate, GridSpec, PlatoonState, StateKey, VehicleId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalMode {
    /// Every goal state fixes a cell for each vehicle.
    Paired,
    /// Goal states were enumerated from a class template.
    Unpaired,
}

/// A non-empty set of goal states, each with a nonnegative preference
/// weight charged on its edge to the virtual terminal node.
#[derive(Clone, Debug)]
pub struct GoalSpec {
    mode: GoalMode,
    goals: Vec<PlatoonState>,
    weights: Vec<f64>,
}

impl GoalSpec {
    /// Single paired goal: each vehicle of `initial` sent to the listed cell.
    pub fn paired(initial: &PlatoonState, targets: &HashMap<VehicleId, usize>) -> Result<Self> {
        let goal = goal_from_targets(initial, targets)?;
        Self::from_states(initial, vec![goal])
    }

    pub fn from_states(initial: &PlatoonState, goals: Vec<PlatoonState>) -> Result<Self> {
        let weights = vec![0.0; goals.len()];
        Self::weighted(initial, goals, weights)
    }

    pub fn weighted(initial: &PlatoonState, goals: Vec<PlatoonState>, weights: Vec<f64>) -> Result<Self> {
        Self::build(GoalMode::Paired, initial, goals, weights)
    }

    pub fn from_template(initial: &PlatoonState, template: &GoalTemplate) -> Result<Self> {
        let goals = initial.enumerate_goal_set(template)?;
        let weights = vec![0.0; goals.len()];
        Self::build(GoalMode::Unpaired, initial, goals, weights)
    }

    fn build(mode: GoalMode, initial: &PlatoonState, goals: Vec<PlatoonState>, weights: Vec<f64>) -> Result<Self> {
        if goals.is_empty() {
            return Err(Error::EmptyGoalSet);
        }
        if goals.len() != weights.len() {
            return Err(Error::InfeasibleGoal(format!(
                "{} goal states but {} weights",
                goals.len(),
                weights.len()
            )));
        }
        for (i, g) in goals.iter().enumerate() {
            if !g.same_problem(initial) {
                return Err(Error::InfeasibleGoal(format!(
                    "goal {i} does not share the grid and vehicle set of the initial state"
                )));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InfeasibleGoal(format!("goal weight {w} is not a nonnegative number")));
        }
        Ok(GoalSpec { mode, goals, weights })
    }

    /// Union of two goal sets over the same problem.
    pub fn union(mut self, other: GoalSpec) -> Result<Self> {
        if !self.goals[0].same_problem(&other.goals[0]) {
            return Err(Error::InfeasibleGoal("goal sets describe different problems".into()));
        }
        if other.mode == GoalMode::Unpaired {
            self.mode = GoalMode::Unpaired;
        }
        self.goals.extend(other.goals);
        self.weights.extend(other.weights);
        Ok(self)
    }

    pub fn mode(&self) -> GoalMode {
        self.mode
    }

    pub fn goals(&self) -> &[PlatoonState] {
        &self.goals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn has_weights(&self) -> bool {
        self.weights.iter().any(|&w| w > 0.0)
    }

    /// Heuristic base that suits this goal set when the caller has no preference.
    pub fn default_base(&self) -> BaseHeuristic {
        match self.mode {
            GoalMode::Paired => BaseHeuristic::Manhattan,
            GoalMode::Unpaired => BaseHeuristic::Misplaced,
        }
    }
}

pub(crate) fn goal_from_targets(initial: &PlatoonState, targets: &HashMap<VehicleId, usize>) -> Result<PlatoonState> {
    let mut placements = Vec::with_capacity(initial.vehicle_count());
    for (v, _) in initial.vehicles() {
        let cell = *targets
            .get(&v.id)
            .ok_or_else(|| Error::InfeasibleGoal(format!("no target cell for vehicle {}", v.id)))?;
        placements.push((crate::grid::Vehicle { rel_speed: 0.0, ..v }, cell));
    }
    if targets.len() != initial.vehicle_count() {
        return Err(Error::InfeasibleGoal("goal names vehicles that are not in the instance".into()));
    }
    PlatoonState::new(*initial.spec(), placements).map_err(|e| match e {
        Error::InvariantViolation(msg) => Error::InfeasibleGoal(msg),
        other => other,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseHeuristic {
    Manhattan,
    Misplaced,
}

impl FromStr for BaseHeuristic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "manhattan" => Ok(BaseHeuristic::Manhattan),
            "misplaced" => Ok(BaseHeuristic::Misplaced),
            other => Err(format!("unknown heuristic '{other}' (expected manhattan or misplaced)")),
        }
    }
}

impl fmt::Display for BaseHeuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseHeuristic::Manhattan => "manhattan",
            BaseHeuristic::Misplaced => "misplaced",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicKind {
    pub base: BaseHeuristic,
    pub stochastic: bool,
}

impl HeuristicKind {
    pub fn deterministic(base: BaseHeuristic) -> Self {
        HeuristicKind { base, stochastic: false }
    }

    pub fn stochastic(base: BaseHeuristic) -> Self {
        HeuristicKind { base, stochastic: true }
    }
}

impl Default for HeuristicKind {
    fn default() -> Self {
        Self::deterministic(BaseHeuristic::Manhattan)
    }
}

pub(crate) fn manhattan_positions(spec: &GridSpec, current: &[u32], goal: &[u32], params: &CostParams) -> f64 {
    let cols = spec.cols as u32;
    current
        .iter()
        .zip(goal)
        .map(|(&a, &b)| {
            let (ra, ca) = ((a - 1) / cols, (a - 1) % cols);
            let (rb, cb) = ((b - 1) / cols, (b - 1) % cols);
            ra.abs_diff(rb) as f64 * params.beta_long + ca.abs_diff(cb) as f64 * params.beta_lc
        })
        .sum()
}

pub(crate) fn misplaced_positions(current: &[u32], goal: &[u32], params: &CostParams) -> f64 {
    let n = current.iter().zip(goal).filter(|(a, b)| a != b).count();
    n as f64 * params.c_min()
}

fn positions_u32(state: &PlatoonState) -> Vec<u32> {
    state.positions().iter().map(|&p| p as u32).collect()
}

fn check_paired(state: &PlatoonState, goal: &PlatoonState) -> Result<()> {
    if state.same_problem(goal) {
        Ok(())
    } else {
        Err(Error::UnpairedGoal("goal state has a different vehicle set or grid".into()))
    }
}

/// Sum of weighted row and column displacements over all vehicles.
pub fn manhattan(state: &PlatoonState, goal: &PlatoonState, params: &CostParams) -> Result<f64> {
    check_paired(state, goal)?;
    Ok(manhattan_positions(state.spec(), &positions_u32(state), &positions_u32(goal), params))
}

/// Number of displaced vehicles times the minimum edge cost.
pub fn misplaced(state: &PlatoonState, goal: &PlatoonState, params: &CostParams) -> Result<f64> {
    check_paired(state, goal)?;
    Ok(misplaced_positions(&positions_u32(state), &positions_u32(goal), params))
}

/// Minimum over the goal set of `base(state, goal) + weight(goal)`.
pub fn multi_goal(state: &PlatoonState, goals: &GoalSpec, base: BaseHeuristic, params: &CostParams) -> Result<f64> {
    if goals.is_empty() {
        return Err(Error::EmptyGoalSet);
    }
    let mut best = f64::INFINITY;
    for (goal, w) in goals.goals().iter().zip(goals.weights()) {
        let h = match base {
            BaseHeuristic::Manhattan => manhattan(state, goal, params)?,
            BaseHeuristic::Misplaced => misplaced(state, goal, params)?,
        };
        best = best.min(h + w);
    }
    Ok(best)
}

/// `h - eps * c_min / exp(h)`.
pub fn perturb(h: f64, c_min: f64, eps: f64) -> f64 {
    h - eps * c_min / h.exp()
}

/// Open interval `(exp(-c_min), 1)` shrunk by a relative margin so that
/// sampled values never touch the ends.
pub fn epsilon_interval(c_min: f64) -> Result<(f64, f64)> {
    if !(c_min > 0.0 && c_min.is_finite()) {
        return Err(Error::NonpositiveCmin(c_min));
    }
    let lo = (-c_min).exp() * (1.0 + 1e-9);
    let hi = 1.0 - 1e-9;
    if lo >= hi {
        return Err(Error::NonpositiveCmin(c_min));
    }
    Ok((lo, hi))
}

fn fnv1a(words: &[u32], seed: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// The perturbation factor for one node in one run. Pure function of
/// `(key, run_seed)`.
pub fn epsilon_for(key: &StateKey, run_seed: u64, c_min: f64) -> Result<f64> {
    let (lo, hi) = epsilon_interval(c_min)?;
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(key.words(), run_seed));
    Ok(rng.random_range(lo..hi))
}

/// Per-run perturbation with one memoized factor per node.
#[derive(Debug)]
pub struct StochasticHeuristic {
    c_min: f64,
    run_seed: u64,
    memo: HashMap<StateKey, f64>,
}

impl StochasticHeuristic {
    pub fn new(c_min: f64, run_seed: u64) -> Result<Self> {
        epsilon_interval(c_min)?;
        Ok(StochasticHeuristic {
            c_min,
            run_seed,
            memo: HashMap::new(),
        })
    }

    pub fn epsilon(&mut self, key: &StateKey) -> f64 {
        if let Some(&eps) = self.memo.get(key) {
            return eps;
        }
        let eps = epsilon_for(key, self.run_seed, self.c_min).expect("interval checked in new");
        self.memo.insert(key.clone(), eps);
        eps
    }

    pub fn wrap(&mut self, h: f64, key: &StateKey) -> f64 {
        let eps = self.epsilon(key);
        perturb(h, self.c_min, eps)
    }
}

/// Wraps `h` for `node_key` in run `run_seed`.
pub fn stochastic_wrap(h: f64, c_min: f64, node_key: &StateKey, run_seed: u64) -> Result<f64> {
    Ok(perturb(h, c_min, epsilon_for(node_key, run_seed, c_min)?))
}
