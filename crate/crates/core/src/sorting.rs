//! Platoon sorting as a shortest-path problem over grid permutations.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cost::{hold_cost, speed_update, transition_cost, CostParams};
use crate::error::{Error, Result};
use crate::grid::{quantize_speed, dequantize_speed, Direction, Move, PlatoonState, StateKey};
use crate::heuristics::{manhattan_positions, misplaced_positions, BaseHeuristic, GoalSpec, HeuristicKind, StochasticHeuristic};
use crate::search::{astar, SearchOptions, SearchStats};

/// Stepwise shortest path: one vehicle moves per edge.
#[derive(Clone, Debug)]
pub struct SortingPath {
    pub states: Vec<PlatoonState>,
    pub moves: Vec<Move>,
    /// Sum of edge costs along `states`.
    pub total_cost: f64,
    /// Index of the reached goal in the goal set.
    pub chosen_goal: usize,
    /// Preference weight of the reached goal (not part of `total_cost`).
    pub goal_weight: f64,
}

impl SortingPath {
    pub fn initial(&self) -> &PlatoonState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &PlatoonState {
        self.states.last().expect("paths hold at least one state")
    }

    /// Canonical text of the move sequence, used to tell paths apart.
    pub fn move_signature(&self) -> String {
        self.moves.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
    }

    /// Builds a path by replaying `moves` from `initial`.
    pub fn replay(initial: &PlatoonState, moves: &[Move], params: &CostParams) -> Result<SortingPath> {
        let mut states = vec![initial.clone()];
        let mut total = 0.0;
        for mv in moves {
            let cur = states.last().expect("non-empty");
            let next = cur.apply_move(mv, params)?;
            total += crate::cost::edge_cost(cur, &next, params)?;
            states.push(next);
        }
        Ok(SortingPath {
            states,
            moves: moves.to_vec(),
            total_cost: total,
            chosen_goal: 0,
            goal_weight: 0.0,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    State(StateKey),
    /// Virtual terminal behind every goal state.
    Terminal,
}

/// Precomputed goal data shared by every expansion.
struct Binding<'a> {
    initial: &'a PlatoonState,
    params: &'a CostParams,
    base: BaseHeuristic,
    goal_positions: Vec<Vec<u32>>,
    weights: Vec<f64>,
    lookup: HashMap<Vec<u32>, usize>,
    use_terminal: bool,
}

impl<'a> Binding<'a> {
    fn new(initial: &'a PlatoonState, goals: &GoalSpec, params: &'a CostParams, base: BaseHeuristic) -> Self {
        let mut goal_positions = Vec::new();
        let mut weights = Vec::new();
        let mut lookup = HashMap::new();
        for (i, (g, &w)) in goals.goals().iter().zip(goals.weights()).enumerate() {
            let pos: Vec<u32> = g.positions().iter().map(|&p| p as u32).collect();
            // duplicates keep the cheapest weight
            match lookup.get(&pos) {
                Some(&j) if weights[j] <= w => {}
                Some(&j) => weights[j] = w,
                None => {
                    lookup.insert(pos.clone(), i);
                }
            }
            goal_positions.push(pos);
            weights.push(w);
        }
        let use_terminal = goals.has_weights();
        Binding {
            initial,
            params,
            base,
            goal_positions,
            weights,
            lookup,
            use_terminal,
        }
    }

    fn goal_index(&self, positions: &[u32]) -> Option<usize> {
        self.lookup.get(positions).copied()
    }

    fn heuristic(&self, positions: &[u32]) -> f64 {
        let spec = self.initial.spec();
        self.goal_positions
            .iter()
            .zip(&self.weights)
            .map(|(goal, w)| {
                let h = match self.base {
                    BaseHeuristic::Manhattan => manhattan_positions(spec, positions, goal, self.params),
                    BaseHeuristic::Misplaced => misplaced_positions(positions, goal, self.params),
                };
                h + w
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn expand(&self, key: &StateKey) -> Vec<(Node, f64)> {
        let spec = self.initial.spec();
        let n = key.positions().len();
        let positions = key.positions();
        let speeds: Vec<f64> = key.quantized_speeds().map(dequantize_speed).collect();
        let next_speeds: Vec<i32> = speeds
            .iter()
            .map(|&v| quantize_speed(speed_update(v, self.params)))
            .collect();
        let holds: Vec<f64> = speeds.iter().map(|&v| hold_cost(v, self.params)).collect();
        let hold_total: f64 = holds.iter().sum();

        let mut occupied = vec![false; spec.cell_count() + 1];
        for &p in positions {
            occupied[p as usize] = true;
        }

        let mut base_key = key.clone();
        {
            let words = base_key.words_mut();
            for (slot, &q) in words[n..].iter_mut().zip(&next_speeds) {
                *slot = q as u32;
            }
        }

        let mut out = Vec::with_capacity(4 * n + 1);
        for (i, &from) in positions.iter().enumerate() {
            let from = from as usize;
            let (r0, c0) = spec.row_col(from);
            for dir in Direction::ALL {
                let Some(to) = spec.neighbor(from, dir) else { continue };
                if occupied[to] {
                    continue;
                }
                let (r1, c1) = spec.row_col(to);
                let cost = hold_total - holds[i] + transition_cost(r0, c0, r1, c1, speeds[i], self.params);
                let mut child = base_key.clone();
                child.words_mut()[i] = to as u32;
                out.push((Node::State(child), cost));
            }
        }
        if self.use_terminal {
            if let Some(g) = self.goal_index(positions) {
                out.push((Node::Terminal, self.weights[g]));
            }
        }
        out
    }
}

/// Finds a minimum-cost stepwise path from `initial` into the goal set.
///
/// With `kind.stochastic` the heuristic is perturbed per node using
/// `run_seed` (default 0).
pub fn solve_sorting(
    initial: &PlatoonState,
    goals: &GoalSpec,
    params: &CostParams,
    kind: HeuristicKind,
    opts: &SearchOptions,
    run_seed: Option<u64>,
) -> Result<(SortingPath, SearchStats)> {
    params.validate()?;
    if goals.is_empty() {
        return Err(Error::EmptyGoalSet);
    }
    if let Some(i) = goals.goals().iter().position(|g| !g.same_problem(initial)) {
        return Err(Error::InfeasibleGoal(format!(
            "goal {i} does not share the grid and vehicle set of the initial state"
        )));
    }

    let binding = Binding::new(initial, goals, params, kind.base);
    let mut stochastic = if kind.stochastic {
        Some(StochasticHeuristic::new(params.c_min(), run_seed.unwrap_or(0))?)
    } else {
        None
    };
    let terminal_key = StateKey::encode(std::iter::empty(), &[]);

    let start = Node::State(initial.state_key());
    let result = astar(
        start,
        |n| match n {
            Node::Terminal => true,
            Node::State(k) => !binding.use_terminal && binding.goal_index(k.positions()).is_some(),
        },
        |n| match n {
            Node::State(k) => binding.expand(k),
            Node::Terminal => Vec::new(),
        },
        |n| {
            let (h, key) = match n {
                Node::State(k) => (binding.heuristic(k.positions()), k),
                Node::Terminal => (0.0, &terminal_key),
            };
            match stochastic.as_mut() {
                Some(s) => s.wrap(h, key),
                None => h,
            }
        },
        opts,
    )?;

    let keys: Vec<&StateKey> = result
        .path
        .iter()
        .filter_map(|n| match n {
            Node::State(k) => Some(k),
            Node::Terminal => None,
        })
        .collect();
    let states: Vec<PlatoonState> = keys.iter().map(|k| initial.from_key(k)).collect();
    let moves = states
        .windows(2)
        .map(|w| w[0].move_to(&w[1]))
        .collect::<Result<Vec<_>>>()?;
    let last = keys.last().expect("path starts at the initial state");
    let chosen_goal = binding.goal_index(last.positions()).expect("search ends in a goal state");
    let goal_weight = binding.weights[chosen_goal];
    let total_cost = if binding.use_terminal {
        result.cost - goal_weight
    } else {
        result.cost
    };

    Ok((
        SortingPath {
            states,
            moves,
            total_cost,
            chosen_goal,
            goal_weight,
        },
        result.stats,
    ))
}

/// Summary of one solve for machine-readable output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveRecord {
    pub explored: usize,
    pub generated: usize,
    pub elapsed_s: f64,
    pub cost: f64,
}

impl SolveRecord {
    pub fn new(path: &SortingPath, stats: &SearchStats) -> Self {
        SolveRecord {
            explored: stats.explored,
            generated: stats.generated,
            elapsed_s: stats.elapsed_s,
            cost: path.total_cost,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::edge_cost;
    use crate::fixtures;
    use crate::heuristics::HeuristicKind;

    #[test]
    fn table1_costs_thirteen() {
        let fx = fixtures::table1();
        let goals = GoalSpec::from_states(&fx.initial, vec![fx.goal.clone()]).unwrap();
        let (path, stats) = solve_sorting(
            &fx.initial,
            &goals,
            &CostParams::default(),
            HeuristicKind::default(),
            &SearchOptions::default(),
            None,
        )
        .unwrap();
        assert_eq!(path.total_cost, 13.0);
        assert_eq!(stats.f_initial, 11.0);
        assert_eq!(path.moves.len(), 13);
        assert!(path.final_state().same_occupancy(&fx.goal));
        let summed: f64 = path
            .states
            .windows(2)
            .map(|w| edge_cost(&w[0], &w[1], &CostParams::default()).unwrap())
            .sum();
        assert_eq!(summed, path.total_cost);
    }

    #[test]
    fn initial_in_goal_set_is_free() {
        let fx = fixtures::table1();
        let goals = GoalSpec::from_states(&fx.initial, vec![fx.goal.clone(), fx.initial.clone()]).unwrap();
        let (path, _) = solve_sorting(
            &fx.initial,
            &goals,
            &CostParams::default(),
            HeuristicKind::default(),
            &SearchOptions::default(),
            None,
        )
        .unwrap();
        assert_eq!(path.total_cost, 0.0);
        assert_eq!(path.states.len(), 1);
        assert_eq!(path.chosen_goal, 1);
    }

    #[test]
    fn goal_weights_steer_choice() {
        let fx = fixtures::table1();
        let goals = GoalSpec::weighted(&fx.initial, vec![fx.goal.clone(), fx.initial.clone()], vec![0.0, 100.0]).unwrap();
        let (path, _) = solve_sorting(
            &fx.initial,
            &goals,
            &CostParams::default(),
            HeuristicKind::default(),
            &SearchOptions::default(),
            None,
        )
        .unwrap();
        assert_eq!(path.chosen_goal, 0);
        assert_eq!(path.total_cost, 13.0);
        assert_eq!(path.goal_weight, 0.0);
    }

    #[test]
    fn mismatched_goal_is_infeasible() {
        let fx = fixtures::table1();
        let other = fixtures::goal_1();
        let small = PlatoonState::new(*fx.initial.spec(), [(crate::grid::Vehicle::new("A", "left", 0.0), 1)]).unwrap();
        let goals = GoalSpec::from_states(&small, vec![small.clone()]).unwrap();
        let r = solve_sorting(
            &other,
            &goals,
            &CostParams::default(),
            HeuristicKind::default(),
            &SearchOptions::default(),
            None,
        );
        assert!(matches!(r, Err(Error::InfeasibleGoal(_))));
    }
}
