//! JSON instance, goal and path files.
//!
//! Instance:
//! ```json
//! { "rows": 4, "cols": 3, "cell_length_m": 7.0,
//!   "vehicles": [ { "id": "A", "class": "left", "speed_mps": 0.0, "pos": 7 } ] }
//! ```
//! Goal, exactly one of:
//! ```json
//! { "paired": { "A": 4, "B": 5 }, "weight": 0.0 }
//! { "template": { "row_sets": [ { "rows": [2], "class": "left" } ] } }
//! { "goal_states": [ { "paired": { "A": 4 }, "weight": 1.5 } ] }
//! ```
//! Path: `{ "instance": {...}, "moves": [ { "vehicle": "F", "from": 5, "to": 8 } ], "cost": 13.0 }`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::grid::{GoalTemplate, GridSpec, Move, PlatoonState, Vehicle, VehicleId};
use crate::heuristics::{goal_from_targets, GoalSpec};
use crate::search::SearchStats;
use crate::sorting::SortingPath;

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
}

fn default_cell_length() -> f64 {
    GridSpec::DEFAULT_CELL_LENGTH
}

fn default_lane_width() -> f64 {
    GridSpec::DEFAULT_LANE_WIDTH
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleEntry {
    pub id: String,
    #[serde(default)]
    pub class: String,
    #[serde(default)]
    pub speed_mps: f64,
    pub pos: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_cell_length")]
    pub cell_length_m: f64,
    #[serde(default = "default_lane_width")]
    pub lane_width_m: f64,
    pub vehicles: Vec<VehicleEntry>,
}

impl InstanceFile {
    pub fn from_state(state: &PlatoonState) -> Self {
        let spec = state.spec();
        InstanceFile {
            rows: spec.rows,
            cols: spec.cols,
            cell_length_m: spec.cell_length,
            lane_width_m: spec.lane_width,
            vehicles: state
                .vehicles()
                .map(|(v, pos)| VehicleEntry {
                    id: v.id.0,
                    class: v.class,
                    speed_mps: v.rel_speed,
                    pos,
                })
                .collect(),
        }
    }

    pub fn to_state(&self) -> Result<PlatoonState> {
        let mut spec = GridSpec::new(self.rows, self.cols, self.cell_length_m)?;
        spec.lane_width = self.lane_width_m;
        let placements = self
            .vehicles
            .iter()
            .map(|v| (Vehicle::new(v.id.clone(), v.class.clone(), v.speed_mps), v.pos));
        PlatoonState::new(spec, placements)
    }
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn parse_state(text: &str) -> Result<PlatoonState> {
    parse_instance(text)?.to_state()
}

/// Canonical text form: vehicles in id order, pretty-printed.
pub fn serialize_state(state: &PlatoonState) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_state(state)).expect("instance serializes")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalEntry {
    pub paired: BTreeMap<String, usize>,
    #[serde(default)]
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired: Option<BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<GoalTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_states: Option<Vec<GoalEntry>>,
}

fn targets(map: &BTreeMap<String, usize>) -> HashMap<VehicleId, usize> {
    map.iter().map(|(k, &v)| (VehicleId(k.clone()), v)).collect()
}

impl GoalFile {
    pub fn from_goal(goal: &PlatoonState) -> Self {
        GoalFile {
            paired: Some(goal.vehicles().map(|(v, pos)| (v.id.0, pos)).collect()),
            ..Default::default()
        }
    }

    pub fn to_goal_spec(&self, initial: &PlatoonState) -> Result<GoalSpec> {
        let given = [self.paired.is_some(), self.template.is_some(), self.goal_states.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given != 1 {
            return Err(Error::parse(
                "goal file",
                "exactly one of `paired`, `template` or `goal_states` must be given",
            ));
        }
        if let Some(map) = &self.paired {
            let goal = goal_from_targets(initial, &targets(map))?;
            return GoalSpec::weighted(initial, vec![goal], vec![self.weight.unwrap_or(0.0)]);
        }
        if self.weight.is_some() {
            return Err(Error::parse("goal file", "`weight` is only valid next to `paired`"));
        }
        if let Some(template) = &self.template {
            return GoalSpec::from_template(initial, template);
        }
        let entries = self.goal_states.as_deref().unwrap_or_default();
        let mut goals = Vec::with_capacity(entries.len());
        let mut weights = Vec::with_capacity(entries.len());
        for entry in entries {
            goals.push(goal_from_targets(initial, &targets(&entry.paired))?);
            weights.push(entry.weight);
        }
        GoalSpec::weighted(initial, goals, weights)
    }
}

pub fn parse_goal_file(text: &str) -> Result<GoalFile> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn parse_goal(text: &str, initial: &PlatoonState) -> Result<GoalSpec> {
    parse_goal_file(text)?.to_goal_spec(initial)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveEntry {
    pub vehicle: String,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub instance: InstanceFile,
    pub moves: Vec<MoveEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_goal: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<SearchStats>,
}

impl PathFile {
    pub fn from_path(path: &SortingPath, stats: Option<&SearchStats>) -> Self {
        PathFile {
            instance: InstanceFile::from_state(path.initial()),
            moves: path
                .moves
                .iter()
                .map(|m| MoveEntry {
                    vehicle: m.vehicle.0.clone(),
                    from: m.from,
                    to: m.to,
                })
                .collect(),
            cost: Some(path.total_cost),
            chosen_goal: Some(path.chosen_goal),
            stats: stats.cloned(),
        }
    }

    /// Replays the moves; fails on any illegal step.
    pub fn to_path(&self, params: &CostParams) -> Result<SortingPath> {
        let initial = self.instance.to_state()?;
        let spec = *initial.spec();
        let moves = self
            .moves
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let kind = spec
                    .classify(m.from, m.to)
                    .ok_or_else(|| Error::parse(format!("move {}", i + 1), format!("cells {} and {} are not adjacent", m.from, m.to)))?;
                Ok(Move {
                    vehicle: VehicleId(m.vehicle.clone()),
                    from: m.from,
                    to: m.to,
                    kind,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut path = SortingPath::replay(&initial, &moves, params)?;
        path.chosen_goal = self.chosen_goal.unwrap_or(0);
        Ok(path)
    }
}

pub fn parse_path_file(text: &str) -> Result<PathFile> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn serialize_path(path: &SortingPath, stats: Option<&SearchStats>) -> String {
    serde_json::to_string_pretty(&PathFile::from_path(path, stats)).expect("path serializes")
}
