//! Reference instances on the 4x3 tandem grid: the worked example with its
//! 13-move reference path, and the 30-sample list with its two goal states.
//!
//! Vehicles A, B, C turn left; D, E, F go through.

use crate::cost::CostParams;
use crate::format::{parse_goal, parse_path_file, parse_state};
use crate::grid::{GridSpec, Move, PlatoonState, Vehicle};
use crate::heuristics::GoalSpec;
use crate::sorting::SortingPath;

pub const TABLE1_INSTANCE: &str = include_str!("../data/table1_instance.json");
pub const TABLE1_GOAL: &str = include_str!("../data/table1_goal.json");
pub const TABLE1_PATH: &str = include_str!("../data/table1_path.json");
pub const TABLE2_TSV: &str = include_str!("../data/table2.tsv");

/// `(sample id, optimal cost to Goal-1)` for the eight representative samples.
pub const TABLE3_F_VALUES: [(usize, f64); 8] = [
    (22, 6.0),
    (28, 8.0),
    (9, 10.0),
    (11, 12.0),
    (14, 14.0),
    (29, 15.0),
    (27, 17.0),
    (30, 16.0),
];

pub const SAMPLE_COUNT: usize = 30;

pub fn vehicle_class(id: &str) -> &'static str {
    if matches!(id, "A" | "B" | "C") {
        "left"
    } else {
        "through"
    }
}

pub fn tandem_grid() -> GridSpec {
    GridSpec::new(4, 3, GridSpec::DEFAULT_CELL_LENGTH).expect("valid grid")
}

#[derive(Clone, Debug)]
pub struct Table1 {
    pub initial: PlatoonState,
    pub goal: PlatoonState,
    pub reference_moves: Vec<Move>,
}

impl Table1 {
    pub fn goal_spec(&self) -> GoalSpec {
        GoalSpec::from_states(&self.initial, vec![self.goal.clone()]).expect("fixture goal is valid")
    }

    pub fn reference_path(&self) -> SortingPath {
        SortingPath::replay(&self.initial, &self.reference_moves, &CostParams::default())
            .expect("reference path is legal")
    }
}

pub fn table1() -> Table1 {
    let initial = parse_state(TABLE1_INSTANCE).expect("fixture instance parses");
    let goal = parse_goal(TABLE1_GOAL, &initial).expect("fixture goal parses").goals()[0].clone();
    let path = parse_path_file(TABLE1_PATH)
        .expect("fixture path parses")
        .to_path(&CostParams::default())
        .expect("fixture path replays");
    Table1 {
        initial,
        goal,
        reference_moves: path.moves,
    }
}

/// Rows of the sample list as `(label, cell 1..=12 occupant or None)`.
fn table2_rows() -> impl Iterator<Item = (&'static str, Vec<Option<&'static str>>)> {
    TABLE2_TSV.lines().skip(1).filter(|l| !l.trim().is_empty()).map(|line| {
        let mut fields = line.split('\t');
        let label = fields.next().expect("label column");
        let cells = fields.map(|f| (f != "0").then_some(f)).collect();
        (label, cells)
    })
}

fn state_from_row(cells: &[Option<&str>]) -> PlatoonState {
    let placements = cells
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|id| (Vehicle::new(id, vehicle_class(id), 0.0), i + 1)));
    PlatoonState::new(tandem_grid(), placements).expect("fixture row is valid")
}

fn row(label: &str) -> PlatoonState {
    let (_, cells) = table2_rows()
        .find(|(l, _)| *l == label)
        .unwrap_or_else(|| panic!("no fixture row {label}"));
    state_from_row(&cells)
}

/// Initial state of sample `id` (1..=30).
pub fn sample(id: usize) -> PlatoonState {
    assert!((1..=SAMPLE_COUNT).contains(&id), "sample id {id} out of range");
    row(&format!("Initial-{id}"))
}

pub fn samples() -> Vec<(usize, PlatoonState)> {
    (1..=SAMPLE_COUNT).map(|id| (id, sample(id))).collect()
}

/// Left-turn vehicles in row 2, through vehicles in row 3.
pub fn goal_1() -> PlatoonState {
    row("Goal-1")
}

/// Through vehicles in row 2, left-turn vehicles in row 3.
pub fn goal_2() -> PlatoonState {
    row("Goal-2")
}

pub fn goal_1_spec(initial: &PlatoonState) -> GoalSpec {
    GoalSpec::from_states(initial, vec![goal_1()]).expect("fixture goal is valid")
}

pub fn both_goals_spec(initial: &PlatoonState) -> GoalSpec {
    GoalSpec::from_states(initial, vec![goal_1(), goal_2()]).expect("fixture goals are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_22_layout() {
        let s = sample(22);
        let at = |id: &str| s.position_of(&id.into()).unwrap();
        assert_eq!((at("B"), at("A"), at("C"), at("F"), at("D"), at("E")), (1, 4, 5, 6, 8, 11));
    }

    #[test]
    fn table1_reference_path_shape() {
        let t = table1();
        assert_eq!(t.reference_moves.len(), 13);
        let path = t.reference_path();
        assert_eq!(path.total_cost, 13.0);
        assert!(path.final_state().same_occupancy(&t.goal));
        assert!(t.goal.same_occupancy(&goal_1()));
        let signature = path.move_signature();
        assert!(signature.starts_with("F:5->8,D:6->5,E:9->12"));
    }

    #[test]
    fn sample_files_match_table() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/samples");
        for (id, s) in samples() {
            let text = std::fs::read_to_string(format!("{dir}/initial-{id:02}.json")).unwrap();
            assert_eq!(parse_state(&text).unwrap(), s, "sample {id}");
        }
        let g1 = std::fs::read_to_string(format!("{dir}/goal-1.json")).unwrap();
        assert!(parse_goal(&g1, &sample(1)).unwrap().goals()[0].same_occupancy(&goal_1()));
        let g2 = std::fs::read_to_string(format!("{dir}/goal-2.json")).unwrap();
        assert!(parse_goal(&g2, &sample(1)).unwrap().goals()[0].same_occupancy(&goal_2()));
    }
}
